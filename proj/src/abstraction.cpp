#include "axregion/abstraction.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "axregion/embedded.hpp"

namespace axregion {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

struct RegionStats {
  std::map<std::string, std::size_t> roles;
  std::string root_role;
  std::string heading;
  std::vector<std::string> texts;
  std::vector<std::string> actions;
  std::size_t nodes = 0;
  std::size_t wrappers = 0;
  bool price = false;
  bool search = false;
  bool nav_landmark = false;

  std::size_t count(const std::string& role) const {
    const auto it = roles.find(role);
    return it == roles.end() ? 0 : it->second;
  }
};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string clip_text(std::string s, std::size_t limit = 60) {
  while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();
  if (s.size() > limit) {
    s.resize(limit);
    while (!s.empty() && s.back() == ' ') s.pop_back();
    s += "...";
  }
  return s;
}

void collect(const AXNode& n, RegionStats& stats, std::set<std::string>& seen_texts) {
  static const std::regex price_re(R"([$€£]\s?\d|\d+\.\d\d\b)");
  ++stats.nodes;
  ++stats.roles[n.role];
  if (is_content_free_wrapper(n)) ++stats.wrappers;
  const std::string label = !n.name.empty() ? n.name : n.value;
  if (n.role == "navigation") stats.nav_landmark = true;
  if (n.role == "searchbox" || n.role == "search" ||
      ((n.role == "combobox" || n.role == "textbox") && lower(label).find("search") != std::string::npos))
    stats.search = true;
  if (!label.empty() && std::regex_search(label, price_re)) stats.price = true;
  if (n.role == "heading" && stats.heading.empty() && !n.name.empty()) stats.heading = clip_text(n.name, 40);
  if (is_interactive_role(n.role)) {
    std::string action = n.role;
    if (!label.empty()) action += " '" + clip_text(label, 40) + "'";
    stats.actions.push_back(std::move(action));
  } else if (!label.empty() && n.role != "RootWebArea" && !seen_texts.count(label)) {
    seen_texts.insert(label);
    stats.texts.push_back(clip_text(label));
  }
  for (const auto& c : n.children) collect(c, stats, seen_texts);
}

RegionStats region_stats(const AXTree& subtree) {
  RegionStats stats;
  stats.root_role = subtree.root().role;
  std::set<std::string> seen;
  collect(subtree.root(), stats, seen);
  return stats;
}

std::string heuristic_purpose(const RegionStats& s) {
  const std::size_t links = s.count("link");
  const std::size_t inputs = s.count("textbox") + s.count("combobox") + s.count("searchbox") +
                             s.count("checkbox") + s.count("radio") + s.count("spinbutton") +
                             s.count("slider");
  if (s.wrappers == s.nodes) return "structural wrapper";
  if (s.root_role == "navigation" || (s.nav_landmark && links >= 2)) return "site navigation links";
  if (s.search) return "search form";
  if (inputs > 0 || s.root_role == "form") return "input form";
  if (s.count("table") + s.count("grid") > 0) return "data table";
  if (s.root_role == "banner") return "page header";
  if (s.root_role == "contentinfo") return "page footer";
  if (s.count("list") > 0 && links >= 2) return "link list";
  if (s.price) return s.count("image") || links ? "product card" : "price information";
  if (!s.heading.empty()) return s.heading + " section";
  if (s.count("image") > 0 && links == 0 && s.count("button") == 0) return "image display";
  if (links >= 2) return "link group";
  if (s.count("button") > 0) return "action buttons";
  if (s.root_role == "main") return "main content";
  if (links == 1) return "single link";
  return "text content";
}

std::string heuristic_summary(const RegionStats& s) {
  if (s.wrappers == s.nodes) return "Layout container with no content of its own.";
  std::string out;
  if (!s.texts.empty()) {
    const std::size_t shown = std::min<std::size_t>(s.texts.size(), 3);
    for (std::size_t i = 0; i < shown; ++i) {
      if (i) out += "; ";
      out += s.texts[i];
    }
    out += ".";
  }
  if (!s.actions.empty()) {
    if (!out.empty()) out += " ";
    out += "Available actions: ";
    const std::size_t shown = std::min<std::size_t>(s.actions.size(), 6);
    for (std::size_t i = 0; i < shown; ++i) {
      if (i) out += ", ";
      out += s.actions[i];
    }
    if (s.actions.size() > shown) out += " and " + std::to_string(s.actions.size() - shown) + " more";
    out += ".";
  } else if (!out.empty()) {
    out += " No interactive elements.";
  }
  if (out.empty()) out = "No readable content.";
  return out;
}

bool all_wrappers(const AXNode& n) {
  if (!is_content_free_wrapper(n)) return false;
  return std::all_of(n.children.begin(), n.children.end(), all_wrappers);
}

void copy_members(const AXNode& src, const std::set<std::string>& members, AXNode& dst) {
  dst.id = src.id;
  dst.role = src.role;
  dst.name = src.name;
  dst.value = src.value;
  dst.attrs = src.attrs;
  for (const auto& c : src.children) {
    if (!members.count(c.id)) continue;
    dst.children.emplace_back();
    copy_members(c, members, dst.children.back());
  }
}

}  // namespace

std::string_view backend_name(AbstractionBackend backend) {
  return backend == AbstractionBackend::kLm ? "lm" : "heuristic";
}

LmEndpointConfig LmEndpointConfig::parse(std::string_view json_text) {
  LmEndpointConfig c;
  try {
    const auto j = nlohmann::json::parse(json_text);
    if (!j.is_object()) throw AbstractionError(AbstractionError::Kind::kConfig, "endpoint config must be a JSON object");
    static const std::set<std::string> known = {"base_url",   "model_name",  "api_key_env_var_name",
                                                "timeout_ms", "max_retries", "concurrency"};
    for (const auto& [key, _] : j.items())
      if (!known.count(key))
        throw AbstractionError(AbstractionError::Kind::kConfig, "unknown endpoint config key '" + key + "'");
    if (j.contains("base_url")) c.base_url = j.at("base_url").get<std::string>();
    if (j.contains("model_name")) c.model_name = j.at("model_name").get<std::string>();
    if (j.contains("api_key_env_var_name")) c.api_key_env_var_name = j.at("api_key_env_var_name").get<std::string>();
    if (j.contains("timeout_ms")) c.timeout_ms = j.at("timeout_ms").get<int>();
    if (j.contains("max_retries")) c.max_retries = j.at("max_retries").get<int>();
    if (j.contains("concurrency")) c.concurrency = j.at("concurrency").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw AbstractionError(AbstractionError::Kind::kConfig, std::string("endpoint config: ") + e.what());
  }
  c.validate();
  return c;
}

LmEndpointConfig LmEndpointConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AbstractionError(AbstractionError::Kind::kConfig, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void LmEndpointConfig::validate() const {
  if (timeout_ms <= 0) throw AbstractionError(AbstractionError::Kind::kConfig, "timeout_ms must be > 0");
  if (max_retries < 0) throw AbstractionError(AbstractionError::Kind::kConfig, "max_retries must be >= 0");
  if (concurrency <= 0) throw AbstractionError(AbstractionError::Kind::kConfig, "concurrency must be > 0");
  static const std::regex url_re(R"(^https?://[^/\s]+(/\S*)?$)");
  if (!std::regex_match(base_url, url_re))
    throw AbstractionError(AbstractionError::Kind::kConfig, "base_url must be an http(s) URL: " + base_url);
}

HttpChatClient::HttpChatClient(LmEndpointConfig config) : config_(std::move(config)) {
  config_.validate();
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  std::regex_match(config_.base_url, m, url_re);
  origin_ = m[1].str();
  path_prefix_ = m[2].str();
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string HttpChatClient::complete(const std::string& prompt) {
  httplib::Client client(origin_);
  const auto seconds = config_.timeout_ms / 1000;
  const auto micros = (config_.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);

  httplib::Headers headers;
  if (!config_.api_key_env_var_name.empty()) {
    if (const char* key = std::getenv(config_.api_key_env_var_name.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  nlohmann::json body = {{"model", config_.model_name},
                         {"temperature", 0},
                         {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
  auto res = client.Post(path_prefix_ + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
      throw AbstractionError(AbstractionError::Kind::kLmTimeout, "chat endpoint timed out: " + httplib::to_string(err));
    throw AbstractionError(AbstractionError::Kind::kLmUnavailable, "chat endpoint unreachable: " + httplib::to_string(err));
  }
  if (res->status != 200)
    throw AbstractionError(AbstractionError::Kind::kLmUnavailable,
                           "chat endpoint returned HTTP " + std::to_string(res->status));
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw AbstractionError(AbstractionError::Kind::kLmMalformedReply, std::string("chat response: ") + e.what());
  }
}

AXTree region_subtree(const AXTree& tree, const Region& region) {
  const TreeIndex index(tree);
  const auto root = index.find(region.root_id);
  if (!root) throw PartitionError(PartitionError::Kind::kUnknownRegionRoot, "unknown region root '" + region.root_id + "'");
  const std::set<std::string> members(region.members.begin(), region.members.end());
  AXNode out;
  copy_members(index.node(*root), members, out);
  return AXTree(std::move(out), tree.url());
}

std::string render_abstraction_prompt(const AXTree& subtree) {
  std::string prompt(embedded::abstraction_prompt());
  const std::string placeholder = "{region_axtree}";
  const auto pos = prompt.find(placeholder);
  std::string body = serialize_axtree(subtree);
  if (!body.empty() && body.back() == '\n') body.pop_back();
  if (pos == std::string::npos) return prompt + "\n" + body;
  return prompt.replace(pos, placeholder.size(), body);
}

ParsedAbstraction parse_abstraction_reply(std::string_view reply) {
  const auto first = reply.find('{');
  const auto last = reply.rfind('}');
  if (first == std::string_view::npos || last == std::string_view::npos || last < first)
    throw AbstractionError(AbstractionError::Kind::kLmMalformedReply, "reply has no JSON object");
  try {
    const auto j = nlohmann::json::parse(reply.substr(first, last - first + 1));
    ParsedAbstraction out{j.at("purpose").get<std::string>(), j.at("state_summary").get<std::string>()};
    if (out.purpose.empty() || out.state_summary.empty())
      throw AbstractionError(AbstractionError::Kind::kLmMalformedReply, "reply has an empty field");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw AbstractionError(AbstractionError::Kind::kLmMalformedReply, std::string("reply: ") + e.what());
  }
}

RegionAbstraction HeuristicAbstractor::abstract_region(const AXTree& subtree) const {
  const auto start = Clock::now();
  const auto stats = region_stats(subtree);
  RegionAbstraction out;
  out.purpose = heuristic_purpose(stats);
  out.state_summary = heuristic_summary(stats);
  out.backend = AbstractionBackend::kHeuristic;
  out.latency_ms = elapsed_ms(start);
  return out;
}

RegionAbstraction LmAbstractor::abstract_region(const AXTree& subtree) const {
  const auto start = Clock::now();
  const auto prompt = render_abstraction_prompt(subtree);
  for (int attempt = 0; attempt <= max_retries_; ++attempt) {
    try {
      const auto parsed = parse_abstraction_reply(client_.complete(prompt));
      RegionAbstraction out;
      out.purpose = parsed.purpose;
      out.state_summary = parsed.state_summary;
      out.backend = AbstractionBackend::kLm;
      out.latency_ms = elapsed_ms(start);
      return out;
    } catch (const AbstractionError&) {
      // retry, then fall back below
    }
  }
  auto out = fallback_.abstract_region(subtree);
  out.latency_ms = elapsed_ms(start);
  return out;
}

RegionAbstraction abstract_region(const AXTree& subtree, const Abstractor& backend) {
  return backend.abstract_region(subtree);
}

std::vector<RegionAbstraction> abstract_partition(const RegionPartition& partition,
                                                  const AXTree& tree, const Abstractor& backend,
                                                  std::size_t concurrency) {
  const TreeIndex index(tree);
  std::vector<RegionAbstraction> out(partition.regions.size());
  std::atomic<std::size_t> next{0};
  const HeuristicAbstractor heuristic;

  auto work = [&] {
    for (std::size_t r = next++; r < partition.regions.size(); r = next++) {
      const auto& region = partition.regions[r];
      RegionAbstraction result;
      const AXTree subtree = region_subtree(tree, region);
      if (all_wrappers(subtree.root())) {
        result = heuristic.abstract_region(subtree);
      } else {
        try {
          result = backend.abstract_region(subtree);
        } catch (const std::exception&) {
          result = heuristic.abstract_region(subtree);
        }
      }
      result.region_index = region.index;
      result.region_id = region.label();
      out[r] = std::move(result);
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(std::max<std::size_t>(concurrency, 1), partition.regions.size());
  if (workers <= 1) {
    work();
    return out;
  }
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < workers; ++i) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  return out;
}

RegionPartition with_abstractions(const RegionPartition& partition,
                                  const std::vector<RegionAbstraction>& abstractions) {
  RegionPartition out = partition;
  for (const auto& a : abstractions) {
    if (a.region_index >= out.regions.size()) continue;
    out.regions[a.region_index].purpose = a.purpose;
    out.regions[a.region_index].state_summary = a.state_summary;
  }
  return out;
}

}  // namespace axregion
