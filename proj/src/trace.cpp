#include "axregion/trace.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace axregion {

std::vector<TraceRecord> parse_trace(std::string_view text) {
  std::vector<TraceRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw TraceParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw TraceParseError(line_no, "record is not an object");
    try {
      const auto url = j.at("url").get<std::string>();
      const auto blob = j.at("axtree").get<std::string>();
      TraceRecord rec{line_no,
                      j.contains("step") ? j.at("step").get<long>() : static_cast<long>(out.size()),
                      url,
                      j.contains("action") && !j.at("action").is_null() ? j.at("action").get<std::string>()
                                                                          : std::string(),
                      std::nullopt,
                      parse_axtree(blob, url)};
      if (j.contains("task") && !j.at("task").is_null()) rec.task = j.at("task").get<std::string>();
      out.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw TraceParseError(line_no, std::string("bad field: ") + e.what());
    } catch (const AxTreeError& e) {
      throw TraceParseError(line_no, std::string("axtree ") + e.what());
    }
  }
  return out;
}

std::vector<TraceRecord> load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceParseError(0, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str());
}

std::string format_trace_record(long step, const std::string& url, const std::string& action,
                                const AXTree& snapshot, const std::optional<std::string>& task) {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["url"] = url;
  j["action"] = action;
  if (task) j["task"] = *task;
  j["axtree"] = serialize_axtree(snapshot);
  return j.dump();
}

bool is_view_all(const std::string& action) {
  static const std::regex re(R"(^\s*view_all\s*\(\s*\)\s*$)");
  return std::regex_match(action, re);
}

std::optional<std::string> action_target(const std::string& action) {
  static const std::regex re(R"(\(\s*(['"])((?:(?!\1).)*)\1)");
  std::smatch m;
  if (!std::regex_search(action, m, re)) return std::nullopt;
  return m[2].str();
}

}  // namespace axregion
