#include "axregion/train_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace axregion {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + text + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("config key '" + key + "': not an unsigned integer: '" + text + "'");
  return v;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

TrainConfig TrainConfig::parse(std::string_view text) {
  TrainConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key == "epochs") {
      config.epochs = static_cast<int>(to_u64(key, value));
    } else if (key == "lr" || key == "learning_rate") {
      config.learning_rate = to_double(key, value);
    } else if (key == "alpha") {
      config.alpha = to_double(key, value);
    } else if (key == "gamma") {
      config.gamma = to_double(key, value);
    } else if (key == "clip" || key == "clip_norm") {
      config.clip_norm = to_double(key, value);
    } else if (key == "seed") {
      config.seed = to_u64(key, value);
    } else if (key == "validation_fraction") {
      config.validation_fraction = to_double(key, value);
    } else if (key == "beta1") {
      config.beta1 = to_double(key, value);
    } else if (key == "beta2") {
      config.beta2 = to_double(key, value);
    } else if (key == "epsilon") {
      config.epsilon = to_double(key, value);
    } else if (key == "train_tau") {
      config.train_tau = to_double(key, value);
    } else if (key == "taus") {
      config.taus.clear();
      std::istringstream items(value);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (!item.empty()) config.taus.push_back(to_double(key, item));
      }
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  config.validate();
  return config;
}

TrainConfig TrainConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "epochs = " << epochs << '\n'
      << "lr = " << format_double(learning_rate) << '\n'
      << "alpha = " << format_double(alpha) << '\n'
      << "gamma = " << format_double(gamma) << '\n'
      << "clip = " << format_double(clip_norm) << '\n'
      << "seed = " << seed << '\n'
      << "validation_fraction = " << format_double(validation_fraction) << '\n'
      << "beta1 = " << format_double(beta1) << '\n'
      << "beta2 = " << format_double(beta2) << '\n'
      << "epsilon = " << format_double(epsilon) << '\n'
      << "train_tau = " << format_double(train_tau) << '\n'
      << "taus = ";
  for (std::size_t i = 0; i < taus.size(); ++i) out << (i ? "," : "") << format_double(taus[i]);
  out << '\n';
  return out.str();
}

void TrainConfig::validate() const {
  auto in_open_unit = [](double v) { return std::isfinite(v) && v > 0.0 && v < 1.0; };
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("lr must be positive");
  if (!in_open_unit(alpha)) throw ConfigError("alpha must be in (0,1)");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be >= 0");
  if (!(clip_norm > 0.0)) throw ConfigError("clip must be positive");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation_fraction must be in [0,1)");
  if (!in_open_unit(beta1) || !in_open_unit(beta2)) throw ConfigError("betas must be in (0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!in_open_unit(train_tau)) throw ConfigError("train_tau must be in (0,1)");
  for (double t : taus)
    if (!in_open_unit(t)) throw ConfigError("every tau must be in (0,1)");
}

}  // namespace axregion
