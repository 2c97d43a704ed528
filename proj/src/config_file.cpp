#include "unitprior/config_file.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "unitprior/errors.hpp"

namespace unitprior {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view text, std::string_view key) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("invalid value '" + std::string(text) + "' for key '" + std::string(key) + "'");
  }
  return value;
}

bool parse_bool(std::string_view text, std::string_view key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean '" + std::string(text) + "' for key '" + std::string(key) + "'");
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

ExperimentConfig parse_config(std::string_view text) {
  std::map<std::string, std::string, std::less<>> entries;
  std::size_t line_number = 0;
  while (!text.empty()) {
    const auto newline = text.find('\n');
    std::string_view line = text.substr(0, newline);
    text.remove_prefix(newline == std::string_view::npos ? text.size() : newline + 1);
    ++line_number;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_number) + ": expected 'key = value'");
    }
    const auto key = std::string(trim(line.substr(0, eq)));
    const auto value = std::string(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_number) + ": empty key");
    if (!entries.emplace(key, value).second) {
      throw ConfigError("line " + std::to_string(line_number) + ": duplicate key '" + key + "'");
    }
  }

  auto take = [&](std::string_view key) -> std::optional<std::string> {
    const auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    auto value = it->second;
    entries.erase(it);
    return value;
  };

  ExperimentConfig config;
  NetworkConfig& net = config.network;

  const auto input_dim = take("input_dim");
  if (!input_dim) throw ConfigError("missing required key 'input_dim'");
  net.input_dim = parse_number<std::size_t>(*input_dim, "input_dim");

  const auto widths = take("layer_widths");
  if (!widths) throw ConfigError("missing required key 'layer_widths'");
  for (auto item : split_list(*widths)) net.layer_widths.push_back(parse_number<std::size_t>(item, "layer_widths"));

  std::vector<double> params;
  if (const auto p = take("nonlinearity_params"); p && !trim(*p).empty()) {
    for (auto item : split_list(*p)) params.push_back(parse_number<double>(item, "nonlinearity_params"));
  }
  const auto family = take("nonlinearity").value_or("relu");
  try {
    net.nonlinearity = NonlinearitySpec::parse(family, params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (const auto stds = take("weight_std")) {
    net.weight_std.clear();
    for (auto item : split_list(*stds)) net.weight_std.push_back(parse_number<double>(item, "weight_std"));
  }
  if (const auto bias = take("include_bias")) net.include_bias = parse_bool(*bias, "include_bias");
  if (const auto seed = take("seed")) net.seed = parse_number<std::uint64_t>(*seed, "seed");
  config.input_seed = net.seed;
  if (const auto seed = take("input_seed")) config.input_seed = parse_number<std::uint64_t>(*seed, "input_seed");

  if (!entries.empty()) throw ConfigError("unknown key '" + entries.begin()->first + "'");

  try {
    net.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string format_network(const NetworkConfig& config) {
  std::ostringstream out;
  out << "input_dim = " << config.input_dim << '\n'
      << "layer_widths = " << join(config.layer_widths) << '\n'
      << "nonlinearity = " << config.nonlinearity.name() << '\n';
  if (const auto p = config.nonlinearity.params(); !p.empty()) out << "nonlinearity_params = " << join(p) << '\n';
  out << "weight_std = " << join(config.weight_std) << '\n'
      << "include_bias = " << (config.include_bias ? "true" : "false") << '\n'
      << "seed = " << config.seed << '\n';
  return out.str();
}

std::string format_config(const ExperimentConfig& config) {
  return format_network(config.network) + "input_seed = " + std::to_string(config.input_seed) + '\n';
}

}  // namespace unitprior
