#include "unitprior/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "unitprior/covariance.hpp"
#include "unitprior/errors.hpp"
#include "unitprior/export.hpp"
#include "unitprior/hash.hpp"
#include "unitprior/nonlinearity.hpp"
#include "unitprior/penalty.hpp"
#include "unitprior/rng.hpp"
#include "unitprior/survival_curves.hpp"

namespace unitprior::cli {

namespace {

using nlohmann::json;

constexpr std::uint64_t kOracleTag = 0x6f7261636c65ULL;  // "oracle"
constexpr double kOracleTolerance = 0.02;
constexpr double kBallTolerance = 1e-9;
constexpr double kFigureLevel = 1e-3;

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return format_double(v);
}

// Messages end up inside CSV cells.
std::string cell(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

bool needs_config(std::string_view command) {
  return command == "tail-sweep" || command == "figure3" || command == "covariance" || command == "pooling" ||
         command == "penalty";
}

NetworkConfig network_of(const RunOptions& o) {
  auto net = o.config->network;
  net.seed = *o.seed;
  return net;
}

std::vector<double> input_of(const RunOptions& o) {
  return sample_input(o.config->network.input_dim, o.config->input_seed);
}

void check_layers(const RunOptions& o) {
  const auto depth = o.config->network.depth();
  for (const auto l : o.layers) {
    if (l < 1 || l > depth) {
      throw ConfigError("layer " + std::to_string(l) + " outside 1.." + std::to_string(depth));
    }
  }
}

std::vector<UnitProbe> probes_for(const RunOptions& o) {
  std::vector<UnitProbe> probes;
  for (const auto l : o.layers) {
    if (o.unit >= o.config->network.width(l)) {
      throw ConfigError("unit " + std::to_string(o.unit) + " outside layer " + std::to_string(l));
    }
    probes.push_back({l, o.unit, o.kind});
  }
  return probes;
}

std::string csv_of(const std::string& header, const std::vector<std::string>& rows) {
  std::string out = header + '\n';
  for (const auto& r : rows) out += r + '\n';
  return out;
}

std::string failed_tail_row(std::size_t layer, UnitKind kind, TailMethod method, const std::string& what) {
  return std::to_string(layer) + ',' + std::string(to_string(kind)) + ',' + std::string(to_string(method)) +
         ",,,,,,,," + "error: " + cell(what);
}

RunResult run_tail_sweep(const RunOptions& o) {
  const auto net = network_of(o);
  const auto x = input_of(o);
  const auto probes = probes_for(o);
  const auto sets = sample_probes(net, x, probes, o.samples, net.seed, o.sampling);

  RunResult result;
  std::vector<std::string> summary;
  std::vector<std::optional<TailEstimate>> moment(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto layer = sets[i].layer;
    try {
      const auto curve = moment_curve(sets[i], o.k_min, o.k_max);
      std::ostringstream file;
      write_moment_curve_csv(file, curve);
      result.files.push_back({"moment_curve_layer" + std::to_string(layer) + ".csv", file.str()});
      moment[i] = estimate_theta_moments(curve, o.model);
      summary.push_back(tail_summary_row(layer, o.kind, *moment[i]));
    } catch (const std::exception& e) {
      summary.push_back(failed_tail_row(layer, o.kind, TailMethod::MomentSlope, e.what()));
    }
    try {
      summary.push_back(tail_summary_row(layer, o.kind, estimate_theta_survival(sets[i], o.tail_fraction)));
    } catch (const std::exception& e) {
      summary.push_back(failed_tail_row(layer, o.kind, TailMethod::SurvivalSlope, e.what()));
    }
    if (o.write_samples) {
      std::ostringstream file;
      write_unit_samples_csv(file, sets[i]);
      result.files.push_back({"samples_layer" + std::to_string(layer) + ".csv", file.str()});
    }
  }
  result.files.push_back({"tail_summary.csv", csv_of(tail_summary_header(), summary)});

  std::vector<std::string> recursion;
  for (std::size_t i = 0; i + 1 < sets.size(); ++i) {
    if (sets[i + 1].layer != sets[i].layer + 1) continue;
    std::string row = std::to_string(sets[i].layer) + ',' + std::to_string(sets[i + 1].layer) + ',';
    if (!moment[i] || !moment[i + 1]) {
      recursion.push_back(row + ",,,,,error: missing estimate");
      continue;
    }
    const auto v = recursion_check(*moment[i], *moment[i + 1]);
    recursion.push_back(row + num(moment[i]->theta_hat) + ',' + num(moment[i + 1]->theta_hat) + ',' +
                        num(v.difference) + ',' + num(v.allowance) + ',' + (v.passed ? "pass" : "fail") + ",ok");
    if (!v.passed) {
      result.violations.push_back("recursion layer " + std::to_string(sets[i].layer) + " -> " +
                                  std::to_string(sets[i + 1].layer) + ": difference " + num(v.difference));
    }
  }
  result.files.push_back(
      {"recursion.csv",
       csv_of("layer_prev,layer_next,theta_prev,theta_next,difference,allowance,verdict,status", recursion)});
  return result;
}

RunResult run_figure3(const RunOptions& o) {
  const auto net = network_of(o);
  const auto x = input_of(o);
  auto options = o;
  options.kind = UnitKind::Pre;
  const auto sets = sample_probes(net, x, probes_for(options), o.samples, net.seed, o.sampling);
  const auto curves = survival_curves(sets, o.standardize, o.curve_points);

  RunResult result;
  for (const auto& c : curves.curves) {
    std::string file = "x,log_survival\n";
    for (std::size_t i = 0; i < curves.grid.size(); ++i) {
      file += num(curves.grid[i]) + ',' + num(c.log_survival[i]) + '\n';
    }
    result.files.push_back({"survival_layer" + std::to_string(c.layer) + ".csv", file});
  }
  if (curves.standardized) {
    std::string file = "x,log_survival\n";
    for (const double g : curves.grid) file += num(g) + ',' + num(gaussian_standardized_log_survival(g)) + '\n';
    result.files.push_back({"survival_gaussian.csv", file});
  }

  std::vector<std::string> rows;
  for (const auto& c : curves.curves) {
    rows.push_back("scale," + std::to_string(c.layer) + ",," + num(c.log_scale) + ",,," +
                   std::to_string(c.n_positive) + ",");
  }
  for (const auto& check : ordering_checks(curves, kFigureLevel)) {
    rows.push_back("ordering," + std::to_string(check.layer_a) + ',' + std::to_string(check.layer_b) + ',' +
                   num(check.x) + ',' + num(check.log_survival_a) + ',' + num(check.log_survival_b) + ",," +
                   (check.passed ? "pass" : "fail"));
    if (!check.passed) {
      result.violations.push_back("survival ordering layer " + std::to_string(check.layer_a) + " vs " +
                                  std::to_string(check.layer_b));
    }
  }
  if (curves.standardized && curves.curves.front().layer == 1) {
    const auto band = gaussian_band_check(curves, 0);
    rows.push_back("gaussian,1,," + num(band.worst_x) + ',' + num(band.max_abs_z) + ",," +
                   std::to_string(band.points_checked) + ',' + (band.passed ? "pass" : "fail"));
    if (!band.passed) result.violations.push_back("layer 1 departs from the Gaussian reference");
  }
  result.files.push_back(
      {"figure3_summary.csv", csv_of("check,layer_a,layer_b,x,value_a,value_b,count,verdict", rows)});
  return result;
}

RunResult run_covariance(const RunOptions& o) {
  const auto net = network_of(o);
  const auto x = input_of(o);
  std::vector<PowerPair> powers;
  for (const int s : o.powers) {
    for (const int t : o.powers) powers.push_back({s, t});
  }
  const auto swept = sweep(net, x, o.layers, powers, o.samples, net.seed, o.pair, o.sampling, o.kind);

  RunResult result;
  std::vector<std::string> rows;
  for (const auto& c : swept.cells) {
    if (c.report) {
      rows.push_back(covariance_row(*c.report));
      if (c.report->verdict == CovarianceVerdict::Violation) {
        result.violations.push_back("negative covariance at layer " + std::to_string(c.layer) + " powers " +
                                    std::to_string(c.powers.s) + "," + std::to_string(c.powers.t));
      }
    } else {
      rows.push_back(std::to_string(c.layer) + ',' + std::to_string(o.pair.first) + ',' +
                     std::to_string(o.pair.second) + ',' + std::to_string(c.powers.s) + ',' +
                     std::to_string(c.powers.t) + ",,,error: " + cell(c.error));
    }
  }
  result.files.push_back({"covariance.csv", csv_of(covariance_header(), rows)});
  return result;
}

RunResult run_envelope(const RunOptions& o) {
  EnvelopeGrid grid;
  grid.points_per_sign = o.grid_points;
  RunResult result;
  std::vector<std::string> rows;
  std::ostringstream report;
  for (const auto& text : o.nonlinearities) {
    const auto spec = parse_nonlinearity(text);
    const auto search = search_envelope_constants(spec, grid);
    std::string row = '"' + spec.to_string() + "\"," + std::string(to_string(search.outcome)) + ',';
    report << spec.to_string() << ": " << to_string(search.outcome) << '\n';
    if (search.witness) {
      const auto& k = search.witness->constants;
      row += num(k.c1) + ',' + num(k.d1) + ',' + std::string(to_string(k.side)) + ',' + num(k.c2) + ',' + num(k.d2);
      report << "  lower: |phi(u)| >= " << num(k.c1) << " + " << num(k.d1) << " |u| on the "
             << to_string(k.side) << '\n'
             << "  upper: |phi(u)| <= " << num(k.c2) << " + " << num(k.d2) << " |u|\n";
      if (search.witness->violation) {
        report << "  violated at u = " << num(search.witness->violation->u) << " ("
               << to_string(search.witness->violation->which) << ")\n";
      }
    } else {
      row += ",,,,";
      report << "  sup |phi| = " << num(search.sup_abs) << " on the grid\n";
    }
    report << "  outer-decade growth: " << num(search.outer_slope_negative) << " (u < 0), "
           << num(search.outer_slope_positive) << " (u > 0)\n";
    row += ',' + num(search.sup_abs) + ',' + num(search.outer_slope_positive) + ',' +
           num(search.outer_slope_negative);
    rows.push_back(row);
    if (search.outcome == EnvelopeOutcome::Fails) result.violations.push_back(spec.to_string() + " fails");
  }
  report << "grid: 0 and " << grid.points_per_sign << " log-spaced points per sign in [" << num(grid.min_magnitude)
         << ", " << num(grid.max_magnitude) << "]\n";
  result.files.push_back(
      {"envelope.csv",
       csv_of("nonlinearity,outcome,c1,d1,side,c2,d2,sup_abs,outer_slope_positive,outer_slope_negative", rows)});
  result.files.push_back({"envelope_report.txt", report.str()});
  return result;
}

RunResult run_contours(const RunOptions& o) {
  RunResult result;
  std::vector<std::string> rows;
  for (const auto& text : o.q_values) {
    const double q = parse_q(text);
    const auto set = contour(q, o.level, o.points);
    double worst = 0.0;
    for (const auto& p : set.points) worst = std::max(worst, std::abs(lq_radius(p.x, p.y, q) - o.level));
    std::ostringstream file;
    write_contour_csv(file, set);
    result.files.push_back({"contour_q" + q_label(text) + ".csv", file.str()});
    rows.push_back(text + ',' + num(q) + ',' + num(2.0 / q) + ',' + num(o.level) + ',' +
                   num(equal_coordinate_point(q, o.level)) + ',' + num(worst));
    if (worst > kBallTolerance * std::max(1.0, o.level)) {
      result.violations.push_back("contour q=" + text + " misses the ball by " + num(worst));
    }
  }
  result.files.push_back(
      {"contours_summary.csv", csv_of("q_text,q,layer,level,equal_coordinate,max_radius_error", rows)});
  return result;
}

RunResult run_oracle_check(const RunOptions& o) {
  std::vector<SignedLog> values;
  double sigma = o.sigma;
  if (o.config) {
    const auto net = network_of(o);
    const auto x = input_of(o);
    const auto set = sample_units(net, x, 1, o.unit, UnitKind::Pre, o.samples, net.seed, o.sampling);
    values = set.values;
    double sq = net.include_bias ? 1.0 : 0.0;
    for (const double v : x) sq += v * v;
    sigma = net.weight_std_at(1) * std::sqrt(sq);
  } else {
    NormalStream normal(derive_key(*o.seed, kOracleTag));
    values.reserve(o.samples);
    for (std::size_t i = 0; i < o.samples; ++i) values.push_back(SignedLog::from_value(o.sigma * normal()));
  }

  RunResult result;
  std::vector<std::string> rows;
  for (int k = o.k_min; k <= o.k_max; ++k) {
    const auto e = empirical_log_norm(values, k);
    const double empirical = std::exp(e.log_norm);
    const double oracle = gaussian_norm_oracle(sigma, k);
    const double rel = std::abs(empirical - oracle) / oracle;
    rows.push_back(std::to_string(k) + ',' + num(empirical) + ',' + num(oracle) + ',' + num(rel) + ',' + num(e.se));
    if (rel > kOracleTolerance) {
      result.violations.push_back("k=" + std::to_string(k) + " relative error " + num(rel));
    }
  }
  result.files.push_back({"oracle_check.csv", csv_of("k,empirical_norm,oracle_norm,relative_error,se_log", rows)});
  return result;
}

RunResult run_pooling(const RunOptions& o) {
  const auto net = network_of(o);
  const auto x = input_of(o);
  PooledTailOptions tail;
  tail.kind = o.kind;
  tail.k_min = o.k_min;
  tail.k_max = o.k_max;
  tail.model = o.model;

  RunResult result;
  std::vector<std::string> rows;
  for (const auto layer : o.layers) {
    for (const auto kind : o.pool_kinds) {
      const PoolingSpec spec{kind, o.region.size()};
      std::string row = std::string(to_string(kind)) + ',' + std::to_string(layer) + ',' +
                        std::to_string(o.region.size()) + ',';
      try {
        const auto check = pooled_tail_check(net, x, layer, o.region, spec, o.samples, net.seed, tail, o.sampling);
        rows.push_back(row + num(check.before.theta_hat) + ',' + num(check.before.se_theta) + ',' +
                       num(check.after.theta_hat) + ',' + num(check.after.se_theta) + ',' + num(check.difference) +
                       ',' + num(check.allowance) + ',' + (check.passed ? "pass" : "fail"));
        if (!check.passed) {
          result.violations.push_back(std::string(to_string(kind)) + " pooling changed the tail at layer " +
                                      std::to_string(layer));
        }
      } catch (const std::exception& e) {
        rows.push_back(row + ",,,,,,error: " + cell(e.what()));
      }
    }
  }
  result.files.push_back(
      {"pooling_summary.csv",
       csv_of("pool,layer,region_size,theta_before,se_before,theta_after,se_after,difference,allowance,verdict",
              rows)});
  return result;
}

RunResult run_penalty(const RunOptions& o) {
  const auto net = network_of(o);
  const auto x = input_of(o);
  const auto weights = sample_weights(net, net.seed);
  const auto acts = forward(weights, x, net);
  std::vector<std::vector<double>> units;
  for (const auto& a : acts) units.emplace_back(a.pre.data(), a.pre.data() + a.pre.size());
  const auto breakdown = unit_penalty(units);

  std::ostringstream report;
  report << "weight_decay = " << num(weight_decay(weights)) << '\n';
  for (std::size_t l = 0; l < breakdown.layer_penalties.size(); ++l) {
    report << "layer " << l + 1 << ": exponent " << num(breakdown.exponents[l]) << ", penalty "
           << num(breakdown.layer_penalties[l]) << '\n';
  }
  report << "unit_penalty_total = " << num(breakdown.total_unit_penalty) << '\n'
         << "copula_term = excluded\n"
         << "scale_constant = 1\n";
  return {{{"penalty_report.txt", report.str()}}, {}};
}

json options_to_json(const RunOptions& o) {
  json j;
  j["command"] = o.command;
  j["config"] = o.config ? json(format_config(*o.config)) : json(nullptr);
  j["seed"] = o.seed ? json(*o.seed) : json(nullptr);
  j["samples"] = o.samples;
  j["layers"] = o.layers;
  j["kind"] = to_string(o.kind);
  j["unit"] = o.unit;
  j["k_min"] = o.k_min;
  j["k_max"] = o.k_max;
  j["tail_fraction"] = o.tail_fraction;
  j["model"] = to_string(o.model);
  j["standardize"] = o.standardize;
  j["assert"] = o.assert_mode;
  j["write_samples"] = o.write_samples;
  j["sampler"] = to_string(o.sampling.sampler);
  j["chunk_size"] = o.sampling.chunk_size;
  j["workers"] = o.sampling.workers;
  j["rescale"] = to_string(o.sampling.rescale);
  j["powers"] = o.powers;
  j["pair"] = {o.pair.first, o.pair.second};
  j["nonlinearities"] = o.nonlinearities;
  j["grid_points"] = o.grid_points;
  j["q"] = o.q_values;
  j["level"] = o.level;
  j["points"] = o.points;
  j["sigma"] = o.sigma;
  j["curve_points"] = o.curve_points;
  j["region"] = o.region;
  std::vector<std::string> pools;
  for (const auto k : o.pool_kinds) pools.emplace_back(to_string(k));
  j["pool"] = pools;
  return j;
}

RunOptions options_from_json(const json& j) {
  RunOptions o;
  o.command = j.at("command").get<std::string>();
  if (!j.at("config").is_null()) o.config = parse_config(j.at("config").get<std::string>());
  if (!j.at("seed").is_null()) o.seed = j.at("seed").get<std::uint64_t>();
  o.samples = j.at("samples").get<std::size_t>();
  o.layers = j.at("layers").get<std::vector<std::size_t>>();
  o.kind = parse_unit_kind(j.at("kind").get<std::string>());
  o.unit = j.at("unit").get<std::size_t>();
  o.k_min = j.at("k_min").get<int>();
  o.k_max = j.at("k_max").get<int>();
  o.tail_fraction = j.at("tail_fraction").get<double>();
  o.model = parse_moment_model(j.at("model").get<std::string>());
  o.standardize = j.at("standardize").get<bool>();
  o.assert_mode = j.at("assert").get<bool>();
  o.write_samples = j.at("write_samples").get<bool>();
  o.sampling.sampler = parse_sampler_kind(j.at("sampler").get<std::string>());
  o.sampling.chunk_size = j.at("chunk_size").get<std::size_t>();
  o.sampling.workers = j.at("workers").get<unsigned>();
  o.sampling.rescale = parse_rescale_mode(j.at("rescale").get<std::string>());
  o.powers = j.at("powers").get<std::vector<int>>();
  const auto pair = j.at("pair").get<std::vector<std::size_t>>();
  if (pair.size() != 2) throw ConfigError("manifest pair must have two entries");
  o.pair = {pair[0], pair[1]};
  o.nonlinearities = j.at("nonlinearities").get<std::vector<std::string>>();
  o.grid_points = j.at("grid_points").get<std::size_t>();
  o.q_values = j.at("q").get<std::vector<std::string>>();
  o.level = j.at("level").get<double>();
  o.points = j.at("points").get<std::size_t>();
  o.sigma = j.at("sigma").get<double>();
  o.curve_points = j.at("curve_points").get<std::size_t>();
  o.region = j.at("region").get<std::vector<std::size_t>>();
  for (const auto& p : j.at("pool").get<std::vector<std::string>>()) o.pool_kinds.push_back(parse_pool_kind(p));
  return o;
}

std::vector<std::string> split_top_level(std::string_view text) {
  std::vector<std::string> out;
  int depth = 0;
  std::string current;
  for (const char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  out.push_back(current);
  return out;
}

double parse_real(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("malformed number '" + std::string(text) + "'");
  }
  return v;
}

struct Parsed {
  RunOptions options;
  std::filesystem::path out_dir = "out";
  std::filesystem::path manifest;
  std::optional<unsigned> workers;
};

void add_sampling_flags(CLI::App& app, Parsed& p, std::string& sampler, std::string& rescale) {
  app.add_option("--seed", p.options.seed, "Sampling seed; overrides the config");
  app.add_option("--samples", p.options.samples, "Monte-Carlo sample size");
  app.add_option("--workers", p.options.sampling.workers, "Worker threads (0 = all cores)");
  app.add_option("--chunk-size", p.options.sampling.chunk_size, "Samples per RNG chunk");
  app.add_option("--sampler", sampler, "collapsed | explicit");
  app.add_option("--rescale", rescale, "auto | on | off");
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"tail-sweep", "figure3",     "covariance", "envelope",
                                              "contours",   "oracle-check", "pooling",    "penalty"};
  return names;
}

double parse_q(std::string_view text) {
  const auto slash = text.find('/');
  const double q = slash == std::string_view::npos
                       ? parse_real(text)
                       : parse_real(text.substr(0, slash)) / parse_real(text.substr(slash + 1));
  if (!(q > 0.0) || !std::isfinite(q)) throw ConfigError("q must be positive: '" + std::string(text) + "'");
  return q;
}

std::string q_label(std::string_view text) {
  std::string out;
  for (const char c : text) {
    if (c == '/') {
      out += "over";
    } else if (c == '.') {
      out += 'p';
    } else {
      out += c;
    }
  }
  return out;
}

NonlinearitySpec parse_nonlinearity(std::string_view text) {
  const auto open = text.find('(');
  if (open == std::string_view::npos) return NonlinearitySpec::parse(text, {});
  if (text.back() != ')') throw ConfigError("malformed nonlinearity '" + std::string(text) + "'");
  std::vector<double> params;
  for (const auto& part : split_top_level(text.substr(open + 1, text.size() - open - 2))) {
    params.push_back(parse_real(part));
  }
  try {
    return NonlinearitySpec::parse(text.substr(0, open), params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

RunOptions resolve(RunOptions o) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), o.command) == names.end()) {
    throw ConfigError("unknown command '" + o.command + "'");
  }
  if (needs_config(o.command) && !o.config) throw ConfigError(o.command + " needs --config");
  if (!o.seed) o.seed = o.config ? o.config->network.seed : 0;
  const auto depth = o.config ? o.config->network.depth() : 0;
  const auto default_layers = [&](std::vector<std::size_t> wanted) {
    if (!o.layers.empty()) return;
    for (const auto l : wanted) {
      if (l <= depth) o.layers.push_back(l);
    }
  };

  if (o.command == "tail-sweep") {
    if (o.samples == 0) o.samples = 1'000'000;
    if (o.layers.empty()) {
      for (std::size_t l = 1; l <= depth; ++l) o.layers.push_back(l);
    }
  } else if (o.command == "figure3") {
    if (o.samples == 0) o.samples = 100'000;
    if (o.curve_points == 0) o.curve_points = 512;
    default_layers({1, 2, 3, 10, 100});
  } else if (o.command == "covariance") {
    if (o.samples == 0) o.samples = 1'000'000;
    if (o.powers.empty()) o.powers = {1, 2, 3};
    default_layers({1, 2, 3});
  } else if (o.command == "envelope") {
    if (o.nonlinearities.empty()) {
      o.nonlinearities = {"relu", "prelu(0.1)", "elu(1)", "selu(1.0507009873554805,1.6732632423543772)", "tanh",
                          "sigmoid"};
    }
    if (o.grid_points == 0) o.grid_points = EnvelopeGrid{}.points_per_sign;
  } else if (o.command == "contours") {
    if (o.q_values.empty()) o.q_values = {"2", "1", "2/3", "1/5"};
    if (o.points == 0) o.points = 720;
  } else if (o.command == "oracle-check") {
    if (o.samples == 0) o.samples = 1'000'000;
    if (o.k_min == 0) o.k_min = 1;
    if (o.k_max == 0) o.k_max = 8;
  } else if (o.command == "pooling") {
    if (o.samples == 0) o.samples = 1'000'000;
    if (o.region.empty()) o.region = {0, 1, 2, 3};
    if (o.pool_kinds.empty()) o.pool_kinds = {PoolKind::Max, PoolKind::Average};
    default_layers({2});
  }
  if (o.k_min == 0) o.k_min = 2;
  if (o.k_max == 0) o.k_max = 10;
  if (o.tail_fraction == 0.0) o.tail_fraction = 0.1;
  if (o.config) check_layers(o);
  if (needs_config(o.command) && o.command != "penalty" && o.layers.empty()) {
    throw ConfigError("no layer of the network is selected");
  }
  if (o.k_min < 1 || o.k_max < o.k_min) throw ConfigError("need 1 <= k-min <= k-max");
  if (o.sampling.chunk_size == 0) throw ConfigError("chunk size must be positive");
  for (const auto& q : o.q_values) parse_q(q);
  for (const auto& n : o.nonlinearities) parse_nonlinearity(n);
  return o;
}

RunResult run(const RunOptions& o) {
  if (o.command == "tail-sweep") return run_tail_sweep(o);
  if (o.command == "figure3") return run_figure3(o);
  if (o.command == "covariance") return run_covariance(o);
  if (o.command == "envelope") return run_envelope(o);
  if (o.command == "contours") return run_contours(o);
  if (o.command == "oracle-check") return run_oracle_check(o);
  if (o.command == "pooling") return run_pooling(o);
  if (o.command == "penalty") return run_penalty(o);
  throw ConfigError("unknown command '" + o.command + "'");
}

std::string manifest_json(const Manifest& m) {
  json j;
  j["command"] = m.options.command;
  j["seed"] = m.options.seed ? json(*m.options.seed) : json(nullptr);
  j["options"] = options_to_json(m.options);
  j["files"] = m.file_hashes;
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  return j.dump(2) + '\n';
}

Manifest parse_manifest(std::string_view text) {
  try {
    const auto j = json::parse(text);
    Manifest m;
    m.options = options_from_json(j.at("options"));
    m.file_hashes = j.at("files").get<std::map<std::string, std::string>>();
    m.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
}

void write_outputs(const std::filesystem::path& out_dir, const RunResult& result, const Manifest& manifest) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(out_dir / name, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw IoError("cannot write " + (out_dir / name).string());
  };
  for (const auto& f : result.files) write(f.name, f.content);
  write("manifest.json", manifest_json(manifest));
}

int main(int argc, const char* const* argv) {
  CLI::App app{"Monte-Carlo experiments on unit priors of Gaussian-weight networks"};
  app.require_subcommand(1);
  Parsed p;
  std::string config_path, kind = "pre", model = "stirling", sampler = "collapsed", rescale = "auto", layers;
  std::vector<std::string> pools;

  const auto add_config = [&](CLI::App& sub, bool required) {
    auto* opt = sub.add_option("--config", config_path, "Network config file");
    if (required) opt->required();
  };
  const auto add_out = [&](CLI::App& sub) {
    sub.add_option("--out", p.out_dir, "Output directory");
    sub.add_flag("--assert", p.options.assert_mode, "Exit with status 3 on any violation verdict");
  };
  const auto add_layers = [&](CLI::App& sub) { sub.add_option("--layers", layers, "Comma-separated layers"); };
  const auto add_k = [&](CLI::App& sub) {
    sub.add_option("--k-min", p.options.k_min, "Smallest moment order");
    sub.add_option("--k-max", p.options.k_max, "Largest moment order");
  };

  auto* tail = app.add_subcommand("tail-sweep", "Moment curves and tail estimates per layer");
  add_config(*tail, true);
  add_sampling_flags(*tail, p, sampler, rescale);
  add_layers(*tail);
  add_k(*tail);
  tail->add_option("--kind", kind, "pre | post");
  tail->add_option("--unit", p.options.unit, "Unit index within each layer");
  tail->add_option("--tail-fraction", p.options.tail_fraction, "Upper fraction used by the survival fit");
  tail->add_option("--model", model, "stirling | power-law");
  tail->add_flag("--write-samples", p.options.write_samples, "Also emit raw samples");
  add_out(*tail);

  auto* fig = app.add_subcommand("figure3", "Log-survival curves of pre-nonlinearity units");
  add_config(*fig, true);
  add_sampling_flags(*fig, p, sampler, rescale);
  add_layers(*fig);
  fig->add_option("--standardize", p.options.standardize, "Divide by the interquartile range (default true)");
  fig->add_option("--curve-points", p.options.curve_points, "Grid points per curve");
  add_out(*fig);

  auto* cov = app.add_subcommand("covariance", "Covariance of unit powers");
  add_config(*cov, true);
  add_sampling_flags(*cov, p, sampler, rescale);
  add_layers(*cov);
  cov->add_option("--powers", p.options.powers, "Power set; every ordered pair is tested")->delimiter(',');
  cov->add_option("--kind", kind, "pre | post");
  std::vector<std::size_t> pair;
  cov->add_option("--pair", pair, "Two unit indices")->delimiter(',')->expected(2);
  add_out(*cov);

  auto* env = app.add_subcommand("envelope", "Envelope certification of nonlinearities");
  env->add_option("--nonlinearity", p.options.nonlinearities, "Repeatable, e.g. prelu(0.1)");
  env->add_option("--grid-points", p.options.grid_points, "Grid points per sign");
  add_out(*env);

  auto* con = app.add_subcommand("contours", "L^q ball contours");
  con->add_option("--q", p.options.q_values, "q values, decimals or fractions")->delimiter(',');
  con->add_option("--level", p.options.level, "Ball radius t");
  con->add_option("--points", p.options.points, "Points per contour");
  add_out(*con);

  auto* ora = app.add_subcommand("oracle-check", "Empirical Gaussian norms against the closed form");
  add_config(*ora, false);
  add_sampling_flags(*ora, p, sampler, rescale);
  add_k(*ora);
  ora->add_option("--sigma", p.options.sigma, "Standard deviation when no config is given");
  ora->add_option("--unit", p.options.unit, "Layer-1 unit when a config is given");
  add_out(*ora);

  auto* pool = app.add_subcommand("pooling", "Tail parameter before and after pooling");
  add_config(*pool, true);
  add_sampling_flags(*pool, p, sampler, rescale);
  add_layers(*pool);
  add_k(*pool);
  pool->add_option("--region", p.options.region, "Unit indices of the pooling region")->delimiter(',');
  pool->add_option("--pool", pools, "max | average")->delimiter(',');
  pool->add_option("--kind", kind, "pre | post");
  pool->add_option("--model", model, "stirling | power-law");
  add_out(*pool);

  auto* pen = app.add_subcommand("penalty", "Weight decay and unit penalties of one draw");
  add_config(*pen, true);
  pen->add_option("--seed", p.options.seed, "Sampling seed; overrides the config");
  add_out(*pen);

  auto* rep = app.add_subcommand("replay", "Re-run a manifest and compare artifact hashes");
  rep->add_option("--manifest", p.manifest, "manifest.json of an earlier run")->required();
  rep->add_option("--workers", p.workers, "Worker threads");
  rep->add_option("--out", p.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    RunOptions options;
    std::optional<Manifest> reference;
    if (rep->parsed()) {
      std::ifstream in(p.manifest, std::ios::binary);
      if (!in) throw ConfigError("cannot read manifest " + p.manifest.string());
      std::stringstream text;
      text << in.rdbuf();
      reference = parse_manifest(text.str());
      options = reference->options;
      if (p.workers) options.sampling.workers = *p.workers;
    } else {
      options = p.options;
      options.command = app.get_subcommands().front()->get_name();
      if (!config_path.empty()) options.config = load_config(config_path);
      options.kind = parse_unit_kind(kind);
      if (options.command == "covariance" && !(cov->count("--kind"))) options.kind = UnitKind::Post;
      if (options.command == "pooling" && !(pool->count("--kind"))) options.kind = UnitKind::Post;
      options.model = parse_moment_model(model);
      options.sampling.sampler = parse_sampler_kind(sampler);
      options.sampling.rescale = parse_rescale_mode(rescale);
      if (!layers.empty()) {
        for (const auto& part : split_top_level(layers)) options.layers.push_back(std::stoul(part));
      }
      if (!pair.empty()) options.pair = {pair[0], pair[1]};
      for (const auto& name : pools) options.pool_kinds.push_back(parse_pool_kind(name));
      options = resolve(options);
    }

    const auto start = std::chrono::steady_clock::now();
    const auto result = run(options);
    Manifest manifest;
    manifest.options = options;
    for (const auto& f : result.files) manifest.file_hashes[f.name] = sha256_hex(f.content);
    manifest.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_outputs(p.out_dir, result, manifest);

    for (const auto& v : result.violations) std::cerr << "violation: " << v << '\n';
    if (reference) {
      bool same = reference->file_hashes == manifest.file_hashes;
      for (const auto& [name, hash] : reference->file_hashes) {
        const auto it = manifest.file_hashes.find(name);
        if (it == manifest.file_hashes.end()) {
          std::cerr << "missing on replay: " << name << '\n';
        } else if (it->second != hash) {
          std::cerr << "differs on replay: " << name << '\n';
        }
      }
      if (!same) return kReplayMismatch;
      std::cout << "replay matches " << manifest.file_hashes.size() << " files\n";
    }
    if (options.assert_mode && !result.violations.empty()) return kAssertFailed;
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace unitprior::cli
