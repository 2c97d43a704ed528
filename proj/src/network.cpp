#include "unitprior/network.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <thread>

#include "unitprior/config_file.hpp"
#include "unitprior/errors.hpp"
#include "unitprior/hash.hpp"
#include "unitprior/rng.hpp"

namespace unitprior {

void NetworkConfig::validate() const {
  if (input_dim == 0) throw std::invalid_argument("input_dim must be >= 1");
  if (layer_widths.empty()) throw std::invalid_argument("layer_widths must be non-empty");
  for (auto w : layer_widths) {
    if (w == 0) throw std::invalid_argument("layer widths must be >= 1");
  }
  if (weight_std.size() != 1 && weight_std.size() != layer_widths.size()) {
    throw std::invalid_argument("weight_std needs one value or one per layer");
  }
  for (double s : weight_std) {
    if (!(std::isfinite(s) && s > 0.0)) throw std::invalid_argument("weight_std entries must be finite and > 0");
  }
}

std::size_t NetworkConfig::width(std::size_t layer) const {
  if (layer == 0) return input_dim;
  if (layer > depth()) throw std::invalid_argument("layer index out of range");
  return layer_widths[layer - 1];
}

double NetworkConfig::weight_std_at(std::size_t layer) const {
  if (layer == 0 || layer > depth()) throw std::invalid_argument("layer index out of range");
  return weight_std.size() == 1 ? weight_std.front() : weight_std[layer - 1];
}

std::size_t NetworkConfig::fan_in(std::size_t layer) const {
  return width(layer - 1) + (include_bias ? 1 : 0);
}

std::string_view to_string(UnitKind kind) noexcept { return kind == UnitKind::Pre ? "pre" : "post"; }

UnitKind parse_unit_kind(std::string_view text) {
  if (text == "pre") return UnitKind::Pre;
  if (text == "post") return UnitKind::Post;
  throw std::invalid_argument("unit kind must be 'pre' or 'post'");
}

std::string_view to_string(SamplerKind kind) noexcept {
  return kind == SamplerKind::Collapsed ? "collapsed" : "explicit";
}

SamplerKind parse_sampler_kind(std::string_view text) {
  if (text == "collapsed") return SamplerKind::Collapsed;
  if (text == "explicit") return SamplerKind::ExplicitWeights;
  throw std::invalid_argument("sampler must be 'collapsed' or 'explicit'");
}

std::string_view to_string(RescaleMode mode) noexcept {
  switch (mode) {
    case RescaleMode::Auto: return "auto";
    case RescaleMode::On: return "on";
    case RescaleMode::Off: return "off";
  }
  return "auto";
}

RescaleMode parse_rescale_mode(std::string_view text) {
  if (text == "auto") return RescaleMode::Auto;
  if (text == "on") return RescaleMode::On;
  if (text == "off") return RescaleMode::Off;
  throw std::invalid_argument("rescale must be 'auto', 'on' or 'off'");
}

SignedLog SignedLog::from_value(double value) noexcept {
  if (value == 0.0) return {0, -std::numeric_limits<double>::infinity()};
  return {static_cast<std::int8_t>(value > 0.0 ? 1 : -1), std::log(std::abs(value))};
}

double SignedLog::value() const noexcept {
  return sign == 0 ? 0.0 : static_cast<double>(sign) * std::exp(log_magnitude);
}

bool value_less(const SignedLog& a, const SignedLog& b) noexcept {
  if (a.sign != b.sign) return a.sign < b.sign;
  if (a.sign > 0) return a.log_magnitude < b.log_magnitude;
  if (a.sign < 0) return a.log_magnitude > b.log_magnitude;
  return false;
}

std::vector<double> UnitSampleSet::decoded() const {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [](const SignedLog& v) { return v.value(); });
  return out;
}

std::vector<double> sample_input(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("input dimension must be >= 1");
  NormalStream normal(derive_key(seed, kInputTag));
  std::vector<double> x(dim);
  for (auto& v : x) v = normal();
  return x;
}

WeightSet sample_weights(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  WeightSet weights;
  for (std::size_t layer = 1; layer <= config.depth(); ++layer) {
    const double sigma = config.weight_std_at(layer);
    const auto layer_key = derive_key(seed, layer);
    Eigen::MatrixXd w(config.width(layer), config.fan_in(layer));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      NormalStream normal(derive_key(layer_key, static_cast<std::uint64_t>(r)));
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = sigma * normal();
    }
    weights.layers.push_back(std::move(w));
  }
  return weights;
}

std::vector<LayerActivations> forward(const WeightSet& weights, std::span<const double> x,
                                      const NetworkConfig& config) {
  config.validate();
  if (x.size() != config.input_dim) throw std::invalid_argument("input length does not match input_dim");
  if (weights.layers.size() != config.depth()) throw std::invalid_argument("weight set depth does not match config");

  std::vector<LayerActivations> out;
  out.reserve(config.depth());
  Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t layer = 1; layer <= config.depth(); ++layer) {
    const auto& w = weights.layers[layer - 1];
    if (static_cast<std::size_t>(w.rows()) != config.width(layer) ||
        static_cast<std::size_t>(w.cols()) != config.fan_in(layer)) {
      throw std::invalid_argument("weight matrix " + std::to_string(layer) + " has the wrong shape");
    }
    LayerActivations act;
    if (config.include_bias) {
      Eigen::VectorXd input(h.size() + 1);
      input << h, 1.0;
      act.pre = w * input;
    } else {
      act.pre = w * h;
    }
    act.post = act.pre.unaryExpr([&](double u) { return config.nonlinearity(u); });
    if (!act.pre.allFinite() || !act.post.allFinite()) {
      throw OverflowError(layer, "non-finite activation at layer " + std::to_string(layer));
    }
    h = act.post;
    out.push_back(std::move(act));
  }
  return out;
}

namespace {

struct LayerPlan {
  double sigma = 1.0;
  double log_scale = 0.0;  // log s_l, 0 when not rescaling
  double scale = 1.0;      // s_l
  std::size_t count = 0;   // units of this layer that must be computed
  // (probe index, unit, kind) of probes sitting on this layer
  std::vector<std::pair<std::size_t, const UnitProbe*>> probes;
};

class Propagator {
 public:
  Propagator(const NetworkConfig& config, std::span<const double> x, std::span<const UnitProbe> probes,
             const SamplingOptions& options)
      : config_(config), x_(x.begin(), x.end()), sampler_(options.sampler) {
    bool rescale = false;
    switch (options.rescale) {
      case RescaleMode::Auto: rescale = config.nonlinearity.positively_homogeneous(); break;
      case RescaleMode::On:
        if (!config.nonlinearity.positively_homogeneous()) {
          throw std::invalid_argument("rescaling is exact only for positively homogeneous nonlinearities");
        }
        rescale = true;
        break;
      case RescaleMode::Off: break;
    }

    std::size_t max_layer = 0;
    for (const auto& p : probes) max_layer = std::max(max_layer, p.layer);
    plans_.resize(max_layer + 1);
    for (std::size_t layer = 1; layer <= max_layer; ++layer) {
      auto& plan = plans_[layer];
      plan.sigma = config.weight_std_at(layer);
      if (rescale) {
        plan.scale = 1.0 / (plan.sigma * std::sqrt(static_cast<double>(config.fan_in(layer))));
        plan.log_scale = std::log(plan.scale);
      }
      plan.count = layer < max_layer ? config.width(layer) : 0;
    }
    for (std::size_t i = 0; i < probes.size(); ++i) {
      auto& plan = plans_[probes[i].layer];
      plan.probes.emplace_back(i, &probes[i]);
      plan.count = std::max(plan.count, probes[i].unit + 1);
    }

    input_norm2_ = 0.0;
    for (double v : x_) input_norm2_ += v * v;
    std::size_t widest = x_.size();
    for (auto w : config.layer_widths) widest = std::max(widest, w);
    buffer_size_ = widest;
  }

  std::vector<double> log_rescale() const {
    std::vector<double> out;
    for (std::size_t layer = 1; layer < plans_.size(); ++layer) out.push_back(plans_[layer].log_scale);
    return out;
  }

  /// Propagates one sample; writes probe values into out[probe].
  void run(std::uint64_t key, std::vector<double>& prev, std::vector<double>& next,
           std::span<SignedLog> out) const {
    if (sampler_ == SamplerKind::Collapsed) {
      run_collapsed(key, out);
    } else {
      run_explicit(key, prev, next, out);
    }
  }

  std::size_t buffer_size() const noexcept { return buffer_size_; }

 private:
  void record(const LayerPlan& plan, std::size_t unit, double g, double h, double log_c,
              std::span<SignedLog> out) const {
    for (const auto& [index, probe] : plan.probes) {
      if (probe->unit != unit) continue;
      auto v = SignedLog::from_value(probe->kind == UnitKind::Pre ? g : h);
      v.log_magnitude -= log_c;
      out[index] = v;
    }
  }

  void run_collapsed(std::uint64_t key, std::span<SignedLog> out) const {
    double norm2 = input_norm2_;
    double bias_input = 1.0;
    double log_c = 0.0;
    for (std::size_t layer = 1; layer < plans_.size(); ++layer) {
      const auto& plan = plans_[layer];
      const double input2 = norm2 + (config_.include_bias ? bias_input * bias_input : 0.0);
      const double sd = plan.sigma * std::sqrt(input2) * plan.scale;
      log_c += plan.log_scale;
      NormalStream normal(derive_key(key, layer));
      norm2 = 0.0;
      for (std::size_t unit = 0; unit < plan.count; ++unit) {
        const double g = sd * normal();
        const double h = config_.nonlinearity(g);
        if (!std::isfinite(g) || !std::isfinite(h)) overflow(layer);
        if (!plan.probes.empty()) record(plan, unit, g, h, log_c, out);
        norm2 += h * h;
      }
      if (!std::isfinite(norm2)) overflow(layer);
      bias_input = std::exp(log_c);
    }
  }

  void run_explicit(std::uint64_t key, std::vector<double>& prev, std::vector<double>& next,
                    std::span<SignedLog> out) const {
    std::copy(x_.begin(), x_.end(), prev.begin());
    std::size_t prev_width = x_.size();
    double bias_input = 1.0;
    double log_c = 0.0;
    for (std::size_t layer = 1; layer < plans_.size(); ++layer) {
      const auto& plan = plans_[layer];
      const auto layer_key = derive_key(key, layer);
      log_c += plan.log_scale;
      for (std::size_t unit = 0; unit < plan.count; ++unit) {
        NormalStream normal(derive_key(layer_key, unit));
        double acc = 0.0;
        for (std::size_t j = 0; j < prev_width; ++j) acc += (plan.sigma * normal()) * prev[j];
        if (config_.include_bias) acc += (plan.sigma * normal()) * bias_input;
        const double g = acc * plan.scale;
        const double h = config_.nonlinearity(g);
        if (!std::isfinite(g) || !std::isfinite(h)) overflow(layer);
        if (!plan.probes.empty()) record(plan, unit, g, h, log_c, out);
        next[unit] = h;
      }
      std::swap(prev, next);
      prev_width = plan.count;
      bias_input = std::exp(log_c);
    }
  }

  [[noreturn]] static void overflow(std::size_t layer) {
    throw OverflowError(layer, "non-finite unit value at layer " + std::to_string(layer) +
                                   "; enable rescaling or reduce depth/prior scale");
  }

  const NetworkConfig& config_;
  std::vector<double> x_;
  SamplerKind sampler_;
  std::vector<LayerPlan> plans_;
  double input_norm2_ = 0.0;
  std::size_t buffer_size_ = 0;
};

}  // namespace

std::vector<UnitSampleSet> sample_probes(const NetworkConfig& config, std::span<const double> x,
                                         std::span<const UnitProbe> probes, std::size_t n_samples,
                                         std::uint64_t seed, const SamplingOptions& options) {
  config.validate();
  if (x.size() != config.input_dim) throw std::invalid_argument("input length does not match input_dim");
  if (n_samples == 0) throw std::invalid_argument("n_samples must be >= 1");
  if (probes.empty()) throw std::invalid_argument("at least one probe is required");
  if (options.chunk_size == 0) throw std::invalid_argument("chunk_size must be >= 1");
  for (const auto& p : probes) {
    if (p.layer < 1 || p.layer > config.depth()) throw std::invalid_argument("layer out of range");
    if (p.unit >= config.width(p.layer)) throw std::invalid_argument("unit index out of range for its layer");
  }

  const Propagator propagator(config, x, probes, options);
  const std::size_t n_probes = probes.size();
  // Row-major: sample i occupies [i * n_probes, (i + 1) * n_probes).
  std::vector<SignedLog> joint(n_samples * n_probes);

  const std::size_t chunk = options.chunk_size;
  const std::size_t n_chunks = (n_samples + chunk - 1) / chunk;
  unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_chunks));

  std::atomic<std::size_t> next_chunk{0};
  std::vector<std::exception_ptr> errors(n_chunks);
  auto work = [&] {
    std::vector<double> prev(propagator.buffer_size());
    std::vector<double> next(propagator.buffer_size());
    for (std::size_t c = next_chunk++; c < n_chunks; c = next_chunk++) {
      try {
        const std::size_t end = std::min(n_samples, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < end; ++i) {
          propagator.run(sample_key(seed, chunk, i), prev, next,
                         std::span<SignedLog>(joint.data() + i * n_probes, n_probes));
        }
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Provenance provenance{hash_config(config), hash_input(x), seed, std::string(to_string(options.sampler)),
                        chunk, propagator.log_rescale()};
  std::vector<UnitSampleSet> out(n_probes);
  for (std::size_t p = 0; p < n_probes; ++p) {
    out[p].layer = probes[p].layer;
    out[p].kind = probes[p].kind;
    out[p].unit_index = probes[p].unit;
    out[p].provenance = provenance;
    out[p].values.resize(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) out[p].values[i] = joint[i * n_probes + p];
  }
  return out;
}

UnitSampleSet sample_units(const NetworkConfig& config, std::span<const double> x, std::size_t layer,
                           std::size_t unit_index, UnitKind kind, std::size_t n_samples, std::uint64_t seed,
                           const SamplingOptions& options) {
  const UnitProbe probe{layer, unit_index, kind};
  return std::move(sample_probes(config, x, std::span(&probe, 1), n_samples, seed, options).front());
}

std::string hash_config(const NetworkConfig& config) { return sha256_hex(format_network(config)); }

std::string hash_input(std::span<const double> x) {
  std::string text;
  for (double v : x) {
    text += format_double(v);
    text += '\n';
  }
  return sha256_hex(text);
}

}  // namespace unitprior
