#include "unitprior/export.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "unitprior/config_file.hpp"
#include "unitprior/errors.hpp"

namespace unitprior {

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return format_double(v);
}

double parse_num(std::string_view text) {
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("malformed number '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

void write_unit_samples_csv(std::ostream& out, const UnitSampleSet& samples) {
  const auto& p = samples.provenance;
  out << "# layer=" << samples.layer << '\n'
      << "# kind=" << to_string(samples.kind) << '\n'
      << "# unit=" << samples.unit_index << '\n'
      << "# n_samples=" << samples.n_samples() << '\n'
      << "# config_hash=" << p.config_hash << '\n'
      << "# input_hash=" << p.input_hash << '\n'
      << "# seed=" << p.seed << '\n'
      << "# sampler=" << p.sampler << '\n'
      << "# chunk_size=" << p.chunk_size << '\n'
      << "# log_rescale=";
  for (std::size_t i = 0; i < p.log_rescale.size(); ++i) out << (i ? ";" : "") << num(p.log_rescale[i]);
  out << '\n' << "sign,log_magnitude\n";
  for (const auto& v : samples.values) out << static_cast<int>(v.sign) << ',' << num(v.log_magnitude) << '\n';
}

UnitSampleSet read_unit_samples_csv(std::istream& in) {
  UnitSampleSet samples;
  std::map<std::string, std::string> header;
  std::string line;
  bool in_rows = false;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (!in_rows) {
      if (line.rfind("# ", 0) == 0) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("malformed header line: " + line);
        header[line.substr(2, eq - 2)] = line.substr(eq + 1);
        continue;
      }
      if (line != "sign,log_magnitude") throw ConfigError("missing sign,log_magnitude column header");
      in_rows = true;
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("malformed sample row: " + line);
    const int sign = static_cast<int>(parse_num(std::string_view(line).substr(0, comma)));
    if (sign < -1 || sign > 1) throw ConfigError("sign must be -1, 0 or 1");
    samples.values.push_back({static_cast<std::int8_t>(sign), parse_num(std::string_view(line).substr(comma + 1))});
  }
  if (!in_rows) throw ConfigError("no sample rows found");
  try {
    samples.layer = std::stoull(header.at("layer"));
    samples.kind = parse_unit_kind(header.at("kind"));
    samples.unit_index = std::stoull(header.at("unit"));
    expected = std::stoull(header.at("n_samples"));
    samples.provenance.config_hash = header.at("config_hash");
    samples.provenance.input_hash = header.at("input_hash");
    samples.provenance.seed = std::stoull(header.at("seed"));
    samples.provenance.sampler = header.at("sampler");
    samples.provenance.chunk_size = std::stoull(header.at("chunk_size"));
    std::stringstream scales(header.at("log_rescale"));
    for (std::string item; std::getline(scales, item, ';');) samples.provenance.log_rescale.push_back(parse_num(item));
  } catch (const std::out_of_range&) {
    throw ConfigError("sample file header is incomplete");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("sample file header is malformed: ") + e.what());
  }
  if (expected != samples.values.size()) throw ConfigError("n_samples header does not match row count");
  return samples;
}

void write_moment_curve_csv(std::ostream& out, const MomentCurve& curve) {
  out << "k,log_norm,se\n";
  for (const auto& e : curve.entries) out << e.k << ',' << num(e.log_norm) << ',' << num(e.se) << '\n';
}

std::string tail_summary_header() {
  return "layer,kind,method,model,theta_hat,se_theta,k_min,k_max,tail_fraction,effective_sample_size,status";
}

std::string tail_summary_row(std::size_t layer, UnitKind kind, const TailEstimate& e) {
  std::ostringstream row;
  const bool moments = e.method == TailMethod::MomentSlope;
  row << layer << ',' << to_string(kind) << ',' << to_string(e.method) << ','
      << (moments ? to_string(e.model) : std::string_view("")) << ',' << num(e.theta_hat) << ','
      << num(e.se_theta) << ',';
  if (moments) {
    row << e.k_min << ',' << e.k_max << ',';
  } else {
    row << ",," << num(e.tail_fraction);
  }
  row << ',' << num(e.effective_sample_size) << ",ok";
  return row.str();
}

std::string covariance_header() { return "layer,m,m2,s,t,estimate,se,verdict"; }

std::string covariance_row(const CovarianceReport& r) {
  std::ostringstream row;
  row << r.layer << ',' << r.pair.first << ',' << r.pair.second << ',' << r.powers.s << ',' << r.powers.t << ','
      << num(r.estimate) << ',' << num(r.se) << ',' << to_string(r.verdict);
  return row.str();
}

void write_contour_csv(std::ostream& out, const ContourSet& contour) {
  out << "phi,x,y\n";
  for (const auto& p : contour.points) out << num(p.phi) << ',' << num(p.x) << ',' << num(p.y) << '\n';
}

}  // namespace unitprior
