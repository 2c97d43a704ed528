#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "unitprior/covariance.hpp"
#include "unitprior/network.hpp"
#include "unitprior/penalty.hpp"
#include "unitprior/tail.hpp"

namespace unitprior {

// CSV writers. Numbers use the shortest round-trip decimal form, so equal
// inputs give byte-identical files.

/// `# key=value` provenance header, then `sign,log_magnitude` rows.
void write_unit_samples_csv(std::ostream& out, const UnitSampleSet& samples);
/// Inverse of write_unit_samples_csv. Throws ConfigError on malformed input.
UnitSampleSet read_unit_samples_csv(std::istream& in);

/// `k,log_norm,se`
void write_moment_curve_csv(std::ostream& out, const MomentCurve& curve);

/// Header of the tail summary table and one row per estimate.
std::string tail_summary_header();
std::string tail_summary_row(std::size_t layer, UnitKind kind, const TailEstimate& estimate);

/// `layer,m,m2,s,t,estimate,se,verdict`
std::string covariance_header();
std::string covariance_row(const CovarianceReport& report);

/// `phi,x,y`
void write_contour_csv(std::ostream& out, const ContourSet& contour);

}  // namespace unitprior
