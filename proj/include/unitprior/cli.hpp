#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unitprior/config_file.hpp"
#include "unitprior/covariance.hpp"
#include "unitprior/network.hpp"
#include "unitprior/pooling.hpp"
#include "unitprior/tail.hpp"

namespace unitprior::cli {

enum ExitCode : int {
  kOk = 0,
  kRuntimeError = 1,
  kUsageError = 2,
  kAssertFailed = 3,
  kReplayMismatch = 4,
};

/// Fully resolved options of one command. Zero / empty fields mean "use the
/// command default" until resolve() fills them in; the manifest stores the
/// resolved form.
struct RunOptions {
  std::string command;
  std::optional<ExperimentConfig> config;
  std::optional<std::uint64_t> seed;  // overrides the config's sampling seed
  std::size_t samples = 0;
  std::vector<std::size_t> layers;
  UnitKind kind = UnitKind::Pre;
  std::size_t unit = 0;
  int k_min = 0;
  int k_max = 0;
  double tail_fraction = 0.0;
  MomentModel model = MomentModel::Stirling;
  bool standardize = true;
  bool assert_mode = false;
  bool write_samples = false;
  SamplingOptions sampling;

  // covariance
  std::vector<int> powers;
  UnitPair pair;
  // envelope
  std::vector<std::string> nonlinearities;
  std::size_t grid_points = 0;
  // contours
  std::vector<std::string> q_values;
  double level = 1.0;
  std::size_t points = 0;
  // oracle-check
  double sigma = 1.0;
  // figure3
  std::size_t curve_points = 0;
  // pooling
  std::vector<std::size_t> region;
  std::vector<PoolKind> pool_kinds;

  friend bool operator==(const RunOptions&, const RunOptions&) = default;
};

/// Commands that accept RunOptions.
const std::vector<std::string>& command_names();

/// Fills command defaults and validates. Throws ConfigError on anything a
/// user could have mistyped (unknown command, missing config, layer out of
/// range, ...).
RunOptions resolve(RunOptions options);

struct Artifact {
  std::string name;
  std::string content;
};

struct RunResult {
  std::vector<Artifact> files;
  /// Violation verdicts; only turned into an exit code under --assert.
  std::vector<std::string> violations;
};

/// Runs a resolved command entirely in memory.
RunResult run(const RunOptions& options);

struct Manifest {
  RunOptions options;
  std::map<std::string, std::string> file_hashes;  // sha256 hex per emitted file
  double wall_clock_seconds = 0.0;
};

std::string manifest_json(const Manifest& manifest);
/// Throws ConfigError on malformed manifests.
Manifest parse_manifest(std::string_view text);

/// Writes every artifact and then manifest.json into `out_dir` (created if
/// needed). Throws IoError if anything cannot be written.
void write_outputs(const std::filesystem::path& out_dir, const RunResult& result, const Manifest& manifest);

/// Parses a q value written as a decimal or a fraction ("2/3").
double parse_q(std::string_view text);
/// File-name label of a q value: "2/3" -> "2over3", "0.2" -> "0p2".
std::string q_label(std::string_view text);

/// "name" or "name(p1,p2,...)".
NonlinearitySpec parse_nonlinearity(std::string_view text);

/// Full command-line entry point; returns the process exit code.
int main(int argc, const char* const* argv);

}  // namespace unitprior::cli
