#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pfmot/metrics.hpp"
#include "pfmot/sim.hpp"
#include "pfmot/tracker.hpp"

namespace pfmot {

/// Everything a simulate/track/evaluate/mc run needs.
///
/// File format is INI-like: `[scenario]`, `[tracker]`, `[metrics]` and `[run]`
/// sections of `key = value` lines. Vectors are written as space-separated
/// numbers.
struct RunConfig {
  ScenarioParams scenario;
  TrackerConfig tracker;
  OspaParams ospa;

  std::uint64_t seed = 1;
  int runs = 1;
  int jobs = 1;
  std::string out_dir = "out";
  /// Modes compared by `mc`; the tracker's own mode is used by `track`.
  std::vector<ProposalMode> modes{ProposalMode::kFlow};

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Parses a config stream on top of the defaults. Unknown sections or keys
/// and malformed values raise ConfigError.
RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::filesystem::path& path);

/// Writes every key with its resolved value; parse_config reads it back.
void write_config(std::ostream& os, const RunConfig& cfg);

}  // namespace pfmot
