#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "pfmot/config.hpp"
#include "pfmot/csv_io.hpp"
#include "pfmot/tracker.hpp"

namespace pfmot::cli {

enum ExitCode : int { kSuccess = 0, kConfigError = 2, kRuntimeError = 3 };

struct TrackRun {
  std::vector<EstimateRow> estimates;
  int steps = 0;
  /// Wall-clock time spent inside Tracker::step.
  double step_seconds = 0.0;
};

/// Runs the tracker over k = 1..n_steps; missing frames count as empty.
TrackRun track_frames(const Tracker& tracker, const std::vector<MeasurementFrame>& frames,
                      int n_steps, std::uint64_t seed);

/// Per-step OSPA for k = 1..n_steps using the position components.
std::vector<SeriesRow> ospa_series(const std::vector<EstimateRow>& estimates,
                                   const std::vector<TruthRow>& truth, int n_steps,
                                   const OspaParams& params);

/// Seed of Monte-Carlo run `run`.
std::uint64_t run_seed(std::uint64_t seed, int run);

void cmd_simulate(const RunConfig& cfg);
void cmd_track(const RunConfig& cfg, const std::filesystem::path& measurements);
void cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& estimates,
                  const std::filesystem::path& truth);

struct McModeSummary {
  std::vector<SeriesRow> mospa;
  double mean_step_seconds = 0.0;
};

/// Writes mospa_<mode>.csv per mode and timing.csv into cfg.out_dir.
std::map<ProposalMode, McModeSummary> cmd_mc(const RunConfig& cfg);

/// Parses arguments, dispatches a subcommand and maps errors to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pfmot::cli
