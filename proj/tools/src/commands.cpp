#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "pfmot/cli.hpp"
#include "pfmot/error.hpp"
#include "pfmot/metrics.hpp"
#include "pfmot/rng.hpp"
#include "pfmot/sim.hpp"

namespace pfmot::cli {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

void write_resolved_config(const RunConfig& cfg) {
  auto out = open_output(fs::path(cfg.out_dir) / "config.ini");
  write_config(out, cfg);
}

int max_k(const std::vector<MeasurementFrame>& frames) {
  int k = 0;
  for (const auto& f : frames) k = std::max(k, f.k);
  return k;
}

}  // namespace

std::uint64_t run_seed(std::uint64_t seed, int run) {
  return stream_seed(seed, run, StreamTag::kMonteCarloRun);
}

TrackRun track_frames(const Tracker& tracker, const std::vector<MeasurementFrame>& frames,
                      int n_steps, std::uint64_t seed) {
  std::map<int, const MeasurementFrame*> by_k;
  for (const auto& f : frames) {
    if (f.k < 1) throw InvalidParameter("measurement frames must have k >= 1");
    by_k[f.k] = &f;
  }

  TrackRun run;
  run.steps = n_steps;
  std::vector<LabeledBelief> state;
  for (int k = 1; k <= n_steps; ++k) {
    MeasurementFrame empty;
    empty.k = k;
    const auto it = by_k.find(k);
    const MeasurementFrame& frame = it == by_k.end() ? empty : *it->second;

    const auto t0 = std::chrono::steady_clock::now();
    StepResult res = tracker.step(state, frame, seed);
    run.step_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    for (auto& e : res.estimates) run.estimates.push_back({k, e.label, std::move(e.state), e.existence});
    state = std::move(res.state);
  }
  return run;
}

std::vector<SeriesRow> ospa_series(const std::vector<EstimateRow>& estimates,
                                   const std::vector<TruthRow>& truth, int n_steps,
                                   const OspaParams& params) {
  std::vector<PointSet> est(static_cast<std::size_t>(n_steps) + 1), tru(est.size());
  for (const auto& e : estimates) {
    if (e.k < 1 || e.k > n_steps) {
      throw InvalidParameter("estimate at k=" + std::to_string(e.k) + " is outside the truth range 1.." +
                             std::to_string(n_steps));
    }
    est[static_cast<std::size_t>(e.k)].push_back(e.state.head<3>());
  }
  for (const auto& t : truth) {
    if (t.k < 1 || t.k > n_steps) throw InvalidParameter("truth row outside 1..n_steps");
    tru[static_cast<std::size_t>(t.k)].push_back(t.state.head<3>());
  }
  std::vector<SeriesRow> out;
  out.reserve(static_cast<std::size_t>(n_steps));
  for (int k = 1; k <= n_steps; ++k) {
    out.push_back({k, ospa(est[static_cast<std::size_t>(k)], tru[static_cast<std::size_t>(k)], params)});
  }
  return out;
}

void cmd_simulate(const RunConfig& cfg) {
  const Scenario scn = make_scenario(cfg.scenario, cfg.seed);
  const SimulationResult sim = simulate(scn, cfg.seed);
  const fs::path dir(cfg.out_dir);
  {
    auto out = open_output(dir / "truth.csv");
    write_truth(out, sim.truth);
  }
  {
    auto out = open_output(dir / "measurements.csv");
    write_measurements(out, sim.frames, scn.sensor->measurement_dim());
  }
  write_resolved_config(cfg);
}

void cmd_track(const RunConfig& cfg, const fs::path& measurements) {
  const std::vector<MeasurementFrame> frames = read_measurements_file(measurements);
  const Scenario scn = make_scenario(cfg.scenario, cfg.seed);
  for (const auto& f : frames) {
    for (const auto& z : f.z) {
      if (z.size() != scn.sensor->measurement_dim()) {
        throw InvalidParameter("measurement file has " + std::to_string(z.size()) +
                               " components per row, the sensor expects " +
                               std::to_string(scn.sensor->measurement_dim()));
      }
    }
  }
  const Tracker tracker(scn.tracker_models(), cfg.tracker);
  const int n_steps = std::max(cfg.scenario.n_steps, max_k(frames));
  const TrackRun run = track_frames(tracker, frames, n_steps, cfg.seed);

  auto out = open_output(fs::path(cfg.out_dir) / "estimates.csv");
  write_estimates(out, run.estimates);
  write_resolved_config(cfg);
}

void cmd_evaluate(const RunConfig& cfg, const fs::path& estimates, const fs::path& truth) {
  const auto est = read_estimates_file(estimates);
  const auto tru = read_truth_file(truth);
  int n_steps = 0;
  for (const auto& t : tru) n_steps = std::max(n_steps, t.k);
  const auto series = ospa_series(est, tru, n_steps, cfg.ospa);
  auto out = open_output(fs::path(cfg.out_dir) / "ospa.csv");
  write_series(out, "ospa", series);
}

std::map<ProposalMode, McModeSummary> cmd_mc(const RunConfig& cfg) {
  cfg.validate();
  std::vector<ProposalMode> modes = cfg.modes;
  std::sort(modes.begin(), modes.end());
  modes.erase(std::unique(modes.begin(), modes.end()), modes.end());

  const fs::path dir(cfg.out_dir);
  const Scenario scn = make_scenario(cfg.scenario, cfg.seed);
  std::map<ProposalMode, Tracker> trackers;
  for (auto mode : modes) {
    TrackerConfig tc = cfg.tracker;
    tc.proposal_mode = mode;
    trackers.emplace(mode, Tracker(scn.tracker_models(), tc));
  }

  // step_seconds[mode index][run]
  std::vector<std::vector<double>> step_seconds(modes.size(), std::vector<double>(static_cast<std::size_t>(cfg.runs)));
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (int r = next++; r < cfg.runs; r = next++) {
      try {
        const std::uint64_t seed = run_seed(cfg.seed, r);
        const SimulationResult sim = simulate(scn, seed);
        for (std::size_t mi = 0; mi < modes.size(); ++mi) {
          const TrackRun tr = track_frames(trackers.at(modes[mi]), sim.frames, scn.n_steps, seed);
          step_seconds[mi][static_cast<std::size_t>(r)] = tr.step_seconds / std::max(1, tr.steps);
          const auto series = ospa_series(tr.estimates, sim.truth, scn.n_steps, cfg.ospa);
          auto out = open_output(dir / "runs" / std::string(to_string(modes[mi])) /
                                 ("ospa_run_" + std::to_string(r) + ".csv"));
          write_series(out, "ospa", series);
        }
        spdlog::info("run {}/{} done", r + 1, cfg.runs);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next = cfg.runs;
      }
    }
  };

  const int n_threads = std::min(cfg.jobs, cfg.runs);
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  std::map<ProposalMode, McModeSummary> summary;
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    const std::string name(to_string(modes[mi]));
    std::vector<std::vector<double>> table;
    for (int r = 0; r < cfg.runs; ++r) {
      const auto rows = read_series_file(dir / "runs" / name / ("ospa_run_" + std::to_string(r) + ".csv"), "ospa");
      std::vector<double> values;
      for (const auto& row : rows) values.push_back(row.value);
      table.push_back(std::move(values));
    }
    const Eigen::VectorXd m = mospa(table);
    McModeSummary& s = summary[modes[mi]];
    for (Eigen::Index k = 0; k < m.size(); ++k) s.mospa.push_back({static_cast<int>(k) + 1, m(k)});
    double total = 0.0;
    for (double v : step_seconds[mi]) total += v;
    s.mean_step_seconds = total / cfg.runs;

    auto out = open_output(dir / ("mospa_" + name + ".csv"));
    write_series(out, "mospa", s.mospa);
  }

  auto timing = open_output(dir / "timing.csv");
  timing << "mode,particles,runs,mean_step_seconds\n";
  for (const auto& [mode, s] : summary) {
    timing << to_string(mode) << ',' << cfg.tracker.n_particles << ',' << cfg.runs << ','
           << format_double(s.mean_step_seconds) << '\n';
  }
  write_resolved_config(cfg);
  return summary;
}

}  // namespace pfmot::cli
