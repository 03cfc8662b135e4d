#include <optional>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "pfmot/cli.hpp"
#include "pfmot/error.hpp"

namespace pfmot::cli {

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> modes;
  std::optional<int> particles;
  std::optional<int> runs;
  std::optional<int> jobs;
  std::optional<std::string> out;
};

void add_common(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config, "Config file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--mode", o.modes, "Proposal mode: flow or bootstrap (repeatable for mc)")
      ->check(CLI::IsMember({"flow", "bootstrap"}));
  app.add_option("--particles", o.particles, "Particles per object");
  app.add_option("--runs", o.runs, "Monte-Carlo runs");
  app.add_option("--jobs", o.jobs, "Concurrent Monte-Carlo runs");
  app.add_option("--out", o.out, "Output directory");
}

RunConfig resolve(const Overrides& o, bool multi_mode) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.modes.empty()) {
    if (!multi_mode && o.modes.size() > 1) throw ConfigError("--mode may be given once for this command");
    cfg.modes.clear();
    for (const auto& m : o.modes) cfg.modes.push_back(parse_proposal_mode(m));
    cfg.tracker.proposal_mode = cfg.modes.front();
  }
  if (o.particles) cfg.tracker.n_particles = *o.particles;
  if (o.runs) cfg.runs = *o.runs;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.out) cfg.out_dir = *o.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiobject tracking with particle-flow belief propagation"};
  app.require_subcommand(1);

  Overrides o;
  std::string measurements, estimates, truth;

  auto* sim = app.add_subcommand("simulate", "Generate ground truth and measurements");
  add_common(*sim, o);
  auto* track = app.add_subcommand("track", "Track a measurement file");
  add_common(*track, o);
  track->add_option("measurements", measurements, "Measurement CSV")->required()->check(CLI::ExistingFile);
  auto* eval = app.add_subcommand("evaluate", "Per-step OSPA of estimates against truth");
  add_common(*eval, o);
  eval->add_option("estimates", estimates, "Estimate CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("truth", truth, "Ground-truth CSV")->required()->check(CLI::ExistingFile);
  auto* mc = app.add_subcommand("mc", "Monte-Carlo MOSPA and timing");
  add_common(*mc, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfigError;
  }

  try {
    if (sim->parsed()) {
      const RunConfig cfg = resolve(o, false);
      cmd_simulate(cfg);
      out << "wrote " << cfg.out_dir << "/truth.csv and " << cfg.out_dir << "/measurements.csv\n";
    } else if (track->parsed()) {
      const RunConfig cfg = resolve(o, false);
      cmd_track(cfg, measurements);
      out << "wrote " << cfg.out_dir << "/estimates.csv\n";
    } else if (eval->parsed()) {
      const RunConfig cfg = resolve(o, false);
      cmd_evaluate(cfg, estimates, truth);
      out << "wrote " << cfg.out_dir << "/ospa.csv\n";
    } else if (mc->parsed()) {
      const RunConfig cfg = resolve(o, true);
      const auto summary = cmd_mc(cfg);
      for (const auto& [mode, s] : summary) {
        double mean = 0.0;
        for (const auto& row : s.mospa) mean += row.value;
        mean /= static_cast<double>(std::max<std::size_t>(1, s.mospa.size()));
        out << to_string(mode) << ": mean MOSPA " << mean << " m, " << s.mean_step_seconds * 1e3
            << " ms per step\n";
      }
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kSuccess;
}

}  // namespace pfmot::cli
