#include <random>

#include <Eigen/Cholesky>
#include <benchmark/benchmark.h>

#include "pfmot/association.hpp"
#include "pfmot/flow.hpp"
#include "pfmot/metrics.hpp"
#include "pfmot/sim.hpp"
#include "pfmot/tracker.hpp"

namespace {

using namespace pfmot;

void BM_RunFlowTdoa(benchmark::State& state) {
  const Scenario scn = default_scenario();
  const Eigen::Index n = state.range(0);
  Rng rng(1);
  GaussianSummary prior{scn.objects[0].initial_state, Eigen::MatrixXd::Identity(6, 6)};
  prior.cov.diagonal() << 25, 25, 25, 1, 1, 1;
  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(prior.cov).matrixL();
  std::normal_distribution<double> normal;
  ParticleMatrix x(6, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd e(6);
    for (auto& v : e) v = normal(rng);
    x.col(i) = prior.mean + L * e;
  }
  const Eigen::VectorXd z = scn.sensor->sample_measurement(scn.objects[0].initial_state, rng);
  const FlowSchedule schedule = TrackerConfig{}.schedule();
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_flow(x, prior.mean, prior, *scn.sensor, z, schedule));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_RunFlowTdoa)->Arg(100)->Arg(2000);

void BM_SpaDa(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AssociationTables t;
  t.beta.resize(n, n + 1);
  t.xi.resize(n);
  for (Eigen::Index i = 0; i < t.beta.size(); ++i) t.beta.data()[i] = 1.0 - u(rng);
  for (int m = 0; m < n; ++m) t.xi(m) = 2.0 - u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(run_spa_da(t));
}
BENCHMARK(BM_SpaDa)->Arg(4)->Arg(16)->Arg(64);

void BM_Ospa(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  PointSet x, y;
  for (std::size_t i = 0; i < n; ++i) {
    x.emplace_back(u(rng), u(rng), u(rng));
    y.emplace_back(u(rng), u(rng), u(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(ospa(x, y));
}
BENCHMARK(BM_Ospa)->Arg(8)->Arg(64);

void BM_TrackerStep(benchmark::State& state) {
  const Scenario scn = scaled_scenario();
  const auto sim = simulate(scn, 1);
  TrackerConfig cfg;
  cfg.n_particles = static_cast<int>(state.range(0));
  cfg.proposal_mode = state.range(1) ? ProposalMode::kFlow : ProposalMode::kBootstrap;
  const Tracker tracker(scn.tracker_models(), cfg);
  // Warm up to a populated state before timing.
  std::vector<LabeledBelief> warm;
  for (int k = 0; k < 40; ++k) warm = tracker.step(warm, sim.frames[static_cast<std::size_t>(k)], 1).state;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tracker.step(warm, sim.frames[40], 1));
  }
}
BENCHMARK(BM_TrackerStep)->Args({100, 1})->Args({1000, 1})->Args({10000, 0})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
