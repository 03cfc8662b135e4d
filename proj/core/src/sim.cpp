#include "pfmot/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pfmot/error.hpp"
#include "pfmot/rng.hpp"

namespace pfmot {

void ScenarioParams::validate() const {
  if (n_steps < 1) throw InvalidParameter("scenario: n_steps must be >= 1");
  if (n_objects < 0 || n_objects > static_cast<int>(schedule_births().size())) {
    throw InvalidParameter("scenario: n_objects must lie in [0, 8]");
  }
  if (!(dt > 0.0)) throw InvalidParameter("scenario: dt must be > 0");
  if (!(drive_var >= 0.0)) throw InvalidParameter("scenario: drive_var must be >= 0");
  for (double p : {survival_prob, detection_prob}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("scenario: probabilities must lie in [0, 1]");
  }
  if (!(clutter_mean >= 0.0)) throw InvalidParameter("scenario: clutter_mean must be >= 0");
  if (!(birth_mean >= 0.0)) throw InvalidParameter("scenario: birth_mean must be >= 0");
  if (!(propagation_speed > 0.0)) throw InvalidParameter("scenario: propagation_speed must be > 0");
  if (!(sigma_v > 0.0)) throw InvalidParameter("scenario: sigma_v must be > 0");
  if (!(array_arm > 0.0)) throw InvalidParameter("scenario: array_arm must be > 0");
  if (!((roi_upper.array() > roi_lower.array()).all())) {
    throw InvalidParameter("scenario: roi upper bounds must exceed lower bounds");
  }
  if (!(birth_speed_bound > 0.0)) throw InvalidParameter("scenario: birth_speed_bound must be > 0");
}

void Scenario::validate() const {
  if (n_steps < 1) throw InvalidParameter("scenario: n_steps must be >= 1");
  if (!motion || !sensor || !birth) throw InvalidParameter("scenario: models are required");
  for (const auto& obj : objects) {
    if (!(obj.birth >= 1 && obj.birth < obj.death && obj.death <= n_steps + 1)) {
      throw InvalidParameter("scenario: object birth/death steps out of range");
    }
    if (obj.initial_state.size() != motion->state_dim()) {
      throw InvalidParameter("scenario: initial state has the wrong dimension");
    }
  }
}

const std::vector<int>& schedule_births() {
  static const std::vector<int> births{1, 10, 20, 30, 40, 50, 60, 70};
  return births;
}

const std::vector<int>& schedule_deaths() {
  // Index 0 (first born) has no listed death.
  static const std::vector<int> deaths{0, 130, 140, 150, 160, 170, 180, 190};
  return deaths;
}

Scenario make_scenario(const ScenarioParams& params, std::uint64_t seed) {
  params.validate();

  Scenario scn;
  scn.n_steps = params.n_steps;
  scn.seed = seed;
  scn.motion = std::make_shared<CvMotionModel>(params.dt, params.drive_var, params.survival_prob);

  TdoaModel::Params tp = TdoaModel::two_array_params({params.array1, params.array2}, params.array_arm);
  tp.propagation_speed = params.propagation_speed;
  tp.sigma_v = params.sigma_v;
  tp.detection_prob = params.detection_prob;
  tp.clutter_mean = params.clutter_mean;
  tp.roi = Box{params.roi_lower, params.roi_upper};
  scn.sensor = std::make_shared<TdoaModel>(std::move(tp));

  const Eigen::Vector3d vbound = Eigen::Vector3d::Constant(params.birth_speed_bound);
  scn.birth = std::make_shared<UniformBirthModel>(
      params.birth_mean, Box{params.roi_lower, params.roi_upper}, Box{-vbound, vbound});

  const Eigen::Vector3d center = 0.5 * (params.roi_lower + params.roi_upper);
  for (int j = 0; j < params.n_objects; ++j) {
    const int birth = schedule_births()[static_cast<std::size_t>(j)];
    if (birth > params.n_steps) break;
    int death = schedule_deaths()[static_cast<std::size_t>(j)];
    if (death == 0 || death > params.n_steps) death = params.n_steps + 1;

    const double azimuth = std::numbers::pi / 4.0 * j;
    const Eigen::Vector3d start =
        center + 400.0 * Eigen::Vector3d(std::cos(azimuth), std::sin(azimuth), 0.0);
    const double speed = std::clamp(400.0 / (100.0 - birth), 2.0, 8.0);
    const Eigen::Vector3d velocity = speed * (center - start).normalized();

    Eigen::VectorXd x(6);
    x << start, velocity;
    scn.objects.push_back({birth, death, x});
  }
  scn.validate();
  return scn;
}

Scenario default_scenario() { return make_scenario(ScenarioParams{}); }

Scenario scaled_scenario() {
  ScenarioParams p;
  p.n_steps = 100;
  p.n_objects = 4;
  return make_scenario(p);
}

SimulationResult simulate(const Scenario& scn, std::uint64_t seed) {
  scn.validate();
  const TdoaModel& sensor = *scn.sensor;

  SimulationResult out;
  out.frames.reserve(static_cast<std::size_t>(scn.n_steps));

  std::vector<Eigen::VectorXd> states(scn.objects.size());
  std::vector<Rng> motion_rngs;
  motion_rngs.reserve(scn.objects.size());
  for (std::size_t j = 0; j < scn.objects.size(); ++j) {
    motion_rngs.push_back(make_stream(seed, static_cast<std::int64_t>(j), StreamTag::kSimMotion));
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::poisson_distribution<int> clutter_count(std::max(sensor.clutter_mean(), 1e-300));

  for (int k = 1; k <= scn.n_steps; ++k) {
    MeasurementFrame frame;
    frame.k = k;
    Rng detect_rng = make_stream(seed, k, StreamTag::kSimDetect);

    for (std::size_t j = 0; j < scn.objects.size(); ++j) {
      const auto& obj = scn.objects[j];
      if (k < obj.birth || k >= obj.death) continue;
      if (k == obj.birth) {
        states[j] = obj.initial_state;
      } else {
        states[j] = scn.motion->predict(states[j], motion_rngs[j]);
      }
      out.truth.push_back({k, static_cast<int>(j), states[j]});
      if (unit(detect_rng) < sensor.detection_prob()) {
        frame.z.push_back(sensor.sample_measurement(states[j], detect_rng));
      }
    }

    if (sensor.clutter_mean() > 0.0) {
      Rng clutter_rng = make_stream(seed, k, StreamTag::kSimClutter);
      const int n_clutter = clutter_count(clutter_rng);
      for (int c = 0; c < n_clutter; ++c) frame.z.push_back(sensor.sample_clutter(clutter_rng));
    }

    Rng shuffle_rng = make_stream(seed, k, StreamTag::kSimShuffle);
    std::shuffle(frame.z.begin(), frame.z.end(), shuffle_rng);
    out.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace pfmot
