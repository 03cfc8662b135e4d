#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "pfmot/models.hpp"
#include "pfmot/tracker.hpp"
#include "pfmot/types.hpp"

namespace pfmot {

/// Physical parameters of the TDOA tracking experiment.
struct ScenarioParams {
  int n_steps = 200;
  /// Uses the first n_objects entries of the eight-object schedule.
  int n_objects = 8;

  double dt = 1.0;
  double drive_var = 0.01;
  double survival_prob = 0.999;
  double detection_prob = 0.9;
  double clutter_mean = 1.0;
  double birth_mean = 0.011;
  double propagation_speed = 1500.0;
  double sigma_v = 3e-6;

  Eigen::Vector3d array1{250.0, 0.0, -10.0};
  Eigen::Vector3d array2{0.0, 250.0, -10.0};
  double array_arm = 10.0;

  Eigen::Vector3d roi_lower{-500.0, -500.0, -500.0};
  Eigen::Vector3d roi_upper{500.0, 500.0, 0.0};
  /// Birth velocities are uniform on [-v, v] per axis.
  double birth_speed_bound = 10.0;

  /// Throws InvalidParameter on out-of-range values.
  void validate() const;
};

struct ScenarioObject {
  /// Alive for birth <= k < death. death == n_steps + 1 means alive to the end.
  int birth = 1;
  int death = 2;
  Eigen::VectorXd initial_state;
};

struct Scenario {
  int n_steps = 0;
  std::vector<ScenarioObject> objects;
  std::shared_ptr<const CvMotionModel> motion;
  std::shared_ptr<const TdoaModel> sensor;
  std::shared_ptr<const UniformBirthModel> birth;
  std::uint64_t seed = 1;

  void validate() const;
  [[nodiscard]] TrackerModels tracker_models() const { return {motion, sensor, birth}; }
};

/// Birth and death steps of the eight-object schedule; the first-born object
/// has no death step.
const std::vector<int>& schedule_births();
const std::vector<int>& schedule_deaths();

Scenario make_scenario(const ScenarioParams& params, std::uint64_t seed = 1);

/// Eight crossing objects over 200 steps.
Scenario default_scenario();

/// First four objects over 100 steps.
Scenario scaled_scenario();

struct TruthRow {
  int k = 0;
  int object_id = 0;
  Eigen::VectorXd state;
};

struct SimulationResult {
  std::vector<TruthRow> truth;
  /// One frame per step k = 1..n_steps.
  std::vector<MeasurementFrame> frames;
};

SimulationResult simulate(const Scenario& scn, std::uint64_t seed);

}  // namespace pfmot
