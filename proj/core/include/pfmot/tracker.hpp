#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pfmot/association.hpp"
#include "pfmot/flow.hpp"
#include "pfmot/models.hpp"
#include "pfmot/rng.hpp"
#include "pfmot/types.hpp"

namespace pfmot {

/// Particle representation of a potential object's belief. The dummy density
/// of the nonexistent branch is carried only as the mass 1 - existence.
struct LabeledBelief {
  Label label;
  ParticleMatrix particles;
  /// Sum equals `existence`.
  Eigen::VectorXd weights;
  double existence = 0.0;

  /// MMSE state estimate conditioned on existence.
  [[nodiscard]] Eigen::VectorXd estimate() const;
};

/// Prediction message of a legacy object: weights sum to alpha_e.
struct PredictedMessage {
  Label label;
  ParticleMatrix particles;
  Eigen::VectorXd weights;
  double alpha_e = 0.0;
  GaussianSummary gaussian;

  [[nodiscard]] double alpha_n() const { return 1.0 - alpha_e; }
};

/// One particle block per association hypothesis a = 0..m_k. Blocks that
/// received no flow share block 0's particles and weights.
struct ExtendedParticleSet {
  struct Block {
    /// Empty when the block reuses block 0.
    ParticleMatrix particles;
    Eigen::VectorXd weights;
    double log_theta = 0.0;
    bool zero_flow = true;
    bool gated_out = false;
  };

  std::vector<Block> blocks;

  [[nodiscard]] std::size_t size() const { return blocks.size(); }
  [[nodiscard]] const ParticleMatrix& particles(std::size_t a) const {
    return blocks[a].zero_flow ? blocks[0].particles : blocks[a].particles;
  }
  [[nodiscard]] const Eigen::VectorXd& weights(std::size_t a) const {
    return blocks[a].zero_flow ? blocks[0].weights : blocks[a].weights;
  }
};

enum class ProposalMode { kFlow, kBootstrap };

ProposalMode parse_proposal_mode(std::string_view name);
std::string_view to_string(ProposalMode mode);

struct TrackerConfig {
  int n_particles = 100;
  int new_po_factor = 20;
  double detection_threshold = 0.5;
  double pruning_threshold = 1e-4;

  int flow_steps = 45;
  double flow_first_step = 1e-8;
  double flow_ratio = 1.5;

  bool gating = false;
  double gate_probability = 0.9999;

  SpaOptions association;
  ProposalMode proposal_mode = ProposalMode::kFlow;
  int max_objects = 200;

  /// Throws InvalidParameter on out-of-range values.
  void validate() const;
  [[nodiscard]] FlowSchedule schedule() const;
};

/// Result of evaluating a legacy object against every measurement.
struct LegacyEvaluation {
  ExtendedParticleSet ext;
  /// beta(0..m_k)
  Eigen::VectorXd beta;
  int flow_fallbacks = 0;
};

/// Result of evaluating the new object spawned by one measurement.
struct NewObjectEvaluation {
  ParticleMatrix particles;
  /// log of the existent-branch terms whose sum is xi(0) - 1.
  Eigen::VectorXd log_terms;
  double xi0 = 1.0;
  bool flow_fallback = false;
};

/// Per-measurement log(mu_c f_c(z)), evaluated at the nearest in-support point
/// when noise pushes a measurement outside the clutter support.
std::vector<double> clutter_log_intensity(const SensorModel& sensor, const MeasurementFrame& frame);

PredictedMessage predict(const LabeledBelief& belief, const MotionModel& motion, Rng& rng);

LegacyEvaluation measurement_evaluation(const PredictedMessage& pred, const SensorModel& sensor,
                                        const MeasurementFrame& frame,
                                        std::span<const double> log_clutter,
                                        const TrackerConfig& cfg, const FlowSchedule& schedule);

NewObjectEvaluation new_po_evaluation(const Eigen::VectorXd& z, double log_clutter,
                                      const SensorModel& sensor, const BirthModel& birth,
                                      const TrackerConfig& cfg, const FlowSchedule& schedule,
                                      Rng& rng);

/// Diagnostic output of the legacy update.
struct LegacyUpdateInfo {
  std::size_t selected_block = 0;
  Eigen::VectorXd block_sums;
};

LabeledBelief measurement_update_legacy(const LegacyEvaluation& eval, const PredictedMessage& pred,
                                        const Eigen::VectorXd& kappa_row,
                                        const SensorModel& sensor, const MeasurementFrame& frame,
                                        std::span<const double> log_clutter,
                                        const TrackerConfig& cfg, Rng& rng,
                                        LegacyUpdateInfo* info = nullptr);

LabeledBelief measurement_update_new(const NewObjectEvaluation& eval, const Eigen::VectorXd& iota_row,
                                     const Label& label, const TrackerConfig& cfg, Rng& rng);

struct Estimate {
  Label label;
  Eigen::VectorXd state;
  double existence = 0.0;
};

/// Objects with existence strictly above the threshold and their MMSE states.
std::vector<Estimate> detect_and_estimate(std::span<const LabeledBelief> beliefs, double threshold);

/// Drops beliefs with existence strictly below `threshold`.
std::vector<LabeledBelief> prune(std::vector<LabeledBelief> beliefs, double threshold);

struct ResampleResult {
  ParticleMatrix particles;
  Eigen::VectorXd weights;
};

/// Systematic resampling to `n_out` particles of equal weight sum(w) / n_out.
ResampleResult resample(const ParticleMatrix& particles, const Eigen::VectorXd& weights,
                        Eigen::Index n_out, Rng& rng);

/// Per-step record used by the structural checks.
struct StepDiagnostics {
  struct Legacy {
    Label label;
    double alpha_e = 0.0;
    double alpha_n = 0.0;
    double detection_prob = 0.0;
    Eigen::VectorXd beta;
    std::size_t selected_block = 0;
  };
  std::vector<Legacy> legacy;
  Eigen::VectorXd xi;
  int association_iterations = 0;
  bool association_converged = true;
  int flow_fallbacks = 0;
  int pruned = 0;
  int evicted = 0;
  int beliefs_before_prune = 0;
};

struct StepResult {
  std::vector<LabeledBelief> state;
  std::vector<Estimate> estimates;
  StepDiagnostics diagnostics;
};

struct TrackerModels {
  std::shared_ptr<const MotionModel> motion;
  std::shared_ptr<const SensorModel> sensor;
  std::shared_ptr<const BirthModel> birth;
};

/// One recursion of the particle-based sum-product tracker.
///
/// Random numbers come from streams named by (seed, time step, label, purpose),
/// so results do not depend on evaluation order.
class Tracker {
 public:
  Tracker(TrackerModels models, TrackerConfig config);

  [[nodiscard]] const TrackerConfig& config() const { return config_; }
  [[nodiscard]] const TrackerModels& models() const { return models_; }

  [[nodiscard]] StepResult step(std::span<const LabeledBelief> state, const MeasurementFrame& frame,
                                std::uint64_t seed) const;

 private:
  TrackerModels models_;
  TrackerConfig config_;
  FlowSchedule schedule_;
};

}  // namespace pfmot
