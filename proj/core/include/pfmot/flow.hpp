#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "pfmot/types.hpp"

namespace pfmot {

/// Pseudo-time grid 0 = lambda_0 < ... < lambda_N = 1.
struct FlowSchedule {
  std::vector<double> lambdas;

  [[nodiscard]] std::size_t steps() const { return lambdas.empty() ? 0 : lambdas.size() - 1; }
  [[nodiscard]] double step_size(std::size_t l) const { return lambdas[l] - lambdas[l - 1]; }

  /// Throws InvalidParameter unless the grid starts at 0, ends at 1 and is
  /// strictly increasing.
  void validate() const;
};

/// Geometrically growing steps, rescaled so the last grid point is exactly 1.
FlowSchedule make_geometric_schedule(std::size_t n_steps, double first_step, double ratio);
FlowSchedule make_uniform_schedule(std::size_t n_steps);

/// Mean and covariance of a Gaussian approximation.
struct GaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  /// Symmetrizes the covariance and lifts eigenvalues below
  /// 1e-9 * trace / dim to that floor.
  [[nodiscard]] GaussianSummary regularized() const;

  /// Weighted moments, normalized by the total weight.
  static GaussianSummary from_weighted(const ParticleMatrix& particles,
                                       const Eigen::VectorXd& weights);
};

/// Abstract measurement model z = h(x) + v, v ~ N(0, R).
class MeasurementModel {
 public:
  virtual ~MeasurementModel() = default;

  [[nodiscard]] virtual Eigen::Index state_dim() const = 0;
  [[nodiscard]] virtual Eigen::Index measurement_dim() const = 0;

  [[nodiscard]] virtual Eigen::VectorXd predict_measurement(const Eigen::VectorXd& x) const = 0;
  [[nodiscard]] virtual Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const = 0;
  [[nodiscard]] virtual const Eigen::MatrixXd& noise_cov() const = 0;

  [[nodiscard]] virtual double log_likelihood(const Eigen::VectorXd& z,
                                              const Eigen::VectorXd& x) const = 0;

  /// log f(z | x_i) for every column of `particles`.
  [[nodiscard]] virtual Eigen::VectorXd log_likelihood(const Eigen::VectorXd& z,
                                                       const ParticleMatrix& particles) const;
};

/// z = H x + v with v ~ N(0, R).
class LinearGaussianModel : public MeasurementModel {
 public:
  LinearGaussianModel(Eigen::MatrixXd H, Eigen::MatrixXd R);

  [[nodiscard]] Eigen::Index state_dim() const override { return H_.cols(); }
  [[nodiscard]] Eigen::Index measurement_dim() const override { return H_.rows(); }

  [[nodiscard]] Eigen::VectorXd predict_measurement(const Eigen::VectorXd& x) const override {
    return H_ * x;
  }
  [[nodiscard]] Eigen::MatrixXd jacobian(const Eigen::VectorXd&) const override { return H_; }
  [[nodiscard]] const Eigen::MatrixXd& noise_cov() const override { return R_; }

  [[nodiscard]] double log_likelihood(const Eigen::VectorXd& z,
                                      const Eigen::VectorXd& x) const override;
  using MeasurementModel::log_likelihood;

 private:
  Eigen::MatrixXd H_;
  Eigen::MatrixXd R_;
  Eigen::MatrixXd R_chol_l_;
  double log_norm_ = 0.0;
};

/// First-order expansion of a measurement model around a point.
/// z_eff is chosen so that H x + v reproduces h(x) to first order.
struct LinearizedMeasurement {
  Eigen::MatrixXd H;
  Eigen::MatrixXd R;
  Eigen::VectorXd z_eff;
};

LinearizedMeasurement linearize(const MeasurementModel& model, const Eigen::VectorXd& x_star,
                                const Eigen::VectorXd& z);

/// Velocity field dx/dlambda = A x + b of the exact Daum-Huang flow.
struct EdhCoefficients {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

EdhCoefficients edh_coefficients(const GaussianSummary& prior, const LinearizedMeasurement& lin,
                                 double lambda);

struct FlowResult {
  ParticleMatrix particles;
  Eigen::VectorXd aux_mean;
  /// log of the mapping factor: sum over steps of log|det(I + dlambda A)|.
  double log_theta = 0.0;

  [[nodiscard]] double theta() const;
};

/// Migrates particles from lambda = 0 to 1 with Euler steps on `schedule`,
/// re-linearizing at the auxiliary mean before every step.
///
/// The flow map is invertible as long as every step matrix I + dlambda A is;
/// a step with |det| below 1e-12 raises InvertibilityError.
FlowResult run_flow(const ParticleMatrix& particles, const Eigen::VectorXd& aux_mean,
                    const GaussianSummary& prior, const MeasurementModel& model,
                    const Eigen::VectorXd& z, const FlowSchedule& schedule);

/// log N(x; mean, cov) for every column, using a precomputed Cholesky factor.
class GaussianDensity {
 public:
  explicit GaussianDensity(const GaussianSummary& g);

  [[nodiscard]] double log_pdf(const Eigen::VectorXd& x) const;
  [[nodiscard]] Eigen::VectorXd log_pdf(const ParticleMatrix& particles) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd chol_l_;
  double log_norm_ = 0.0;
};

}  // namespace pfmot
