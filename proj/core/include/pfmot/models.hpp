#pragma once

#include <array>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pfmot/flow.hpp"
#include "pfmot/rng.hpp"
#include "pfmot/types.hpp"

namespace pfmot {

// ---- Motion ----

class MotionModel {
 public:
  virtual ~MotionModel() = default;

  [[nodiscard]] virtual Eigen::Index state_dim() const = 0;
  [[nodiscard]] virtual double survival_prob() const = 0;

  [[nodiscard]] virtual Eigen::VectorXd predict(const Eigen::VectorXd& x, Rng& rng) const = 0;

  /// Propagates every column independently.
  virtual void predict_inplace(ParticleMatrix& particles, Rng& rng) const;
};

/// Constant velocity in `spatial_dims` axes with white-acceleration noise.
/// State layout is [position; velocity].
class CvMotionModel final : public MotionModel {
 public:
  CvMotionModel(double dt, double drive_var, double survival_prob, int spatial_dims = 3);

  [[nodiscard]] Eigen::Index state_dim() const override { return 2 * spatial_dims_; }
  [[nodiscard]] double survival_prob() const override { return survival_prob_; }
  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] double drive_var() const { return drive_var_; }
  [[nodiscard]] int spatial_dims() const { return spatial_dims_; }

  [[nodiscard]] const Eigen::MatrixXd& transition() const { return F_; }
  /// drive_var * [[dt^4/4, dt^3/2], [dt^3/2, dt^2]] per axis.
  [[nodiscard]] Eigen::MatrixXd process_noise() const;

  [[nodiscard]] Eigen::VectorXd predict(const Eigen::VectorXd& x, Rng& rng) const override;
  void predict_inplace(ParticleMatrix& particles, Rng& rng) const override;

 private:
  double dt_;
  double drive_var_;
  double survival_prob_;
  int spatial_dims_;
  Eigen::MatrixXd F_;
};

// ---- Sensors ----

/// Measurement model plus detection and clutter statistics.
class SensorModel : public MeasurementModel {
 public:
  [[nodiscard]] virtual double detection_prob() const = 0;
  [[nodiscard]] virtual double clutter_mean() const = 0;

  /// log f_c(z); -infinity outside the clutter support.
  [[nodiscard]] virtual double clutter_logpdf(const Eigen::VectorXd& z) const = 0;
  /// Nearest point of the clutter support.
  [[nodiscard]] virtual Eigen::VectorXd project_to_clutter_support(const Eigen::VectorXd& z) const = 0;

  [[nodiscard]] virtual Eigen::VectorXd sample_clutter(Rng& rng) const = 0;
  /// h(x) plus a draw of the measurement noise.
  [[nodiscard]] virtual Eigen::VectorXd sample_measurement(const Eigen::VectorXd& x, Rng& rng) const = 0;
};

/// Receiver pair (s, t) producing one TDOA component.
using ReceiverPair = std::pair<int, int>;

/// Time-difference-of-arrival sensor: component l is
/// (|pos - p_s| - |pos - p_t|) / c plus Gaussian noise of std sigma_v.
/// Clutter is uniform per component on [-|p_s - p_t|/c, |p_s - p_t|/c].
class TdoaModel final : public SensorModel {
 public:
  struct Params {
    std::vector<Eigen::Vector3d> receivers;
    std::vector<ReceiverPair> pairs;
    double propagation_speed = 1500.0;
    double sigma_v = 3e-6;
    double detection_prob = 0.9;
    double clutter_mean = 1.0;
    Box roi;
  };

  explicit TdoaModel(Params params);

  /// Two five-receiver arrays (center plus +-arm along x and y), six pairs
  /// each: center to every outrigger and the two opposite-outrigger pairs.
  static Params two_array_params(const std::vector<Eigen::Vector3d>& array_centers,
                                 double arm_length);

  [[nodiscard]] const Params& params() const { return p_; }

  [[nodiscard]] Eigen::Index state_dim() const override { return 6; }
  [[nodiscard]] Eigen::Index measurement_dim() const override {
    return static_cast<Eigen::Index>(p_.pairs.size());
  }

  [[nodiscard]] Eigen::VectorXd predict_measurement(const Eigen::VectorXd& x) const override;
  [[nodiscard]] Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const override;
  [[nodiscard]] const Eigen::MatrixXd& noise_cov() const override { return R_; }

  [[nodiscard]] double log_likelihood(const Eigen::VectorXd& z,
                                      const Eigen::VectorXd& x) const override;
  [[nodiscard]] Eigen::VectorXd log_likelihood(const Eigen::VectorXd& z,
                                               const ParticleMatrix& particles) const override;

  [[nodiscard]] double detection_prob() const override { return p_.detection_prob; }
  [[nodiscard]] double clutter_mean() const override { return p_.clutter_mean; }
  [[nodiscard]] double clutter_logpdf(const Eigen::VectorXd& z) const override;
  [[nodiscard]] Eigen::VectorXd project_to_clutter_support(const Eigen::VectorXd& z) const override;
  [[nodiscard]] Eigen::VectorXd sample_clutter(Rng& rng) const override;
  [[nodiscard]] Eigen::VectorXd sample_measurement(const Eigen::VectorXd& x, Rng& rng) const override;

  /// |p_s - p_t| / c for every pair.
  [[nodiscard]] const Eigen::VectorXd& max_tdoa() const { return max_tdoa_; }

 private:
  Params p_;
  Eigen::MatrixXd R_;
  Eigen::VectorXd max_tdoa_;
  double log_norm_ = 0.0;
  double clutter_log_density_ = 0.0;
};

/// Linear-Gaussian sensor with box-uniform clutter; used for reference
/// scenarios whose posteriors are known in closed form.
class LinearGaussianSensor final : public SensorModel {
 public:
  LinearGaussianSensor(Eigen::MatrixXd H, Eigen::MatrixXd R, double detection_prob,
                       double clutter_mean, Box clutter_support);

  [[nodiscard]] Eigen::Index state_dim() const override { return model_.state_dim(); }
  [[nodiscard]] Eigen::Index measurement_dim() const override { return model_.measurement_dim(); }
  [[nodiscard]] Eigen::VectorXd predict_measurement(const Eigen::VectorXd& x) const override {
    return model_.predict_measurement(x);
  }
  [[nodiscard]] Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const override {
    return model_.jacobian(x);
  }
  [[nodiscard]] const Eigen::MatrixXd& noise_cov() const override { return model_.noise_cov(); }
  [[nodiscard]] double log_likelihood(const Eigen::VectorXd& z,
                                      const Eigen::VectorXd& x) const override {
    return model_.log_likelihood(z, x);
  }
  using SensorModel::log_likelihood;

  [[nodiscard]] double detection_prob() const override { return detection_prob_; }
  [[nodiscard]] double clutter_mean() const override { return clutter_mean_; }
  [[nodiscard]] double clutter_logpdf(const Eigen::VectorXd& z) const override;
  [[nodiscard]] Eigen::VectorXd project_to_clutter_support(const Eigen::VectorXd& z) const override;
  [[nodiscard]] Eigen::VectorXd sample_clutter(Rng& rng) const override;
  [[nodiscard]] Eigen::VectorXd sample_measurement(const Eigen::VectorXd& x, Rng& rng) const override;

 private:
  LinearGaussianModel model_;
  Eigen::MatrixXd noise_chol_l_;
  double detection_prob_;
  double clutter_mean_;
  Box clutter_support_;
};

// ---- Birth ----

class BirthModel {
 public:
  virtual ~BirthModel() = default;

  [[nodiscard]] virtual Eigen::Index state_dim() const = 0;
  [[nodiscard]] virtual double mean_births() const = 0;
  [[nodiscard]] virtual ParticleMatrix sample(Eigen::Index n, Rng& rng) const = 0;
  [[nodiscard]] virtual double logpdf(const Eigen::VectorXd& x) const = 0;
  /// Gaussian with the birth density's mean and covariance.
  [[nodiscard]] virtual GaussianSummary moment_gaussian() const = 0;
};

/// Uniform on position_box x velocity_box. The velocity box may have zero
/// dimensions for position-only states.
class UniformBirthModel final : public BirthModel {
 public:
  UniformBirthModel(double mean_births, Box position_box, Box velocity_box);

  [[nodiscard]] Eigen::Index state_dim() const override { return support_.dim(); }
  [[nodiscard]] double mean_births() const override { return mean_births_; }
  [[nodiscard]] const Box& support() const { return support_; }

  [[nodiscard]] ParticleMatrix sample(Eigen::Index n, Rng& rng) const override;
  [[nodiscard]] double logpdf(const Eigen::VectorXd& x) const override;
  [[nodiscard]] GaussianSummary moment_gaussian() const override;

 private:
  double mean_births_;
  Box support_;
  double log_density_;
};

}  // namespace pfmot
