#include "pfmot/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>

#include "pfmot/error.hpp"

namespace pfmot {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kCoincidenceTolerance = 1e-9;

Eigen::VectorXd standard_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

Eigen::VectorXd uniform_in_box(const Box& box, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd v(box.dim());
  for (Eigen::Index i = 0; i < box.dim(); ++i) {
    v(i) = box.lower(i) + unit(rng) * (box.upper(i) - box.lower(i));
  }
  return v;
}

void check_box(const Box& box, const char* what) {
  if (box.lower.size() != box.upper.size()) {
    throw InvalidParameter(std::string(what) + ": bound dimensions differ");
  }
  if (!(box.upper.array() > box.lower.array()).all()) {
    throw InvalidParameter(std::string(what) + ": every upper bound must exceed its lower bound");
  }
}

}  // namespace

// ---- Motion ----

void MotionModel::predict_inplace(ParticleMatrix& particles, Rng& rng) const {
  for (Eigen::Index i = 0; i < particles.cols(); ++i) {
    particles.col(i) = predict(particles.col(i), rng);
  }
}

CvMotionModel::CvMotionModel(double dt, double drive_var, double survival_prob, int spatial_dims)
    : dt_(dt), drive_var_(drive_var), survival_prob_(survival_prob), spatial_dims_(spatial_dims) {
  if (!(dt > 0.0)) throw InvalidParameter("CV model: dt must be positive");
  if (!(drive_var >= 0.0)) throw InvalidParameter("CV model: drive_var must be nonnegative");
  if (!(survival_prob >= 0.0 && survival_prob <= 1.0)) {
    throw InvalidParameter("CV model: survival probability must lie in [0, 1]");
  }
  if (spatial_dims < 1) throw InvalidParameter("CV model: need at least one spatial axis");

  const Eigen::Index d = spatial_dims_;
  F_ = Eigen::MatrixXd::Identity(2 * d, 2 * d);
  F_.topRightCorner(d, d) = dt_ * Eigen::MatrixXd::Identity(d, d);
}

Eigen::MatrixXd CvMotionModel::process_noise() const {
  const Eigen::Index d = spatial_dims_;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd Q(2 * d, 2 * d);
  Q.topLeftCorner(d, d) = std::pow(dt_, 4) / 4.0 * I;
  Q.topRightCorner(d, d) = std::pow(dt_, 3) / 2.0 * I;
  Q.bottomLeftCorner(d, d) = std::pow(dt_, 3) / 2.0 * I;
  Q.bottomRightCorner(d, d) = dt_ * dt_ * I;
  return drive_var_ * Q;
}

Eigen::VectorXd CvMotionModel::predict(const Eigen::VectorXd& x, Rng& rng) const {
  Eigen::VectorXd out = F_ * x;
  if (drive_var_ > 0.0) {
    // Q is rank one per axis: w = sqrt(q) [dt^2/2; dt] n.
    const Eigen::VectorXd n = standard_normal(spatial_dims_, rng);
    const double s = std::sqrt(drive_var_);
    out.head(spatial_dims_) += s * 0.5 * dt_ * dt_ * n;
    out.tail(spatial_dims_) += s * dt_ * n;
  }
  return out;
}

void CvMotionModel::predict_inplace(ParticleMatrix& particles, Rng& rng) const {
  const Eigen::Index d = spatial_dims_;
  particles.topRows(d) += dt_ * particles.bottomRows(d);
  if (drive_var_ > 0.0) {
    const double s = std::sqrt(drive_var_);
    for (Eigen::Index i = 0; i < particles.cols(); ++i) {
      const Eigen::VectorXd n = standard_normal(d, rng);
      particles.col(i).head(d) += s * 0.5 * dt_ * dt_ * n;
      particles.col(i).tail(d) += s * dt_ * n;
    }
  }
}

// ---- TDOA ----

TdoaModel::TdoaModel(Params params) : p_(std::move(params)) {
  if (p_.pairs.empty()) throw InvalidParameter("TDOA model: no receiver pairs");
  if (!(p_.propagation_speed > 0.0)) throw InvalidParameter("TDOA model: c must be positive");
  if (!(p_.sigma_v > 0.0)) throw InvalidParameter("TDOA model: sigma_v must be positive");
  if (!(p_.detection_prob >= 0.0 && p_.detection_prob <= 1.0)) {
    throw InvalidParameter("TDOA model: detection probability must lie in [0, 1]");
  }
  if (!(p_.clutter_mean >= 0.0)) throw InvalidParameter("TDOA model: clutter mean must be >= 0");

  const auto n_rx = static_cast<int>(p_.receivers.size());
  const auto L = static_cast<Eigen::Index>(p_.pairs.size());
  max_tdoa_.resize(L);
  clutter_log_density_ = 0.0;
  for (Eigen::Index l = 0; l < L; ++l) {
    const auto [s, t] = p_.pairs[static_cast<std::size_t>(l)];
    if (s < 0 || t < 0 || s >= n_rx || t >= n_rx || s == t) {
      throw InvalidParameter("TDOA model: invalid receiver pair");
    }
    const double baseline = (p_.receivers[s] - p_.receivers[t]).norm();
    if (!(baseline > 0.0)) throw InvalidParameter("TDOA model: coincident receivers in a pair");
    max_tdoa_(l) = baseline / p_.propagation_speed;
    clutter_log_density_ += -std::log(2.0 * max_tdoa_(l));
  }

  R_ = p_.sigma_v * p_.sigma_v * Eigen::MatrixXd::Identity(L, L);
  log_norm_ = -static_cast<double>(L) * (0.5 * std::log(2.0 * std::numbers::pi) + std::log(p_.sigma_v));
}

TdoaModel::Params TdoaModel::two_array_params(const std::vector<Eigen::Vector3d>& array_centers,
                                              double arm_length) {
  Params p;
  const std::array<Eigen::Vector3d, 5> offsets = {
      Eigen::Vector3d(0, 0, 0),           Eigen::Vector3d(arm_length, 0, 0),
      Eigen::Vector3d(-arm_length, 0, 0), Eigen::Vector3d(0, arm_length, 0),
      Eigen::Vector3d(0, -arm_length, 0)};
  for (const auto& center : array_centers) {
    const int base = static_cast<int>(p.receivers.size());
    for (const auto& off : offsets) p.receivers.push_back(center + off);
    for (int o = 1; o <= 4; ++o) p.pairs.emplace_back(base, base + o);
    p.pairs.emplace_back(base + 1, base + 2);
    p.pairs.emplace_back(base + 3, base + 4);
  }
  return p;
}

Eigen::VectorXd TdoaModel::predict_measurement(const Eigen::VectorXd& x) const {
  const Eigen::Vector3d pos = x.head<3>();
  Eigen::VectorXd out(measurement_dim());
  for (Eigen::Index l = 0; l < out.size(); ++l) {
    const auto [s, t] = p_.pairs[static_cast<std::size_t>(l)];
    const double ds = (pos - p_.receivers[s]).norm();
    const double dt = (pos - p_.receivers[t]).norm();
    if (ds < kCoincidenceTolerance || dt < kCoincidenceTolerance) {
      throw SingularityError("TDOA model: position coincides with a receiver");
    }
    out(l) = (ds - dt) / p_.propagation_speed;
  }
  return out;
}

Eigen::MatrixXd TdoaModel::jacobian(const Eigen::VectorXd& x) const {
  const Eigen::Vector3d pos = x.head<3>();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(measurement_dim(), 6);
  for (Eigen::Index l = 0; l < J.rows(); ++l) {
    const auto [s, t] = p_.pairs[static_cast<std::size_t>(l)];
    const Eigen::Vector3d us = pos - p_.receivers[s];
    const Eigen::Vector3d ut = pos - p_.receivers[t];
    const double ds = us.norm();
    const double dt = ut.norm();
    if (ds < kCoincidenceTolerance || dt < kCoincidenceTolerance) {
      throw SingularityError("TDOA Jacobian: position coincides with a receiver");
    }
    J.block<1, 3>(l, 0) = ((us / ds - ut / dt) / p_.propagation_speed).transpose();
  }
  return J;
}

double TdoaModel::log_likelihood(const Eigen::VectorXd& z, const Eigen::VectorXd& x) const {
  const Eigen::Vector3d pos = x.head<3>();
  double quad = 0.0;
  for (Eigen::Index l = 0; l < z.size(); ++l) {
    const auto [s, t] = p_.pairs[static_cast<std::size_t>(l)];
    const double h = ((pos - p_.receivers[s]).norm() - (pos - p_.receivers[t]).norm()) /
                     p_.propagation_speed;
    const double r = (z(l) - h) / p_.sigma_v;
    quad += r * r;
  }
  return log_norm_ - 0.5 * quad;
}

Eigen::VectorXd TdoaModel::log_likelihood(const Eigen::VectorXd& z,
                                          const ParticleMatrix& particles) const {
  const auto n_rx = p_.receivers.size();
  const Eigen::Index L = measurement_dim();
  const double inv_c = 1.0 / p_.propagation_speed;
  const double inv_sigma = 1.0 / p_.sigma_v;
  std::vector<double> dist(n_rx);
  Eigen::VectorXd out(particles.cols());
  for (Eigen::Index i = 0; i < particles.cols(); ++i) {
    const Eigen::Vector3d pos = particles.col(i).head<3>();
    for (std::size_t r = 0; r < n_rx; ++r) dist[r] = (pos - p_.receivers[r]).norm();
    double quad = 0.0;
    for (Eigen::Index l = 0; l < L; ++l) {
      const auto [s, t] = p_.pairs[static_cast<std::size_t>(l)];
      const double res = (z(l) - (dist[s] - dist[t]) * inv_c) * inv_sigma;
      quad += res * res;
    }
    out(i) = log_norm_ - 0.5 * quad;
  }
  return out;
}

double TdoaModel::clutter_logpdf(const Eigen::VectorXd& z) const {
  if ((z.array().abs() > max_tdoa_.array()).any()) return kNegInf;
  return clutter_log_density_;
}

Eigen::VectorXd TdoaModel::project_to_clutter_support(const Eigen::VectorXd& z) const {
  return z.cwiseMax(-max_tdoa_).cwiseMin(max_tdoa_);
}

Eigen::VectorXd TdoaModel::sample_clutter(Rng& rng) const {
  return uniform_in_box(Box{-max_tdoa_, max_tdoa_}, rng);
}

Eigen::VectorXd TdoaModel::sample_measurement(const Eigen::VectorXd& x, Rng& rng) const {
  return predict_measurement(x) + p_.sigma_v * standard_normal(measurement_dim(), rng);
}

// ---- Linear-Gaussian sensor ----

LinearGaussianSensor::LinearGaussianSensor(Eigen::MatrixXd H, Eigen::MatrixXd R,
                                           double detection_prob, double clutter_mean,
                                           Box clutter_support)
    : model_(std::move(H), R),
      noise_chol_l_(Eigen::LLT<Eigen::MatrixXd>(R).matrixL()),
      detection_prob_(detection_prob),
      clutter_mean_(clutter_mean),
      clutter_support_(std::move(clutter_support)) {
  if (!(detection_prob >= 0.0 && detection_prob <= 1.0)) {
    throw InvalidParameter("linear sensor: detection probability must lie in [0, 1]");
  }
  if (!(clutter_mean >= 0.0)) throw InvalidParameter("linear sensor: clutter mean must be >= 0");
  check_box(clutter_support_, "linear sensor clutter support");
  if (clutter_support_.dim() != model_.measurement_dim()) {
    throw InvalidParameter("linear sensor: clutter support dimension mismatch");
  }
}

double LinearGaussianSensor::clutter_logpdf(const Eigen::VectorXd& z) const {
  if (!clutter_support_.contains(z)) return kNegInf;
  return -std::log(clutter_support_.volume());
}

Eigen::VectorXd LinearGaussianSensor::project_to_clutter_support(const Eigen::VectorXd& z) const {
  return z.cwiseMax(clutter_support_.lower).cwiseMin(clutter_support_.upper);
}

Eigen::VectorXd LinearGaussianSensor::sample_clutter(Rng& rng) const {
  return uniform_in_box(clutter_support_, rng);
}

Eigen::VectorXd LinearGaussianSensor::sample_measurement(const Eigen::VectorXd& x, Rng& rng) const {
  return model_.predict_measurement(x) + noise_chol_l_ * standard_normal(measurement_dim(), rng);
}

// ---- Birth ----

UniformBirthModel::UniformBirthModel(double mean_births, Box position_box, Box velocity_box)
    : mean_births_(mean_births) {
  if (!(mean_births >= 0.0)) throw InvalidParameter("birth model: mean births must be >= 0");
  check_box(position_box, "birth position box");
  if (velocity_box.dim() > 0) check_box(velocity_box, "birth velocity box");
  const Eigen::Index dp = position_box.dim();
  const Eigen::Index dv = velocity_box.dim();
  support_.lower.resize(dp + dv);
  support_.upper.resize(dp + dv);
  support_.lower << position_box.lower, velocity_box.lower;
  support_.upper << position_box.upper, velocity_box.upper;
  log_density_ = -support_.widths().array().log().sum();
}

ParticleMatrix UniformBirthModel::sample(Eigen::Index n, Rng& rng) const {
  if (n < 1) throw InvalidParameter("birth model: need at least one sample");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ParticleMatrix out(support_.dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index a = 0; a < support_.dim(); ++a) {
      out(a, i) = support_.lower(a) + unit(rng) * (support_.upper(a) - support_.lower(a));
    }
  }
  return out;
}

double UniformBirthModel::logpdf(const Eigen::VectorXd& x) const {
  return support_.contains(x) ? log_density_ : kNegInf;
}

GaussianSummary UniformBirthModel::moment_gaussian() const {
  const Eigen::VectorXd w = support_.widths();
  return {support_.center(), (w.array().square() / 12.0).matrix().asDiagonal()};
}

}  // namespace pfmot
