#include "pfmot/flow.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "pfmot/error.hpp"

namespace pfmot {

namespace {

constexpr double kMinStepDeterminant = 1e-12;

double log_det_from_cholesky(const Eigen::MatrixXd& L) {
  return 2.0 * L.diagonal().array().log().sum();
}

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& S, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    throw SingularityError(std::string(what) + " is not positive definite");
  }
  return llt.matrixL();
}

}  // namespace

void FlowSchedule::validate() const {
  if (lambdas.size() < 2) {
    throw InvalidParameter("flow schedule needs at least one step");
  }
  if (lambdas.front() != 0.0 || lambdas.back() != 1.0) {
    throw InvalidParameter("flow schedule must start at 0 and end at 1");
  }
  for (std::size_t l = 1; l < lambdas.size(); ++l) {
    if (!(lambdas[l] > lambdas[l - 1])) {
      throw InvalidParameter("flow schedule must be strictly increasing");
    }
  }
}

FlowSchedule make_geometric_schedule(std::size_t n_steps, double first_step, double ratio) {
  if (n_steps == 0) throw InvalidParameter("geometric schedule: n_steps must be positive");
  if (!(first_step > 0.0)) throw InvalidParameter("geometric schedule: first_step must be > 0");
  if (!(ratio > 1.0)) throw InvalidParameter("geometric schedule: ratio must be > 1");

  FlowSchedule s;
  s.lambdas.resize(n_steps + 1);
  double step = first_step;
  double acc = 0.0;
  s.lambdas[0] = 0.0;
  for (std::size_t l = 1; l <= n_steps; ++l) {
    acc += step;
    s.lambdas[l] = acc;
    step *= ratio;
  }
  const double scale = 1.0 / acc;
  for (auto& v : s.lambdas) v *= scale;
  s.lambdas.back() = 1.0;
  return s;
}

FlowSchedule make_uniform_schedule(std::size_t n_steps) {
  if (n_steps == 0) throw InvalidParameter("uniform schedule: n_steps must be positive");
  FlowSchedule s;
  s.lambdas.resize(n_steps + 1);
  for (std::size_t l = 0; l <= n_steps; ++l) {
    s.lambdas[l] = static_cast<double>(l) / static_cast<double>(n_steps);
  }
  s.lambdas.back() = 1.0;
  return s;
}

GaussianSummary GaussianSummary::regularized() const {
  const Eigen::Index n = cov.rows();
  Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
  const double trace = sym.trace();
  const double floor = trace > 0.0 ? 1e-9 * trace / static_cast<double>(n) : 1e-12;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  Eigen::VectorXd values = eig.eigenvalues();
  if ((values.array() >= floor).all()) {
    return {mean, sym};
  }
  values = values.cwiseMax(floor);
  const Eigen::MatrixXd& V = eig.eigenvectors();
  Eigen::MatrixXd out = V * values.asDiagonal() * V.transpose();
  return {mean, 0.5 * (out + out.transpose())};
}

GaussianSummary GaussianSummary::from_weighted(const ParticleMatrix& particles,
                                               const Eigen::VectorXd& weights) {
  const double total = weights.sum();
  if (!(total > 0.0)) throw DegenerateError("weighted moments need positive total weight");
  GaussianSummary g;
  g.mean = particles * weights / total;
  const ParticleMatrix centered = particles.colwise() - g.mean;
  g.cov = centered * weights.asDiagonal() * centered.transpose() / total;
  return g;
}

Eigen::VectorXd MeasurementModel::log_likelihood(const Eigen::VectorXd& z,
                                                 const ParticleMatrix& particles) const {
  Eigen::VectorXd out(particles.cols());
  for (Eigen::Index i = 0; i < particles.cols(); ++i) {
    out(i) = log_likelihood(z, Eigen::VectorXd(particles.col(i)));
  }
  return out;
}

LinearGaussianModel::LinearGaussianModel(Eigen::MatrixXd H, Eigen::MatrixXd R)
    : H_(std::move(H)), R_(std::move(R)) {
  if (R_.rows() != H_.rows() || R_.cols() != H_.rows()) {
    throw InvalidParameter("linear model: R must be square with one row per measurement");
  }
  R_chol_l_ = cholesky_lower(R_, "measurement noise covariance");
  log_norm_ = -0.5 * (static_cast<double>(H_.rows()) * std::log(2.0 * std::numbers::pi) +
                      log_det_from_cholesky(R_chol_l_));
}

double LinearGaussianModel::log_likelihood(const Eigen::VectorXd& z,
                                           const Eigen::VectorXd& x) const {
  const Eigen::VectorXd r = z - H_ * x;
  const Eigen::VectorXd u = R_chol_l_.triangularView<Eigen::Lower>().solve(r);
  return log_norm_ - 0.5 * u.squaredNorm();
}

LinearizedMeasurement linearize(const MeasurementModel& model, const Eigen::VectorXd& x_star,
                                const Eigen::VectorXd& z) {
  LinearizedMeasurement lin;
  lin.H = model.jacobian(x_star);
  lin.R = model.noise_cov();
  lin.z_eff = z - model.predict_measurement(x_star) + lin.H * x_star;
  return lin;
}

EdhCoefficients edh_coefficients(const GaussianSummary& prior, const LinearizedMeasurement& lin,
                                 double lambda) {
  const Eigen::Index n = prior.mean.size();
  const Eigen::MatrixXd& P = prior.cov;
  const Eigen::MatrixXd& H = lin.H;
  const Eigen::MatrixXd PHt = P * H.transpose();

  const Eigen::MatrixXd S = lambda * H * PHt + lin.R;
  Eigen::LLT<Eigen::MatrixXd> s_llt(S);
  if (s_llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "EDH innovation matrix is singular at lambda=" << lambda;
    throw SingularityError(msg.str());
  }
  Eigen::LLT<Eigen::MatrixXd> r_llt(lin.R);
  if (r_llt.info() != Eigen::Success) {
    throw SingularityError("measurement noise covariance is singular");
  }

  EdhCoefficients c;
  c.A = -0.5 * PHt * s_llt.solve(H);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd gain_term = (I + lambda * c.A) * PHt * r_llt.solve(lin.z_eff);
  c.b = (I + 2.0 * lambda * c.A) * (gain_term + c.A * prior.mean);
  return c;
}

double FlowResult::theta() const { return std::exp(log_theta); }

FlowResult run_flow(const ParticleMatrix& particles, const Eigen::VectorXd& aux_mean,
                    const GaussianSummary& prior, const MeasurementModel& model,
                    const Eigen::VectorXd& z, const FlowSchedule& schedule) {
  if (particles.cols() == 0) throw InvalidParameter("run_flow: empty particle set");
  if (particles.rows() != prior.mean.size() || aux_mean.size() != prior.mean.size()) {
    throw InvalidParameter("run_flow: state dimension mismatch");
  }

  const Eigen::Index n = prior.mean.size();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  FlowResult out{particles, aux_mean, 0.0};
  for (std::size_t l = 1; l <= schedule.steps(); ++l) {
    const double lambda = schedule.lambdas[l];
    const double dl = schedule.step_size(l);

    const LinearizedMeasurement lin = linearize(model, out.aux_mean, z);
    const EdhCoefficients c = edh_coefficients(prior, lin, lambda);

    const Eigen::MatrixXd step = I + dl * c.A;
    const double det = step.partialPivLu().determinant();
    if (!(std::abs(det) >= kMinStepDeterminant)) {
      std::ostringstream msg;
      msg << "flow step " << l << " (lambda=" << lambda << ") is not invertible: |det|=" << std::abs(det);
      throw InvertibilityError(msg.str());
    }
    out.log_theta += std::log(std::abs(det));

    const Eigen::VectorXd shift = dl * c.b;
    out.particles = (step * out.particles).colwise() + shift;
    out.aux_mean = step * out.aux_mean + shift;
  }
  return out;
}

GaussianDensity::GaussianDensity(const GaussianSummary& g)
    : mean_(g.mean), chol_l_(cholesky_lower(g.cov, "Gaussian covariance")) {
  log_norm_ = -0.5 * (static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi) +
                      log_det_from_cholesky(chol_l_));
}

double GaussianDensity::log_pdf(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd u = chol_l_.triangularView<Eigen::Lower>().solve(x - mean_);
  return log_norm_ - 0.5 * u.squaredNorm();
}

Eigen::VectorXd GaussianDensity::log_pdf(const ParticleMatrix& particles) const {
  const Eigen::MatrixXd u =
      chol_l_.triangularView<Eigen::Lower>().solve(particles.colwise() - mean_);
  return (log_norm_ - 0.5 * u.colwise().squaredNorm().array()).matrix().transpose();
}

}  // namespace pfmot
