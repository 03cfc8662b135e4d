#include "pfmot/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include <Eigen/Cholesky>
#include <boost/math/distributions/chi_squared.hpp>
#include <spdlog/spdlog.h>

#include "pfmot/error.hpp"

namespace pfmot {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

Eigen::VectorXd safe_log(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return safe_log(v); });
}

/// Scalar exp keeps exp(-inf) == 0; the vectorized path clamps its argument.
Eigen::VectorXd exp_of(const Eigen::VectorXd& log_values) {
  return log_values.unaryExpr([](double v) { return std::exp(v); });
}

/// log q(x, 1, m; z) for the existent branch of a detected object.
Eigen::VectorXd log_detection_term(const SensorModel& sensor, const Eigen::VectorXd& z,
                                   double log_clutter, const ParticleMatrix& particles) {
  const double log_pd = safe_log(sensor.detection_prob());
  if (log_pd == kNegInf) return Eigen::VectorXd::Constant(particles.cols(), kNegInf);
  Eigen::VectorXd out = sensor.log_likelihood(z, particles);
  out.array() += log_pd - log_clutter;
  return out;
}

bool outside_gate(const GaussianSummary& prior, const SensorModel& sensor, const Eigen::VectorXd& z,
                  double gate_probability) {
  const Eigen::MatrixXd H = sensor.jacobian(prior.mean);
  const Eigen::VectorXd innovation = z - sensor.predict_measurement(prior.mean);
  const Eigen::MatrixXd S = H * prior.cov * H.transpose() + sensor.noise_cov();
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) return false;
  const double d2 = innovation.dot(llt.solve(innovation));
  const boost::math::chi_squared_distribution<double> chi2(static_cast<double>(z.size()));
  return d2 > boost::math::quantile(chi2, gate_probability);
}

Eigen::VectorXd birth_log_density(const BirthModel& birth, const ParticleMatrix& particles) {
  Eigen::VectorXd out(particles.cols());
  for (Eigen::Index i = 0; i < particles.cols(); ++i) out(i) = birth.logpdf(particles.col(i));
  return out;
}

LabeledBelief empty_belief(const Label& label, const ParticleMatrix& particles, Eigen::Index n) {
  const Eigen::Index keep = std::min<Eigen::Index>(n, particles.cols());
  return {label, particles.leftCols(keep), Eigen::VectorXd::Zero(keep), 0.0};
}

}  // namespace

// ---- Small types ----

Eigen::VectorXd LabeledBelief::estimate() const {
  const double total = weights.sum();
  if (total > 0.0) return particles * weights / total;
  return particles.rowwise().mean();
}

ProposalMode parse_proposal_mode(std::string_view name) {
  if (name == "flow") return ProposalMode::kFlow;
  if (name == "bootstrap") return ProposalMode::kBootstrap;
  throw InvalidParameter("unknown proposal mode '" + std::string(name) + "' (expected flow|bootstrap)");
}

std::string_view to_string(ProposalMode mode) {
  return mode == ProposalMode::kFlow ? "flow" : "bootstrap";
}

void TrackerConfig::validate() const {
  if (n_particles < 1) throw InvalidParameter("tracker: n_particles must be >= 1");
  if (new_po_factor < 1) throw InvalidParameter("tracker: new_po_factor must be >= 1");
  if (!(pruning_threshold > 0.0 && pruning_threshold < detection_threshold &&
        detection_threshold < 1.0)) {
    throw InvalidParameter("tracker: need 0 < pruning threshold < detection threshold < 1");
  }
  if (!(gate_probability > 0.0 && gate_probability < 1.0)) {
    throw InvalidParameter("tracker: gate probability must lie in (0, 1)");
  }
  if (association.max_iters < 1) throw InvalidParameter("tracker: association max_iters must be >= 1");
  if (!(association.tol > 0.0)) throw InvalidParameter("tracker: association tol must be > 0");
  if (max_objects < 1) throw InvalidParameter("tracker: max_objects must be >= 1");
  if (flow_steps < 1) throw InvalidParameter("tracker: flow_steps must be >= 1");
  (void)schedule();
}

FlowSchedule TrackerConfig::schedule() const {
  return make_geometric_schedule(static_cast<std::size_t>(flow_steps), flow_first_step, flow_ratio);
}

std::vector<double> clutter_log_intensity(const SensorModel& sensor, const MeasurementFrame& frame) {
  std::vector<double> out;
  out.reserve(frame.z.size());
  const double log_mu = safe_log(sensor.clutter_mean());
  for (const auto& z : frame.z) {
    double lf = sensor.clutter_logpdf(z);
    if (!std::isfinite(lf)) lf = sensor.clutter_logpdf(sensor.project_to_clutter_support(z));
    out.push_back(log_mu + lf);
  }
  return out;
}

// ---- Prediction ----

PredictedMessage predict(const LabeledBelief& belief, const MotionModel& motion, Rng& rng) {
  if (belief.particles.cols() == 0 || belief.weights.size() != belief.particles.cols()) {
    throw InvalidParameter("predict: belief has no particles or mismatched weights");
  }
  PredictedMessage pred;
  pred.label = belief.label;
  pred.particles = belief.particles;
  motion.predict_inplace(pred.particles, rng);
  pred.weights = motion.survival_prob() * belief.weights;
  pred.alpha_e = motion.survival_prob() * belief.existence;

  if (pred.weights.sum() > 0.0) {
    pred.gaussian = GaussianSummary::from_weighted(pred.particles, pred.weights);
  } else {
    pred.gaussian = GaussianSummary::from_weighted(
        pred.particles, Eigen::VectorXd::Ones(pred.particles.cols()));
  }
  return pred;
}

// ---- Measurement evaluation ----

LegacyEvaluation measurement_evaluation(const PredictedMessage& pred, const SensorModel& sensor,
                                        const MeasurementFrame& frame,
                                        std::span<const double> log_clutter,
                                        const TrackerConfig& cfg, const FlowSchedule& schedule) {
  const auto m_k = static_cast<std::size_t>(frame.size());
  const double pd = sensor.detection_prob();

  LegacyEvaluation eval;
  eval.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_k) + 1);
  eval.beta(0) = (1.0 - pd) * pred.alpha_e + pred.alpha_n();
  eval.ext.blocks.resize(m_k + 1);
  eval.ext.blocks[0].particles = pred.particles;
  eval.ext.blocks[0].weights = pred.weights;
  if (m_k == 0) return eval;

  const Eigen::VectorXd log_w0 = safe_log(pred.weights);
  const bool use_flow =
      cfg.proposal_mode == ProposalMode::kFlow && pd > 0.0 && pred.alpha_e > 0.0;

  GaussianSummary prior;
  std::optional<GaussianDensity> density;
  Eigen::VectorXd log_prior0;
  if (use_flow) {
    prior = pred.gaussian.regularized();
    density.emplace(prior);
    log_prior0 = density->log_pdf(pred.particles);
  }

  for (std::size_t m = 1; m <= m_k; ++m) {
    const Eigen::VectorXd& z = frame.z[m - 1];
    auto& block = eval.ext.blocks[m];

    if (cfg.gating && pred.alpha_e > 0.0) {
      const GaussianSummary g = use_flow ? prior : pred.gaussian.regularized();
      if (outside_gate(g, sensor, z, cfg.gate_probability)) {
        block.gated_out = true;
        continue;
      }
    }

    Eigen::VectorXd log_w1 = log_w0;
    if (use_flow) {
      try {
        FlowResult fr = run_flow(pred.particles, prior.mean, prior, sensor, z, schedule);
        log_w1 = density->log_pdf(fr.particles) - log_prior0;
        log_w1.array() += fr.log_theta;
        log_w1 += log_w0;
        block.particles = std::move(fr.particles);
        block.weights = exp_of(log_w1);
        block.log_theta = fr.log_theta;
        block.zero_flow = false;
      } catch (const NumericalError& e) {
        ++eval.flow_fallbacks;
        spdlog::warn("object ({}, {}), measurement {}: flow failed, using zero flow: {}",
                     pred.label.k, pred.label.m, m - 1, e.what());
      }
    }

    const Eigen::VectorXd log_q =
        log_detection_term(sensor, z, log_clutter[m - 1], eval.ext.particles(m));
    eval.beta(static_cast<Eigen::Index>(m)) = exp_of(log_q + log_w1).sum();
  }
  return eval;
}

NewObjectEvaluation new_po_evaluation(const Eigen::VectorXd& z, double log_clutter,
                                      const SensorModel& sensor, const BirthModel& birth,
                                      const TrackerConfig& cfg, const FlowSchedule& schedule,
                                      Rng& rng) {
  const Eigen::Index n = static_cast<Eigen::Index>(cfg.n_particles) * cfg.new_po_factor;
  const double pd = sensor.detection_prob();
  const double mu_b = birth.mean_births();

  NewObjectEvaluation eval;
  eval.particles = birth.sample(n, rng);
  Eigen::VectorXd log_w1 = Eigen::VectorXd::Constant(n, -std::log(static_cast<double>(n)));

  if (cfg.proposal_mode == ProposalMode::kFlow && pd > 0.0 && mu_b > 0.0) {
    const GaussianSummary prior = birth.moment_gaussian().regularized();
    try {
      FlowResult fr = run_flow(eval.particles, prior.mean, prior, sensor, z, schedule);
      const Eigen::VectorXd log_b0 = birth_log_density(birth, eval.particles);
      const Eigen::VectorXd log_b1 = birth_log_density(birth, fr.particles);
      log_w1.array() += (log_b1 - log_b0).array() + fr.log_theta;
      eval.particles = std::move(fr.particles);
    } catch (const NumericalError& e) {
      eval.flow_fallback = true;
      spdlog::warn("new object flow failed, using zero flow: {}", e.what());
    }
  }

  eval.log_terms = sensor.log_likelihood(z, eval.particles) + log_w1;
  eval.log_terms.array() += safe_log(pd) + safe_log(mu_b) - log_clutter;
  eval.xi0 = 1.0 + exp_of(eval.log_terms).sum();
  return eval;
}

// ---- Measurement update ----

LabeledBelief measurement_update_legacy(const LegacyEvaluation& eval, const PredictedMessage& pred,
                                        const Eigen::VectorXd& kappa_row,
                                        const SensorModel& sensor, const MeasurementFrame& frame,
                                        std::span<const double> log_clutter,
                                        const TrackerConfig& cfg, Rng& rng,
                                        LegacyUpdateInfo* info) {
  const std::size_t n_blocks = eval.ext.size();
  if (static_cast<std::size_t>(kappa_row.size()) != n_blocks) {
    throw InvalidParameter("legacy update: kappa row does not match the number of blocks");
  }
  const double pd = sensor.detection_prob();

  // gamma(x, 1) = (1 - pd) kappa(0) + sum_m q(x, 1, m) kappa(m)
  auto gamma = [&](const ParticleMatrix& x) {
    Eigen::VectorXd g = Eigen::VectorXd::Constant(x.cols(), (1.0 - pd) * kappa_row(0));
    for (std::size_t m = 1; m < n_blocks; ++m) {
      if (eval.ext.blocks[m].gated_out || kappa_row(static_cast<Eigen::Index>(m)) == 0.0) continue;
      const Eigen::VectorXd log_q = log_detection_term(sensor, frame.z[m - 1], log_clutter[m - 1], x);
      g.array() += exp_of(log_q).array() * kappa_row(static_cast<Eigen::Index>(m));
    }
    return g;
  };

  std::vector<Eigen::VectorXd> weights_a(n_blocks);
  Eigen::VectorXd block_sums(static_cast<Eigen::Index>(n_blocks));
  weights_a[0] = gamma(eval.ext.particles(0)).cwiseProduct(eval.ext.weights(0));
  block_sums(0) = weights_a[0].sum();
  for (std::size_t a = 1; a < n_blocks; ++a) {
    if (eval.ext.blocks[a].zero_flow) {
      block_sums(static_cast<Eigen::Index>(a)) = block_sums(0);
      continue;
    }
    weights_a[a] = gamma(eval.ext.particles(a)).cwiseProduct(eval.ext.weights(a));
    block_sums(static_cast<Eigen::Index>(a)) = weights_a[a].sum();
  }

  std::size_t selected = 0;
  for (std::size_t a = 1; a < n_blocks; ++a) {
    if (block_sums(static_cast<Eigen::Index>(a)) > block_sums(static_cast<Eigen::Index>(selected))) {
      selected = a;
    }
  }
  if (info != nullptr) {
    info->selected_block = selected;
    info->block_sums = block_sums;
  }

  // Union of the zero-flow block and the selected block, each at half weight.
  const ParticleMatrix& x0 = eval.ext.particles(0);
  const ParticleMatrix& xs = eval.ext.particles(selected);
  const Eigen::VectorXd& ws = eval.ext.blocks[selected].zero_flow ? weights_a[0] : weights_a[selected];
  ParticleMatrix x_union(x0.rows(), x0.cols() + xs.cols());
  x_union << x0, xs;
  Eigen::VectorXd w_union(x0.cols() + xs.cols());
  w_union << 0.5 * weights_a[0], 0.5 * ws;

  const double w_b = pred.alpha_n() * kappa_row(0);
  const double denom = w_union.sum() + w_b;
  const Eigen::Index n_out = cfg.n_particles;
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    return empty_belief(pred.label, pred.particles, n_out);
  }
  const double existence = std::min(1.0, w_union.sum() / denom);
  if (!(existence > 0.0)) return empty_belief(pred.label, pred.particles, n_out);

  ResampleResult rs = resample(x_union, w_union, n_out, rng);
  return {pred.label, std::move(rs.particles), Eigen::VectorXd::Constant(n_out, existence / static_cast<double>(n_out)),
          existence};
}

LabeledBelief measurement_update_new(const NewObjectEvaluation& eval, const Eigen::VectorXd& iota_row,
                                     const Label& label, const TrackerConfig& cfg, Rng& rng) {
  const Eigen::Index n_out = cfg.n_particles;
  const double nonexistent = iota_row.sum();
  Eigen::VectorXd e = exp_of((eval.log_terms.array() + safe_log(iota_row(0))).matrix());
  const double existent = e.sum();
  const double denom = existent + nonexistent;
  if (!(existent > 0.0) || !std::isfinite(denom)) {
    return empty_belief(label, eval.particles, n_out);
  }
  const double existence = std::min(1.0, existent / denom);
  if (!(existence > 0.0)) return empty_belief(label, eval.particles, n_out);

  ResampleResult rs = resample(eval.particles, e, n_out, rng);
  return {label, std::move(rs.particles), Eigen::VectorXd::Constant(n_out, existence / static_cast<double>(n_out)),
          existence};
}

// ---- Detection, pruning, resampling ----

std::vector<Estimate> detect_and_estimate(std::span<const LabeledBelief> beliefs, double threshold) {
  std::vector<Estimate> out;
  for (const auto& b : beliefs) {
    if (b.existence > threshold) out.push_back({b.label, b.estimate(), b.existence});
  }
  return out;
}

std::vector<LabeledBelief> prune(std::vector<LabeledBelief> beliefs, double threshold) {
  std::erase_if(beliefs, [threshold](const LabeledBelief& b) { return b.existence < threshold; });
  return beliefs;
}

ResampleResult resample(const ParticleMatrix& particles, const Eigen::VectorXd& weights,
                        Eigen::Index n_out, Rng& rng) {
  if (weights.size() != particles.cols()) throw InvalidParameter("resample: weight count mismatch");
  if (n_out < 1) throw InvalidParameter("resample: n_out must be >= 1");
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw InvalidParameter("resample: weights must be finite and nonnegative");
  }
  const double total = weights.sum();
  if (!(total > 0.0)) throw DegenerateError("resample: all weights are zero");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double step = total / static_cast<double>(n_out);
  double position = unit(rng) * step;

  ResampleResult out{ParticleMatrix(particles.rows(), n_out),
                     Eigen::VectorXd::Constant(n_out, step)};
  Eigen::Index src = 0;
  double cumulative = weights(0);
  const Eigen::Index last = particles.cols() - 1;
  for (Eigen::Index i = 0; i < n_out; ++i) {
    while (position > cumulative && src < last) {
      ++src;
      cumulative += weights(src);
    }
    // Rounding can leave the walk on a zero-weight tail particle.
    Eigen::Index pick = src;
    while (weights(pick) == 0.0 && pick > 0) --pick;
    out.particles.col(i) = particles.col(pick);
    position += step;
  }
  return out;
}

// ---- Full recursion ----

Tracker::Tracker(TrackerModels models, TrackerConfig config)
    : models_(std::move(models)), config_(std::move(config)) {
  if (!models_.motion || !models_.sensor || !models_.birth) {
    throw InvalidParameter("tracker: motion, sensor and birth models are required");
  }
  const Eigen::Index d = models_.motion->state_dim();
  if (models_.sensor->state_dim() != d || models_.birth->state_dim() != d) {
    throw InvalidParameter("tracker: model state dimensions disagree");
  }
  config_.validate();
  schedule_ = config_.schedule();
}

StepResult Tracker::step(std::span<const LabeledBelief> state, const MeasurementFrame& frame,
                         std::uint64_t seed) const {
  const SensorModel& sensor = *models_.sensor;
  const auto n_p = static_cast<Eigen::Index>(state.size());
  const auto n_m = static_cast<Eigen::Index>(frame.size());
  const int k = frame.k;

  if (n_m > 0 && !(sensor.clutter_mean() > 0.0)) {
    throw InvalidParameter("tracker: clutter mean must be positive when measurements are present");
  }
  for (const auto& z : frame.z) {
    if (z.size() != sensor.measurement_dim()) {
      throw InvalidParameter("tracker: measurement dimension mismatch at k=" + std::to_string(k));
    }
  }
  const std::vector<double> log_clutter = clutter_log_intensity(sensor, frame);

  StepResult result;
  StepDiagnostics& diag = result.diagnostics;

  std::vector<PredictedMessage> preds;
  std::vector<LegacyEvaluation> legacy_evals;
  preds.reserve(state.size());
  legacy_evals.reserve(state.size());
  for (const auto& belief : state) {
    Rng rng = make_stream(seed, k, belief.label.k, belief.label.m, StreamTag::kPredict);
    preds.push_back(predict(belief, *models_.motion, rng));
    legacy_evals.push_back(
        measurement_evaluation(preds.back(), sensor, frame, log_clutter, config_, schedule_));
    diag.flow_fallbacks += legacy_evals.back().flow_fallbacks;
  }

  std::vector<NewObjectEvaluation> new_evals;
  new_evals.reserve(frame.z.size());
  for (Eigen::Index m = 0; m < n_m; ++m) {
    Rng rng = make_stream(seed, k, k, m, StreamTag::kBirthSample);
    new_evals.push_back(new_po_evaluation(frame.z[static_cast<std::size_t>(m)],
                                          log_clutter[static_cast<std::size_t>(m)], sensor,
                                          *models_.birth, config_, schedule_, rng));
    if (new_evals.back().flow_fallback) ++diag.flow_fallbacks;
  }

  AssociationTables tables;
  tables.beta.resize(n_p, n_m + 1);
  tables.xi.resize(n_m);
  for (Eigen::Index j = 0; j < n_p; ++j) tables.beta.row(j) = legacy_evals[static_cast<std::size_t>(j)].beta;
  for (Eigen::Index m = 0; m < n_m; ++m) tables.xi(m) = new_evals[static_cast<std::size_t>(m)].xi0;
  tables = run_spa_da(std::move(tables), config_.association);
  diag.association_iterations = tables.iterations;
  diag.association_converged = tables.converged;

  std::vector<LabeledBelief> beliefs;
  beliefs.reserve(state.size() + frame.z.size());
  for (Eigen::Index j = 0; j < n_p; ++j) {
    const auto& pred = preds[static_cast<std::size_t>(j)];
    Rng rng = make_stream(seed, k, pred.label.k, pred.label.m, StreamTag::kLegacyResample);
    LegacyUpdateInfo info;
    beliefs.push_back(measurement_update_legacy(legacy_evals[static_cast<std::size_t>(j)], pred,
                                                tables.kappa.row(j).transpose(), sensor, frame,
                                                log_clutter, config_, rng, &info));
    diag.legacy.push_back({pred.label, pred.alpha_e, pred.alpha_n(), sensor.detection_prob(),
                           legacy_evals[static_cast<std::size_t>(j)].beta, info.selected_block});
  }
  for (Eigen::Index m = 0; m < n_m; ++m) {
    Rng rng = make_stream(seed, k, k, m, StreamTag::kNewResample);
    beliefs.push_back(measurement_update_new(new_evals[static_cast<std::size_t>(m)],
                                             tables.iota.row(m).transpose(),
                                             Label{k, static_cast<int>(m)}, config_, rng));
  }
  diag.xi = tables.xi;
  diag.beliefs_before_prune = static_cast<int>(beliefs.size());

  result.estimates = detect_and_estimate(beliefs, config_.detection_threshold);
  result.state = prune(std::move(beliefs), config_.pruning_threshold);
  diag.pruned = diag.beliefs_before_prune - static_cast<int>(result.state.size());

  const auto cap = static_cast<std::size_t>(config_.max_objects);
  if (result.state.size() > cap) {
    std::vector<std::size_t> order(result.state.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return result.state[a].existence > result.state[b].existence;
    });
    std::vector<bool> keep(result.state.size(), false);
    for (std::size_t i = 0; i < cap; ++i) keep[order[i]] = true;
    std::vector<LabeledBelief> kept;
    kept.reserve(cap);
    for (std::size_t i = 0; i < result.state.size(); ++i) {
      if (keep[i]) kept.push_back(std::move(result.state[i]));
    }
    diag.evicted = static_cast<int>(result.state.size() - cap);
    spdlog::warn("k={}: object cap {} reached, evicted {} lowest-existence objects", k, cap,
                 diag.evicted);
    result.state = std::move(kept);
  }
  return result;
}

}  // namespace pfmot
