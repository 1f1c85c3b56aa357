#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pdelab/bayes_pde.hpp"
#include "pdelab/model.hpp"
#include "pdelab/shrinkage.hpp"

namespace pdelab {

/// A predictive density rule (x, u) -> q(.; x, u), evaluated at one replicate.
struct PredictiveRule {
  std::string label;
  /// log q(y; x, u) with the importance-sampling standard error (0 if exact).
  std::function<LogEstimate(const Model&, const SampleTriple&)> log_density;
  /// Location of the density when it is a Student with nu = k and the MRE
  /// scale; empty otherwise.
  std::function<Vec(const Model&, const SampleTriple&)> mre_scale_location;
};

PredictiveRule mre_rule();
PredictiveRule plugin_rule(const ShrinkageSpec& s);
PredictiveRule pi0a_rule(double a);
PredictiveRule bayes_rule(const PriorSpec& prior, const IntegrationOptions& opts = {});
/// The true conditional density of the model being sampled.
PredictiveRule exact_rule();

/// Point predictor of Y (or estimator of theta) from (x, u).
struct PointRule {
  std::string label;
  std::function<Vec(const Model&, ConstSpan x, ConstSpan u)> predict;
};

/// c x
PointRule benchmark_predictor();
/// c theta_hat(x, u)
PointRule shrinkage_predictor(const ShrinkageSpec& s);
/// x
PointRule identity_estimator();
/// theta_hat(x, u)
PointRule shrinkage_estimator(const ShrinkageSpec& s);

struct McOptions {
  std::size_t n = 100000;
  std::uint64_t seed = 1;
  /// Chunk j draws from RngStream{seed, stream_base + j}.
  std::uint64_t stream_base = 0;
  std::size_t chunk = 10000;
  unsigned threads = 1;
  double ci_level = 0.99;
  /// Pairs each replicate with its reflection through (theta, 0, c theta).
  bool antithetic = false;
};

struct RiskEntry {
  std::string family;
  double theta_norm = 0.0;
  double eta = 1.0;
  std::size_t n = 0;
  double estimate = 0.0;
  double se = 0.0;     ///< total standard error
  double mc_se = 0.0;  ///< Monte Carlo part
  double is_se = 0.0;  ///< root mean square importance-sampling error per replicate
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  /// Max |per-sample duality residual| when computed, NaN otherwise.
  double max_residual = std::numeric_limits<double>::quiet_NaN();
};

struct RiskReport {
  std::string quantity;
  std::string pair;
  std::string loss;
  std::uint64_t seed = 0;
  double ci_level = 0.99;
  std::vector<RiskEntry> entries;
};

/// Two-sided normal quantile for a confidence level.
double normal_quantile(double ci_level);

/// Mean, standard error and CI of a per-replicate statistic. `stat` fills
/// the value and optionally an importance-sampling variance and a residual.
struct SampleStat {
  double value = 0.0;
  double is_var = 0.0;
  double residual = std::numeric_limits<double>::quiet_NaN();
};
RiskEntry monte_carlo(const Model& model, const McOptions& opts,
                      const std::function<SampleStat(const SampleTriple&)>& stat);

/// E log(q_true(Y|X,U) / q(Y; X,U)).
RiskEntry kl_risk(const Model& model, const PredictiveRule& q, const McOptions& opts);

/// E log(q1 / q0) = R(q0) - R(q1) on common samples. When both rules are
/// MRE-scale Students with locations xi0, xi1 the per-sample residual against
/// ((d+k)/2) [log(||Y-xi0||^2+(1+c^2)||U||^2) - log(||Y-xi1||^2+(1+c^2)||U||^2)]
/// is tracked.
RiskEntry risk_difference(const Model& model, const PredictiveRule& q0, const PredictiveRule& q1,
                          const McOptions& opts);

/// E rho_loss(loss, predict(X,U), Y, U, c).
RiskEntry point_prediction_risk(const Model& model, const PointRule& predictor, const LossSpec& loss,
                                const McOptions& opts);

/// E[loss(p0) - loss(p1)] on common samples.
RiskEntry point_risk_difference(const Model& model, const PointRule& p0, const PointRule& p1,
                                const LossSpec& loss, const McOptions& opts);

/// E eta (||e0 - theta||^2 - ||e1 - theta||^2) on common samples.
RiskEntry estimation_risk_difference(const Model& model, const PointRule& e0, const PointRule& e1,
                                     const McOptions& opts);

enum class Verdict { Pass, Fail, Suppressed };
std::string to_string(Verdict v);

/// Pass when every CI lower bound exceeds -eps and at least one is > 0.
Verdict dominance_verdict(const std::vector<RiskEntry>& entries, double eps);

}  // namespace pdelab
