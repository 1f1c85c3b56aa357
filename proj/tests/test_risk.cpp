#include <cmath>

#include "doctest.h"
#include "pdelab/risk.hpp"

using namespace pdelab;

namespace {

ModelSpec model_35(RadialFamily f, double theta_norm = 1.0, double c = 1.0, double eta = 1.0) {
  ModelSpec s;
  s.d = 3;
  s.k = 5;
  s.c = c;
  s.eta = eta;
  s.radial = std::move(f);
  return with_theta_norm(s, theta_norm);
}

McOptions mc(std::size_t n, std::uint64_t seed = 5) {
  McOptions o;
  o.n = n;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("normal quantiles") {
  CHECK(normal_quantile(0.99) == doctest::Approx(2.5758293035489).epsilon(1e-10));
  CHECK(normal_quantile(0.95) == doctest::Approx(1.9599639845401).epsilon(1e-10));
}

TEST_CASE("per-sample duality residual is at rounding level") {
  for (double c : {0.5, 1.0, 2.0}) {
    for (const RadialFamily& f : {RadialFamily{NormalRadial{}}, RadialFamily{StudentRadial{5.0}}}) {
      const Model m(model_35(f, 2.0, c));
      const RiskEntry e = risk_difference(m, mre_rule(), plugin_rule(ShrinkageSpec{JamesStein{}, 0.5 * dominance_a_max(c)}), mc(20000));
      CHECK(e.max_residual < 1e-12);
    }
  }
  // residual is not tracked when one side is not an MRE-scale Student
  const Model m(model_35(NormalRadial{}));
  CHECK(std::isnan(risk_difference(m, mre_rule(), pi0a_rule(0.0), mc(1000)).max_residual));
}

TEST_CASE("common random numbers shrink the standard error") {
  const Model m(model_35(NormalRadial{}, 1.0));
  const PredictiveRule q0 = mre_rule();
  const PredictiveRule q1 = plugin_rule(ShrinkageSpec{JamesStein{}, 0.5});
  const std::size_t n = 50000;
  const RiskEntry diff = risk_difference(m, q0, q1, mc(n, 3));
  const RiskEntry r0 = kl_risk(m, q0, mc(n, 3));
  McOptions other = mc(n, 3);
  other.stream_base = 1000;
  const RiskEntry r1 = kl_risk(m, q1, other);
  CHECK(diff.se < std::hypot(r0.se, r1.se));
  CHECK(std::abs(diff.estimate - (r0.estimate - r1.estimate)) < 4.0 * std::hypot(r0.se, r1.se));
}

TEST_CASE("MRE risk is constant in (theta, eta)") {
  for (const RadialFamily& f : {RadialFamily{NormalRadial{}}, RadialFamily{StudentRadial{5.0}}}) {
    const RiskEntry a = kl_risk(Model(model_35(f, 0.0, 1.0, 1.0)), mre_rule(), mc(40000, 8));
    const RiskEntry b = kl_risk(Model(model_35(f, 5.0, 1.0, 1.0)), mre_rule(), mc(40000, 8));
    const RiskEntry c = kl_risk(Model(model_35(f, 0.0, 1.0, 4.0)), mre_rule(), mc(40000, 8));
    CHECK(std::abs(a.estimate - b.estimate) < 4.0 * std::hypot(a.se, b.se));
    CHECK(std::abs(a.estimate - c.estimate) < 4.0 * std::hypot(a.se, c.se));
  }
}

TEST_CASE("exact rule has zero KL risk and zero estimation difference") {
  const Model m(model_35(StudentRadial{5.0}, 1.0));
  const RiskEntry e = kl_risk(m, exact_rule(), mc(2000));
  CHECK(e.estimate == 0.0);
  CHECK(e.se == 0.0);
  const RiskEntry z = estimation_risk_difference(m, identity_estimator(), identity_estimator(), mc(2000));
  CHECK(z.estimate == 0.0);
}

TEST_CASE("results do not depend on the thread count or chunk timing") {
  const Model m(model_35(DiscreteRadial{{{1.0, 0.5}, {4.0, 0.5}}}, 2.0));
  const PredictiveRule q1 = plugin_rule(ShrinkageSpec{PositivePart{}, 0.5});
  McOptions o = mc(45001, 12);
  const RiskEntry one = risk_difference(m, mre_rule(), q1, o);
  for (unsigned t : {2u, 3u, 8u}) {
    o.threads = t;
    const RiskEntry many = risk_difference(m, mre_rule(), q1, o);
    CHECK(many.estimate == one.estimate);
    CHECK(many.se == one.se);
    CHECK(many.ci_lo == one.ci_lo);
  }
  CHECK(one.n == 45001);
}

TEST_CASE("antithetic sampling stays unbiased") {
  const Model m(model_35(NormalRadial{}, 1.0));
  const PointRule p0 = benchmark_predictor();
  const PointRule p1 = shrinkage_predictor(ShrinkageSpec{JamesStein{}, 0.5});
  McOptions plain = mc(60000, 4);
  McOptions anti = plain;
  anti.antithetic = true;
  const RiskEntry a = point_risk_difference(m, p0, p1, LogLoss{}, plain);
  const RiskEntry b = point_risk_difference(m, p0, p1, LogLoss{}, anti);
  CHECK(std::abs(a.estimate - b.estimate) < 4.0 * std::hypot(a.se, b.se));
}

TEST_CASE("point prediction risk differences agree with separate risks") {
  const Model m(model_35(StudentRadial{5.0}, 0.0));
  const PointRule p0 = benchmark_predictor();
  const PointRule p1 = shrinkage_predictor(ShrinkageSpec{JamesStein{}, 0.5});
  for (const LossSpec& l : {LossSpec{LogLoss{}}, LossSpec{PowerLoss{0.5}}, LossSpec{ReflectedNormalLoss{2.0}}}) {
    const RiskEntry d = point_risk_difference(m, p0, p1, l, mc(20000, 6));
    const RiskEntry r0 = point_prediction_risk(m, p0, l, mc(20000, 6));
    const RiskEntry r1 = point_prediction_risk(m, p1, l, mc(20000, 6));
    CHECK(d.estimate == doctest::Approx(r0.estimate - r1.estimate).epsilon(1e-9));
    CHECK(d.estimate > 0.0);
  }
}

TEST_CASE("importance-sampling error enters the harmonic risk SE") {
  const Model m(model_35(NormalRadial{}, 0.0));
  IntegrationOptions io;
  io.is_draws = 20000;
  const RiskEntry e = risk_difference(m, mre_rule(), bayes_rule(PriorSpec{HarmonicPrior{}, -1.0}, io), mc(3000));
  CHECK(e.is_se > 0.0);
  CHECK(e.se >= e.mc_se);
  CHECK(e.se == doctest::Approx(std::hypot(e.mc_se, e.is_se)));
  // flat prior maps to the closed form, so no IS error
  const RiskEntry f = risk_difference(m, mre_rule(), bayes_rule(PriorSpec{FlatPrior{}, 0.0}, io), mc(3000));
  CHECK(f.is_se == 0.0);
}

TEST_CASE("dominance verdict rule") {
  auto entry = [](double lo) {
    RiskEntry e;
    e.ci_lo = lo;
    return e;
  };
  CHECK(dominance_verdict({entry(0.1), entry(-1e-5)}, 1e-4) == Verdict::Pass);
  CHECK(dominance_verdict({entry(0.1), entry(-1e-3)}, 1e-4) == Verdict::Fail);
  CHECK(dominance_verdict({entry(-1e-5), entry(-2e-5)}, 1e-4) == Verdict::Fail);
  CHECK(dominance_verdict({}, 1e-4) == Verdict::Fail);
  CHECK(to_string(Verdict::Suppressed) == "SUPPRESSED");
}
