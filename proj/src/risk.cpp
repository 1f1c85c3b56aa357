#include "pdelab/risk.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "pdelab/density.hpp"
#include "pdelab/error.hpp"

namespace pdelab {

namespace {

struct Accumulator {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  double is_var = 0.0;
  double max_residual = std::numeric_limits<double>::quiet_NaN();

  void add(const SampleStat& s) {
    count += 1.0;
    const double delta = s.value - mean;
    mean += delta / count;
    m2 += delta * (s.value - mean);
    is_var += s.is_var;
    if (!std::isnan(s.residual)) {
      max_residual = std::isnan(max_residual) ? std::abs(s.residual) : std::max(max_residual, std::abs(s.residual));
    }
  }
};

Accumulator merge(const Accumulator& a, const Accumulator& b) {
  if (a.count == 0.0) return b;
  if (b.count == 0.0) return a;
  Accumulator r;
  r.count = a.count + b.count;
  const double delta = b.mean - a.mean;
  r.mean = a.mean + delta * b.count / r.count;
  r.m2 = a.m2 + b.m2 + delta * delta * a.count * b.count / r.count;
  r.is_var = a.is_var + b.is_var;
  if (std::isnan(a.max_residual)) {
    r.max_residual = b.max_residual;
  } else if (std::isnan(b.max_residual)) {
    r.max_residual = a.max_residual;
  } else {
    r.max_residual = std::max(a.max_residual, b.max_residual);
  }
  return r;
}

// Ordered pairwise reduction: the tree shape depends only on the chunk count.
Accumulator reduce(const std::vector<Accumulator>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return parts[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return merge(reduce(parts, lo, mid), reduce(parts, mid, hi));
}

void reflect(const Model& model, const SampleTriple& t, SampleTriple& out) {
  const ModelSpec& spec = model.spec();
  for (std::size_t i = 0; i < t.x.size(); ++i) {
    out.x[i] = 2.0 * spec.theta[i] - t.x[i];
    out.y[i] = 2.0 * spec.c * spec.theta[i] - t.y[i];
  }
  for (std::size_t i = 0; i < t.u.size(); ++i) out.u[i] = -t.u[i];
}

std::string describe(const SampleTriple& t) {
  std::ostringstream os;
  os.precision(17);
  auto put = [&](const char* name, const Vec& v) {
    os << name << "=(";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ")";
  };
  put("x", t.x);
  os << " ";
  put("u", t.u);
  os << " ";
  put("y", t.y);
  return os.str();
}

double checked_log(const LogEstimate& e, const SampleTriple& t, const std::string& label) {
  if (!std::isfinite(e.value)) {
    throw NumericalError("predictive density '" + label + "' is zero or not finite at sample " + describe(t));
  }
  return e.value;
}

}  // namespace

double normal_quantile(double ci_level) {
  require(ci_level > 0.0 && ci_level < 1.0, "ci_level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * ci_level);
}

RiskEntry monte_carlo(const Model& model, const McOptions& opts,
                      const std::function<SampleStat(const SampleTriple&)>& stat) {
  require(opts.n >= 1, "Monte Carlo budget n must be >= 1");
  require(opts.chunk >= 2, "Monte Carlo chunk size must be >= 2");
  const std::size_t chunks = (opts.n + opts.chunk - 1) / opts.chunk;
  std::vector<Accumulator> parts(chunks);
  std::vector<std::exception_ptr> errors(chunks);

  auto run_chunk = [&](std::size_t j) {
    try {
      const std::size_t begin = j * opts.chunk;
      const std::size_t size = std::min(opts.chunk, opts.n - begin);
      Rng rng(RngStream{opts.seed, opts.stream_base + j});
      SampleTriple t = model.make_buffer();
      SampleTriple m = model.make_buffer();
      Accumulator acc;
      if (opts.antithetic) {
        for (std::size_t i = 0; i + 1 < size; i += 2) {
          model.sample_into(rng, t);
          reflect(model, t, m);
          const SampleStat a = stat(t);
          const SampleStat b = stat(m);
          SampleStat pair{0.5 * (a.value + b.value), 0.5 * (a.is_var + b.is_var), a.residual};
          if (!std::isnan(b.residual)) {
            pair.residual = std::isnan(a.residual) ? b.residual
                                                   : (std::abs(a.residual) > std::abs(b.residual) ? a.residual : b.residual);
          }
          acc.add(pair);
        }
      } else {
        for (std::size_t i = 0; i < size; ++i) {
          model.sample_into(rng, t);
          acc.add(stat(t));
        }
      }
      parts[j] = acc;
    } catch (...) {
      errors[j] = std::current_exception();
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(chunks)));
  if (threads == 1) {
    for (std::size_t j = 0; j < chunks; ++j) run_chunk(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < chunks; j = next++) run_chunk(j);
      });
    }
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const Accumulator total = reduce(parts, 0, chunks);
  RiskEntry r;
  r.family = family_label(model.spec().radial);
  r.theta_norm = std::sqrt(squared_norm(model.spec().theta));
  r.eta = model.eta();
  r.n = opts.n;
  r.estimate = total.mean;
  r.mc_se = total.count > 1.0 ? std::sqrt(total.m2 / (total.count - 1.0) / total.count) : 0.0;
  r.is_se = total.count > 0.0 ? std::sqrt(total.is_var / total.count) : 0.0;
  r.se = std::hypot(r.mc_se, r.is_se);
  const double z = normal_quantile(opts.ci_level);
  r.ci_lo = r.estimate - z * r.se;
  r.ci_hi = r.estimate + z * r.se;
  r.max_residual = total.max_residual;
  if (!std::isfinite(r.estimate)) throw NumericalError("Monte Carlo estimate is not finite");
  return r;
}

PredictiveRule mre_rule() {
  PredictiveRule r;
  r.label = "mre";
  r.log_density = [](const Model& m, const SampleTriple& t) {
    return LogEstimate{student_logpdf(mre_params(t.x, t.u, m.c(), m.k()), t.y), 0.0};
  };
  r.mre_scale_location = [](const Model& m, const SampleTriple& t) { return scaled(t.x, m.c()); };
  return r;
}

PredictiveRule plugin_rule(const ShrinkageSpec& s) {
  PredictiveRule r;
  r.label = "plugin-" + field_label(s.field);
  r.log_density = [s](const Model& m, const SampleTriple& t) {
    return LogEstimate{student_logpdf(plugin_density_params(s, t.x, t.u, m.c(), m.k()), t.y), 0.0};
  };
  r.mre_scale_location = [s](const Model& m, const SampleTriple& t) {
    return scaled(theta_hat(s, t.x, t.u, m.c(), m.k()), m.c());
  };
  return r;
}

PredictiveRule pi0a_rule(double a) {
  PredictiveRule r;
  std::ostringstream os;
  os << "pi0a(a=" << a << ")";
  r.label = os.str();
  r.log_density = [a](const Model& m, const SampleTriple& t) {
    return LogEstimate{student_logpdf(pi0a_params(t.x, t.u, m.c(), m.k(), a), t.y), 0.0};
  };
  return r;
}

PredictiveRule bayes_rule(const PriorSpec& prior, const IntegrationOptions& opts) {
  if (std::holds_alternative<FlatPrior>(prior.pi1)) {
    PredictiveRule r = pi0a_rule(prior.a);
    r.label = "bayes-" + prior_label(prior);
    return r;
  }
  PredictiveRule r;
  r.label = "bayes-" + prior_label(prior);
  r.log_density = [prior, opts](const Model& m, const SampleTriple& t) {
    const PredictiveDensity h = PredictiveDensity::bayes(prior, t.x, t.u, m.c(), m.k(), opts);
    return h.log_pdf_estimate(t.y);
  };
  return r;
}

PredictiveRule exact_rule() {
  PredictiveRule r;
  r.label = "exact";
  r.log_density = [](const Model& m, const SampleTriple& t) {
    return LogEstimate{m.conditional_log_density(t.x, t.u, t.y), 0.0};
  };
  return r;
}

PointRule benchmark_predictor() {
  return {"cx", [](const Model& m, ConstSpan x, ConstSpan) { return scaled(x, m.c()); }};
}

PointRule shrinkage_predictor(const ShrinkageSpec& s) {
  return {"c*theta_hat-" + field_label(s.field), [s](const Model& m, ConstSpan x, ConstSpan u) {
            return scaled(theta_hat(s, x, u, m.c(), m.k()), m.c());
          }};
}

PointRule identity_estimator() {
  return {"x", [](const Model&, ConstSpan x, ConstSpan) { return Vec(x.begin(), x.end()); }};
}

PointRule shrinkage_estimator(const ShrinkageSpec& s) {
  return {"theta_hat-" + field_label(s.field),
          [s](const Model& m, ConstSpan x, ConstSpan u) { return theta_hat(s, x, u, m.c(), m.k()); }};
}

RiskEntry kl_risk(const Model& model, const PredictiveRule& q, const McOptions& opts) {
  return monte_carlo(model, opts, [&](const SampleTriple& t) {
    const LogEstimate e = q.log_density(model, t);
    const double lq = checked_log(e, t, q.label);
    return SampleStat{model.conditional_log_density(t.x, t.u, t.y) - lq, e.se * e.se};
  });
}

RiskEntry risk_difference(const Model& model, const PredictiveRule& q0, const PredictiveRule& q1,
                          const McOptions& opts) {
  const bool track = static_cast<bool>(q0.mre_scale_location) && static_cast<bool>(q1.mre_scale_location);
  const double half = 0.5 * (model.d() + model.k());
  const double c2 = 1.0 + model.c() * model.c();
  return monte_carlo(model, opts, [&](const SampleTriple& t) {
    const LogEstimate e0 = q0.log_density(model, t);
    const LogEstimate e1 = q1.log_density(model, t);
    SampleStat st;
    st.value = checked_log(e1, t, q1.label) - checked_log(e0, t, q0.label);
    st.is_var = e0.se * e0.se + e1.se * e1.se;
    if (track) {
      const double base = c2 * squared_norm(t.u);
      const double lhs = half * (std::log(squared_distance(t.y, q0.mre_scale_location(model, t)) + base) -
                                 std::log(squared_distance(t.y, q1.mre_scale_location(model, t)) + base));
      st.residual = st.value - lhs;
    }
    return st;
  });
}

RiskEntry point_prediction_risk(const Model& model, const PointRule& predictor, const LossSpec& loss,
                                const McOptions& opts) {
  validate(loss);
  return monte_carlo(model, opts, [&](const SampleTriple& t) {
    return SampleStat{rho_loss(loss, predictor.predict(model, t.x, t.u), t.y, t.u, model.c())};
  });
}

RiskEntry point_risk_difference(const Model& model, const PointRule& p0, const PointRule& p1,
                                const LossSpec& loss, const McOptions& opts) {
  validate(loss);
  return monte_carlo(model, opts, [&](const SampleTriple& t) {
    return SampleStat{rho_loss(loss, p0.predict(model, t.x, t.u), t.y, t.u, model.c()) -
                      rho_loss(loss, p1.predict(model, t.x, t.u), t.y, t.u, model.c())};
  });
}

RiskEntry estimation_risk_difference(const Model& model, const PointRule& e0, const PointRule& e1,
                                     const McOptions& opts) {
  const Vec& theta = model.spec().theta;
  return monte_carlo(model, opts, [&](const SampleTriple& t) {
    return SampleStat{model.eta() * (squared_distance(e0.predict(model, t.x, t.u), theta) -
                                     squared_distance(e1.predict(model, t.x, t.u), theta))};
  });
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "PASS";
    case Verdict::Fail:
      return "FAIL";
    case Verdict::Suppressed:
      return "SUPPRESSED";
  }
  return "FAIL";
}

Verdict dominance_verdict(const std::vector<RiskEntry>& entries, double eps) {
  if (entries.empty()) return Verdict::Fail;
  bool strict = false;
  for (const RiskEntry& e : entries) {
    if (!(e.ci_lo > -eps)) return Verdict::Fail;
    strict = strict || e.ci_lo > 0.0;
  }
  return strict ? Verdict::Pass : Verdict::Fail;
}

}  // namespace pdelab
