#include "pdelab/shrinkage.hpp"

#include <cmath>
#include <sstream>

#include "pdelab/error.hpp"

namespace pdelab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

bool is_singular_at_origin(const ShrinkageField& f) {
  return std::holds_alternative<JamesStein>(f) || std::holds_alternative<Baranchik>(f);
}

double kink_radius(const ShrinkageSpec& s, int d, double kappa) {
  if (!std::holds_alternative<PositivePart>(s.field) || d <= 2) return -1.0;
  return std::sqrt((d - 2) * kappa);
}

double divergence(const ShrinkageSpec& s, ConstSpan t, double h, double kappa, int side) {
  const std::size_t d = t.size();
  Vec tp(t.begin(), t.end());
  Vec tm(t.begin(), t.end());
  double div = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    tp[i] = t[i] + (side >= 0 ? h : 0.0);
    tm[i] = t[i] - (side <= 0 ? h : 0.0);
    const double step = (side == 0 ? 2.0 : 1.0) * h;
    div += (g_eval(s, tp, kappa)[i] - g_eval(s, tm, kappa)[i]) / step;
    tp[i] = t[i];
    tm[i] = t[i];
  }
  return div;
}

}  // namespace

std::string field_label(const ShrinkageField& field) {
  return std::visit(Overloaded{[](const JamesStein&) { return std::string("james-stein"); },
                               [](const PositivePart&) { return std::string("positive-part"); },
                               [](const Baranchik& b) { return b.label; },
                               [](const UserField& u) { return u.label; }},
                    field);
}

double shrinkage_a_max(double c) {
  require(c > 0.0, "c must be > 0");
  return (1.0 + c * c) / (c * c * (1.0 + c));
}

double prediction_form_a_max(double c) {
  require(c > 0.0, "c must be > 0");
  return 1.0 / c;
}

double dominance_a_max(double c) { return std::min(shrinkage_a_max(c), prediction_form_a_max(c)); }

Vec g_eval(const ShrinkageSpec& s, ConstSpan t, double kappa) {
  const double d = static_cast<double>(t.size());
  const double r2 = squared_norm(t);
  if (is_singular_at_origin(s.field) && r2 == 0.0) {
    throw InvalidArgument("g_eval: " + field_label(s.field) + " is singular at t = 0");
  }
  return std::visit(
      Overloaded{[&](const JamesStein&) { return scaled(t, -(d - 2.0) / r2); },
                 [&](const PositivePart&) {
                   require(kappa > 0.0, "g_eval: positive-part truncation scale must be > 0");
                   return scaled(t, -std::min((d - 2.0) / r2, 1.0 / kappa));
                 },
                 [&](const Baranchik& b) { return scaled(t, -b.r(r2) * (d - 2.0) / r2); },
                 [&](const UserField& u) {
                   Vec g = u.g(t);
                   require(g.size() == t.size(), "g_eval: user field returned wrong dimension");
                   return g;
                 }},
      s.field);
}

SuperharmonicReport check_superharmonic_condition(const ShrinkageSpec& s, int d,
                                                  const std::vector<Vec>& grid, double kappa,
                                                  double tolerance) {
  require(d >= 1, "check_superharmonic_condition: d must be >= 1");
  SuperharmonicReport report;
  report.values.reserve(grid.size());
  report.max_value = -std::numeric_limits<double>::infinity();
  const double kink = kink_radius(s, d, kappa);
  for (const Vec& t : grid) {
    require(t.size() == static_cast<std::size_t>(d), "check_superharmonic_condition: point of wrong dimension");
    const double r = std::sqrt(squared_norm(t));
    const double h = 1e-5 * std::max(1.0, r);
    const double g2 = squared_norm(g_eval(s, t, kappa));
    double value;
    if (kink > 0.0 && std::abs(r - kink) < 2.0 * h) {
      value = g2 + 2.0 * std::max(divergence(s, t, h, kappa, +1), divergence(s, t, h, kappa, -1));
    } else {
      value = g2 + 2.0 * divergence(s, t, h, kappa, 0);
    }
    report.values.push_back(value);
    if (value > report.max_value) {
      report.max_value = value;
      report.argmax = t;
    }
  }
  report.passed = report.max_value <= tolerance;
  return report;
}

ShrinkageSpec make_baranchik(std::function<double(double)> r, double a, int d,
                             const std::vector<Vec>& grid, std::string label) {
  require(static_cast<bool>(r), "make_baranchik: r must be callable");
  ShrinkageSpec s{Baranchik{std::move(r), std::move(label)}, a};
  const SuperharmonicReport rep = check_superharmonic_condition(s, d, grid);
  if (!rep.passed) {
    std::ostringstream msg;
    msg << "make_baranchik: ||g||^2 + 2 div g reaches " << rep.max_value << " > 0 at a point of norm "
        << std::sqrt(squared_norm(rep.argmax));
    throw InvalidArgument(msg.str());
  }
  return s;
}

Vec theta_hat(const ShrinkageSpec& s, ConstSpan x, ConstSpan u, double c, int k) {
  require(c > 0.0, "theta_hat: c must be > 0");
  require(u.size() == static_cast<std::size_t>(k), "theta_hat: u must have k coordinates");
  const double su = squared_norm(u);
  const double w = s.a * su / (k + 2.0);
  Vec out(x.begin(), x.end());
  if (w == 0.0) return out;
  const Vec t = scaled(x, 1.0 / c);
  if (is_singular_at_origin(s.field) && squared_norm(t) == 0.0) {
    warn("theta_hat.singular", "theta_hat: g singular at x/c = 0, using x");
    return out;
  }
  const double kappa = s.a * su / ((k + 2.0) * c);
  const Vec g = g_eval(s, t, kappa);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * g[i];
  return out;
}

StudentParams plugin_density_params(const ShrinkageSpec& s, ConstSpan x, ConstSpan u, double c, int k) {
  StudentParams p = mre_params(x, u, c, k);
  p.xi = scaled(theta_hat(s, x, u, c, k), c);
  return p;
}

void validate(const LossSpec& l) {
  std::visit(Overloaded{[](const LogLoss&) {}, [](const SquaredErrorLoss&) {},
                        [](const PowerLoss& p) {
                          require(p.p > 0.0 && p.p < 1.0, "power loss exponent must lie in (0, 1)");
                        },
                        [](const ReflectedNormalLoss& r) {
                          require(r.alpha > 0.0, "reflected normal loss alpha must be > 0");
                        }},
             l);
}

std::string loss_label(const LossSpec& l) {
  std::ostringstream os;
  std::visit(Overloaded{[&](const LogLoss&) { os << "log"; },
                        [&](const PowerLoss& p) { os << "power(" << p.p << ")"; },
                        [&](const ReflectedNormalLoss& r) { os << "reflected-normal(" << r.alpha << ")"; },
                        [&](const SquaredErrorLoss&) { os << "squared-error"; }},
             l);
  return os.str();
}

double rho(const LossSpec& l, double t) {
  return std::visit(Overloaded{[&](const LogLoss&) {
                                 if (!(t > 0.0)) throw InvalidArgument("log loss needs a positive argument");
                                 return std::log(t);
                               },
                               [&](const PowerLoss& p) { return std::pow(t, p.p); },
                               [&](const ReflectedNormalLoss& r) { return -std::expm1(-t / r.alpha); },
                               [&](const SquaredErrorLoss&) { return t; }},
                    l);
}

double rho_loss(const LossSpec& l, ConstSpan delta, ConstSpan y, ConstSpan u, double c) {
  const double e = squared_distance(y, delta);
  if (std::holds_alternative<SquaredErrorLoss>(l)) return e;
  return rho(l, e + (1.0 + c * c) * squared_norm(u));
}

PredictionForm transform_to_prediction_form(ConstSpan x, ConstSpan y, ConstSpan u, double c) {
  require(c > 0.0, "transform_to_prediction_form: c must be > 0");
  return PredictionForm{scaled(x, 1.0 / c), scaled(y, 1.0 / (c * c)),
                        scaled(u, std::sqrt(1.0 + c * c) / (c * c)), 1.0 / (c * c)};
}

SampleTriple transform_from_prediction_form(const PredictionForm& t, double c) {
  require(c > 0.0, "transform_from_prediction_form: c must be > 0");
  return SampleTriple{scaled(t.x, c), scaled(t.u, c * c / std::sqrt(1.0 + c * c)), scaled(t.y, c * c)};
}

}  // namespace pdelab
