#include "pdelab/radial.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "pdelab/error.hpp"
#include "pdelab/inverse_cdf.hpp"
#include "pdelab/quadrature.hpp"

namespace pdelab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string format_number(double x) {
  std::ostringstream out;
  out << x;
  return out.str();
}
}  // namespace

std::string family_label(const RadialFamily& family) {
  return std::visit(Overloaded{
                        [](const NormalRadial&) { return std::string("normal"); },
                        [](const StudentRadial& s) { return "student(" + format_number(s.df) + ")"; },
                        [](const DiscreteRadial& m) {
                          std::string out = "discrete(";
                          for (std::size_t i = 0; i < m.atoms.size(); ++i) {
                            if (i) out += ";";
                            out += format_number(m.atoms[i].scale) + "@" +
                                   format_number(m.atoms[i].weight);
                          }
                          return out + ")";
                        },
                        [](const NumericRadial& n) { return n.label; },
                    },
                    family);
}

bool is_scale_mixture(const RadialFamily& family) {
  return !std::holds_alternative<NumericRadial>(family);
}

void validate(const RadialFamily& family) {
  if (const auto* s = std::get_if<StudentRadial>(&family)) {
    require(std::isfinite(s->df) && s->df > 0.0, "student radial family needs df > 0");
  } else if (const auto* m = std::get_if<DiscreteRadial>(&family)) {
    require(!m->atoms.empty(), "discrete mixture needs at least one atom");
    double total = 0.0;
    for (const MixtureAtom& a : m->atoms) {
      require(std::isfinite(a.scale) && a.scale > 0.0, "discrete mixture scales must be > 0");
      require(std::isfinite(a.weight) && a.weight > 0.0, "discrete mixture weights must be > 0");
      total += a.weight;
    }
    require(std::abs(total - 1.0) <= 1e-12, "discrete mixture weights must sum to 1 (got " +
                                                format_number(total) + ")");
  } else if (const auto* n = std::get_if<NumericRadial>(&family)) {
    require(static_cast<bool>(n->f), "numeric radial family needs a profile function");
  }
}

struct RadialDensity::NumericTables {
  double log_norm = 0.0;  // log of integral of f(||v||^2) over R^dim
  std::unique_ptr<InverseCdfTable> radius;
};

RadialDensity::RadialDensity(RadialFamily family, int dim) : family_(std::move(family)), dim_(dim) {
  require(dim >= 1, "radial density dimension must be >= 1");
  validate(family_);
  if (const auto* n = std::get_if<NumericRadial>(&family_)) {
    const auto f = n->f;
    const double dm1 = dim - 1;
    auto log_h = [f, dm1](double r) {
      const double v = f(r * r);
      return v > 0.0 ? dm1 * std::log(r) + std::log(v) : -kInf;
    };
    if (const std::string why = quad::half_line_integrability(log_h); !why.empty()) {
      throw NumericalError("radial profile '" + n->label + "' is not normalizable in dimension " +
                           std::to_string(dim) + ": " + why);
    }
    auto tables = std::make_shared<NumericTables>();
    try {
      tables->radius = std::make_unique<InverseCdfTable>(log_h);
    } catch (const NumericalError& e) {
      throw NumericalError("radial profile '" + n->label + "' is not normalizable in dimension " +
                           std::to_string(dim) + ": " + e.what());
    }
    tables->log_norm = log_unit_sphere_area(dim) + tables->radius->log_normalizer();
    numeric_ = std::move(tables);
  }
}

double RadialDensity::log_f(double t) const {
  const double D = dim_;
  return std::visit(
      Overloaded{
          [&](const NormalRadial&) { return -0.5 * D * kLog2Pi - 0.5 * t; },
          [&](const StudentRadial& s) {
            const double nu = s.df;
            return log_gamma(0.5 * (nu + D)) - log_gamma(0.5 * nu) -
                   0.5 * D * std::log(nu * std::numbers::pi) - 0.5 * (nu + D) * std::log1p(t / nu);
          },
          [&](const DiscreteRadial& m) {
            double hi = -kInf;
            std::vector<double> terms;
            terms.reserve(m.atoms.size());
            for (const MixtureAtom& a : m.atoms) {
              terms.push_back(std::log(a.weight) - 0.5 * D * (kLog2Pi + std::log(a.scale)) -
                              0.5 * t / a.scale);
              hi = std::max(hi, terms.back());
            }
            double s = 0.0;
            for (double v : terms) s += std::exp(v - hi);
            return hi + std::log(s);
          },
          [&](const NumericRadial& n) {
            const double v = n.f(t);
            return v > 0.0 ? std::log(v) - numeric_->log_norm : -kInf;
          },
      },
      family_);
}

double RadialDensity::tail_F(double t) const {
  const double D = dim_;
  return std::visit(
      Overloaded{
          [&](const NormalRadial&) { return std::exp(log_f(t)); },
          [&](const StudentRadial& s) {
            const double nu = s.df;
            const double q = 0.5 * (nu + D);
            if (q <= 1.0) return kInf;
            const double log_c = log_gamma(q) - log_gamma(0.5 * nu) - 0.5 * D * std::log(nu * std::numbers::pi);
            return 0.5 * std::exp(log_c + std::log(nu) + (1.0 - q) * std::log1p(t / nu)) / (q - 1.0);
          },
          [&](const DiscreteRadial& m) {
            double s = 0.0;
            for (const MixtureAtom& a : m.atoms) {
              s += a.weight * a.scale *
                   std::exp(-0.5 * D * (kLog2Pi + std::log(a.scale)) - 0.5 * t / a.scale);
            }
            return s;
          },
          [&](const NumericRadial&) {
            auto g = [&](double s) { return std::exp(log_f(s)); };
            return 0.5 * quad::integrate_checked(g, t, kInf, "tail integral F(t)").value;
          },
      },
      family_);
}

double RadialDensity::mixing_mean() const {
  return std::visit(Overloaded{
                        [](const NormalRadial&) { return 1.0; },
                        [](const StudentRadial& s) { return s.df > 2.0 ? s.df / (s.df - 2.0) : kInf; },
                        [](const DiscreteRadial& m) {
                          double s = 0.0;
                          for (const MixtureAtom& a : m.atoms) s += a.weight * a.scale;
                          return s;
                        },
                        [](const NumericRadial&) -> double {
                          throw InvalidArgument("numeric radial profile has no mixing representation");
                        },
                    },
                    family_);
}

double RadialDensity::mean_squared_radius() const {
  if (!numeric_) return dim_ * mixing_mean();
  const auto& n = std::get<NumericRadial>(family_);
  const double dm1 = dim_ - 1;
  auto log_h2 = [&](double r) {
    const double v = n.f(r * r);
    return v > 0.0 ? (dm1 + 2.0) * std::log(r) + std::log(v) : -kInf;
  };
  if (!quad::half_line_integrability(log_h2).empty()) return kInf;
  const double log_m2 = quad::log_integrate_half_line(log_h2, "second radial moment").value;
  return std::exp(log_m2 - numeric_->radius->log_normalizer());
}

double RadialDensity::draw_mixing(Rng& rng) const {
  return std::visit(Overloaded{
                        [](const NormalRadial&) { return 1.0; },
                        [&](const StudentRadial& s) { return rng.inverse_gamma(0.5 * s.df, 0.5 * s.df); },
                        [&](const DiscreteRadial& m) {
                          const double u = rng.uniform();
                          double acc = 0.0;
                          for (const MixtureAtom& a : m.atoms) {
                            acc += a.weight;
                            if (u < acc) return a.scale;
                          }
                          return m.atoms.back().scale;
                        },
                        [](const NumericRadial&) -> double {
                          throw InvalidArgument(
                              "numeric radial profile has no mixing representation; "
                              "mixing draws need a scale-mixture family");
                        },
                    },
                    family_);
}

double RadialDensity::draw_size_biased_mixing(Rng& rng) const {
  return std::visit(Overloaded{
                        [](const NormalRadial&) { return 1.0; },
                        [&](const StudentRadial& s) {
                          if (s.df <= 2.0) {
                            throw NumericalError("size-biased mixing law needs df > 2 (E[Z] infinite)");
                          }
                          return rng.inverse_gamma(0.5 * s.df - 1.0, 0.5 * s.df);
                        },
                        [&](const DiscreteRadial& m) {
                          const double total = mixing_mean();
                          const double u = rng.uniform() * total;
                          double acc = 0.0;
                          for (const MixtureAtom& a : m.atoms) {
                            acc += a.weight * a.scale;
                            if (u < acc) return a.scale;
                          }
                          return m.atoms.back().scale;
                        },
                        [](const NumericRadial&) -> double {
                          throw InvalidArgument("numeric radial profile has no mixing representation");
                        },
                    },
                    family_);
}

void RadialDensity::draw(Rng& rng, std::span<double> out) const {
  if (numeric_) {
    rng.unit_vector(out);
    const double r = numeric_->radius->quantile(rng.uniform());
    for (double& v : out) v *= r;
    return;
  }
  const double sd = std::sqrt(draw_mixing(rng));
  rng.fill_normal(out);
  for (double& v : out) v *= sd;
}

}  // namespace pdelab
