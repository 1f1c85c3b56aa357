#include "pdelab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "pdelab/posterior.hpp"
#include "pdelab/presets_data.hpp"
#include "pdelab/stein.hpp"

namespace pdelab {

namespace {

using Json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(std::vector<std::string> row) {
    if (row.size() != header_.size()) throw std::logic_error("csv row width mismatch");
    rows_.push_back(std::move(row));
  }
  std::size_t size() const { return rows_.size(); }
  std::vector<std::string>& row(std::size_t i) { return rows_[i]; }
  std::string text() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
      out += "\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct Outcome {
  std::string csv;
  std::vector<VerdictLine> verdicts;
  std::vector<std::string> warnings;
  Json extra = Json::object();
};

struct Context {
  const Config& cfg;
  const RunOptions& opts;
  Outcome& out;

  void warn_user(const std::string& msg) {
    out.warnings.push_back(msg);
    std::cerr << "warning: " << msg << "\n";
  }
};

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1.0);
  return v;
}

McOptions mc_options(const Config& cfg, const RunOptions& opts) {
  McOptions mc;
  mc.n = static_cast<std::size_t>(cfg.integer("budget.n"));
  mc.seed = cfg.u64("budget.seed");
  mc.antithetic = cfg.flag_or("budget.antithetic", false);
  mc.threads = opts.threads;
  mc.ci_level = cfg.num_or("verdict.ci_level", 0.99);
  if (mc.n < 2) cfg.fail("budget.n", "must be >= 2");
  if (!(mc.ci_level > 0.0 && mc.ci_level < 1.0)) cfg.fail("verdict.ci_level", "must lie in (0, 1)");
  return mc;
}

IntegrationOptions is_options(const Config& cfg) {
  IntegrationOptions io;
  io.is_draws = static_cast<std::size_t>(cfg.integer_or("budget.is_n", 200000));
  io.seed = cfg.u64("budget.seed");
  io.se_target = cfg.num_or("budget.is_se_target", 0.01);
  if (io.is_draws < 100) cfg.fail("budget.is_n", "must be >= 100");
  return io;
}

struct RuleChoice {
  PredictiveRule rule;
  bool needs_d3 = false;   // dominance claim only for d >= 3
  double a_limit = -1.0;   // shrinkage constant that must stay below dominance_a_max
};

RuleChoice make_rule(const Config& cfg, const std::string& which, double c) {
  const std::string name = cfg.str_or("compare." + which, which == "q0" ? "mre" : "plugin");
  if (name == "mre") return {mre_rule()};
  if (name == "exact") return {exact_rule()};
  if (name == "pi0a") return {pi0a_rule(cfg.num_or("prior.a", -1.0))};
  if (name == "plugin") {
    const ShrinkageSpec s = parse_shrinkage(cfg, c);
    return {plugin_rule(s), true, s.a};
  }
  if (name == "bayes") {
    const std::string kind = cfg.str_or("prior.kind", "harmonic");
    const PriorSpec p = parse_prior(cfg, kind);
    return {bayes_rule(p, is_options(cfg)), kind == "harmonic"};
  }
  cfg.fail("compare." + which, "unknown predictive density '" + name + "' (mre, plugin, pi0a, bayes, exact)");
}

Verdict gate(Context& ctx, const std::string& kind, int d, bool needs_d3, double a, double c) {
  if (kind == "none" || !ctx.cfg.flag_or("verdict.enabled", true)) return Verdict::Suppressed;
  if (kind != "dominance") return Verdict::Pass;
  if (needs_d3 && d < 3) {
    ctx.warn_user("d >= 3 required for the dominance result; running as exploratory with verdict suppressed");
    return Verdict::Suppressed;
  }
  if (a > 0.0 && !(a < dominance_a_max(c))) {
    ctx.warn_user("shrinkage constant a = " + fmt(a) + " is not below the dominance bound " +
                  fmt(dominance_a_max(c)) + " at c = " + fmt(c) + "; verdict suppressed");
    return Verdict::Suppressed;
  }
  return Verdict::Pass;
}

struct GridPoint {
  double theta_norm;
  double eta;
};

// theta_norms x eta_values, then the extra THETA:ETA pairs of grid.eta_check.
std::vector<GridPoint> risk_grid(const Config& cfg, const ModelSpec& base) {
  const std::vector<double> thetas = cfg.num_list_or("grid.theta_norms", {std::sqrt(squared_norm(base.theta))});
  const std::vector<double> etas = cfg.num_list_or("grid.eta_values", {base.eta});
  std::vector<GridPoint> out;
  for (double eta : etas) {
    for (double t : thetas) out.push_back({t, eta});
  }
  for (const std::string& pair : cfg.list_or("grid.eta_check", {})) {
    const std::vector<std::string> parts = split_list(pair, ':');
    if (parts.size() != 2) cfg.fail("grid.eta_check", "expected THETA:ETA pairs, got '" + pair + "'");
    GridPoint g{};
    try {
      g = {parse_double(parts[0]), parse_double(parts[1])};
    } catch (const InvalidArgument& e) {
      cfg.fail("grid.eta_check", e.what());
    }
    if (!(g.theta_norm >= 0.0) || !(g.eta > 0.0)) cfg.fail("grid.eta_check", "needs theta >= 0 and eta > 0");
    out.push_back(g);
  }
  return out;
}

// Finite risk for the plug-in rules is assumed for normal and Student(df > 4).
void flag_moment_conditions(Context& ctx, const RadialFamily& f) {
  const auto* st = std::get_if<StudentRadial>(&f);
  if (st && !(st->df > 4.0)) {
    ctx.warn_user(family_label(f) + ": df <= 4, the moment conditions behind the plug-in dominance result may fail");
  }
}

std::string group_label(const RadialFamily& f, double c, const std::string& extra = "") {
  std::string g = family_label(f) + " c=" + fmt(c);
  if (!extra.empty()) g += " " + extra;
  return g;
}

struct GroupRows {
  std::string label;
  std::vector<RiskEntry> entries;
  std::vector<std::size_t> rows;
  Verdict gate = Verdict::Pass;
};

void finish_groups(Context& ctx, std::vector<GroupRows>& groups, Table& table, std::size_t verdict_col,
                   const std::string& kind) {
  const double eps = ctx.cfg.num_or("verdict.eps", 1e-4);
  const double tol = ctx.cfg.num_or("verdict.tol", 1e-12);
  for (GroupRows& g : groups) {
    Verdict v = g.gate;
    std::ostringstream detail;
    if (v != Verdict::Suppressed) {
      if (kind == "identity") {
        double worst = 0.0;
        for (const RiskEntry& e : g.entries) worst = std::max(worst, std::isnan(e.max_residual) ? INFINITY : e.max_residual);
        v = worst < tol ? Verdict::Pass : Verdict::Fail;
        detail << "max residual " << worst << " (tolerance " << tol << ")";
      } else {
        v = dominance_verdict(g.entries, eps);
        double min_lo = INFINITY;
        for (const RiskEntry& e : g.entries) min_lo = std::min(min_lo, e.ci_lo);
        detail << "min CI lower bound " << min_lo << " (eps " << eps << ")";
      }
    }
    for (std::size_t r : g.rows) table.row(r)[verdict_col] = to_string(v);
    ctx.out.verdicts.push_back({g.label, v, detail.str()});
  }
}

std::vector<std::string> risk_cells(const RiskEntry& e) {
  return {e.family, fmt(e.theta_norm), fmt(e.eta), std::to_string(e.n), fmt(e.estimate), fmt(e.se),
          fmt(e.ci_lo), fmt(e.ci_hi), ""};
}

void run_risk_compare(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const ModelSpec base = model_from_config(cfg);
  const std::vector<RadialFamily> families = parse_families(cfg);
  const std::vector<double> cs = cfg.num_list_or("model.c", {base.c});
  const std::vector<GridPoint> points = risk_grid(cfg, base);
  const McOptions mc = mc_options(cfg, ctx.opts);
  const std::string kind = cfg.str_or("verdict.kind", "dominance");
  if (kind != "dominance" && kind != "identity" && kind != "none") cfg.fail("verdict.kind", "expected dominance, identity or none");

  Table table({"f_family", "theta_norm", "eta", "n", "estimate", "se", "ci_lo", "ci_hi", "verdict", "c", "pair",
               "mc_se", "is_se", "max_residual"});
  std::vector<GroupRows> groups;
  for (const RadialFamily& fam : families) {
    for (double c : cs) {
      const RuleChoice q0 = make_rule(cfg, "q0", c);
      const RuleChoice q1 = make_rule(cfg, "q1", c);
      GroupRows g;
      g.label = group_label(fam, c);
      g.gate = gate(ctx, kind, base.d, q0.needs_d3 || q1.needs_d3, std::max(q0.a_limit, q1.a_limit), c);
      if (c == cs.front() && std::max(q0.a_limit, q1.a_limit) > 0.0) flag_moment_conditions(ctx, fam);
      for (const auto& [t, eta] : points) {
        ModelSpec spec = with_theta_norm(base, t);
        spec.c = c;
        spec.eta = eta;
        spec.radial = fam;
        const Model model(spec);
        const RiskEntry e = risk_difference(model, q0.rule, q1.rule, mc);
        std::vector<std::string> row = risk_cells(e);
        for (const std::string& s : {fmt(c), q1.rule.label + " vs " + q0.rule.label, fmt(e.mc_se), fmt(e.is_se),
                                     std::isnan(e.max_residual) ? std::string("nan") : fmt(e.max_residual)}) {
          row.push_back(s);
        }
        g.rows.push_back(table.size());
        g.entries.push_back(e);
        table.add(std::move(row));
      }
      groups.push_back(std::move(g));
    }
  }
  finish_groups(ctx, groups, table, 8, kind);
  ctx.out.csv = table.text();
}

void run_point_risk(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const ModelSpec base = model_from_config(cfg);
  const std::vector<RadialFamily> families = parse_families(cfg);
  const std::vector<double> cs = cfg.num_list_or("model.c", {base.c});
  const std::vector<GridPoint> points = risk_grid(cfg, base);
  const McOptions mc = mc_options(cfg, ctx.opts);
  const std::string mode = cfg.str_or("point.mode", "prediction");
  const std::string kind = cfg.str_or("verdict.kind", "dominance");
  if (kind != "dominance" && kind != "none") cfg.fail("verdict.kind", "expected dominance or none");
  std::vector<std::string> loss_names;
  if (mode == "prediction") {
    loss_names = cfg.list_or("loss.kinds", {"log"});
  } else if (mode == "estimation") {
    loss_names = {"scale-invariant-squared"};
  } else {
    cfg.fail("point.mode", "expected prediction or estimation");
  }

  Table table({"f_family", "theta_norm", "eta", "n", "estimate", "se", "ci_lo", "ci_hi", "verdict", "c", "loss", "pair"});
  std::vector<GroupRows> groups;
  for (const RadialFamily& fam : families) {
    flag_moment_conditions(ctx, fam);
    for (double c : cs) {
      const ShrinkageSpec s = parse_shrinkage(cfg, c);
      for (const std::string& lname : loss_names) {
        LossSpec loss = SquaredErrorLoss{};
        std::string llabel = lname;
        if (mode == "prediction") {
          try {
            loss = parse_loss(lname);
          } catch (const InvalidArgument& ex) {
            cfg.fail("loss.kinds", ex.what());
          }
          llabel = loss_label(loss);
        }
        GroupRows g;
        g.label = group_label(fam, c, llabel);
        g.gate = gate(ctx, kind, base.d, true, s.a, c);
        if (g.gate == Verdict::Pass && mode == "prediction" && std::holds_alternative<SquaredErrorLoss>(loss) &&
            !std::holds_alternative<NormalRadial>(fam)) {
          ctx.warn_user("squared error is convex; dominance is only claimed for the normal family (" + g.label +
                        " verdict suppressed)");
          g.gate = Verdict::Suppressed;
        }
        const PointRule p0 = mode == "prediction" ? benchmark_predictor() : identity_estimator();
        const PointRule p1 = mode == "prediction" ? shrinkage_predictor(s) : shrinkage_estimator(s);
        for (const auto& [t, eta] : points) {
          ModelSpec spec = with_theta_norm(base, t);
          spec.c = c;
          spec.eta = eta;
          spec.radial = fam;
          const Model model(spec);
          const RiskEntry e = mode == "prediction" ? point_risk_difference(model, p0, p1, loss, mc)
                                                   : estimation_risk_difference(model, p0, p1, mc);
          std::vector<std::string> row = risk_cells(e);
          row.push_back(fmt(c));
          row.push_back(llabel);
          row.push_back(p0.label + " minus " + p1.label);
          g.rows.push_back(table.size());
          g.entries.push_back(e);
          table.add(std::move(row));
        }
        groups.push_back(std::move(g));
      }
    }
  }
  finish_groups(ctx, groups, table, 8, kind);
  ctx.out.csv = table.text();
}

Vec first_n(const Config& cfg, const std::string& key, int n, const Vec& def) {
  Vec v = cfg.num_list_or(key, def);
  if (v.size() < static_cast<std::size_t>(n)) cfg.fail(key, "needs at least " + std::to_string(n) + " values");
  v.resize(static_cast<std::size_t>(n));
  return v;
}

void run_posterior_check(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const ModelSpec base = model_from_config(cfg);
  if (base.d != 1) cfg.fail("model.d", "posterior-check compares against a d = 1 brute-force oracle");
  const std::vector<RadialFamily> families = parse_families(cfg);
  const Vec x = first_n(cfg, "posterior.x", 1, {0.8});
  const Vec u = first_n(cfg, "posterior.u", base.k, Vec(static_cast<std::size_t>(base.k), 1.0));
  const Vec grid_spec = cfg.num_list_or("posterior.theta_grid", {-4.0, 4.0, 41.0});
  if (grid_spec.size() != 3 || grid_spec[2] < 2) cfg.fail("posterior.theta_grid", "expected lo, hi, count");
  const double tol = cfg.num_or("verdict.tol", 1e-6);
  const double moment_tol = cfg.num_or("verdict.moment_tol", 1e-8);
  const bool enabled = cfg.flag_or("verdict.enabled", true);

  Table table({"theta", "factored_density", "brute_force_density", "abs_error", "prior", "f_family"});
  for (const std::string& kind : cfg.list_or("prior.kind", {"flat"})) {
    const PriorSpec prior = parse_prior(cfg, kind);
    ModelSpec spec0 = base;
    spec0.radial = families.front();
    const PosteriorRep rep = build_posterior(spec0, prior, x, u);
    std::vector<double> grid;
    if (is_lebesgue(prior.pi1)) {
      grid = linspace(grid_spec[0], grid_spec[1], static_cast<std::size_t>(grid_spec[2]));
    } else {
      const double m = std::get<TwoPointPrior>(prior.pi1).m;
      grid = {-m, m};
    }
    double max_err = 0.0;
    double max_cross = 0.0;
    std::vector<std::vector<double>> brute_all;
    for (const RadialFamily& fam : families) {
      ModelSpec spec = base;
      spec.radial = fam;
      const std::vector<double> brute = brute_force_theta_marginal(spec, prior, x, u, grid);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double th = grid[i];
        const double factored = std::exp(rep.theta_log_posterior(ConstSpan(&th, 1)));
        const double err = std::abs(factored - brute[i]);
        max_err = std::max(max_err, err);
        table.add({fmt(th), fmt(factored), fmt(brute[i]), fmt(err), prior_label(prior), family_label(fam)});
      }
      for (const auto& other : brute_all) {
        for (std::size_t i = 0; i < grid.size(); ++i) max_cross = std::max(max_cross, std::abs(other[i] - brute[i]));
      }
      brute_all.push_back(brute);
    }
    std::ostringstream detail;
    detail << "max |factored - brute force| " << max_err << ", max spread across f " << max_cross << " (tolerance "
           << tol << ")";
    const Verdict v = !enabled ? Verdict::Suppressed : (max_err < tol && max_cross < tol ? Verdict::Pass : Verdict::Fail);
    ctx.out.verdicts.push_back({"theta-marginal " + prior_label(prior), v, detail.str()});

    for (const RadialFamily& fam : families) {
      if (!std::holds_alternative<NormalRadial>(fam)) continue;
      ModelSpec spec = base;
      spec.radial = fam;
      const PosteriorRep r = build_posterior(spec, prior, x, u);
      const double shape = prior.a + 1.0 + 0.5 * (base.d + base.k);
      const double m1 = r.tau_moment(1.0);
      const double m2 = r.tau_moment(2.0);
      const double e1 = std::abs(m1 / (2.0 * shape) - 1.0);
      const double e2 = std::abs(m2 / (4.0 * shape * (shape + 1.0)) - 1.0);
      std::ostringstream d2;
      d2 << "E tau = " << m1 << " vs " << 2.0 * shape << ", E tau^2 = " << m2 << " vs " << 4.0 * shape * (shape + 1.0)
         << " (relative errors " << e1 << ", " << e2 << ")";
      ctx.out.verdicts.push_back({"tau-gamma " + prior_label(prior),
                                  !enabled ? Verdict::Suppressed
                                           : (std::max(e1, e2) < moment_tol ? Verdict::Pass : Verdict::Fail),
                                  d2.str()});
    }
  }
  ctx.out.csv = table.text();
}

void run_stein_check(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const std::vector<RadialFamily> families = parse_families(cfg);
  SteinOptions so;
  so.n = static_cast<std::size_t>(cfg.integer("budget.n"));
  so.seed = cfg.u64("budget.seed");
  const bool enabled = cfg.flag_or("verdict.enabled", true);
  Table table({"f_family", "d", "k", "field", "method", "lhs", "rhs_no_gamma", "gamma", "rhs_with_gamma", "se",
               "discrepancy_no_gamma", "discrepancy_with_gamma", "gamma_variant_differs", "verdict"});
  for (const RadialFamily& fam : families) {
    for (const std::string& item : cfg.list("stein.cases")) {
      const std::vector<std::string> parts = split_list(item, ':');
      if (parts.size() != 3) cfg.fail("stein.cases", "expected d:k:field entries, got '" + item + "'");
      int d = 0, k = 0;
      try {
        d = static_cast<int>(parse_double(parts[0]));
        k = static_cast<int>(parse_double(parts[1]));
      } catch (const InvalidArgument& ex) {
        cfg.fail("stein.cases", ex.what());
      }
      if (d < 1 || k < 0) cfg.fail("stein.cases", "need d >= 1 and k >= 0 in '" + item + "'");
      SteinField field;
      if (parts[2] == "linear") {
        field = linear_field(d);
      } else if (parts[2] == "constant") {
        field = constant_field(Vec(static_cast<std::size_t>(d), 1.0));
      } else if (parts[2] == "js-type") {
        field = js_type_field(d);
      } else {
        cfg.fail("stein.cases", "unknown field '" + parts[2] + "' (linear, constant, js-type)");
      }
      const SteinReport r = stein_identity_check(fam, d, k, field, so);
      const bool differs = r.discrepancy_with_gamma > std::max(1e-6, 3.0 * r.se);
      const Verdict v = !enabled ? Verdict::Suppressed : (r.passed ? Verdict::Pass : Verdict::Fail);
      table.add({r.family, std::to_string(d), std::to_string(k), r.field, r.quadrature ? "quadrature" : "monte-carlo",
                 fmt(r.lhs), fmt(r.rhs_no_gamma), fmt(r.gamma), fmt(r.rhs_with_gamma), fmt(r.se),
                 fmt(r.discrepancy_no_gamma), fmt(r.discrepancy_with_gamma), differs ? "yes" : "no", to_string(v)});
      std::ostringstream detail;
      detail << "|lhs - rhs| = " << r.discrepancy_no_gamma << " (se " << r.se << "); with 1/gamma: "
             << r.discrepancy_with_gamma;
      ctx.out.verdicts.push_back({r.family + " " + item, v, detail.str()});
    }
  }
  ctx.out.csv = table.text();
}

void run_bayes_eval(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const std::string check = cfg.str_or("bayes.check", "pi0a-oracle");
  const bool enabled = cfg.flag_or("verdict.enabled", true);
  const std::size_t points = static_cast<std::size_t>(cfg.integer_or("bayes.y_points", 50));
  const double span = cfg.num_or("bayes.y_span", 4.0);
  if (points < 2) cfg.fail("bayes.y_points", "must be >= 2");

  if (check == "pi0a-oracle") {
    const double c = cfg.num_or("model.c", 1.0);
    const double tol = cfg.num_or("verdict.tol", 1e-3);
    const Vec xs = cfg.num_list_or("bayes.x", {0.7, -0.4, 0.2});
    const Vec us = cfg.num_list_or("bayes.u", {1.1, -0.6, 0.8, 0.3, -0.9});
    Table table({"d", "k", "a", "y_offset", "numeric_logpdf", "closed_form_logpdf", "abs_error"});
    double worst = 0.0;
    for (double dd : cfg.num_list_or("oracle.d", {1, 2})) {
      for (double kk : cfg.num_list_or("oracle.k", {2, 5})) {
        for (double a : cfg.num_list_or("oracle.a", {-1, 0, 1})) {
          const int d = static_cast<int>(dd);
          const int k = static_cast<int>(kk);
          if (d < 1 || static_cast<std::size_t>(d) > xs.size()) cfg.fail("oracle.d", "needs 1 <= d <= size of bayes.x");
          if (k < 1 || static_cast<std::size_t>(k) > us.size()) cfg.fail("oracle.k", "needs 1 <= k <= size of bayes.u");
          const Vec x(xs.begin(), xs.begin() + d);
          const Vec u(us.begin(), us.begin() + k);
          const StudentParams closed = pi0a_params(x, u, c, k, a);
          const PredictiveDensity numeric = PredictiveDensity::bayes(PriorSpec{FlatPrior{}, a}, x, u, c, k);
          Vec dir(static_cast<std::size_t>(d), 0.0);
          dir[0] = 1.0;
          if (d >= 2) dir[1] = 0.5;
          const double dn = std::sqrt(squared_norm(dir));
          for (double t : linspace(-span, span, points)) {
            Vec y = closed.xi;
            for (int i = 0; i < d; ++i) y[i] += t * closed.sigma * dir[i] / dn;
            const double num = numeric.log_pdf(y);
            const double ref = student_logpdf(closed, y);
            worst = std::max(worst, std::abs(num - ref));
            table.add({std::to_string(d), std::to_string(k), fmt(a), fmt(t), fmt(num), fmt(ref), fmt(std::abs(num - ref))});
          }
        }
      }
    }
    ctx.out.verdicts.push_back({"flat-prior numeric vs closed form",
                                !enabled ? Verdict::Suppressed : (worst < tol ? Verdict::Pass : Verdict::Fail),
                                "max |log-density error| " + fmt(worst) + " (tolerance " + fmt(tol) + ")"});
    ctx.out.csv = table.text();
    return;
  }
  if (check != "f-independence") cfg.fail("bayes.check", "expected pi0a-oracle or f-independence");

  const ModelSpec base = model_from_config(cfg);
  if (base.d != 1) cfg.fail("model.d", "f-independence uses a d = 1 brute-force oracle");
  const double tol = cfg.num_or("verdict.tol", 1e-5);
  std::vector<ModelSpec> models;
  for (const RadialFamily& fam : parse_families(cfg)) {
    ModelSpec s = base;
    s.radial = fam;
    models.push_back(s);
  }
  const Vec x = first_n(cfg, "bayes.x", 1, {0.7});
  const Vec u = first_n(cfg, "bayes.u", base.k, Vec(static_cast<std::size_t>(base.k), 1.0));
  Table table({"prior", "f_family", "y", "brute_force_logpdf", "formula_logpdf", "abs_error"});
  for (const std::string& kind : cfg.list_or("prior.kind", {"flat"})) {
    const PriorSpec prior = parse_prior(cfg, kind);
    const double nu = base.k + 2.0 * prior.a + 2.0;
    if (!(nu > 0.0)) cfg.fail("prior.a", "needs k + 2a + 2 > 0");
    const double sigma = std::sqrt((1.0 + base.c * base.c) * squared_norm(u) / nu);
    Vec ys;
    for (double t : linspace(-span, span, points)) ys.push_back(base.c * x[0] + t * sigma);
    const FIndependenceReport rep = f_independence_check(prior, models, x, u, ys);
    for (std::size_t i = 0; i < rep.labels.size(); ++i) {
      for (std::size_t j = 0; j < ys.size(); ++j) {
        table.add({prior_label(prior), rep.labels[i], fmt(ys[j]), fmt(rep.log_density[i][j]), fmt(rep.formula[j]),
                   fmt(std::abs(rep.log_density[i][j] - rep.formula[j]))});
      }
    }
    std::ostringstream detail;
    detail << "max spread across f " << rep.max_discrepancy << ", max error vs f-free formula " << rep.max_formula_error
           << " (tolerance " << tol << ")";
    const bool ok = rep.max_discrepancy < tol && rep.max_formula_error < tol;
    ctx.out.verdicts.push_back({"f-independence " + prior_label(prior),
                                !enabled ? Verdict::Suppressed : (ok ? Verdict::Pass : Verdict::Fail), detail.str()});
  }
  ctx.out.csv = table.text();
}

void run_verify_all(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const double scale = cfg.num_or("verify.budget_scale", 1.0);
  Table table({"preset", "group", "verdict", "detail"});
  for (const PresetInfo& p : list_presets()) {
    if (p.experiment == "verify-all") continue;
    RunOptions sub = ctx.opts;
    sub.out_dir = ctx.opts.out_dir / p.name;
    sub.budget_scale = ctx.opts.budget_scale * scale;
    const RunResult r = run_experiment(load_preset(p.name), p.name, sub);
    for (const VerdictLine& v : r.verdicts) {
      table.add({p.name, v.group, to_string(v.verdict), "\"" + v.detail + "\""});
      ctx.out.verdicts.push_back({p.name + ": " + v.group, v.verdict, v.detail});
    }
  }
  ctx.out.csv = table.text();
}

void apply_prior_override(Config& cfg, const std::string& text) {
  const std::size_t colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  if (kind != "flat" && kind != "harmonic" && kind != "twopoint") {
    throw InvalidArgument("--prior: unknown prior '" + kind + "' (flat, harmonic, twopoint:m=M)");
  }
  cfg.set("prior.kind", kind);
  if (kind != "twopoint") {
    if (colon != std::string::npos) throw InvalidArgument("--prior: '" + kind + "' takes no parameters");
    cfg.erase("prior.m");
    return;
  }
  if (colon == std::string::npos) throw InvalidArgument("--prior: twopoint needs m, e.g. twopoint:m=1.5");
  std::string m = text.substr(colon + 1);
  if (m.rfind("m=", 0) == 0) m = m.substr(2);
  cfg.set("prior.m", m);
}

void apply_overrides(Config& cfg, const RunOptions& opts) {
  if (opts.prior) apply_prior_override(cfg, *opts.prior);
  if (opts.seed) cfg.set("budget.seed", std::to_string(*opts.seed));
  if (opts.budget_scale != 1.0) {
    require(opts.budget_scale > 0.0, "budget scale must be > 0");
    if (cfg.has("budget.n") && cfg.str("experiment") != "verify-all") {
      const double n = std::max(2.0, std::round(cfg.num("budget.n") * opts.budget_scale));
      cfg.set("budget.n", fmt(n));
    }
  }
}

Json config_json(const Config& cfg) {
  Json j = Json::object();
  for (const auto& [k, e] : cfg.entries()) j[k] = e.value;
  return j;
}

}  // namespace

std::vector<PresetInfo> list_presets() {
  std::vector<PresetInfo> out;
  for (const auto& p : generated::kPresets) {
    const Config cfg = Config::parse(p.text, "preset " + std::string(p.name));
    out.push_back({std::string(p.name), cfg.str_or("experiment", ""), cfg.str_or("description", ""),
                   cfg.str_or("anchor", "")});
  }
  std::sort(out.begin(), out.end(), [](const PresetInfo& a, const PresetInfo& b) { return a.name < b.name; });
  return out;
}

Config load_preset(const std::string& name) {
  std::string key = name;
  if (key.rfind("presets/", 0) == 0) key = key.substr(8);
  if (key.size() > 4 && key.substr(key.size() - 4) == ".cfg") key = key.substr(0, key.size() - 4);
  for (const auto& p : generated::kPresets) {
    if (p.name == key) return Config::parse(p.text, "preset " + key);
  }
  std::string names;
  for (const auto& p : generated::kPresets) names += (names.empty() ? "" : ", ") + std::string(p.name);
  throw InvalidArgument("unknown preset '" + name + "' (available: " + names + ")");
}

Config config_from_json_text(const std::string& text, const std::string& source) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError("config " + source + ": invalid JSON: " + e.what());
  }
  const Json& obj = j.contains("config") ? j.at("config") : j;
  if (!obj.is_object()) throw ConfigError("config " + source + ": expected a JSON object of key/value pairs");
  std::string flat;
  for (const auto& [k, v] : obj.items()) {
    if (!v.is_string()) throw ConfigError("config " + source + ": key '" + k + "' must be a string");
    flat += k + " = " + v.get<std::string>() + "\n";
  }
  return Config::parse(flat, source);
}

Config load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (path.extension() == ".json" || (first != std::string::npos && text[first] == '{')) {
    return config_from_json_text(text, path.string());
  }
  return Config::parse(text, path.string());
}

RunResult run_experiment(Config cfg, const std::string& name, const RunOptions& opts) {
  apply_overrides(cfg, opts);
  RunResult result;
  result.name = name;
  result.experiment = cfg.str("experiment");
  cfg.str_or("description", "");
  cfg.str_or("anchor", "");
  if (result.experiment != "verify-all") cfg.u64("budget.seed");
  Outcome out;
  Context ctx{cfg, opts, out};
  const std::string& kind = result.experiment;
  if (kind == "risk-compare") {
    run_risk_compare(ctx);
  } else if (kind == "point-risk") {
    run_point_risk(ctx);
  } else if (kind == "posterior-check") {
    run_posterior_check(ctx);
  } else if (kind == "stein-check") {
    run_stein_check(ctx);
  } else if (kind == "bayes-pde-eval") {
    run_bayes_eval(ctx);
  } else if (kind == "verify-all") {
    run_verify_all(ctx);
  } else {
    cfg.fail("experiment",
             "unknown experiment '" + kind +
                 "' (risk-compare, point-risk, posterior-check, stein-check, bayes-pde-eval, verify-all)");
  }
  cfg.check_all_used();

  result.verdicts = out.verdicts;
  result.warnings = out.warnings;
  result.csv = out.csv;
  for (const VerdictLine& v : out.verdicts) {
    if (v.verdict == Verdict::Fail) result.exit_code = 2;
  }

  Json summary = Json::object();
  summary["name"] = name;
  summary["experiment"] = kind;
  summary["description"] = cfg.str_or("description", "");
  summary["anchor"] = cfg.str_or("anchor", "");
  summary["config"] = config_json(cfg);
  Json verdicts = Json::array();
  for (const VerdictLine& v : out.verdicts) {
    verdicts.push_back({{"group", v.group}, {"verdict", to_string(v.verdict)}, {"detail", v.detail}});
  }
  summary["verdicts"] = verdicts;
  summary["warnings"] = out.warnings;
  summary["csv"] = name + ".csv";
  summary["exit_code"] = result.exit_code;
  result.summary_json = summary.dump(2) + "\n";

  std::filesystem::create_directories(opts.out_dir);
  result.csv_path = opts.out_dir / (name + ".csv");
  result.json_path = opts.out_dir / (name + ".json");
  std::ofstream(result.csv_path, std::ios::binary) << result.csv;
  std::ofstream(result.json_path, std::ios::binary) << result.summary_json;
  return result;
}

}  // namespace pdelab
