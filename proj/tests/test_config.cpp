#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pdelab/experiment.hpp"

using namespace pdelab;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("pdelab_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

const char* kSmall = R"(experiment = risk-compare
model.d = 3
model.k = 5
model.radial.kind = normal, student
model.radial.df = 5
compare.q0 = mre
compare.q1 = plugin
grid.theta_norms = 0, 3
budget.n = 3000
budget.seed = 17
)";

}  // namespace

TEST_CASE("config parsing") {
  const Config c = Config::parse("# comment\n a.b = 1, 2 ,3 \nname = x # trailing\n");
  CHECK(c.num_list("a.b") == std::vector<double>{1, 2, 3});
  CHECK(c.str("name") == "x");
  CHECK(c.num_or("missing", 4.0) == 4.0);
  CHECK(error_of([] { Config::parse("a = 1\nb 2\n", "t.cfg"); }).find("line 2") != std::string::npos);
  CHECK(error_of([] { Config::parse("a = 1\na = 2\n"); }).find("'a'") != std::string::npos);
  CHECK(error_of([] { Config::parse("A = 1\n"); }).find("invalid key") != std::string::npos);
  CHECK(error_of([] { Config::parse("a =\n"); }).find("empty") != std::string::npos);
  const Config bad = Config::parse("x = 1\ny = abc\n", "t.cfg");
  const std::string e = error_of([&] { bad.num("y"); });
  CHECK(e.find("'y'") != std::string::npos);
  CHECK(e.find("line 2") != std::string::npos);
  CHECK(error_of([&] { bad.str("zzz"); }).find("zzz") != std::string::npos);
}

TEST_CASE("unused keys are rejected by name") {
  Config c = Config::parse(std::string(kSmall) + "model.tehta = 1\n");
  const std::string e = error_of([&] { run_experiment(c, "typo", RunOptions{scratch("typo")}); });
  CHECK(e.find("model.tehta") != std::string::npos);
}

TEST_CASE("seed is mandatory") {
  std::string text = kSmall;
  text.erase(text.find("budget.seed"));
  CHECK(error_of([&] { run_experiment(Config::parse(text), "noseed", RunOptions{scratch("noseed")}); })
            .find("budget.seed") != std::string::npos);
}

TEST_CASE("model and families from config") {
  const Config c = Config::parse(
      "model.d = 2\nmodel.k = 3\nmodel.c = 2, 3\nmodel.theta = 1, -1\nmodel.radial.kind = discrete\n"
      "model.radial.atoms = 1:0.25, 3:0.75\n");
  const ModelSpec s = model_from_config(c);
  CHECK(s.c == 2.0);
  CHECK(s.theta == Vec{1.0, -1.0});
  const auto* m = std::get_if<DiscreteRadial>(&s.radial);
  REQUIRE(m);
  CHECK(m->atoms.size() == 2);
  const Config back = Config::parse(model_to_config(s));
  CHECK(model_to_config(model_from_config(back)) == model_to_config(s));
  CHECK_THROWS_AS(model_from_config(Config::parse("model.d = 2\nmodel.k = 3\nmodel.theta = 1\n")), ConfigError);
  CHECK_THROWS_AS(parse_loss("power:2"), InvalidArgument);
  CHECK(std::holds_alternative<ReflectedNormalLoss>(parse_loss("reflected:2")));
  const ShrinkageSpec sh = parse_shrinkage(Config::parse("shrinkage.a_fraction = 0.5\n"), 2.0);
  CHECK(sh.a == doctest::Approx(0.5 * dominance_a_max(2.0)));
}

TEST_CASE("preset catalog") {
  const std::vector<PresetInfo> p = list_presets();
  CHECK(p.size() >= 11);
  for (const char* name : {"theorem1-pointpred", "theorem2-normal", "theorem2-allrho", "theorem4-mixture-point",
                           "theorem5-f-independence", "theorem6-student", "corollary2-harmonic", "duality-identity",
                           "stein-identity", "posterior-factorization", "pi0a-oracle"}) {
    CAPTURE(name);
    CHECK(std::any_of(p.begin(), p.end(), [&](const PresetInfo& i) { return i.name == name; }));
    CHECK_NOTHROW(load_preset(std::string("presets/") + name));
  }
  for (const PresetInfo& i : p) {
    CHECK_FALSE(i.anchor.empty());
    CHECK_FALSE(i.description.empty());
    CHECK(load_preset(i.name).has("budget.seed"));
  }
  CHECK_THROWS_AS(load_preset("nope"), InvalidArgument);
}

TEST_CASE("run output, determinism and thread invariance") {
  const Config c = Config::parse(kSmall);
  RunOptions o{scratch("det1")};
  const RunResult a = run_experiment(c, "small", o);
  CHECK(a.exit_code == 0);
  CHECK(a.csv.rfind("f_family,theta_norm,eta,n,estimate,se,ci_lo,ci_hi,verdict", 0) == 0);
  CHECK(std::count(a.csv.begin(), a.csv.end(), '\n') == 5);
  CHECK(std::filesystem::exists(a.csv_path));
  CHECK(std::filesystem::exists(a.json_path));
  RunOptions o2{scratch("det2")};
  o2.threads = 3;
  const RunResult b = run_experiment(c, "small", o2);
  std::ifstream fa(a.csv_path), fb(b.csv_path);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());

  RunOptions o3{scratch("det3")};
  o3.seed = 18;
  CHECK(run_experiment(c, "small", o3).csv != a.csv);
  RunOptions o4{scratch("det4")};
  o4.budget_scale = 2.0;
  CHECK(run_experiment(c, "small", o4).csv.find(",6000,") != std::string::npos);
}

TEST_CASE("JSON summary round-trips into a runnable config") {
  const RunResult a = run_experiment(Config::parse(kSmall), "rt", RunOptions{scratch("rt1")});
  const Config back = load_config_file(a.json_path);
  const RunResult b = run_experiment(back, "rt", RunOptions{scratch("rt2")});
  CHECK(a.csv == b.csv);
}

TEST_CASE("dominance verdict is suppressed with a warning for d < 3") {
  std::string text = kSmall;
  text.replace(text.find("model.d = 3"), 11, "model.d = 2");
  const RunResult r = run_experiment(Config::parse(text), "d2", RunOptions{scratch("d2")});
  CHECK(r.exit_code == 0);
  REQUIRE_FALSE(r.warnings.empty());
  CHECK(r.warnings.front().find("d >= 3") != std::string::npos);
  for (const VerdictLine& v : r.verdicts) CHECK(v.verdict == Verdict::Suppressed);
  CHECK(r.csv.find("SUPPRESSED") != std::string::npos);
}

TEST_CASE("shrinkage constant above the bound suppresses the verdict") {
  const RunResult r =
      run_experiment(Config::parse(std::string(kSmall) + "model.c = 2\nshrinkage.a = 0.45\n"), "abound",
                     RunOptions{scratch("abound")});
  REQUIRE_FALSE(r.warnings.empty());
  for (const VerdictLine& v : r.verdicts) CHECK(v.verdict == Verdict::Suppressed);
}

TEST_CASE("small runs of each experiment kind") {
  for (const char* name : {"posterior-factorization", "stein-identity", "theorem5-f-independence", "pi0a-oracle",
                           "duality-identity"}) {
    CAPTURE(name);
    RunOptions o{scratch(name)};
    o.budget_scale = 0.01;
    const RunResult r = run_experiment(load_preset(name), name, o);
    CHECK(r.exit_code == 0);
    CHECK_FALSE(r.verdicts.empty());
  }
}

TEST_CASE("prior override replaces the configured prior") {
  Config c = load_preset("theorem5-f-independence");
  RunOptions o{scratch("prior")};
  o.budget_scale = 0.01;
  o.prior = "twopoint:m=2.5";
  const RunResult r = run_experiment(c, "prior", o);
  CHECK(r.csv.find("two-point(2.5)") != std::string::npos);
  CHECK(r.csv.find("flat") == std::string::npos);
  o.prior = "cauchy";
  CHECK(error_of([&] { run_experiment(c, "prior", o); }).find("cauchy") != std::string::npos);
  o.prior = "twopoint";
  CHECK(error_of([&] { run_experiment(c, "prior", o); }).find("needs m") != std::string::npos);
}

TEST_CASE("heavy Student tails are flagged for plug-in rules") {
  std::string text = kSmall;
  text.replace(text.find("model.radial.df = 5"), 19, "model.radial.df = 3");
  const RunResult r = run_experiment(Config::parse(text), "df3", RunOptions{scratch("df3")});
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings.front().find("df <= 4") != std::string::npos);
}

TEST_CASE("risk is scale equivariant: (theta, eta) matches (theta sqrt(eta), 1) on common draws") {
  std::string text = kSmall;
  text.replace(text.find("grid.theta_norms = 0, 3"), 23, "grid.theta_norms = 4\ngrid.eta_check = 2:4");
  const RunResult r = run_experiment(Config::parse(text), "eta", RunOptions{scratch("eta")});
  std::istringstream in(r.csv);
  std::string header, line;
  std::getline(in, header);
  std::vector<double> est;
  while (std::getline(in, line)) {
    std::vector<std::string> cells = split_list(line, ',');
    est.push_back(parse_double(cells[4]));
  }
  REQUIRE(est.size() == 4);
  CHECK(est[1] == doctest::Approx(est[0]).epsilon(1e-9));
  CHECK(est[3] == doctest::Approx(est[2]).epsilon(1e-9));
  CHECK(error_of([&] { run_experiment(Config::parse(std::string(kSmall) + "grid.eta_check = 2\n"), "bad", RunOptions{scratch("bad")}); })
            .find("THETA:ETA") != std::string::npos);
}
