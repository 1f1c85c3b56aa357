#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "pdelab/experiment.hpp"

namespace {

int run_command(const std::string& target, const std::string& config_path, const std::string& preset,
                const pdelab::RunOptions& opts) {
  using namespace pdelab;
  int given = !target.empty() + !config_path.empty() + !preset.empty();
  if (given != 1) {
    std::cerr << "error: give exactly one of CONFIG, --config or --preset\n";
    return 1;
  }
  Config cfg;
  std::string name;
  if (!preset.empty() || target.rfind("presets/", 0) == 0) {
    const std::string p = preset.empty() ? target : preset;
    const std::filesystem::path file = p;
    if (!preset.empty() || !std::filesystem::is_regular_file(file)) {
      cfg = load_preset(p);
      name = std::filesystem::path(p).stem().string();
    }
  }
  if (name.empty()) {
    const std::filesystem::path file = config_path.empty() ? target : config_path;
    cfg = load_config_file(file);
    name = file.stem().string();
  }
  const RunResult r = run_experiment(cfg, name, opts);
  for (const VerdictLine& v : r.verdicts) {
    std::cout << to_string(v.verdict) << "  " << v.group << "  " << v.detail << "\n";
  }
  std::cout << "wrote " << r.csv_path.string() << " and " << r.json_path.string() << "\n";
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictive density dominance lab"};
  app.require_subcommand(1);

  pdelab::RunOptions opts;
  const char* env_out = std::getenv("PDE_LAB_OUT");
  std::string out_dir = env_out && *env_out ? env_out : ".";
  std::string target, config_path, preset;
  std::uint64_t seed = 0;
  std::string prior;

  CLI::App* run = app.add_subcommand("run", "Run an experiment config or built-in preset");
  run->add_option("target", target, "Config file, or presets/NAME for a built-in preset");
  run->add_option("--config", config_path, "Config file (flat key = value, or a JSON run summary)");
  run->add_option("--preset", preset, "Built-in preset name");
  run->add_option("--out", out_dir, "Output directory (default $PDE_LAB_OUT or .)");
  auto* seed_opt = run->add_option("--seed", seed, "Overrides budget.seed");
  run->add_option("--budget-scale", opts.budget_scale, "Multiplies every Monte Carlo sample size")
      ->check(CLI::PositiveNumber);
  auto* prior_opt = run->add_option("--prior", prior, "Replaces the prior: harmonic, flat or twopoint:m=M");
  run->add_option("--threads", opts.threads, "Worker threads; results do not depend on it")
      ->check(CLI::Range(1u, 256u));

  CLI::App* list = app.add_subcommand("list-presets", "List built-in presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*list) {
      for (const pdelab::PresetInfo& p : pdelab::list_presets()) {
        std::cout << p.name << "  [" << p.experiment << "]  " << p.description << "  (anchor: " << p.anchor
                  << ")\n";
      }
      return 0;
    }
    if (*seed_opt) opts.seed = seed;
    if (*prior_opt) opts.prior = prior;
    opts.out_dir = out_dir;
    return run_command(target, config_path, preset, opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
