#include <iostream>

#include "CLI11.hpp"
#include "qdyn/errors.hpp"
#include "qdyn/scenario.hpp"

using namespace qdyn::cli;

int main(int argc, char** argv) {
  CLI::App app{"qdyn: grid-based quantum dynamics by phase kickback"};
  app.require_subcommand(1);

  RunOptions opt;
  std::uint64_t seed = 0;
  std::string config, out_dir = "out";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--qubit-cap", opt.qubit_cap, "Largest dense register allowed")->check(CLI::Range(1, 40));
    sub->add_option("--threads", opt.threads, "Worker threads (0: runtime default)")->check(CLI::NonNegativeNumber);
  };

  auto* run = app.add_subcommand("run", "Validate, run and write artifacts");
  add_common(run);
  run->add_option("--out", out_dir, "Output directory");

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  add_common(validate);

  auto* list = app.add_subcommand("list-builtins", "Print potentials, scenario kinds and example configs");

  FigureOptions fig;
  std::string fig_out = "figures";
  auto* figures = app.add_subcommand("emit-figures", "Write resource-estimate figure data as CSV");
  figures->add_option("--out", fig_out, "Output directory");
  figures->add_option("--n-values", fig.n_values, "Qubits per coordinate for the qubit figure")->capture_default_str();
  figures->add_option("--m-values", fig.m_values, "Precisions for the gate figure")->capture_default_str();
  figures->add_option("--z-values", fig.z_values, "Atomic numbers for the crossover figure")->capture_default_str();
  figures->add_option("--m", fig.m, "Precision for the qubit and crossover figures")->capture_default_str();
  figures->add_option("--K", fig.K, "Interpolation degree")->capture_default_str();
  figures->add_option("--step-ratio", fig.step_ratio, "Electronic steps per nuclear step")->capture_default_str();
  figures->add_option("--steps", fig.steps, "Time steps for total gate counts")->capture_default_str();
  figures->add_option("--max-particles", fig.max_particles, "Largest particle count")->capture_default_str();
  figures->add_option("--max-atoms", fig.max_atoms, "Largest atom count")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationFailure;
  }

  for (auto* sub : {run, validate}) {
    if (sub->parsed() && sub->count("--seed")) opt.seed = seed;
  }

  if (run->parsed()) return run_command(config, out_dir, opt, std::cout, std::cerr);
  if (validate->parsed()) return validate_command(config, opt, std::cout, std::cerr);
  if (list->parsed()) {
    std::cout << list_builtins().dump(2) << '\n';
    return kOk;
  }
  try {
    const auto files = emit_figures(fig);
    write_artifacts(fig_out, files);
    for (const auto& f : files) std::cout << (std::filesystem::path(fig_out) / f.name).string() << '\n';
  } catch (const qdyn::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidationFailure;
  }
  return kOk;
}
