// lindblad-forge: scenario configs in, CSV/JSON out.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lindblad_forge/commands.hpp"

namespace lf = lindblad_forge;

namespace {

// 2 = bad config or usage, 3 = numeric failure, 1 = anything else
int exit_code_for(const lf::Error& e) {
  switch (e.code()) {
    case lf::ErrorCode::ConfigError:
    case lf::ErrorCode::InvalidArgument:
      return 2;
    default:
      return 3;
  }
}

std::optional<int> threads_from_env() {
  const char* raw = std::getenv("LINDBLAD_FORGE_THREADS");
  if (!raw || !*raw) return std::nullopt;
  try {
    std::size_t used = 0;
    const int n = std::stoi(raw, &used);
    if (used != std::string(raw).size() || n < 1) throw std::invalid_argument(raw);
    return n;
  } catch (const std::exception&) {
    throw lf::Error(lf::ErrorCode::ConfigError, "LINDBLAD_FORGE_THREADS must be a positive integer");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Completely positive master equations from system-bath specifications"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir = ".";
  int threads = 0;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out-dir", out_dir, "Output directory (created if missing)");
    sub->add_option("--threads", threads, "Worker threads (default: $LINDBLAD_FORGE_THREADS, then config)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "RNG seed, overrides the config");
  };
  CLI::App* run = app.add_subcommand("run", "Trajectories of each method, plus diagnostics");
  CLI::App* compare = app.add_subcommand("compare", "Trajectories and deviations against the exact benchmark");
  CLI::App* ensemble = app.add_subcommand("ensemble", "Random-ensemble deviation and eigenvalue statistics");
  CLI::App* spectra = app.add_subcommand("spectra", "Tabulate J(w) and lambda(w) with transition markers");
  CLI::App* build = app.add_subcommand("build", "Emit the master equation of each method as JSON");
  for (CLI::App* sub : {run, compare, ensemble, spectra, build}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    lf::CommandOptions opts;
    opts.out_dir = out_dir;
    CLI::App* chosen = app.get_subcommands().front();
    if (chosen->count("--threads")) {
      opts.threads = threads;
    } else {
      opts.threads = threads_from_env();
    }
    if (chosen->count("--seed")) opts.seed = seed;

    const lf::Json j = lf::load_json_file(config_path);
    std::vector<std::string> written;
    if (chosen == ensemble) {
      std::string name;
      const lf::EnsembleConfig cfg = lf::parse_ensemble(j, &name);
      written = lf::cmd_ensemble(cfg, name, opts);
    } else {
      const lf::ScenarioConfig cfg = lf::parse_scenario(j);
      if (chosen == run) written = lf::cmd_run(cfg, opts);
      if (chosen == compare) written = lf::cmd_compare(cfg, opts);
      if (chosen == spectra) written = lf::cmd_spectra(cfg, opts);
      if (chosen == build) written = lf::cmd_build(cfg, opts);
    }
    for (const auto& path : written) std::cout << path << "\n";
    return 0;
  } catch (const lf::Error& e) {
    std::cerr << "lindblad-forge: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "lindblad-forge: " << e.what() << "\n";
    return 1;
  }
}
