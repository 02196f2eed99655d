#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "test_util.hpp"

using namespace lf_test;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lf_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(LF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallScenario = R"({
  "name": "small",
  "system": {"kind": "three_level", "omega_1": 0.75, "omega_2": 1.35},
  "bath": {"kind": "lorentzian", "g": 0.02, "omega_m": 1.0, "kappa": 0.1},
  "methods": ["BRE", "aLgG"],
  "initial_state": {"amplitudes": [0.0, 1.0, -1.0]},
  "time_grid": {"t_start": 0.0, "t_end": 50.0, "n_steps": 20},
  "outputs": {"phases": [[1, 1]]}
})";

}  // namespace

TEST(Config, RejectsUnknownKeys) {
  auto parse = [](const std::string& text) { return parse_scenario(Json::parse(text)); };
  EXPECT_NO_THROW((void)parse(kSmallScenario));
  for (const char* bad : {R"({"name": "x", "colour": 1})", R"({"bath": {"kind": "lorentzian", "gg": 0.1}})",
                          R"({"time_grid": {"t_end": 1, "n_steps": 2, "dt": 0.5}})",
                          R"({"outputs": {"spectra": {"points": 3, "extra": true}}})"}) {
    try {
      (void)parse(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConfigError) << bad;
    }
  }
  try {
    (void)parse_ensemble(Json::parse(R"({"n_systems": 2, "sneaky": 0})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(Config, TypeErrorsAreConfigErrors) {
  for (const char* bad : {R"({"methods": "BRE"})", R"({"time_grid": {"t_end": "long", "n_steps": 2}})",
                          R"({"methods": ["ALGA"]})", R"({"methods": ["dLdG"]})",
                          R"({"outputs": {"spectra": {"points": 0}}})"}) {
    try {
      (void)parse_scenario(Json::parse(bad));
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConfigError) << bad;
    }
  }
}

TEST(Config, EveryShippedConfigParses) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(LF_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    const Json j = load_json_file(entry.path().string());
    if (j.contains("n_systems")) {
      std::string name;
      EXPECT_NO_THROW((void)parse_ensemble(j, &name)) << entry.path();
      EXPECT_FALSE(name.empty());
    } else {
      EXPECT_NO_THROW((void)parse_scenario(j)) << entry.path();
    }
  }
  EXPECT_EQ(count, 7);
}

TEST(Config, SweepInstantiation) {
  ScenarioConfig cfg = parse_scenario(Json::parse(R"({
    "bath": {"kind": "lorentzian", "g": 0.1, "omega_m": 1.0, "kappa": 0.1},
    "sweep": {"parameter": "delta", "values": [0.05, 0.1]}
  })"));
  const ScenarioInstance inst = instantiate(cfg, 0.1);
  EXPECT_NEAR(inst.system.hamiltonian(1, 1).real(), 0.9, 1e-15);
  EXPECT_NEAR(inst.system.hamiltonian(2, 2).real(), 1.1, 1e-15);
  EXPECT_NEAR(inst.rho0(0, 0).real(), 1.0, 1e-15);  // default initial state: level 0
}

TEST(Csv, RoundTripKeepsSeventeenDigits) {
  CsvWriter w({"x", "label", "maybe"});
  const double values[] = {0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0};
  for (double v : values) w.add_row({format_double(v), "a,b", format_optional(std::nullopt)});
  EXPECT_THROW(w.add_row({"1"}), Error);
  const CsvTable t = parse_csv(w.str());
  ASSERT_EQ(t.rows.size(), 5u);
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "label", "maybe"}));
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(*parse_number(t.rows[k][0]), values[k]);
    EXPECT_EQ(t.rows[k][1], "a,b");
    EXPECT_FALSE(parse_number(t.rows[k][2]).has_value());
  }
  EXPECT_EQ(format_double(0.1), "1.0000000000000001e-01");
  EXPECT_THROW((void)parse_number("1.5x"), Error);
}

TEST(Cli, RunWritesTrajectoriesAndDiagnostics) {
  const fs::path dir = scratch("run");
  const fs::path cfg = write_config(dir, kSmallScenario);
  ASSERT_EQ(run_cli("run --config " + cfg.string() + " --out-dir " + (dir / "out").string()), 0);
  const CsvTable bre = read_csv((dir / "out" / "small_BRE.csv").string());
  EXPECT_EQ(bre.rows.size(), 21u);
  EXPECT_EQ(bre.header.front(), "t_inv_eV");
  (void)bre.column("rho_0_0_re");
  (void)bre.column("phase_1_1");
  EXPECT_TRUE(fs::exists(dir / "out" / "small_aLgG.csv"));
  const CsvTable summary = read_csv((dir / "out" / "small_summary.csv").string());
  EXPECT_EQ(summary.rows.size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "out" / "small_diagnostics.csv"));
}

TEST(Cli, CompareAddsExactForLorentzianBath) {
  const fs::path dir = scratch("compare");
  const fs::path cfg = write_config(dir, kSmallScenario);
  ASSERT_EQ(run_cli("compare --config " + cfg.string() + " --out-dir " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "small_Exact.csv"));
  const CsvTable dev = read_csv((dir / "small_deviation.csv").string());
  EXPECT_FALSE(dev.rows.empty());
  const CsvTable summary = read_csv((dir / "small_summary.csv").string());
  const std::size_t col = summary.column("mean_deviation");
  for (const auto& row : summary.rows) {
    const auto v = parse_number(row[col]);
    if (row[summary.column("method")] == "Exact") continue;
    ASSERT_TRUE(v.has_value());
    EXPECT_LT(*v, 0.05);
  }
}

TEST(Cli, SpectraAndBuild) {
  const fs::path dir = scratch("spectra");
  const fs::path cfg = write_config(dir, kSmallScenario);
  ASSERT_EQ(run_cli("spectra --config " + cfg.string() + " --out-dir " + dir.string()), 0);
  const CsvTable sp = read_csv((dir / "small_spectra.csv").string());
  EXPECT_EQ(sp.rows.size(), 401u);
  const CsvTable tr = read_csv((dir / "small_transitions.csv").string());
  EXPECT_EQ(tr.rows.size(), 2u);

  ASSERT_EQ(run_cli("build --config " + cfg.string() + " --out-dir " + dir.string()), 0);
  const Json j = load_json_file((dir / "small_build.json").string());
  ASSERT_EQ(j.at("methods").size(), 2u);
  EXPECT_EQ(j.at("methods")[1].at("method"), "aLgG");
  EXPECT_EQ(j.at("energies").size(), 3u);
}

TEST(Cli, EnsembleOutputsAndThreadIndependence) {
  const fs::path dir = scratch("ensemble");
  const fs::path cfg = write_config(dir, R"({
    "name": "mini", "n_systems": 2, "strength_factors": [1.0],
    "horizon": {"kind": "fixed", "fixed": 1000.0}, "n_steps": 20,
    "methods": ["aLgG"], "eigen_methods": ["aLgG"]
  })");
  ASSERT_EQ(run_cli("ensemble --config " + cfg.string() + " --out-dir " + (dir / "a").string() + " --threads 1"), 0);
  ASSERT_EQ(run_cli("ensemble --config " + cfg.string() + " --out-dir " + (dir / "b").string(),
                    "LINDBLAD_FORGE_THREADS=2"),
            0);
  for (const char* f : {"mini_report.json", "mini_aggregate.csv", "mini_histogram.csv"}) {
    std::ifstream a(dir / "a" / f), b(dir / "b" / f);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    EXPECT_FALSE(sa.empty()) << f;
    EXPECT_EQ(sa, sb) << f;
  }
  const CsvTable agg = read_csv((dir / "a" / "mini_aggregate.csv").string());
  EXPECT_EQ(agg.header, (std::vector<std::string>{"factor", "method", "geo_mean_deviation", "log10_dispersion",
                                                  "divergences", "skipped", "aggregated"}));
}

TEST(Cli, ErrorExitCodes) {
  const fs::path dir = scratch("errors");
  const fs::path bad = write_config(dir, R"({"name": "x", "unknown": 1})");
  EXPECT_EQ(run_cli("run --config " + bad.string() + " --out-dir " + dir.string()), 2);
  const fs::path good = write_config(dir, kSmallScenario);
  EXPECT_EQ(run_cli("run --config " + good.string() + " --out-dir " + dir.string(), "LINDBLAD_FORGE_THREADS=zero"), 2);
  // the flag wins over a broken environment value
  EXPECT_EQ(run_cli("run --config " + good.string() + " --out-dir " + dir.string() + " --threads 1",
                    "LINDBLAD_FORGE_THREADS=zero"),
            0);
  EXPECT_NE(run_cli("run --config " + (dir / "missing.json").string()), 0);
  EXPECT_NE(run_cli("frobnicate --config " + good.string()), 0);
  EXPECT_NE(run_cli("run --config " + good.string() + " --threads 0"), 0);
}
