// Acceptance checks, one per criterion. Prints one PASS/FAIL line per criterion run and
// exits non-zero if any of them failed.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "lindblad_forge/lindblad_forge.hpp"

namespace lf = lindblad_forge;
using lf::Complex;
using lf::ComplexMatrix;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

lf::ScenarioConfig shipped(const std::string& file) {
  return lf::parse_scenario(lf::load_json_file(std::string(LF_CONFIG_DIR) + "/" + file));
}

int env_threads() {
  const char* raw = std::getenv("LINDBLAD_FORGE_THREADS");
  const int n = raw ? std::atoi(raw) : 0;
  return n > 0 ? n : 1;
}

lf::RandomInstance appendix_instance(int index) {
  lf::RngStream rng = lf::RngStream::substream(1234321, static_cast<std::uint64_t>(index));
  return lf::gen_instance(rng);
}

// g = κ cut of the coupling sweep.
Outcome criterion_1() {
  lf::ScenarioConfig cfg = shipped("fig1.json");
  const lf::ScenarioInstance inst = lf::instantiate(cfg, cfg.bath.lorentzian.kappa);
  const lf::SimulationResult r = lf::simulate(cfg, inst, "BRE");
  double min00 = 0.0, max_excited = 0.0;
  for (const auto& s : r.trajectory.states) {
    min00 = std::min(min00, s(0, 0).real());
    max_excited = std::max(max_excited, s(1, 1).real() + s(2, 2).real());
  }
  const double trace = r.trajectory.max_trace_error();
  const bool ok = r.trajectory.complete() && min00 < -0.01 && max_excited > 1.001 && trace < 1e-8;
  return {ok, "min rho00 = " + fmt(min00) + ", max rho11+rho22 = " + fmt(max_excited) +
                  ", trace error = " + fmt(trace)};
}

// δ = κ cut of the detuning sweep.
Outcome criterion_2() {
  lf::ScenarioConfig cfg = shipped("fig2.json");
  const lf::ScenarioInstance inst = lf::instantiate(cfg, cfg.bath.lorentzian.kappa);
  const lf::SimulationResult r = lf::simulate(cfg, inst, "gLgG");
  const auto phase = lf::unwrapped_phase(r.trajectory.element(1, 1));
  double max_phase = 0.0, min22 = 0.0;
  for (double p : phase) max_phase = std::max(max_phase, std::abs(p));
  for (const auto& s : r.trajectory.states) min22 = std::min(min22, s(2, 2).real());
  const double defect = r.delta_defect.value_or(0.0);
  const bool ok = r.trajectory.complete() && defect > 1e-4 && max_phase > lf::kPi && min22 < -0.01;
  return {ok, "defect(Delta) = " + fmt(defect) + " eV, max |phase rho11| = " + fmt(max_phase) +
                  ", min rho22 = " + fmt(min22)};
}

Outcome criterion_3() {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const lf::RandomInstance inst = appendix_instance(i);
    const lf::TransitionTable t = lf::make_transition_table(inst.system);
    const auto bath = lf::SpectralModel::network(inst.network);
    for (const char* name : {"aLgG", "aLaG"}) {
      const lf::MasterEquation me = lf::build_prescription(t, bath, lf::Prescription::parse(name));
      const double norm = me.delta.norm();
      if (norm > 0.0) worst = std::max(worst, lf::hermiticity_defect(me.delta) / norm);
    }
  }
  return {worst <= 1e-12, "worst relative defect = " + fmt(worst)};
}

Outcome criterion_4() {
  double worst_k = 0.0, worst_rho = 0.0, worst_trace = 0.0;
  int incomplete = 0;
  const lf::HorizonRule horizon;
  for (int i = 0; i < 100; ++i) {
    const lf::RandomInstance inst = appendix_instance(i);
    const lf::TransitionTable t = lf::make_transition_table(inst.system);
    const auto bath = lf::SpectralModel::network(inst.network);
    const lf::MasterEquation me = lf::build_prescription(t, bath, lf::Prescription::parse("aLgG+"));
    const lf::HermitianEig eig = lf::herm_eig(me.kossakowski);
    const double largest = eig.values(eig.values.size() - 1);
    worst_k = std::min(worst_k, eig.values(0) / largest);
    const lf::TimeGrid grid{0.0, horizon.horizon(t, bath), 1000};
    const lf::Trajectory tr = lf::integrate(lf::to_liouvillian(me), inst.rho0(), grid);
    if (!tr.complete() || tr.diverged) ++incomplete;
    worst_rho = std::min(worst_rho, tr.min_eigenvalue());
    worst_trace = std::max(worst_trace, tr.max_trace_error());
  }
  const bool ok = incomplete == 0 && worst_k >= -1e-12 && worst_rho >= -1e-8 && worst_trace < 1e-8;
  return {ok, "min K eigenvalue / max = " + fmt(worst_k) + ", min rho eigenvalue = " + fmt(worst_rho) +
                  ", max trace error = " + fmt(worst_trace) + ", incomplete runs = " + std::to_string(incomplete)};
}

Outcome criterion_5() {
  lf::ScenarioConfig cfg = shipped("fig3.json");
  const double wm = cfg.bath.lorentzian.omega_m;
  const int level = *cfg.outputs.lifetime_level;
  bool ok = true;
  std::vector<double> ratios;
  std::ostringstream detail;
  for (double delta : cfg.sweep.values) {
    const lf::ScenarioInstance inst = lf::instantiate(cfg, delta);
    auto lifetime = [&](const std::string& method) {
      const lf::SimulationResult r = lf::simulate(cfg, inst, method);
      std::vector<double> t, y;
      for (long k = 0; k < cfg.grid.points(); ++k) {
        t.push_back(cfg.grid.at(k));
        y.push_back(r.trajectory.states[static_cast<std::size_t>(k)](level, level).real());
      }
      return lf::fit_lifetime(t, y, cfg.outputs.lifetime_lo, cfg.outputs.lifetime_hi).lifetime;
    };
    const double exact = lifetime("Exact"), alg = lifetime("aLgG"), dd = lifetime("dLdG");
    const double ref = 1.0 / lf::eval_gamma(inst.bath, wm + delta)(0, 0).real();
    const double ref_m = 1.0 / lf::eval_gamma(inst.bath, wm)(0, 0).real();
    const bool agree = std::abs(exact - alg) <= 0.15 * std::min(exact, alg);
    const bool dd_ok = std::abs(dd - ref_m) <= 0.2 * ref_m;
    ok = ok && agree && dd_ok;
    ratios.push_back(exact / ref);
    detail << " [d=" << fmt(delta) << ": exact " << fmt(exact) << ", aLgG " << fmt(alg) << ", dLdG " << fmt(dd)
           << ", 1/(2piJ) " << fmt(ref) << "]";
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  const bool constant = std::isfinite(*hi) && *hi <= 1.2 * *lo;
  ok = ok && constant;
  return {ok, "exact/reference ratio spread " + fmt(*lo) + ".." + fmt(*hi) + ";" + detail.str()};
}

Outcome criterion_6() {
  lf::EnsembleConfig cfg;
  cfg.n_systems = 200;
  cfg.methods.clear();
  cfg.eigen_methods = {"BRE", "aLaG", "aLgG"};
  cfg.threads = env_threads();
  const lf::EnsembleReport r = lf::run_ensemble(cfg);
  double bre = 0, alag = 0, alg = 0;
  for (const auto& s : r.eigen_summaries) {
    if (s.method == "BRE") bre = s.median_min_over_max;
    if (s.method == "aLaG") alag = s.median_min_over_max;
    if (s.method == "aLgG") alg = s.median_min_over_max;
  }
  const bool ok = bre >= 0.1 && alag >= 3e-2 && alg <= 1e-2;
  return {ok, "median |min|/max: BRE " + fmt(bre) + ", aLaG " + fmt(alag) + ", aLgG " + fmt(alg)};
}

Outcome criterion_7() {
  lf::EnsembleConfig cfg;
  cfg.n_systems = 200;
  cfg.strength_factors = lf::log_spaced(1.0, 1e3, 5);
  cfg.threads = env_threads();
  cfg.eigen_methods.clear();
  const lf::EnsembleReport r = lf::run_ensemble(cfg);
  const std::size_t nf = cfg.strength_factors.size();
  auto geo = [&](const std::string& method, std::size_t f) -> double {
    for (const auto& row : r.aggregates) {
      if (row.method == method && row.factor == cfg.strength_factors[f]) {
        return row.geo_mean.value_or(std::numeric_limits<double>::quiet_NaN());
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  std::ostringstream detail;
  bool ok = true;

  // factors ascend, so a decrease with decreasing factor means geo[f] < geo[f + 1]
  for (const char* m : {"BRE", "aLaG", "aLgG"}) {
    int bad = 0;
    for (std::size_t f = 0; f + 1 < nf; ++f) bad += !(geo(m, f) < geo(m, f + 1));
    ok = ok && bad <= 1;
    detail << m << " non-monotone pairs " << bad << "; ";
  }
  for (const char* m : {"BRE+", "aLaG+"}) {
    for (std::size_t f = 0; f < 2; ++f) {
      const double g = geo(m, f);
      const bool in = g >= 0.03 && g <= 0.3;
      ok = ok && in;
      detail << m << "@" << fmt(cfg.strength_factors[f]) << " " << fmt(g) << (in ? "" : " (out)") << "; ";
    }
  }
  int far = 0;
  for (std::size_t f = 0; f < nf; ++f) {
    const double ratio = geo("aLgG+", f) / geo("aLgG", f);
    if (!(ratio <= 3.0 && ratio >= 1.0 / 3.0)) ++far;
    detail << "aLgG+/aLgG@" << fmt(cfg.strength_factors[f]) << " " << fmt(ratio) << "; ";
  }
  ok = ok && far == 0;
  int in_band = 0, cells = 0;
  double lo_std = std::numeric_limits<double>::infinity(), hi_std = 0.0;
  for (const auto& row : r.aggregates) {
    ++cells;
    if (!row.log10_std) continue;
    lo_std = std::min(lo_std, *row.log10_std);
    hi_std = std::max(hi_std, *row.log10_std);
    if (std::abs(*row.log10_std - 0.25) <= 0.15) ++in_band;
  }
  ok = ok && 2 * in_band >= cells;
  detail << "dispersion in band " << in_band << "/" << cells << " (range " << fmt(lo_std) << ".." << fmt(hi_std) << ")";
  int flagged = 0;
  for (const auto& row : r.aggregates) flagged += row.diverged + row.skipped;
  detail << "; flagged cells " << flagged;
  return {ok, detail.str()};
}

Outcome criterion_8() {
  // golden rule, g = 0.01 κ
  const double kappa = 0.1, g = 0.01 * kappa, rate = 4.0 * g * g / kappa;
  lf::ExactModel m;
  m.system.hamiltonian = ComplexMatrix::Zero(2, 2);
  m.system.hamiltonian(1, 1) = 1.0;
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 1) = a(1, 0) = 1.0;
  m.system.coupling_ops.push_back(a);
  m.network.omega = lf::RealMatrix::Constant(1, 1, 1.0);
  m.network.kappa = lf::RealVector::Constant(1, kappa);
  m.network.g = lf::RealMatrix::Constant(1, 1, g);
  m.n_max = 2;
  ComplexMatrix rho0 = ComplexMatrix::Zero(2, 2);
  rho0(1, 1) = 1.0;
  const lf::TimeGrid grid{0.0, 4.0 / rate, 400};
  const lf::Trajectory tr = lf::exact_trajectory(m, rho0, grid);
  std::vector<double> t, y;
  for (long k = 0; k < grid.points(); ++k) {
    t.push_back(grid.at(k));
    y.push_back(tr.states[static_cast<std::size_t>(k)](1, 1).real());
  }
  const double fitted = lf::fit_lifetime(t, y, 0.05, 0.9).rate;
  const bool golden = std::abs(fitted - rate) <= 0.1 * rate;

  // BRE term by term vs its Lindblad-like rewrite
  double worst_bre = 0.0;
  for (int i = 0; i < 20; ++i) {
    const lf::RandomInstance inst = appendix_instance(i);
    const lf::TransitionTable table = lf::make_transition_table(inst.system);
    const auto bath = lf::SpectralModel::network(inst.network);
    const ComplexMatrix x = lf::build_bre(table, bath).dense();
    const ComplexMatrix y2 = lf::to_liouvillian(lf::bre_lindblad_form(table, bath)).dense();
    worst_bre = std::max(worst_bre, (x - y2).norm() / x.norm());
  }

  // nearest PSD vs a clamp through the real symmetric embedding
  std::mt19937_64 gen(1234321);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst_psd = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    ComplexMatrix r(4, 4);
    for (int p = 0; p < 4; ++p) {
      for (int q = 0; q < 4; ++q) r(p, q) = Complex(n(gen), n(gen));
    }
    const ComplexMatrix h = (r + r.adjoint()) / 2.0;
    lf::RealMatrix big(8, 8);
    big << h.real(), -h.imag(), h.imag(), h.real();
    Eigen::SelfAdjointEigenSolver<lf::RealMatrix> s(big);
    const lf::RealMatrix c = s.eigenvectors() * s.eigenvalues().cwiseMax(0.0).asDiagonal() * s.eigenvectors().transpose();
    const ComplexMatrix oracle = c.topLeftCorner(4, 4).cast<Complex>() + lf::kI * c.bottomLeftCorner(4, 4).cast<Complex>();
    worst_psd = std::max(worst_psd, (lf::nearest_psd(h) - oracle).norm() / std::max(1.0, h.norm()));
  }
  const bool ok = golden && worst_bre <= 1e-10 && worst_psd <= 1e-12;
  return {ok, "golden rule rate " + fmt(fitted) + " vs " + fmt(rate) + ", BRE rewrite " + fmt(worst_bre) +
                  ", nearest PSD " + fmt(worst_psd)};
}

Outcome criterion_9() {
  namespace fs = std::filesystem;
  const lf::Json j = lf::Json::parse(R"({
    "name": "determinism", "n_systems": 6, "seed": 1234321,
    "strength_factors": [1.0, 100.0], "n_steps": 200,
    "methods": ["BRE", "BRE+", "aLaG", "aLaG+", "aLgG", "aLgG+"]
  })");
  std::string name;
  const lf::EnsembleConfig cfg = lf::parse_ensemble(j, &name);
  const fs::path root = fs::temp_directory_path() / "lf_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> texts;
  for (int threads : {1, 3}) {
    lf::CommandOptions opts;
    opts.out_dir = (root / std::to_string(threads)).string();
    opts.threads = threads;
    opts.seed = 1234321;
    (void)lf::cmd_ensemble(cfg, name, opts);
    std::ifstream in(fs::path(opts.out_dir) / (name + "_report.json"), std::ios::binary);
    texts.emplace_back((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }
  const bool ok = !texts[0].empty() && texts[0] == texts[1];
  return {ok, "report bytes " + std::to_string(texts[0].size()) + (ok ? ", identical" : ", differ")};
}

struct Criterion {
  int id;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> which;
  app.add_option("--criterion", which, "Criteria to run (default: all)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{{1, 10, criterion_1},   {2, 10, criterion_2},  {3, 30, criterion_3},
                                   {4, 600, criterion_4},  {5, 120, criterion_5}, {6, 300, criterion_6},
                                   {7, 1800, criterion_7}, {8, 60, criterion_8},  {9, 600, criterion_9}};
  int failures = 0;
  for (const auto& c : all) {
    if (!which.empty() && std::find(which.begin(), which.end(), c.id) == which.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << " (" << fmt(secs) << " s of "
              << fmt(c.budget_s) << " s) " << o.detail << (in_time ? "" : " [over time budget]") << std::endl;
    failures += !pass;
  }
  return failures == 0 ? 0 : 1;
}
