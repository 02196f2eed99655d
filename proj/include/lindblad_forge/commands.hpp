#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "lindblad_forge/config.hpp"
#include "lindblad_forge/csv.hpp"

namespace lindblad_forge {

/// Settings that come from the command line rather than the config file.
struct CommandOptions {
  std::string out_dir = ".";
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;  // overrides the config seed
};

struct SimulationResult {
  std::string method;
  Trajectory trajectory;
  std::optional<double> delta_defect;  // hermiticity_defect(Δ), prescriptions only
  int exact_n_max = 0;                 // Exact only
};

namespace command_detail {

inline std::string file_stem(const std::string& method) {
  std::string out;
  for (char c : method) {
    if (c == '+') {
      out += "_plus";
    } else if (c == '(' || c == ')') {
      continue;
    } else {
      out += c;
    }
  }
  return out;
}

inline std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, "cannot create output directory '" + dir + "'");
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error(ErrorCode::InvalidArgument, "failed writing '" + path + "'");
}

inline std::vector<std::optional<double>> sweep_points(const ScenarioConfig& cfg) {
  if (cfg.sweep.parameter.empty()) return {std::nullopt};
  std::vector<std::optional<double>> out;
  for (double v : cfg.sweep.values) out.emplace_back(v);
  return out;
}

inline std::vector<std::string> prefix_header(const ScenarioConfig& cfg, std::vector<std::string> rest) {
  std::vector<std::string> h;
  if (!cfg.sweep.parameter.empty()) h.push_back(cfg.sweep.parameter);
  h.insert(h.end(), rest.begin(), rest.end());
  return h;
}

inline std::vector<std::string> prefix_row(std::optional<double> sweep_value, std::vector<std::string> rest) {
  std::vector<std::string> r;
  if (sweep_value) r.push_back(format_double(*sweep_value));
  r.insert(r.end(), rest.begin(), rest.end());
  return r;
}

inline Json complex_matrix_json(const ComplexMatrix& m) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json rr = Json::array(), ii = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ii.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return Json{{"re", re}, {"im", im}};
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

/// Golden-rule lifetime of eigen level k: 1 / Σ Γ_jj(ω_j) over the transitions that lower it.
inline double reference_lifetime(const TransitionTable& table, const SpectralModel& bath, int level) {
  double rate = 0.0;
  for (const auto& t : table.transitions) {
    if (t.ket_level != level || !(t.frequency > 0.0)) continue;
    const ComplexMatrix gamma = eval_gamma(bath, t.frequency);
    rate += (t.elements.adjoint() * gamma * t.elements)(0, 0).real();
  }
  return rate > 0.0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
}

}  // namespace command_detail

inline SimulationResult simulate(const ScenarioConfig& cfg, const ScenarioInstance& inst,
                                 const std::string& method_name) {
  const Method method = parse_method(method_name);
  SimulationResult out;
  out.method = method.name;
  if (method.exact) {
    ExactModel em;
    em.system = inst.system;
    try {
      em.network = to_network(inst.bath);
    } catch (const Error& e) {
      throw Error(ErrorCode::ExactUnavailable, e.what());
    }
    em.n_max = cfg.exact_n_max;
    em.truncation = cfg.exact_truncation;
    em.max_retries = cfg.exact_max_retries;
    em.dimension_cap = cfg.exact_dimension_cap;
    ExactRun run = exact_run(em, inst.rho0, cfg.grid, cfg.integrator);
    out.exact_n_max = run.n_max;
    out.trajectory = std::move(run.trajectory);
    return out;
  }
  const Prescription p = scenario_prescription(cfg, method_name);
  const TransitionTable table = make_transition_table(inst.system);
  Superoperator gen;
  if (p.tag == PrescriptionTag::BRE && !p.repaired && !p.secular_cutoff) {
    gen = build_bre(table, inst.bath);
    out.delta_defect = hermiticity_defect(bre_lindblad_form(table, inst.bath).delta);
  } else {
    const MasterEquation me = build_prescription(table, inst.bath, p);
    out.delta_defect = hermiticity_defect(me.delta);
    gen = to_liouvillian(me);
  }
  out.trajectory = integrate(gen, inst.rho0, cfg.grid, cfg.integrator);
  return out;
}

namespace command_detail {

inline void append_trajectory_rows(CsvWriter& csv, const ScenarioConfig& cfg, std::optional<double> sweep_value,
                                   const Trajectory& traj) {
  const Eigen::Index dim = traj.states.empty() ? 0 : traj.states.front().rows();
  std::vector<std::vector<double>> phases;
  for (const auto& [r, c] : cfg.outputs.phases) {
    if (r < 0 || c < 0 || r >= dim || c >= dim) throw Error(ErrorCode::ConfigError, "outputs.phases index out of range");
    phases.push_back(unwrapped_phase(traj.element(r, c)));
  }
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const ComplexMatrix& s = traj.states[k];
    std::vector<std::string> row{format_double(traj.grid.at(static_cast<long>(k))),
                                 format_double(s.trace().real()),
                                 format_double(min_eigenvalue_hermitian_part(s))};
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) {
        row.push_back(format_double(s(i, j).real()));
        row.push_back(format_double(s(i, j).imag()));
      }
    }
    for (const auto& ph : phases) row.push_back(format_double(ph[k]));
    csv.add_row(prefix_row(sweep_value, std::move(row)));
  }
}

inline std::vector<std::string> trajectory_header(const ScenarioConfig& cfg, Eigen::Index dim) {
  std::vector<std::string> h{"t_inv_eV", "trace", "min_eig"};
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      const std::string ij = std::to_string(i) + "_" + std::to_string(j);
      h.push_back("rho_" + ij + "_re");
      h.push_back("rho_" + ij + "_im");
    }
  }
  for (const auto& [r, c] : cfg.outputs.phases) h.push_back("phase_" + std::to_string(r) + "_" + std::to_string(c));
  return prefix_header(cfg, std::move(h));
}

/// Shared body of run and compare: per-method trajectory CSVs, diagnostics and a summary.
inline std::vector<std::string> simulate_and_write(const ScenarioConfig& cfg, const std::string& out_dir,
                                                   bool with_exact) {
  if (cfg.methods.empty()) throw Error(ErrorCode::ConfigError, "config.methods must not be empty");
  std::vector<std::string> methods = cfg.methods;
  std::size_t exact_index = methods.size();
  for (std::size_t k = 0; k < methods.size(); ++k) {
    if (parse_method(methods[k]).exact) exact_index = k;
  }
  if (with_exact && exact_index == methods.size()) {
    methods.insert(methods.begin(), "Exact");
    exact_index = 0;
  }
  ensure_dir(out_dir);
  const auto points = sweep_points(cfg);
  const ScenarioInstance probe = instantiate(cfg, points.front());
  const Eigen::Index dim = probe.system.dim();
  if (cfg.outputs.lifetime_level && (*cfg.outputs.lifetime_level < 0 || *cfg.outputs.lifetime_level >= dim)) {
    throw Error(ErrorCode::ConfigError, "outputs.lifetime_level out of range");
  }

  std::vector<CsvWriter> traj_csv;
  for (std::size_t m = 0; m < methods.size(); ++m) traj_csv.emplace_back(trajectory_header(cfg, dim));
  CsvWriter diag(prefix_header(cfg, {"method", "t_inv_eV", "trace_error", "min_eigenvalue", "hermiticity_defect",
                                     "min_population", "max_abs_imag_population"}));
  std::vector<std::string> summary_cols{"method", "diverged", "reason", "substeps", "step_error",
                                        "max_trace_error", "min_eigenvalue", "min_population",
                                        "max_abs_imag_population", "delta_hermiticity_defect", "exact_n_max"};
  if (with_exact) summary_cols.push_back("mean_deviation");
  if (cfg.outputs.lifetime_level) {
    summary_cols.push_back("lifetime");
    summary_cols.push_back("reference_lifetime");
  }
  CsvWriter summary(prefix_header(cfg, summary_cols));
  std::vector<std::string> dev_cols{"t_inv_eV"};
  for (std::size_t m = 0; m < methods.size(); ++m) {
    if (m != exact_index) dev_cols.push_back(parse_method(methods[m]).name);
  }
  CsvWriter dev(prefix_header(cfg, dev_cols));

  for (const auto& sv : points) {
    const ScenarioInstance inst = instantiate(cfg, sv);
    const TransitionTable table = make_transition_table(inst.system);
    std::vector<SimulationResult> results;
    for (const auto& m : methods) results.push_back(simulate(cfg, inst, m));
    const Trajectory* exact =
        with_exact && results[exact_index].trajectory.complete() && !results[exact_index].trajectory.diverged
            ? &results[exact_index].trajectory
            : nullptr;

    std::vector<std::optional<DeviationSeries>> deviations(methods.size());
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const SimulationResult& r = results[m];
      const Trajectory& t = r.trajectory;
      append_trajectory_rows(traj_csv[m], cfg, sv, t);
      double min_pop = std::numeric_limits<double>::infinity(), max_imag = 0.0;
      for (std::size_t k = 0; k < t.states.size(); ++k) {
        const auto d = t.states[k].diagonal();
        const double mp = d.real().minCoeff();
        const double mi = d.imag().cwiseAbs().maxCoeff();
        min_pop = std::min(min_pop, mp);
        max_imag = std::max(max_imag, mi);
        const StepDiagnostics sd = k < t.diagnostics.size() ? t.diagnostics[k] : step_diagnostics(t.states[k]);
        diag.add_row(prefix_row(sv, {r.method, format_double(t.grid.at(static_cast<long>(k))),
                                     format_double(sd.trace_error), format_double(sd.min_eigenvalue),
                                     format_double(sd.hermiticity_defect), format_double(mp), format_double(mi)}));
      }
      if (exact && m != exact_index && t.complete() && !t.diverged) deviations[m] = deviation(*exact, t);

      std::vector<std::string> row{r.method,
                                   t.diverged ? "1" : "0",
                                   t.divergence_reason,
                                   std::to_string(t.substeps),
                                   format_double(t.step_error),
                                   format_double(t.max_trace_error()),
                                   format_double(t.min_eigenvalue()),
                                   format_double(min_pop),
                                   format_double(max_imag),
                                   format_optional(r.delta_defect),
                                   r.exact_n_max > 0 ? std::to_string(r.exact_n_max) : std::string()};
      if (with_exact) {
        row.push_back(deviations[m] ? format_double(deviations[m]->time_average) : std::string());
      }
      if (cfg.outputs.lifetime_level) {
        const int lvl = *cfg.outputs.lifetime_level;
        std::vector<double> times, pops;
        for (std::size_t k = 0; k < t.states.size(); ++k) {
          times.push_back(t.grid.at(static_cast<long>(k)));
          pops.push_back(t.states[k](lvl, lvl).real());
        }
        const LifetimeFit fit = fit_lifetime(times, pops, cfg.outputs.lifetime_lo, cfg.outputs.lifetime_hi);
        row.push_back(format_double(fit.lifetime));
        row.push_back(format_double(reference_lifetime(table, inst.bath, lvl)));
      }
      summary.add_row(prefix_row(sv, std::move(row)));
    }
    if (exact) {
      for (std::size_t k = 0; k < exact->states.size(); ++k) {
        std::vector<std::string> row{format_double(exact->grid.at(static_cast<long>(k)))};
        for (std::size_t m = 0; m < methods.size(); ++m) {
          if (m == exact_index) continue;
          row.push_back(deviations[m] ? format_double(deviations[m]->values[k]) : std::string());
        }
        dev.add_row(prefix_row(sv, std::move(row)));
      }
    }
  }

  std::vector<std::string> written;
  if (cfg.outputs.trajectories) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const std::string path = join(out_dir, cfg.name + "_" + file_stem(parse_method(methods[m]).name) + ".csv");
      traj_csv[m].write(path);
      written.push_back(path);
    }
  }
  const std::string diag_path = join(out_dir, cfg.name + "_diagnostics.csv");
  diag.write(diag_path);
  written.push_back(diag_path);
  const std::string summary_path = join(out_dir, cfg.name + "_summary.csv");
  summary.write(summary_path);
  written.push_back(summary_path);
  if (with_exact) {
    const std::string dev_path = join(out_dir, cfg.name + "_deviation.csv");
    dev.write(dev_path);
    written.push_back(dev_path);
  }
  return written;
}

inline void apply_seed(ScenarioConfig& cfg, const CommandOptions& opts) {
  if (opts.seed) cfg.system.seed = *opts.seed;
}

}  // namespace command_detail

inline std::vector<std::string> cmd_run(ScenarioConfig cfg, const CommandOptions& opts) {
  command_detail::apply_seed(cfg, opts);
  return command_detail::simulate_and_write(cfg, opts.out_dir, false);
}

inline std::vector<std::string> cmd_compare(ScenarioConfig cfg, const CommandOptions& opts) {
  command_detail::apply_seed(cfg, opts);
  return command_detail::simulate_and_write(cfg, opts.out_dir, true);
}

inline std::vector<std::string> cmd_spectra(ScenarioConfig cfg, const CommandOptions& opts) {
  using namespace command_detail;
  apply_seed(cfg, opts);
  const int points = cfg.outputs.spectra_points.value_or(401);
  if (points < 1) throw Error(ErrorCode::ConfigError, "spectra grid needs at least one point");
  ensure_dir(opts.out_dir);
  std::vector<std::string> written;
  const auto sweep = sweep_points(cfg);
  const ScenarioInstance inst = instantiate(cfg, sweep.front());
  const int mch = inst.bath.channels();
  std::vector<std::string> header{"omega_eV"};
  for (const char* q : {"J", "lambda"}) {
    for (int a = 0; a < mch; ++a) {
      for (int b = a; b < mch; ++b) {
        const std::string ab = std::string(q) + "_" + std::to_string(a + 1) + std::to_string(b + 1);
        header.push_back(ab + "_re");
        header.push_back(ab + "_im");
      }
    }
  }
  CsvWriter spectra(header);
  for (int k = 0; k < points; ++k) {
    const double w = points == 1 ? cfg.outputs.spectra_min
                                 : cfg.outputs.spectra_min +
                                       (cfg.outputs.spectra_max - cfg.outputs.spectra_min) * k / (points - 1);
    const BathEval e = inst.bath.evaluate(w);
    std::vector<std::string> row{format_double(w)};
    for (const ComplexMatrix* m : {&e.J, &e.lambda}) {
      for (int a = 0; a < mch; ++a) {
        for (int b = a; b < mch; ++b) {
          row.push_back(format_double((*m)(a, b).real()));
          row.push_back(format_double((*m)(a, b).imag()));
        }
      }
    }
    spectra.add_row(std::move(row));
  }
  const std::string sp = join(opts.out_dir, cfg.name + "_spectra.csv");
  spectra.write(sp);
  written.push_back(sp);

  const TransitionTable table = make_transition_table(inst.system);
  CsvWriter markers({"index", "bra_level", "ket_level", "frequency_eV"});
  for (const auto& t : table.transitions) {
    if (!(t.frequency > 0.0)) continue;
    markers.add_row({std::to_string(t.index), std::to_string(t.bra_level), std::to_string(t.ket_level),
                     format_double(t.frequency)});
  }
  const std::string mp = join(opts.out_dir, cfg.name + "_transitions.csv");
  markers.write(mp);
  written.push_back(mp);
  return written;
}

/// MasterEquation of every non-exact method as JSON (eigenbasis Δ, Kossakowski matrix, its
/// spectrum and the transition metadata).
inline Json build_json(const ScenarioConfig& cfg, const ScenarioInstance& inst) {
  using namespace command_detail;
  const TransitionTable table = make_transition_table(inst.system);
  Json transitions = Json::array();
  for (const auto& t : table.transitions) {
    transitions.push_back({{"index", t.index},
                           {"bra_level", t.bra_level},
                           {"ket_level", t.ket_level},
                           {"frequency", t.frequency}});
  }
  Json methods = Json::array();
  for (const auto& name : cfg.methods) {
    if (parse_method(name).exact) throw Error(ErrorCode::ConfigError, "build has no master equation for Exact");
    const MasterEquation me = build_prescription(table, inst.bath, scenario_prescription(cfg, name));
    const HermitianEig eig = herm_eig(me.kossakowski);
    std::vector<double> values(eig.values.data(), eig.values.data() + eig.values.size());
    methods.push_back({{"method", me.prescription.name()},
                       {"delta", complex_matrix_json(me.delta)},
                       {"delta_hermiticity_defect", hermiticity_defect(me.delta)},
                       {"kossakowski", complex_matrix_json(me.kossakowski)},
                       {"kossakowski_eigenvalues", values},
                       {"kossakowski_defect", me.kossakowski_defect}});
  }
  const RealVector energies = diagonalize_system(inst.system).energies;
  return Json{{"name", cfg.name},
              {"energies", std::vector<double>(energies.data(), energies.data() + energies.size())},
              {"transitions", transitions},
              {"methods", methods}};
}

inline std::vector<std::string> cmd_build(ScenarioConfig cfg, const CommandOptions& opts) {
  using namespace command_detail;
  apply_seed(cfg, opts);
  if (cfg.methods.empty()) throw Error(ErrorCode::ConfigError, "config.methods must not be empty");
  ensure_dir(opts.out_dir);
  Json out = Json::array();
  for (const auto& sv : sweep_points(cfg)) {
    Json one = build_json(cfg, instantiate(cfg, sv));
    if (sv) one[cfg.sweep.parameter] = *sv;
    out.push_back(one);
  }
  const std::string path = join(opts.out_dir, cfg.name + "_build.json");
  write_text(path, (out.size() == 1 ? out.front() : out).dump(2) + "\n");
  return {path};
}

/// The report as JSON. The thread count is left out on purpose: it does not change results.
inline Json report_json(const EnsembleReport& report) {
  using namespace command_detail;
  const EnsembleConfig& c = report.config;
  Json config{{"n_systems", c.n_systems},
              {"seed", c.seed},
              {"shape", {{"levels", c.shape.levels}, {"channels", c.shape.channels}, {"modes", c.shape.modes}}},
              {"strength_factors", c.strength_factors},
              {"baseline_factor", c.baseline_factor},
              {"horizon",
               {{"kind", c.horizon.kind},
                {"multiplier", c.horizon.multiplier},
                {"t_min", c.horizon.t_min},
                {"t_max", c.horizon.t_max},
                {"fixed", c.horizon.fixed}}},
              {"n_steps", c.n_steps},
              {"methods", c.methods},
              {"eigen_methods", c.eigen_methods},
              {"exact",
               {{"n_max", c.exact_n_max},
                {"truncation", config_detail::truncation_name(c.exact_truncation)},
                {"max_retries", c.exact_max_retries},
                {"dimension_cap", c.exact_dimension_cap}}},
              {"integrator", {{"tolerance", c.integrator.tolerance}, {"max_refinement", c.integrator.max_refinement}}}};
  Json instances = Json::array();
  for (const auto& inst : report.instances) {
    Json cells = Json::array();
    for (const auto& row : inst.cells) {
      Json r = Json::array();
      for (const auto& cell : row) {
        r.push_back({{"deviation", optional_json(cell.deviation)},
                     {"diverged", cell.diverged},
                     {"skipped", cell.skipped},
                     {"flag", cell.flag}});
      }
      cells.push_back(r);
    }
    Json eigen = Json::array();
    for (const auto& e : inst.eigen) {
      eigen.push_back({{"normalized", e.normalized},
                       {"largest", e.largest},
                       {"defect", e.defect},
                       {"degenerate", e.degenerate}});
    }
    instances.push_back({{"index", inst.index},
                         {"horizons", inst.horizons},
                         {"exact_n_max", inst.exact_n_max},
                         {"cells", cells},
                         {"eigen", eigen}});
  }
  Json aggregates = Json::array();
  for (const auto& a : report.aggregates) {
    aggregates.push_back({{"factor", a.factor},
                          {"method", a.method},
                          {"geo_mean_deviation", optional_json(a.geo_mean)},
                          {"log10_dispersion", optional_json(a.log10_std)},
                          {"aggregated", a.aggregated},
                          {"diverged", a.diverged},
                          {"skipped", a.skipped}});
  }
  Json histograms = Json::array();
  for (const auto& h : report.histograms) {
    histograms.push_back({{"method", h.method}, {"rank", h.rank}, {"bin_edge", h.bin_edge}, {"count", h.count}});
  }
  Json summaries = Json::array();
  for (const auto& s : report.eigen_summaries) {
    summaries.push_back({{"method", s.method},
                         {"instances", s.instances},
                         {"degenerate", s.degenerate},
                         {"median_min_over_max", s.median_min_over_max},
                         {"median_most_negative", s.median_most_negative},
                         {"max_defect", s.max_defect}});
  }
  return Json{{"config", config},
              {"histogram",
               {{"decades_min", report.histogram_decades_min},
                {"decades_max", report.histogram_decades_max},
                {"bin_width", report.histogram_bin_width}}},
              {"aggregates", aggregates},
              {"eigen_summaries", summaries},
              {"histograms", histograms},
              {"instances", instances}};
}

inline std::vector<std::string> write_ensemble_outputs(const EnsembleReport& report, const std::string& name,
                                                       const std::string& out_dir) {
  using namespace command_detail;
  ensure_dir(out_dir);
  std::vector<std::string> written;
  const std::string json_path = join(out_dir, name + "_report.json");
  write_text(json_path, report_json(report).dump(2) + "\n");
  written.push_back(json_path);

  CsvWriter agg({"factor", "method", "geo_mean_deviation", "log10_dispersion", "divergences", "skipped", "aggregated"});
  for (const auto& a : report.aggregates) {
    agg.add_row({format_double(a.factor), a.method, format_optional(a.geo_mean), format_optional(a.log10_std),
                 std::to_string(a.diverged), std::to_string(a.skipped), std::to_string(a.aggregated)});
  }
  const std::string agg_path = join(out_dir, name + "_aggregate.csv");
  agg.write(agg_path);
  written.push_back(agg_path);

  CsvWriter hist({"method", "rank", "bin_edge", "count"});
  for (const auto& h : report.histograms) {
    hist.add_row({h.method, std::to_string(h.rank), format_double(h.bin_edge), std::to_string(h.count)});
  }
  const std::string hist_path = join(out_dir, name + "_histogram.csv");
  hist.write(hist_path);
  written.push_back(hist_path);

  CsvWriter eig({"method", "instances", "degenerate", "median_min_over_max", "median_most_negative", "max_defect"});
  for (const auto& s : report.eigen_summaries) {
    eig.add_row({s.method, std::to_string(s.instances), std::to_string(s.degenerate),
                 format_double(s.median_min_over_max), format_double(s.median_most_negative),
                 format_double(s.max_defect)});
  }
  const std::string eig_path = join(out_dir, name + "_eigen_summary.csv");
  eig.write(eig_path);
  written.push_back(eig_path);
  return written;
}

inline std::vector<std::string> cmd_ensemble(EnsembleConfig cfg, const std::string& name, const CommandOptions& opts) {
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.threads) cfg.threads = *opts.threads;
  const EnsembleReport report = run_ensemble(cfg);
  return write_ensemble_outputs(report, name, opts.out_dir);
}

}  // namespace lindblad_forge
