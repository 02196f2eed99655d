#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lindblad_forge/ensemble.hpp"

namespace lindblad_forge {

using Json = nlohmann::json;

namespace config_detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ConfigError, where + ": " + what);
}

/// Reads keys of one JSON object and, on finish(), rejects every key nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(where_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const Json& at(const std::string& key) {
    if (!has(key)) fail(where_, "missing required key '" + key + "'");
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  double number(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number()) fail(path(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  long integer(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number_integer()) fail(path(key), "expected an integer");
    return v.get<long>();
  }
  long integer(const std::string& key, long fallback) { return has(key) ? integer(key) : fallback; }

  std::uint64_t u64(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail(path(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) fail(path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_string()) fail(path(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  std::vector<double> numbers(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_array()) fail(path(key), "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) fail(path(key), "expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_array()) fail(path(key), "expected an array of strings");
    std::vector<std::string> out;
    for (const auto& x : v) {
      if (!x.is_string()) fail(path(key), "expected an array of strings");
      out.push_back(x.get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(where_, "unknown key '" + it.key() + "'");
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

/// Real matrix as nested arrays, or complex as {"re": [[..]], "im": [[..]]}.
inline ComplexMatrix complex_matrix(const Json& j, const std::string& where) {
  auto real_part = [&](const Json& m, const std::string& w) {
    if (!m.is_array() || m.empty()) fail(w, "expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(m.size());
    const auto cols = static_cast<Eigen::Index>(m.front().is_array() ? m.front().size() : 0);
    if (cols == 0) fail(w, "expected a non-empty array of rows");
    RealMatrix out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Json& row = m.at(static_cast<std::size_t>(r));
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) fail(w, "ragged matrix");
      for (Eigen::Index c = 0; c < cols; ++c) {
        const Json& x = row.at(static_cast<std::size_t>(c));
        if (!x.is_number()) fail(w, "matrix entries must be numbers");
        out(r, c) = x.get<double>();
      }
    }
    return out;
  };
  if (j.is_array()) return real_part(j, where).cast<Complex>();
  ObjectReader o(j, where);
  const RealMatrix re = real_part(o.at("re"), o.path("re"));
  ComplexMatrix out = re.cast<Complex>();
  if (o.has("im")) {
    const RealMatrix im = real_part(o.at("im"), o.path("im"));
    if (im.rows() != re.rows() || im.cols() != re.cols()) fail(where, "re and im shapes differ");
    out += kI * im.cast<Complex>();
  }
  o.finish();
  return out;
}

inline RealMatrix real_matrix(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected a real matrix (array of rows)");
  return complex_matrix(j, where).real();
}

inline FockTruncation parse_truncation(const std::string& s, const std::string& where) {
  if (s == "per_mode") return FockTruncation::PerMode;
  if (s == "total_excitation") return FockTruncation::TotalExcitation;
  fail(where, "truncation must be per_mode or total_excitation");
}

inline std::string truncation_name(FockTruncation t) {
  return t == FockTruncation::PerMode ? "per_mode" : "total_excitation";
}

}  // namespace config_detail

/// Where the system comes from. "three_level": |0⟩, |1⟩, |2⟩ at 0, ω₁, ω₂ with
/// A = Σ_i (σ_i + σ_i†). "explicit": H and A_α given. "random": one generated instance
/// (system, pseudomode bath and initial state).
struct SystemSource {
  std::string kind = "three_level";
  double omega_1 = 0.75;
  double omega_2 = 1.35;
  SystemSpec spec;
  std::uint64_t seed = 1234321;
  std::uint64_t index = 0;
  InstanceShape shape;
};

struct BathSource {
  std::string kind = "lorentzian";  // lorentzian | network | random
  Lorentzian lorentzian{0.1, 1.0, 0.1};
  PseudomodeNetwork network;
  double scale = 1.0;
};

/// A one-parameter scan. "g" sets the Lorentzian coupling, "delta" places the three-level
/// transitions at ω_M ∓ δ, "factor" scales the bath.
struct Sweep {
  std::string parameter;  // empty: single run
  std::vector<double> values;
};

struct OutputOptions {
  bool trajectories = true;
  std::vector<std::pair<int, int>> phases;  // elements whose unwrapped phase is written
  std::optional<int> lifetime_level;
  double lifetime_lo = 0.05;
  double lifetime_hi = 0.5;
  std::optional<int> spectra_points;
  double spectra_min = 0.0;
  double spectra_max = 2.0;
};

struct ScenarioConfig {
  std::string name = "scenario";
  SystemSource system;
  BathSource bath;
  std::vector<std::string> methods;
  std::optional<double> cluster_width;
  std::optional<double> secular_cutoff;
  std::string initial_kind = "amplitudes";  // amplitudes | level | random
  ComplexVector initial_amplitudes;
  int initial_level = 0;
  TimeGrid grid{0.0, 1000.0, 1000};
  Sweep sweep;
  int exact_n_max = 3;
  FockTruncation exact_truncation = FockTruncation::PerMode;
  int exact_max_retries = 2;
  Eigen::Index exact_dimension_cap = 4096;
  IntegratorOptions integrator;
  OutputOptions outputs;
};

/// One concrete point of a scenario (after applying a sweep value).
struct ScenarioInstance {
  SystemSpec system;
  SpectralModel bath = SpectralModel::lorentzian(0.1, 1.0, 0.1);
  ComplexMatrix rho0;
};

inline SystemSpec three_level_system(double omega_1, double omega_2) {
  SystemSpec s;
  s.hamiltonian = ComplexMatrix::Zero(3, 3);
  s.hamiltonian(1, 1) = omega_1;
  s.hamiltonian(2, 2) = omega_2;
  ComplexMatrix a = ComplexMatrix::Zero(3, 3);
  a(0, 1) = a(1, 0) = a(0, 2) = a(2, 0) = 1.0;
  s.coupling_ops.push_back(a);
  return s;
}

inline Prescription scenario_prescription(const ScenarioConfig& cfg, const std::string& name) {
  Prescription p = Prescription::parse(name);
  p.cluster_width = cfg.cluster_width;
  p.secular_cutoff = cfg.secular_cutoff;
  if (p.uses_clusters() && !p.cluster_width) {
    throw Error(ErrorCode::ConfigError, "method " + name + " needs cluster_width");
  }
  return p;
}

inline ScenarioInstance instantiate(const ScenarioConfig& cfg, std::optional<double> sweep_value = {}) {
  ScenarioInstance out;
  std::optional<RandomInstance> random;
  if (cfg.system.kind == "random" || cfg.bath.kind == "random" || cfg.initial_kind == "random") {
    RngStream rng = RngStream::substream(cfg.system.seed, cfg.system.index);
    random = gen_instance(rng, cfg.system.shape);
  }

  Lorentzian lor = cfg.bath.lorentzian;
  double scale = cfg.bath.scale;
  double omega_1 = cfg.system.omega_1, omega_2 = cfg.system.omega_2;
  if (sweep_value) {
    const double v = *sweep_value;
    if (cfg.sweep.parameter == "g") {
      lor.g = v;
    } else if (cfg.sweep.parameter == "factor") {
      scale *= v;
    } else if (cfg.sweep.parameter == "delta") {
      omega_1 = lor.omega_m - v;
      omega_2 = lor.omega_m + v;
    }
  }

  if (cfg.system.kind == "three_level") {
    out.system = three_level_system(omega_1, omega_2);
  } else if (cfg.system.kind == "explicit") {
    out.system = cfg.system.spec;
  } else {
    out.system = random->system;
  }
  out.system.validate();

  if (cfg.bath.kind == "lorentzian") {
    out.bath = SpectralModel::lorentzian(lor.g, lor.omega_m, lor.kappa);
  } else if (cfg.bath.kind == "network") {
    out.bath = SpectralModel::network(cfg.bath.network);
  } else {
    out.bath = SpectralModel::network(random->network);
  }
  if (scale != 1.0) out.bath = SpectralModel::scaled(out.bath, scale);
  if (out.bath.channels() != out.system.channels()) {
    throw Error(ErrorCode::ConfigError, "bath has " + std::to_string(out.bath.channels()) +
                                            " channels, system has " +
                                            std::to_string(out.system.channels()));
  }

  const Eigen::Index dim = out.system.dim();
  ComplexVector psi;
  if (cfg.initial_kind == "random") {
    psi = random->psi0;
  } else if (cfg.initial_kind == "level") {
    if (cfg.initial_level < 0 || cfg.initial_level >= dim) {
      throw Error(ErrorCode::ConfigError, "initial_state.level out of range");
    }
    psi = ComplexVector::Unit(dim, cfg.initial_level);
  } else {
    psi = cfg.initial_amplitudes;
  }
  if (psi.size() != dim) throw Error(ErrorCode::ConfigError, "initial state has the wrong dimension");
  if (!(psi.norm() > 0.0)) throw Error(ErrorCode::ConfigError, "initial state is zero");
  out.rho0 = projector(psi / psi.norm());
  return out;
}

inline ScenarioConfig parse_scenario(const Json& j) {
  using namespace config_detail;
  ScenarioConfig cfg;
  ObjectReader root(j, "config");
  cfg.name = root.string("name", cfg.name);
  if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos) {
    fail("config.name", "must be a non-empty file stem");
  }

  if (root.has("system")) {
    ObjectReader s(root.at("system"), "config.system");
    cfg.system.kind = s.string("kind", cfg.system.kind);
    if (cfg.system.kind == "three_level") {
      cfg.system.omega_1 = s.number("omega_1", cfg.system.omega_1);
      cfg.system.omega_2 = s.number("omega_2", cfg.system.omega_2);
    } else if (cfg.system.kind == "explicit") {
      cfg.system.spec.hamiltonian = complex_matrix(s.at("hamiltonian"), s.path("hamiltonian"));
      const Json& ops = s.at("coupling_ops");
      if (!ops.is_array()) fail(s.path("coupling_ops"), "expected an array of matrices");
      for (std::size_t k = 0; k < ops.size(); ++k) {
        cfg.system.spec.coupling_ops.push_back(
            complex_matrix(ops[k], s.path("coupling_ops") + "[" + std::to_string(k) + "]"));
      }
      try {
        cfg.system.spec.validate();
      } catch (const Error& e) {
        fail("config.system", e.what());
      }
    } else if (cfg.system.kind == "random") {
      cfg.system.seed = s.u64("seed", cfg.system.seed);
      cfg.system.index = s.u64("index", cfg.system.index);
      cfg.system.shape.levels = static_cast<int>(s.integer("levels", cfg.system.shape.levels));
      cfg.system.shape.channels = static_cast<int>(s.integer("channels", cfg.system.shape.channels));
      cfg.system.shape.modes = static_cast<int>(s.integer("modes", cfg.system.shape.modes));
      if (cfg.system.shape.levels < 2 || cfg.system.shape.channels < 1 || cfg.system.shape.modes < 1) {
        fail("config.system", "random shape needs levels >= 2, channels >= 1, modes >= 1");
      }
    } else {
      fail(s.path("kind"), "must be three_level, explicit or random");
    }
    s.finish();
  }

  if (root.has("bath")) {
    ObjectReader b(root.at("bath"), "config.bath");
    cfg.bath.kind = b.string("kind", cfg.bath.kind);
    if (cfg.bath.kind == "lorentzian") {
      cfg.bath.lorentzian.g = b.number("g", cfg.bath.lorentzian.g);
      cfg.bath.lorentzian.omega_m = b.number("omega_m", cfg.bath.lorentzian.omega_m);
      cfg.bath.lorentzian.kappa = b.number("kappa", cfg.bath.lorentzian.kappa);
      if (!(cfg.bath.lorentzian.kappa > 0.0)) fail(b.path("kappa"), "must be positive");
    } else if (cfg.bath.kind == "network") {
      cfg.bath.network.omega = real_matrix(b.at("omega"), b.path("omega"));
      const auto kappa = b.numbers("kappa");
      cfg.bath.network.kappa = Eigen::Map<const RealVector>(kappa.data(), static_cast<Eigen::Index>(kappa.size()));
      cfg.bath.network.g = real_matrix(b.at("g"), b.path("g"));
      try {
        cfg.bath.network.validate();
      } catch (const Error& e) {
        fail("config.bath", e.what());
      }
    } else if (cfg.bath.kind == "random") {
      if (cfg.system.kind != "random") fail(b.path("kind"), "random bath needs a random system");
    } else {
      fail(b.path("kind"), "must be lorentzian, network or random");
    }
    cfg.bath.scale = b.number("scale", cfg.bath.scale);
    if (!(cfg.bath.scale > 0.0)) fail(b.path("scale"), "must be positive");
    b.finish();
  } else if (cfg.system.kind == "random") {
    cfg.bath.kind = "random";
  }

  if (root.has("methods")) cfg.methods = root.strings("methods");
  if (root.has("cluster_width")) {
    cfg.cluster_width = root.number("cluster_width");
    if (!(*cfg.cluster_width > 0.0)) fail("config.cluster_width", "must be positive");
  }
  if (root.has("secular_cutoff")) {
    cfg.secular_cutoff = root.number("secular_cutoff");
    if (!(*cfg.secular_cutoff >= 0.0)) fail("config.secular_cutoff", "must be non-negative");
  }
  for (const auto& m : cfg.methods) {
    try {
      if (!parse_method(m).exact) (void)scenario_prescription(cfg, m);
    } catch (const Error& e) {
      fail("config.methods", e.what());
    }
  }

  if (root.has("initial_state")) {
    ObjectReader s(root.at("initial_state"), "config.initial_state");
    if (s.has("level")) {
      cfg.initial_kind = "level";
      cfg.initial_level = static_cast<int>(s.integer("level"));
    } else if (s.has("random")) {
      if (!s.boolean("random", false)) fail(s.path("random"), "only true is meaningful");
      if (cfg.system.kind != "random") fail(s.path("random"), "needs a random system");
      cfg.initial_kind = "random";
    } else {
      const auto re = s.numbers("amplitudes");
      std::vector<double> im(re.size(), 0.0);
      if (s.has("imag")) im = s.numbers("imag");
      if (im.size() != re.size()) fail(s.path("imag"), "length differs from amplitudes");
      cfg.initial_amplitudes = ComplexVector(static_cast<Eigen::Index>(re.size()));
      for (std::size_t k = 0; k < re.size(); ++k) {
        cfg.initial_amplitudes(static_cast<Eigen::Index>(k)) = Complex(re[k], im[k]);
      }
    }
    s.finish();
  } else if (cfg.system.kind == "random") {
    cfg.initial_kind = "random";
  } else {
    cfg.initial_kind = "level";
    cfg.initial_level = 0;
  }

  if (root.has("time_grid")) {
    ObjectReader t(root.at("time_grid"), "config.time_grid");
    cfg.grid.t_start = t.number("t_start", 0.0);
    cfg.grid.t_end = t.number("t_end");
    cfg.grid.n_steps = t.integer("n_steps");
    t.finish();
    try {
      cfg.grid.validate();
    } catch (const Error& e) {
      fail("config.time_grid", e.what());
    }
  }

  if (root.has("sweep")) {
    ObjectReader s(root.at("sweep"), "config.sweep");
    cfg.sweep.parameter = s.string("parameter");
    if (cfg.sweep.parameter != "g" && cfg.sweep.parameter != "delta" && cfg.sweep.parameter != "factor") {
      fail(s.path("parameter"), "must be g, delta or factor");
    }
    if (cfg.sweep.parameter == "g" && cfg.bath.kind != "lorentzian") {
      fail(s.path("parameter"), "a g sweep needs a lorentzian bath");
    }
    if (cfg.sweep.parameter == "delta" && (cfg.system.kind != "three_level" || cfg.bath.kind != "lorentzian")) {
      fail(s.path("parameter"), "a delta sweep needs the three_level system and a lorentzian bath");
    }
    cfg.sweep.values = s.numbers("values");
    if (cfg.sweep.values.empty()) fail(s.path("values"), "must not be empty");
    s.finish();
  }

  if (root.has("exact")) {
    ObjectReader e(root.at("exact"), "config.exact");
    cfg.exact_n_max = static_cast<int>(e.integer("n_max", cfg.exact_n_max));
    cfg.exact_truncation = parse_truncation(e.string("truncation", truncation_name(cfg.exact_truncation)),
                                            e.path("truncation"));
    cfg.exact_max_retries = static_cast<int>(e.integer("max_retries", cfg.exact_max_retries));
    cfg.exact_dimension_cap = e.integer("dimension_cap", cfg.exact_dimension_cap);
    if (cfg.exact_n_max < 1 || cfg.exact_max_retries < 0 || cfg.exact_dimension_cap < 1) {
      fail("config.exact", "n_max >= 1, max_retries >= 0, dimension_cap >= 1 required");
    }
    e.finish();
  }

  if (root.has("integrator")) {
    ObjectReader g(root.at("integrator"), "config.integrator");
    cfg.integrator.tolerance = g.number("tolerance", cfg.integrator.tolerance);
    cfg.integrator.max_refinement = static_cast<int>(g.integer("max_refinement", cfg.integrator.max_refinement));
    if (!(cfg.integrator.tolerance > 0.0) || cfg.integrator.max_refinement < 0) {
      fail("config.integrator", "tolerance > 0 and max_refinement >= 0 required");
    }
    g.finish();
  }

  if (root.has("outputs")) {
    ObjectReader o(root.at("outputs"), "config.outputs");
    cfg.outputs.trajectories = o.boolean("trajectories", cfg.outputs.trajectories);
    if (o.has("phases")) {
      const Json& ph = o.at("phases");
      if (!ph.is_array()) fail(o.path("phases"), "expected [[row, col], ...]");
      for (const auto& e : ph) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
          fail(o.path("phases"), "expected [[row, col], ...]");
        }
        cfg.outputs.phases.emplace_back(e[0].get<int>(), e[1].get<int>());
      }
    }
    if (o.has("lifetime_level")) cfg.outputs.lifetime_level = static_cast<int>(o.integer("lifetime_level"));
    if (o.has("lifetime_window")) {
      const auto w = o.numbers("lifetime_window");
      if (w.size() != 2 || !(w[0] > 0.0) || !(w[1] > w[0]) || !(w[1] <= 1.0)) {
        fail(o.path("lifetime_window"), "expected [lo, hi] with 0 < lo < hi <= 1");
      }
      cfg.outputs.lifetime_lo = w[0];
      cfg.outputs.lifetime_hi = w[1];
    }
    if (o.has("spectra")) {
      ObjectReader sp(o.at("spectra"), o.path("spectra"));
      cfg.outputs.spectra_min = sp.number("omega_min", cfg.outputs.spectra_min);
      cfg.outputs.spectra_max = sp.number("omega_max", cfg.outputs.spectra_max);
      cfg.outputs.spectra_points = static_cast<int>(sp.integer("points"));
      if (*cfg.outputs.spectra_points < 1) fail(sp.path("points"), "must be >= 1");
      if (!(cfg.outputs.spectra_max > cfg.outputs.spectra_min) && *cfg.outputs.spectra_points > 1) {
        fail(o.path("spectra"), "omega_max must exceed omega_min");
      }
      sp.finish();
    }
    o.finish();
  }
  root.finish();
  return cfg;
}

inline EnsembleConfig parse_ensemble(const Json& j, std::string* name = nullptr) {
  using namespace config_detail;
  EnsembleConfig cfg;
  ObjectReader root(j, "config");
  const std::string n = root.string("name", "ensemble");
  if (n.empty() || n.find_first_of("/\\") != std::string::npos) fail("config.name", "must be a non-empty file stem");
  if (name) *name = n;
  cfg.n_systems = static_cast<int>(root.integer("n_systems", cfg.n_systems));
  cfg.seed = root.u64("seed", cfg.seed);
  cfg.threads = static_cast<int>(root.integer("threads", cfg.threads));
  if (root.has("shape")) {
    ObjectReader s(root.at("shape"), "config.shape");
    cfg.shape.levels = static_cast<int>(s.integer("levels", cfg.shape.levels));
    cfg.shape.channels = static_cast<int>(s.integer("channels", cfg.shape.channels));
    cfg.shape.modes = static_cast<int>(s.integer("modes", cfg.shape.modes));
    s.finish();
  }
  if (root.has("strength_factors") && root.has("factor_range")) {
    fail("config", "give strength_factors or factor_range, not both");
  }
  if (root.has("strength_factors")) cfg.strength_factors = root.numbers("strength_factors");
  if (root.has("factor_range")) {
    ObjectReader r(root.at("factor_range"), "config.factor_range");
    const double lo = r.number("min"), hi = r.number("max");
    const long count = r.integer("count");
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) fail("config.factor_range", "need 0 < min <= max, count >= 1");
    cfg.strength_factors = log_spaced(lo, hi, static_cast<int>(count));
    r.finish();
  }
  cfg.baseline_factor = root.number("baseline_factor", cfg.baseline_factor);
  if (root.has("horizon")) {
    ObjectReader h(root.at("horizon"), "config.horizon");
    cfg.horizon.kind = h.string("kind", cfg.horizon.kind);
    cfg.horizon.multiplier = h.number("multiplier", cfg.horizon.multiplier);
    cfg.horizon.t_min = h.number("t_min", cfg.horizon.t_min);
    cfg.horizon.t_max = h.number("t_max", cfg.horizon.t_max);
    cfg.horizon.fixed = h.number("fixed", cfg.horizon.fixed);
    h.finish();
  }
  cfg.n_steps = root.integer("n_steps", cfg.n_steps);
  if (root.has("methods")) cfg.methods = root.strings("methods");
  if (root.has("eigen_methods")) cfg.eigen_methods = root.strings("eigen_methods");
  if (root.has("exact")) {
    ObjectReader e(root.at("exact"), "config.exact");
    cfg.exact_n_max = static_cast<int>(e.integer("n_max", cfg.exact_n_max));
    cfg.exact_truncation = parse_truncation(e.string("truncation", truncation_name(cfg.exact_truncation)),
                                            e.path("truncation"));
    cfg.exact_max_retries = static_cast<int>(e.integer("max_retries", cfg.exact_max_retries));
    cfg.exact_dimension_cap = e.integer("dimension_cap", cfg.exact_dimension_cap);
    e.finish();
  }
  if (root.has("integrator")) {
    ObjectReader g(root.at("integrator"), "config.integrator");
    cfg.integrator.tolerance = g.number("tolerance", cfg.integrator.tolerance);
    cfg.integrator.max_refinement = static_cast<int>(g.integer("max_refinement", cfg.integrator.max_refinement));
    g.finish();
  }
  root.finish();
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail("config", e.what());
  }
  return cfg;
}

inline Json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
}

}  // namespace lindblad_forge
