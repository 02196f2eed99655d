#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lindblad_forge/exact.hpp"
#include "lindblad_forge/instance.hpp"
#include "lindblad_forge/methods.hpp"
#include "lindblad_forge/metrics.hpp"

namespace lindblad_forge {

/// How the simulated window T is chosen per instance and strength factor.
/// "j11_lowest": T = multiplier / (2π J_11(ω_min)), ω_min the lowest positive transition
/// frequency; "min_rate" / "max_rate": multiplier over the smallest / largest golden-rule
/// rate Γ_jj(ω_j); "fixed": T = fixed. All but "fixed" are clamped to [t_min, t_max].
struct HorizonRule {
  std::string kind = "j11_lowest";
  double multiplier = 10.0;
  double t_min = 1e2;
  double t_max = 1e9;
  double fixed = 1e4;

  void validate() const {
    if (kind != "j11_lowest" && kind != "min_rate" && kind != "max_rate" && kind != "fixed") {
      throw Error(ErrorCode::InvalidArgument,
                  "horizon kind must be j11_lowest, min_rate, max_rate or fixed");
    }
    if (!(multiplier > 0.0) || !(t_min > 0.0) || !(t_max >= t_min) || !(fixed > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "horizon parameters must be positive, t_max >= t_min");
    }
  }

  double horizon(const TransitionTable& table, const SpectralModel& bath) const {
    if (kind == "fixed") return fixed;
    double rate = 0.0;
    if (kind == "j11_lowest") {
      double w_min = 0.0;
      for (const auto& t : table.transitions) {
        if (t.frequency > 0.0 && (w_min == 0.0 || t.frequency < w_min)) w_min = t.frequency;
      }
      if (w_min > 0.0) rate = eval_gamma(bath, w_min)(0, 0).real();
    } else {
      const auto [lo, hi] = golden_rule_rate_range(table, bath);
      rate = kind == "min_rate" ? lo : hi;
    }
    if (!(rate > 0.0)) return t_max;
    return std::clamp(multiplier / rate, t_min, t_max);
  }
};

inline std::vector<double> log_spaced(double lo, double hi, int count) {
  std::vector<double> out;
  if (count == 1) return {lo};
  for (int k = 0; k < count; ++k) {
    const double e = std::log10(lo) + (std::log10(hi) - std::log10(lo)) * k / (count - 1);
    out.push_back(std::pow(10.0, e));
  }
  return out;
}

struct EnsembleConfig {
  int n_systems = 200;
  InstanceShape shape;
  std::vector<double> strength_factors = log_spaced(0.1, 1e3, 7);
  double baseline_factor = 1.0;  // for the Kossakowski eigenvalue statistics
  HorizonRule horizon;
  long n_steps = 1000;
  std::uint64_t seed = 1234321;
  int threads = 1;
  std::vector<std::string> methods = {"BRE", "BRE+", "aLaG", "aLaG+", "aLgG", "aLgG+"};
  std::vector<std::string> eigen_methods = {"BRE", "aLaG", "aLgG"};
  int exact_n_max = 2;
  FockTruncation exact_truncation = FockTruncation::TotalExcitation;
  int exact_max_retries = 2;
  Eigen::Index exact_dimension_cap = 4096;
  IntegratorOptions integrator;

  void validate() const {
    if (n_systems < 1) throw Error(ErrorCode::InvalidArgument, "n_systems must be >= 1");
    if (strength_factors.empty()) throw Error(ErrorCode::InvalidArgument, "no strength factors");
    for (double f : strength_factors) {
      if (!(f > 0.0)) throw Error(ErrorCode::InvalidArgument, "strength factors must be positive");
    }
    if (!(baseline_factor > 0.0)) throw Error(ErrorCode::InvalidArgument, "baseline_factor must be positive");
    if (n_steps < 1) throw Error(ErrorCode::InvalidArgument, "n_steps must be >= 1");
    if (methods.empty() && eigen_methods.empty()) {
      throw Error(ErrorCode::InvalidArgument, "no methods and no eigen_methods");
    }
    for (const auto& m : methods) {
      if (parse_method(m).exact) throw Error(ErrorCode::InvalidArgument, "Exact is the reference, not a method");
    }
    for (const auto& m : eigen_methods) (void)Prescription::parse(m);
    horizon.validate();
  }
};

struct CellResult {
  std::optional<double> deviation;  // set only for aggregated (unflagged) runs
  bool diverged = false;
  bool skipped = false;
  std::string flag;  // reason when diverged or skipped
};

struct EigenResult {
  std::vector<double> normalized;  // ascending, divided by the largest eigenvalue
  double largest = 0.0;            // eV, at the baseline factor
  double defect = 0.0;             // pre-Hermitianization defect
  bool degenerate = false;         // largest eigenvalue <= 0
};

struct InstanceResult {
  int index = 0;
  std::vector<double> horizons;   // per factor, eV⁻¹
  std::vector<int> exact_n_max;   // per factor; 0 when the exact run failed
  std::vector<std::vector<CellResult>> cells;  // [factor][method]
  std::vector<EigenResult> eigen;              // per eigen method
};

struct AggregateRow {
  double factor = 0.0;
  std::string method;
  std::optional<double> geo_mean;
  std::optional<double> log10_std;
  int aggregated = 0;
  int diverged = 0;
  int skipped = 0;
};

struct HistogramRow {
  std::string method;
  int rank = 0;
  double bin_edge = 0.0;  // signed edge closest to zero: ±10^a for the bin [10^a, 10^(a+w))
  int count = 0;
};

struct EigenSummary {
  std::string method;
  int instances = 0;
  int degenerate = 0;
  double median_min_over_max = 0.0;     // median of |λ_min| / λ_max
  double median_most_negative = 0.0;    // median of min(normalized eigenvalues, 0)
  double max_defect = 0.0;
};

struct EnsembleReport {
  EnsembleConfig config;
  std::vector<InstanceResult> instances;
  std::vector<AggregateRow> aggregates;
  std::vector<HistogramRow> histograms;
  std::vector<EigenSummary> eigen_summaries;
  double histogram_decades_min = -12.0;
  double histogram_decades_max = 2.0;
  double histogram_bin_width = 0.25;
};

inline EigenResult kossakowski_eigen(const TransitionTable& table, const SpectralModel& bath,
                                     const Prescription& p) {
  const MasterEquation me = build_prescription(table, bath, p);
  EigenResult out;
  out.defect = me.kossakowski_defect;
  const HermitianEig eig = herm_eig(me.kossakowski);
  out.largest = eig.values.size() > 0 ? eig.values(eig.values.size() - 1) : 0.0;
  if (!(out.largest > 0.0)) {
    out.degenerate = true;
    return out;
  }
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) out.normalized.push_back(eig.values(k) / out.largest);
  return out;
}

/// All methods and factors for one random instance. Numeric failures become flags.
inline InstanceResult run_instance(const EnsembleConfig& cfg, int index) {
  RngStream rng = RngStream::substream(cfg.seed, static_cast<std::uint64_t>(index));
  const RandomInstance inst = gen_instance(rng, cfg.shape);
  const TransitionTable table = make_transition_table(inst.system);
  const SpectralModel base = SpectralModel::network(inst.network);
  const ComplexMatrix rho0 = inst.rho0();

  InstanceResult out;
  out.index = index;
  const std::size_t nm = cfg.methods.size();

  for (const auto& name : cfg.eigen_methods) {
    try {
      out.eigen.push_back(
          kossakowski_eigen(table, SpectralModel::scaled(base, cfg.baseline_factor), Prescription::parse(name)));
    } catch (const Error&) {
      EigenResult bad;
      bad.degenerate = true;
      out.eigen.push_back(bad);
    }
  }

  if (nm == 0) return out;  // eigenvalue statistics only
  int start_n_max = cfg.exact_n_max;
  for (double factor : cfg.strength_factors) {
    const SpectralModel bath = SpectralModel::scaled(base, factor);
    const double t_end = cfg.horizon.horizon(table, bath);
    const TimeGrid grid{0.0, t_end, cfg.n_steps};
    out.horizons.push_back(t_end);
    std::vector<CellResult> row(nm);

    ExactModel em;
    em.system = inst.system;
    em.network = to_network(bath);
    em.n_max = start_n_max;
    em.truncation = cfg.exact_truncation;
    em.max_retries = cfg.exact_max_retries;
    em.dimension_cap = cfg.exact_dimension_cap;
    std::optional<Trajectory> exact;
    std::string exact_flag;
    try {
      ExactRun run = exact_run(em, rho0, grid, cfg.integrator);
      // Factors ascend in the usual configs; a truncation that was needed once is kept.
      start_n_max = std::max(start_n_max, run.n_max);
      out.exact_n_max.push_back(run.n_max);
      if (run.trajectory.diverged || !run.trajectory.complete()) {
        exact_flag = "exact: " + run.trajectory.divergence_reason;
      } else {
        exact = std::move(run.trajectory);
      }
    } catch (const Error& e) {
      out.exact_n_max.push_back(0);
      exact_flag = std::string("exact: ") + e.what();
    }

    for (std::size_t k = 0; k < nm; ++k) {
      CellResult& cell = row[k];
      if (!exact) {
        cell.skipped = true;
        cell.flag = exact_flag;
        continue;
      }
      try {
        const Method method = parse_method(cfg.methods[k]);
        const Superoperator gen = method_generator(method.prescription, table, bath);
        IntegratorOptions opts = cfg.integrator;
        opts.record_diagnostics = false;
        const Trajectory traj = integrate(gen, rho0, grid, opts);
        if (traj.diverged || !traj.complete()) {
          cell.diverged = true;
          cell.flag = traj.divergence_reason;
          continue;
        }
        const double d = deviation(*exact, traj).time_average;
        if (!(d > 0.0) || !std::isfinite(d)) {
          cell.skipped = true;
          cell.flag = "non-positive deviation";
          continue;
        }
        cell.deviation = d;
      } catch (const Error& e) {
        cell.skipped = true;
        cell.flag = e.what();
      }
    }
    out.cells.push_back(std::move(row));
  }
  return out;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Signed-log histograms of the normalized eigenvalues, per method and rank, plus summaries.
inline void eigenvalue_stats(EnsembleReport& report) {
  report.histograms.clear();
  report.eigen_summaries.clear();
  const double lo = report.histogram_decades_min;
  const double w = report.histogram_bin_width;
  const int bins = static_cast<int>(std::llround((report.histogram_decades_max - lo) / w));
  for (std::size_t m = 0; m < report.config.eigen_methods.size(); ++m) {
    EigenSummary summary;
    summary.method = Prescription::parse(report.config.eigen_methods[m]).name();
    std::vector<double> ratios, negatives;
    // counts[rank][sign][bin], sign 0 negative, 1 positive
    std::vector<std::array<std::vector<int>, 2>> counts;
    for (const auto& inst : report.instances) {
      const EigenResult& e = inst.eigen[m];
      summary.max_defect = std::max(summary.max_defect, e.defect);
      if (e.degenerate) {
        ++summary.degenerate;
        continue;
      }
      ++summary.instances;
      ratios.push_back(std::abs(e.normalized.front()));
      negatives.push_back(std::min(e.normalized.front(), 0.0));
      if (counts.size() < e.normalized.size()) {
        counts.resize(e.normalized.size(), {std::vector<int>(bins, 0), std::vector<int>(bins, 0)});
      }
      for (std::size_t r = 0; r < e.normalized.size(); ++r) {
        const double x = e.normalized[r];
        const int sign = x < 0.0 ? 0 : 1;
        const double mag = std::abs(x);
        int bin = mag > 0.0 ? static_cast<int>(std::floor((std::log10(mag) - lo) / w)) : 0;
        bin = std::clamp(bin, 0, bins - 1);
        ++counts[r][static_cast<std::size_t>(sign)][static_cast<std::size_t>(bin)];
      }
    }
    summary.median_min_over_max = median(ratios);
    summary.median_most_negative = median(negatives);
    for (std::size_t r = 0; r < counts.size(); ++r) {
      // Negative half-axis from −10^max down to −10^min, then the positive one upwards.
      for (int b = bins - 1; b >= 0; --b) {
        const int c = counts[r][0][static_cast<std::size_t>(b)];
        if (c > 0) report.histograms.push_back({summary.method, static_cast<int>(r), -std::pow(10.0, lo + b * w), c});
      }
      for (int b = 0; b < bins; ++b) {
        const int c = counts[r][1][static_cast<std::size_t>(b)];
        if (c > 0) report.histograms.push_back({summary.method, static_cast<int>(r), std::pow(10.0, lo + b * w), c});
      }
    }
    report.eigen_summaries.push_back(summary);
  }
}

inline void aggregate(EnsembleReport& report) {
  report.aggregates.clear();
  const auto& cfg = report.config;
  for (std::size_t f = 0; f < cfg.strength_factors.size(); ++f) {
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      AggregateRow row;
      row.factor = cfg.strength_factors[f];
      row.method = parse_method(cfg.methods[m]).name;
      std::vector<double> values;
      for (const auto& inst : report.instances) {
        const CellResult& c = inst.cells[f][m];
        if (c.deviation) {
          values.push_back(*c.deviation);
        } else if (c.diverged) {
          ++row.diverged;
        } else {
          ++row.skipped;
        }
      }
      row.aggregated = static_cast<int>(values.size());
      if (!values.empty()) {
        const GeoMeanLog g = geo_mean_log(values);
        row.geo_mean = g.geo_mean;
        row.log10_std = g.log10_std;
      }
      report.aggregates.push_back(row);
    }
  }
}

/// Runs every instance (in parallel when threads > 1) and reduces in index order, so the
/// report does not depend on scheduling.
inline EnsembleReport run_ensemble(const EnsembleConfig& cfg) {
  cfg.validate();
  EnsembleReport report;
  report.config = cfg;
  report.instances.resize(static_cast<std::size_t>(cfg.n_systems));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&]() {
    while (!failed.load()) {
      const int i = next.fetch_add(1);
      if (i >= cfg.n_systems) return;
      try {
        report.instances[static_cast<std::size_t>(i)] = run_instance(cfg, i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  const int threads = std::max(1, std::min(cfg.threads, cfg.n_systems));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  aggregate(report);
  eigenvalue_stats(report);
  return report;
}

}  // namespace lindblad_forge
