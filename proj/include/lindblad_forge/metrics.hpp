#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "lindblad_forge/propagator.hpp"

namespace lindblad_forge {

/// Trapezoidal mean of samples on a uniform grid over [t_start, t_end].
inline double trapezoid_average(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "trapezoid_average: no samples");
  if (values.size() == 1) return values.front();
  double acc = 0.5 * (values.front() + values.back());
  for (std::size_t k = 1; k + 1 < values.size(); ++k) acc += values[k];
  return acc / static_cast<double>(values.size() - 1);
}

struct DeviationSeries {
  TimeGrid grid;
  std::vector<double> values;  // ‖ρ_a(t) − ρ_b(t)‖_F per stored step
  double time_average = 0.0;
};

/// Time-averaged Frobenius distance between two trajectories on the same grid.
inline DeviationSeries deviation(const Trajectory& a, const Trajectory& b) {
  if (!(a.grid == b.grid) || a.states.size() != b.states.size() || !a.complete() ||
      !b.complete()) {
    throw Error(ErrorCode::GridMismatch, "deviation needs two complete trajectories on one grid");
  }
  DeviationSeries out;
  out.grid = a.grid;
  out.values.reserve(a.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    out.values.push_back(frobenius_distance(a.states[k], b.states[k]));
  }
  out.time_average = trapezoid_average(out.values);
  return out;
}

struct GeoMeanLog {
  double geo_mean = 0.0;
  std::optional<double> log10_std;  // population standard deviation; empty for n < 2
};

inline GeoMeanLog geo_mean_log(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::NonPositiveValue, "geo_mean_log: no values");
  double sum_ln = 0.0;
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::NonPositiveValue, "geo_mean_log: values must be positive and finite");
    }
    sum_ln += std::log(v);
  }
  const double n = static_cast<double>(values.size());
  GeoMeanLog out;
  out.geo_mean = std::exp(sum_ln / n);
  if (values.size() >= 2) {
    const double mean10 = sum_ln / n / std::log(10.0);
    double var = 0.0;
    for (double v : values) {
      const double d = std::log10(v) - mean10;
      var += d * d;
    }
    out.log10_std = std::sqrt(var / n);
  }
  return out;
}

struct Diagnostics {
  double hermiticity_defect = 0.0;
  double min_population = 0.0;  // smallest real diagonal entry
  double min_eigenvalue = 0.0;  // of the Hermitian part
  double trace_error = 0.0;     // |Tr X − 1|
};

inline Diagnostics diagnose(const ComplexMatrix& m) {
  require_square(m, "diagnose input");
  Diagnostics d;
  d.hermiticity_defect = hermiticity_defect(m);
  d.min_population = m.diagonal().real().minCoeff();
  d.min_eigenvalue = min_eigenvalue_hermitian_part(m);
  d.trace_error = std::abs(m.trace() - Complex(1.0, 0.0));
  return d;
}

/// Phase of a complex series with 2π jumps removed.
inline std::vector<double> unwrapped_phase(const std::vector<Complex>& series) {
  std::vector<double> out;
  out.reserve(series.size());
  double offset = 0.0;
  double previous = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double raw = std::arg(series[k]);
    if (k > 0) {
      double step = raw - previous;
      if (step > kPi) offset -= 2.0 * kPi;
      if (step < -kPi) offset += 2.0 * kPi;
    }
    previous = raw;
    out.push_back(raw + offset);
  }
  return out;
}

struct LifetimeFit {
  double lifetime = std::numeric_limits<double>::infinity();  // eV⁻¹
  double rate = 0.0;                                          // eV
  int points = 0;
};

/// Log-linear least squares of y(t) over the samples with y ∈ [lo, hi]·y(0). Returns an
/// infinite lifetime when fewer than two samples fall in the window (no decay seen).
inline LifetimeFit fit_lifetime(const std::vector<double>& times, const std::vector<double>& y,
                                double lo = 0.05, double hi = 0.5) {
  if (times.size() != y.size() || y.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "fit_lifetime: series lengths differ");
  }
  const double y0 = y.front();
  double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (y[k] >= lo * y0 && y[k] <= hi * y0 && y[k] > 0.0) {
      const double l = std::log(y[k]);
      st += times[k];
      sl += l;
      stt += times[k] * times[k];
      stl += times[k] * l;
      ++n;
    }
  }
  LifetimeFit fit;
  fit.points = n;
  if (n < 2) return fit;
  const double denom = n * stt - st * st;
  if (denom <= 0.0) return fit;
  const double slope = (n * stl - st * sl) / denom;
  fit.rate = -slope;
  fit.lifetime = slope < 0.0 ? -1.0 / slope : std::numeric_limits<double>::infinity();
  return fit;
}

}  // namespace lindblad_forge
