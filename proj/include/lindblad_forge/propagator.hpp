#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lindblad_forge/superoperator.hpp"

namespace lindblad_forge {

/// Uniform output grid, times in eV⁻¹.
struct TimeGrid {
  double t_start = 0.0;
  double t_end = 1.0;
  long n_steps = 1;

  void validate() const {
    if (!(t_end > t_start) || !std::isfinite(t_start) || !std::isfinite(t_end)) {
      throw Error(ErrorCode::InvalidArgument, "TimeGrid needs finite t_end > t_start");
    }
    if (n_steps < 1) throw Error(ErrorCode::InvalidArgument, "TimeGrid needs n_steps >= 1");
  }
  double dt() const { return (t_end - t_start) / static_cast<double>(n_steps); }
  double at(long k) const { return t_start + dt() * static_cast<double>(k); }
  long points() const { return n_steps + 1; }
  bool operator==(const TimeGrid&) const = default;
};

struct StepDiagnostics {
  double trace_error = 0.0;         // |Tr ρ − 1|
  double min_eigenvalue = 0.0;      // of the Hermitian part
  double hermiticity_defect = 0.0;  // ‖ρ − ρ†‖_F
};

inline StepDiagnostics step_diagnostics(const ComplexMatrix& rho) {
  return {std::abs(rho.trace() - Complex(1.0, 0.0)), min_eigenvalue_hermitian_part(rho),
          hermiticity_defect(rho)};
}

struct Trajectory {
  TimeGrid grid;
  std::vector<ComplexMatrix> states;
  std::vector<StepDiagnostics> diagnostics;
  bool diverged = false;
  std::string divergence_reason;
  long substeps = 0;          // RK4 steps per output interval
  double step_error = 0.0;    // estimated error of one output interval

  bool complete() const { return static_cast<long>(states.size()) == grid.points(); }

  std::vector<Complex> element(Eigen::Index row, Eigen::Index col) const {
    std::vector<Complex> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s(row, col));
    return out;
  }

  double max_trace_error() const {
    double worst = 0.0;
    for (const auto& d : diagnostics) worst = std::max(worst, d.trace_error);
    return worst;
  }

  double min_eigenvalue() const {
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& d : diagnostics) lowest = std::min(lowest, d.min_eigenvalue);
    return lowest;
  }
};

struct IntegratorOptions {
  double tolerance = 1e-9;        // per output interval, relative to the propagator norm
  int max_refinement = 24;        // step halvings allowed beyond the initial guess
  Eigen::Index dense_limit = 2500;  // largest L² handled by the dense squaring path
  double divergence_bound = 10.0;   // ‖ρ‖_F above this counts as divergence
  bool check_initial_state = true;
  bool record_diagnostics = true;
};

namespace detail {

template <typename Matrix>
double norm1(const Matrix& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

// RK4 step map R(hL) − I, composed 2^m times. Keeping I + E split off preserves the
// small part of the map when h‖L‖ is tiny.
template <typename Matrix>
Matrix rk4_power_minus_identity(const Matrix& gen, double h, int m) {
  const Eigen::Index n = gen.rows();
  const Matrix a = h * gen;
  const Matrix id = Matrix::Identity(n, n);
  Matrix x = id + a / 4.0;
  x = id + (a * x) / 3.0;
  x = id + (a * x) / 2.0;
  Matrix e = a * x;
  Matrix sq(n, n);
  for (int k = 0; k < m; ++k) {
    sq.noalias() = e * e;
    e = 2.0 * e + sq;
  }
  return e;
}

inline void rk4_sparse_step(const SparseComplexMatrix& gen, double h, ComplexVector& v) {
  const ComplexVector k1 = gen * v;
  const ComplexVector k2 = gen * (v + 0.5 * h * k1);
  const ComplexVector k3 = gen * (v + 0.5 * h * k2);
  const ComplexVector k4 = gen * (v + h * k3);
  v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Orthonormal Hermitian basis of L×L matrices: E_ii, (E_ij + E_ji)/√2, i(E_ij − E_ji)/√2
// for i < j. In this basis a Hermiticity-preserving generator is a real matrix.
class HermitianCoordinates {
 public:
  explicit HermitianCoordinates(Eigen::Index dim) : dim_(dim) {}

  Eigen::Index dim() const { return dim_; }
  Eigen::Index size() const { return dim_ * dim_; }

  RealVector to_real(const ComplexVector& v) const {
    RealVector x(size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < dim_; ++i) x(k++) = v(i + i * dim_).real();
    for (Eigen::Index i = 0; i < dim_; ++i) {
      for (Eigen::Index j = i + 1; j < dim_; ++j) {
        const Complex a = v(i + j * dim_);  // ρ(i, j)
        const Complex b = v(j + i * dim_);  // ρ(j, i)
        x(k++) = (a + b).real() / std::sqrt(2.0);
        x(k++) = (b - a).imag() / std::sqrt(2.0);
      }
    }
    return x;
  }

  ComplexVector to_complex(const RealVector& x) const {
    ComplexVector v(size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < dim_; ++i) v(i + i * dim_) = x(k++);
    for (Eigen::Index i = 0; i < dim_; ++i) {
      for (Eigen::Index j = i + 1; j < dim_; ++j) {
        const double s = x(k++) / std::sqrt(2.0);
        const double a = x(k++) / std::sqrt(2.0);
        v(i + j * dim_) = Complex(s, -a);
        v(j + i * dim_) = Complex(s, a);
      }
    }
    return v;
  }

  /// B† L B, with B the basis above; `imag_defect` receives ‖Im(B† L B)‖_F.
  RealMatrix project(const ComplexMatrix& gen, double& imag_defect) const {
    const Eigen::Index n = size();
    ComplexMatrix lb(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
      RealVector e = RealVector::Zero(n);
      e(c) = 1.0;
      lb.col(c) = gen * to_complex(e);
    }
    ComplexMatrix out(n, n);
    for (Eigen::Index c = 0; c < n; ++c) out.col(c) = adjoint_apply(lb.col(c));
    imag_defect = out.imag().norm();
    return out.real();
  }

 private:
  // B† v without forming B.
  ComplexVector adjoint_apply(const ComplexVector& v) const {
    ComplexVector x(size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < dim_; ++i) x(k++) = v(i + i * dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) {
      for (Eigen::Index j = i + 1; j < dim_; ++j) {
        const Complex a = v(i + j * dim_);
        const Complex b = v(j + i * dim_);
        x(k++) = (a + b) / std::sqrt(2.0);
        x(k++) = kI * (a - b) / std::sqrt(2.0);
      }
    }
    return x;
  }

  Eigen::Index dim_;
};

}  // namespace detail

/// Fixed-step RK4 map over one output interval. Dense generators are composed by
/// repeated squaring (2^m equal steps), in real arithmetic when the generator preserves
/// Hermiticity; larger ones are stepped sparsely. The step is halved until two successive
/// refinements agree to the tolerance.
class IntervalPropagator {
 public:
  IntervalPropagator(const Superoperator& gen, double interval, const ComplexVector& probe,
                     const IntegratorOptions& opts = {})
      : sparse_(gen.matrix()), coords_(gen.dim()), interval_(interval), opts_(opts) {
    const Eigen::Index n = gen.matrix().rows();
    const double scale = sparse_norm1(gen.matrix());
    // First guess from the RK4 error model: per interval ≈ (Δt s)(h s)^4 / 120 with
    // s = ‖L‖₁ ≥ spectral radius; never coarser than h s = 1/2.
    int m0 = 0;
    const double ts = scale * interval;
    if (ts > 0.0) {
      const double hs = std::min(0.5, std::pow(120.0 * opts.tolerance / std::max(ts, 1e-300), 0.25));
      if (ts > hs) m0 = static_cast<int>(std::ceil(std::log2(ts / hs)));
    }
    m0 = std::min(m0, 50);
    if (n <= opts.dense_limit) {
      const ComplexMatrix dense(sparse_);
      double imag_defect = 0.0;
      RealMatrix real_gen = coords_.project(dense, imag_defect);
      if (imag_defect <= 1e-12 * std::max(1.0, real_gen.norm())) {
        real_ = build_dense(real_gen, m0);
      } else {
        complex_ = build_dense(dense, m0);
      }
    } else {
      build_sparse(m0, probe);
    }
  }

  bool converged() const { return converged_; }
  long substeps() const { return substeps_; }
  double error_estimate() const { return error_; }
  bool real_arithmetic() const { return real_.has_value(); }

  ComplexVector apply(const ComplexVector& v) const {
    if (real_) {
      // ρ = H + iA with H, A Hermitian; both evolve under the same real map.
      const ComplexVector vh = hermitian_vec(v, false);
      const ComplexVector va = hermitian_vec(v, true);
      RealVector xh = coords_.to_real(vh);
      RealVector xa = coords_.to_real(va);
      xh += (*real_) * xh;
      xa += (*real_) * xa;
      if (va.cwiseAbs().maxCoeff() == 0.0) return coords_.to_complex(xh);
      return coords_.to_complex(xh) + kI * coords_.to_complex(xa);
    }
    if (complex_) return v + (*complex_) * v;
    ComplexVector out = v;
    const double h = interval_ / static_cast<double>(substeps_);
    for (long s = 0; s < substeps_; ++s) detail::rk4_sparse_step(sparse_, h, out);
    return out;
  }

 private:
  // Hermitian part of the matrix behind v, or (anti = true) the Hermitian matrix A with
  // ρ = H + iA.
  ComplexVector hermitian_vec(const ComplexVector& v, bool anti) const {
    const ComplexMatrix rho = unvec(v, coords_.dim());
    if (anti) return vec((rho - rho.adjoint()) / (2.0 * kI));
    return vec(0.5 * (rho + rho.adjoint()));
  }

  static double sparse_norm1(const SparseComplexMatrix& m) {
    double best = 0.0;
    for (int k = 0; k < m.outerSize(); ++k) {
      double col = 0.0;
      for (SparseComplexMatrix::InnerIterator it(m, k); it; ++it) col += std::abs(it.value());
      best = std::max(best, col);
    }
    return best;
  }

  template <typename Matrix>
  Matrix build_dense(const Matrix& gen, int m0) {
    auto at_level = [&](int m) {
      return detail::rk4_power_minus_identity(gen, interval_ / std::ldexp(1.0, m), m);
    };
    int m = m0;
    Matrix coarse = at_level(m);
    for (int attempt = 0; attempt <= opts_.max_refinement && m < 60; ++attempt) {
      Matrix fine = at_level(m + 1);
      if (!fine.allFinite()) {
        ++m;
        coarse = std::move(fine);
        continue;
      }
      const double diff = detail::norm1(coarse - fine);
      const double scale = 1.0 + detail::norm1(fine);
      error_ = diff / scale;
      if (std::isfinite(diff) && error_ < opts_.tolerance) {
        converged_ = true;
        substeps_ = 1L << (m + 1);
        return fine;
      }
      // RK4 error falls by 16 per halving; jump straight to the predicted level.
      int jump = 1;
      if (std::isfinite(error_) && error_ > 0.0 && diff < scale) {
        jump = std::max(1, static_cast<int>(std::ceil(std::log2(error_ / opts_.tolerance) / 4.0)));
      }
      if (jump == 1) {
        m += 1;
        coarse = std::move(fine);
      } else {
        m += jump;
        coarse = at_level(m);
      }
    }
    converged_ = false;
    substeps_ = 1L << std::min(m, 62);
    return coarse;
  }

  void build_sparse(int m0, const ComplexVector& probe) {
    long s = 1L << std::min(m0, 40);
    auto run = [&](long steps) {
      ComplexVector v = probe;
      const double h = interval_ / static_cast<double>(steps);
      for (long k = 0; k < steps; ++k) detail::rk4_sparse_step(sparse_, h, v);
      return v;
    };
    ComplexVector coarse = run(s);
    for (int attempt = 0; attempt <= opts_.max_refinement; ++attempt) {
      ComplexVector fine = run(2 * s);
      const double diff = (coarse - fine).cwiseAbs().sum();
      const double scale = std::max(1.0, fine.cwiseAbs().sum());
      error_ = diff / scale;
      if (std::isfinite(diff) && error_ < opts_.tolerance) {
        converged_ = true;
        substeps_ = 2 * s;
        return;
      }
      s *= 2;
      coarse = std::move(fine);
    }
    converged_ = false;
    substeps_ = s;
  }

  SparseComplexMatrix sparse_;
  detail::HermitianCoordinates coords_;
  double interval_;
  IntegratorOptions opts_;
  std::optional<RealMatrix> real_;
  std::optional<ComplexMatrix> complex_;
  bool converged_ = false;
  long substeps_ = 0;
  double error_ = 0.0;
};

inline void check_density_matrix(const ComplexMatrix& rho, bool check_psd) {
  require_square(rho, "initial state");
  if (std::abs(rho.trace() - Complex(1.0, 0.0)) > 1e-10) {
    throw Error(ErrorCode::InvalidArgument, "initial state must have unit trace");
  }
  if (!is_hermitian(rho, 1e-10)) {
    throw Error(ErrorCode::InvalidArgument, "initial state must be Hermitian");
  }
  if (check_psd && min_eigenvalue(rho) < -1e-10) {
    throw Error(ErrorCode::InvalidArgument, "initial state must be positive semidefinite");
  }
}

/// Runs the propagation and hands every output state to `visit(k, state)`. Stops early
/// (and reports why) when the step control fails or the state blows up.
template <typename Visit>
void propagate(const Superoperator& gen, const ComplexMatrix& rho0, const TimeGrid& grid,
               const IntegratorOptions& opts, Visit&& visit, bool& diverged, std::string& reason,
               long& substeps, double& step_error) {
  grid.validate();
  if (rho0.rows() != gen.dim() || rho0.cols() != gen.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "initial state does not match the generator");
  }
  if (opts.check_initial_state) check_density_matrix(rho0, true);

  const Eigen::Index dim = gen.dim();
  ComplexVector v = vec(rho0);
  IntervalPropagator step(gen, grid.dt(), v, opts);
  substeps = step.substeps();
  step_error = step.error_estimate();
  diverged = false;
  reason.clear();
  if (!step.converged()) {
    diverged = true;
    reason = "MaxRefinement";
  }
  visit(0L, rho0);
  if (diverged) return;
  for (long k = 1; k <= grid.n_steps; ++k) {
    v = step.apply(v);
    if (!v.allFinite()) {
      diverged = true;
      reason = "non-finite state";
      return;
    }
    if (v.norm() > opts.divergence_bound) {
      diverged = true;
      reason = "state norm exceeded bound";
      return;
    }
    visit(k, unvec(v, dim));
  }
}

/// Density-matrix trajectory on `grid` with per-step diagnostics.
inline Trajectory integrate(const Superoperator& gen, const ComplexMatrix& rho0,
                            const TimeGrid& grid, const IntegratorOptions& opts = {}) {
  Trajectory traj;
  traj.grid = grid;
  traj.states.reserve(static_cast<std::size_t>(grid.points()));
  propagate(
      gen, rho0, grid, opts,
      [&](long, const ComplexMatrix& rho) {
        traj.states.push_back(rho);
        if (opts.record_diagnostics) traj.diagnostics.push_back(step_diagnostics(rho));
      },
      traj.diverged, traj.divergence_reason, traj.substeps, traj.step_error);
  return traj;
}

}  // namespace lindblad_forge
