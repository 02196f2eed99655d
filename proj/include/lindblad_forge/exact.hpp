#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "lindblad_forge/bath.hpp"
#include "lindblad_forge/propagator.hpp"
#include "lindblad_forge/system.hpp"

namespace lindblad_forge {

/// PerMode keeps n_β ≤ n_max for every mode; TotalExcitation keeps Σ_β n_β ≤ n_max,
/// which is far smaller for N ≥ 2 at the same accuracy in the weak-coupling regime.
enum class FockTruncation { PerMode, TotalExcitation };

struct ExactModel {
  SystemSpec system;
  PseudomodeNetwork network;
  int n_max = 3;
  FockTruncation truncation = FockTruncation::PerMode;
  Eigen::Index dimension_cap = 4096;
  int max_retries = 2;
  double layer_tolerance = 1e-6;  // allowed population in the highest Fock layer
};

/// Occupation-number basis of the truncated modes. Index 0 is the vacuum.
struct FockBasis {
  std::vector<std::vector<int>> states;
  std::map<std::vector<int>, int> index;
  std::vector<bool> top_layer;

  int size() const { return static_cast<int>(states.size()); }
};

inline FockBasis make_fock_basis(int modes, int n_max, FockTruncation truncation) {
  if (modes < 1 || n_max < 1) {
    throw Error(ErrorCode::InvalidArgument, "Fock basis needs at least one mode and n_max >= 1");
  }
  FockBasis basis;
  std::vector<int> occ(static_cast<std::size_t>(modes), 0);
  // Odometer over 0..n_max per mode, mode 0 most significant.
  std::vector<std::vector<int>> all;
  while (true) {
    all.push_back(occ);
    int k = modes - 1;
    while (k >= 0 && occ[static_cast<std::size_t>(k)] == n_max) {
      occ[static_cast<std::size_t>(k)] = 0;
      --k;
    }
    if (k < 0) break;
    ++occ[static_cast<std::size_t>(k)];
  }
  auto total = [](const std::vector<int>& o) {
    int s = 0;
    for (int x : o) s += x;
    return s;
  };
  if (truncation == FockTruncation::TotalExcitation) {
    std::vector<std::vector<int>> kept;
    for (const auto& o : all) {
      if (total(o) <= n_max) kept.push_back(o);
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [&](const auto& a, const auto& b) { return total(a) < total(b); });
    all = std::move(kept);
  }
  for (const auto& o : all) {
    const bool top = truncation == FockTruncation::TotalExcitation
                         ? total(o) == n_max
                         : std::find(o.begin(), o.end(), n_max) != o.end();
    basis.index.emplace(o, basis.size());
    basis.states.push_back(o);
    basis.top_layer.push_back(top);
  }
  return basis;
}

/// Annihilation operator of mode `beta` on the truncated basis.
inline ComplexMatrix annihilation(const FockBasis& basis, int beta) {
  const int n = basis.size();
  ComplexMatrix a = ComplexMatrix::Zero(n, n);
  for (int col = 0; col < n; ++col) {
    std::vector<int> occ = basis.states[static_cast<std::size_t>(col)];
    const int nb = occ[static_cast<std::size_t>(beta)];
    if (nb == 0) continue;
    occ[static_cast<std::size_t>(beta)] = nb - 1;
    a(basis.index.at(occ), col) = std::sqrt(static_cast<double>(nb));
  }
  return a;
}

inline Eigen::Index composite_dimension(const ExactModel& model) {
  return model.system.dim() *
         make_fock_basis(model.network.modes(), model.n_max, model.truncation).size();
}

/// Generator on system ⊗ modes:
/// H_sm = H + Σ Ω_βγ a_β†a_γ + Σ A_α g_αβ (a_β† + a_β), losses Σ κ_β D[a_β].
inline Superoperator build_exact(const ExactModel& model) {
  model.system.validate();
  model.network.validate();
  if (model.network.channels() != model.system.channels()) {
    throw Error(ErrorCode::DimensionMismatch, "network channels differ from coupling operators");
  }
  if (model.n_max < 1) throw Error(ErrorCode::InvalidArgument, "n_max must be >= 1");
  const FockBasis fock = make_fock_basis(model.network.modes(), model.n_max, model.truncation);
  const Eigen::Index ls = model.system.dim();
  const Eigen::Index lm = fock.size();
  if (ls * lm > model.dimension_cap) {
    throw Error(ErrorCode::DimensionCap, "composite dimension " + std::to_string(ls * lm) +
                                             " exceeds cap " + std::to_string(model.dimension_cap));
  }
  const ComplexMatrix id_s = ComplexMatrix::Identity(ls, ls);
  const ComplexMatrix id_m = ComplexMatrix::Identity(lm, lm);
  std::vector<ComplexMatrix> a;
  for (int b = 0; b < model.network.modes(); ++b) a.push_back(annihilation(fock, b));

  ComplexMatrix h_modes = ComplexMatrix::Zero(lm, lm);
  for (int b = 0; b < model.network.modes(); ++b) {
    for (int c = 0; c < model.network.modes(); ++c) {
      const double w = model.network.omega(b, c);
      if (w != 0.0) h_modes += w * a[static_cast<std::size_t>(b)].adjoint() * a[static_cast<std::size_t>(c)];
    }
  }
  ComplexMatrix h = kron(model.system.hamiltonian, id_m) + kron(id_s, h_modes);
  for (int alpha = 0; alpha < model.system.channels(); ++alpha) {
    ComplexMatrix field = ComplexMatrix::Zero(lm, lm);
    for (int b = 0; b < model.network.modes(); ++b) {
      const double g = model.network.g(alpha, b);
      if (g != 0.0) {
        field += g * (a[static_cast<std::size_t>(b)] + a[static_cast<std::size_t>(b)].adjoint());
      }
    }
    h += kron(model.system.coupling_ops[static_cast<std::size_t>(alpha)], field);
  }
  h = hermitian_part(h);

  ComplexMatrix gen = -kI * (left_multiplier(h) - right_multiplier(h));
  for (int b = 0; b < model.network.modes(); ++b) {
    const ComplexMatrix op = kron(id_s, a[static_cast<std::size_t>(b)]);
    const ComplexMatrix ndag = op.adjoint() * op;
    gen += model.network.kappa(b) *
           (sandwich(op, op.adjoint()) - 0.5 * left_multiplier(ndag) - 0.5 * right_multiplier(ndag));
  }
  return Superoperator::from_dense(gen);
}

struct ExactRun {
  Trajectory trajectory;         // reduced system states
  int n_max = 0;                 // truncation actually used
  double top_layer_population = 0.0;  // max over the stored steps
  int retries = 0;
};

/// Exact reduced dynamics with modes starting in vacuum. The truncation is raised by one
/// (up to max_retries times) while the highest Fock layer holds more than layer_tolerance.
inline ExactRun exact_run(const ExactModel& model, const ComplexMatrix& rho0_system,
                          const TimeGrid& grid, const IntegratorOptions& opts = {}) {
  if (opts.check_initial_state) check_density_matrix(rho0_system, true);
  ExactModel current = model;
  for (int attempt = 0;; ++attempt) {
    const FockBasis fock =
        make_fock_basis(current.network.modes(), current.n_max, current.truncation);
    const Superoperator gen = build_exact(current);
    const int lm = fock.size();
    const int ls = static_cast<int>(current.system.dim());
    ComplexMatrix vacuum = ComplexMatrix::Zero(lm, lm);
    vacuum(0, 0) = 1.0;
    const ComplexMatrix rho0 = kron(rho0_system, vacuum);
    const std::array<int, 2> dims{ls, lm};

    ExactRun run;
    run.n_max = current.n_max;
    run.retries = attempt;
    run.trajectory.grid = grid;
    IntegratorOptions inner = opts;
    inner.check_initial_state = false;
    propagate(
        gen, rho0, grid, inner,
        [&](long, const ComplexMatrix& rho) {
          double top = 0.0;
          for (int s = 0; s < ls; ++s) {
            for (int k = 0; k < lm; ++k) {
              if (fock.top_layer[static_cast<std::size_t>(k)]) top += rho(s * lm + k, s * lm + k).real();
            }
          }
          run.top_layer_population = std::max(run.top_layer_population, top);
          ComplexMatrix reduced = partial_trace(rho, dims, 0);
          if (opts.record_diagnostics) run.trajectory.diagnostics.push_back(step_diagnostics(reduced));
          run.trajectory.states.push_back(std::move(reduced));
        },
        run.trajectory.diverged, run.trajectory.divergence_reason, run.trajectory.substeps,
        run.trajectory.step_error);

    if (run.top_layer_population < current.layer_tolerance) return run;
    if (attempt >= current.max_retries) {
      throw Error(ErrorCode::TruncationUnconverged,
                  "highest Fock layer holds " + std::to_string(run.top_layer_population) +
                      " at n_max = " + std::to_string(current.n_max));
    }
    ++current.n_max;
  }
}

inline Trajectory exact_trajectory(const ExactModel& model, const ComplexMatrix& rho0_system,
                                   const TimeGrid& grid, const IntegratorOptions& opts = {}) {
  return exact_run(model, rho0_system, grid, opts).trajectory;
}

}  // namespace lindblad_forge
