#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lindblad_forge/linalg.hpp"

namespace lindblad_forge {

inline constexpr double kSpecHermitianTol = 1e-10;

/// System Hamiltonian (eV) plus the dimensionless operators A_α of H_sb = Σ_α A_α B_α.
struct SystemSpec {
  ComplexMatrix hamiltonian;
  std::vector<ComplexMatrix> coupling_ops;

  Eigen::Index dim() const { return hamiltonian.rows(); }
  int channels() const { return static_cast<int>(coupling_ops.size()); }

  void validate() const {
    require_square(hamiltonian, "SystemSpec hamiltonian");
    if (!all_finite(hamiltonian)) {
      throw Error(ErrorCode::InvalidArgument, "SystemSpec hamiltonian has non-finite entries");
    }
    if (hermiticity_defect(hamiltonian) > kSpecHermitianTol * std::max(1.0, hamiltonian.norm())) {
      throw Error(ErrorCode::NonHermitianInput, "SystemSpec hamiltonian is not Hermitian");
    }
    if (coupling_ops.empty()) {
      throw Error(ErrorCode::InvalidArgument, "SystemSpec needs at least one coupling operator");
    }
    for (const auto& a : coupling_ops) {
      if (a.rows() != dim() || a.cols() != dim()) {
        throw Error(ErrorCode::DimensionMismatch, "coupling operator shape differs from hamiltonian");
      }
      if (!all_finite(a)) {
        throw Error(ErrorCode::InvalidArgument, "coupling operator has non-finite entries");
      }
      if (hermiticity_defect(a) > kSpecHermitianTol * std::max(1.0, a.norm())) {
        throw Error(ErrorCode::NonHermitianInput, "coupling operator is not Hermitian");
      }
    }
  }
};

struct EigenData {
  RealVector energies;  // ascending, eV
  ComplexMatrix basis;  // columns are eigenvectors in the native basis
};

namespace detail {

// Rotates each eigenvector so that its largest component (lowest index on ties)
// is real and positive.
inline void fix_phases(ComplexMatrix& basis) {
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    const double peak = basis.col(c).cwiseAbs().maxCoeff();
    Eigen::Index pivot = 0;
    for (Eigen::Index r = 0; r < basis.rows(); ++r) {
      if (std::abs(basis(r, c)) >= peak * (1.0 - 1e-9)) {
        pivot = r;
        break;
      }
    }
    const Complex z = basis(pivot, c);
    if (std::abs(z) > 0.0) basis.col(c) *= std::conj(z) / std::abs(z);
  }
}

// Replaces the solver's arbitrary basis inside a degenerate block by a canonical one:
// project the standard basis vectors onto the block and Gram-Schmidt them, always
// taking the largest remaining residual (lowest index on ties).
inline void canonicalize_block(ComplexMatrix& basis, Eigen::Index start, Eigen::Index size) {
  const Eigen::Index n = basis.rows();
  const ComplexMatrix block = basis.middleCols(start, size);
  const ComplexMatrix projector = block * block.adjoint();
  std::vector<ComplexVector> candidates;
  candidates.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) candidates.emplace_back(projector.col(k));

  ComplexMatrix chosen(n, size);
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (Eigen::Index s = 0; s < size; ++s) {
    Eigen::Index best = -1;
    double best_norm = -1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (used[static_cast<std::size_t>(k)]) continue;
      ComplexVector r = candidates[static_cast<std::size_t>(k)];
      for (Eigen::Index p = 0; p < s; ++p) r -= chosen.col(p) * chosen.col(p).dot(r);
      const double norm = r.norm();
      if (norm > best_norm * (1.0 + 1e-9)) {
        best_norm = norm;
        best = k;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    ComplexVector r = candidates[static_cast<std::size_t>(best)];
    for (Eigen::Index p = 0; p < s; ++p) r -= chosen.col(p) * chosen.col(p).dot(r);
    chosen.col(s) = r / r.norm();
  }
  basis.middleCols(start, size) = chosen;
}

}  // namespace detail

/// Eigen-decomposition of H with a reproducible basis inside degenerate blocks.
inline EigenData diagonalize_system(const SystemSpec& spec, double degeneracy_tol = 1e-9) {
  require_square(spec.hamiltonian, "SystemSpec hamiltonian");
  if (hermiticity_defect(spec.hamiltonian) >
      kSpecHermitianTol * std::max(1.0, spec.hamiltonian.norm())) {
    throw Error(ErrorCode::NonHermitianInput, "diagonalize_system: hamiltonian is not Hermitian");
  }
  HermitianEig eig = herm_eig(spec.hamiltonian);
  ComplexMatrix basis = eig.vectors;
  const Eigen::Index n = eig.values.size();
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && eig.values(end) - eig.values(end - 1) <= degeneracy_tol) ++end;
    if (end - start > 1) detail::canonicalize_block(basis, start, end - start);
    start = end;
  }
  detail::fix_phases(basis);
  return {eig.values, basis};
}

/// σ_j = |n_j⟩⟨m_j| in the eigenbasis, ω_j = E_{m_j} − E_{n_j}, elements (A_α)_j = Tr{σ_j† A_α}.
struct Transition {
  int index = 0;
  int bra_level = 0;  // n_j
  int ket_level = 0;  // m_j
  double frequency = 0.0;
  ComplexVector elements;  // one entry per coupling channel
};

struct TransitionTable {
  std::vector<Transition> transitions;
  RealVector eigen_energies;
  ComplexMatrix basis;
  ComplexMatrix hamiltonian;  // native basis
  int channels = 0;

  Eigen::Index dim() const { return eigen_energies.size(); }
  int size() const { return static_cast<int>(transitions.size()); }

  RealVector frequencies() const {
    RealVector w(size());
    for (int j = 0; j < size(); ++j) w(j) = transitions[static_cast<std::size_t>(j)].frequency;
    return w;
  }

  /// M×T matrix whose column j holds (A_α)_j.
  ComplexMatrix element_matrix() const {
    ComplexMatrix a(channels, size());
    for (int j = 0; j < size(); ++j) a.col(j) = transitions[static_cast<std::size_t>(j)].elements;
    return a;
  }

  ComplexMatrix sigma_eigen(int j) const {
    const auto& t = transitions.at(static_cast<std::size_t>(j));
    ComplexMatrix s = ComplexMatrix::Zero(dim(), dim());
    s(t.bra_level, t.ket_level) = 1.0;
    return s;
  }

  ComplexMatrix sigma_native(int j) const {
    const auto& t = transitions.at(static_cast<std::size_t>(j));
    return basis.col(t.bra_level) * basis.col(t.ket_level).adjoint();
  }

  ComplexMatrix to_native(const ComplexMatrix& eigen_op) const {
    return basis * eigen_op * basis.adjoint();
  }

  ComplexMatrix to_eigen(const ComplexMatrix& native_op) const {
    return basis.adjoint() * native_op * basis;
  }

  /// Σ_j (A_α)_j σ_j in the eigenbasis.
  ComplexMatrix reconstruct(int channel) const {
    ComplexMatrix a = ComplexMatrix::Zero(dim(), dim());
    for (const auto& t : transitions) a(t.bra_level, t.ket_level) += t.elements(channel);
    return a;
  }
};

inline TransitionTable enumerate_transitions(const SystemSpec& spec, const EigenData& eig,
                                             double element_tol = 1e-12) {
  spec.validate();
  const Eigen::Index n = spec.dim();
  if (eig.energies.size() != n || eig.basis.rows() != n || eig.basis.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "enumerate_transitions: eigendata shape mismatch");
  }
  std::vector<ComplexMatrix> rotated;
  rotated.reserve(spec.coupling_ops.size());
  for (const auto& a : spec.coupling_ops) rotated.push_back(eig.basis.adjoint() * a * eig.basis);

  TransitionTable table;
  table.eigen_energies = eig.energies;
  table.basis = eig.basis;
  table.hamiltonian = hermitian_part(spec.hamiltonian);
  table.channels = spec.channels();

  for (Eigen::Index bra = 0; bra < n; ++bra) {
    for (Eigen::Index ket = 0; ket < n; ++ket) {
      ComplexVector elements(spec.channels());
      double largest = 0.0;
      for (int alpha = 0; alpha < spec.channels(); ++alpha) {
        elements(alpha) = rotated[static_cast<std::size_t>(alpha)](bra, ket);
        largest = std::max(largest, std::abs(elements(alpha)));
      }
      if (largest <= element_tol) continue;
      Transition t;
      t.index = table.size();
      t.bra_level = static_cast<int>(bra);
      t.ket_level = static_cast<int>(ket);
      t.frequency = eig.energies(ket) - eig.energies(bra);
      t.elements = std::move(elements);
      table.transitions.push_back(std::move(t));
    }
  }
  return table;
}

inline TransitionTable make_transition_table(const SystemSpec& spec, double degeneracy_tol = 1e-9,
                                             double element_tol = 1e-12) {
  return enumerate_transitions(spec, diagonalize_system(spec, degeneracy_tol), element_tol);
}

struct TransitionCluster {
  std::vector<int> members;  // transition indices, ascending
  double mean_frequency = 0.0;
};

/// Single-linkage clustering of transition frequencies. In one dimension this is a
/// split of the sorted frequencies wherever the gap exceeds `cluster_width`.
inline std::vector<TransitionCluster> cluster_transitions(const TransitionTable& table,
                                                          double cluster_width) {
  if (!(cluster_width >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "cluster_width must be non-negative");
  }
  std::vector<int> order(static_cast<std::size_t>(table.size()));
  std::iota(order.begin(), order.end(), 0);
  const RealVector w = table.frequencies();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return w(a) < w(b); });

  std::vector<TransitionCluster> clusters;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const int j = order[k];
    if (k == 0 || w(j) - w(order[k - 1]) > cluster_width) clusters.emplace_back();
    clusters.back().members.push_back(j);
  }
  for (auto& c : clusters) {
    std::sort(c.members.begin(), c.members.end());
    double sum = 0.0;
    for (int j : c.members) sum += w(j);
    c.mean_frequency = sum / static_cast<double>(c.members.size());
  }
  return clusters;
}

/// Cluster mean frequency per transition index.
inline RealVector cluster_mean_frequencies(const TransitionTable& table, double cluster_width) {
  RealVector means(table.size());
  for (const auto& c : cluster_transitions(table, cluster_width)) {
    for (int j : c.members) means(j) = c.mean_frequency;
  }
  return means;
}

}  // namespace lindblad_forge
