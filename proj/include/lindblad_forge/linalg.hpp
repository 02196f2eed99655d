#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "lindblad_forge/error.hpp"

namespace lindblad_forge {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

// Relative tolerances for the Hermiticity precondition and the PSD postcondition.
inline constexpr double kHermitianRelTol = 1e-9;
inline constexpr double kPsdRelTol = 1e-12;

inline void require_square(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " must be a non-empty square matrix");
  }
}

inline bool all_finite(const ComplexMatrix& m) {
  return m.allFinite();
}

/// ‖M − M†‖_F
inline double hermiticity_defect(const ComplexMatrix& m) {
  require_square(m, "hermiticity_defect input");
  return (m - m.adjoint()).norm();
}

inline bool is_hermitian(const ComplexMatrix& m, double rel_tol = kHermitianRelTol) {
  if (m.rows() != m.cols()) return false;
  const double scale = m.norm();
  return hermiticity_defect(m) <= rel_tol * scale;
}

inline ComplexMatrix hermitian_part(const ComplexMatrix& m) {
  return 0.5 * (m + m.adjoint());
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

struct HermitianEig {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // columns are eigenvectors
};

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
/// Inputs whose relative anti-Hermitian part exceeds 1e-9 are rejected so the
/// caller falls back to hermiticity_defect() instead of getting silent garbage.
inline HermitianEig herm_eig(const ComplexMatrix& m) {
  require_square(m, "herm_eig input");
  if (!all_finite(m)) {
    throw Error(ErrorCode::InvalidArgument, "herm_eig input has non-finite entries");
  }
  if (!is_hermitian(m)) {
    throw Error(ErrorCode::NonHermitianInput,
                "herm_eig requires a Hermitian matrix (defect " +
                    std::to_string(hermiticity_defect(m)) + ")");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(m));
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidArgument, "Hermitian eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Closest PSD matrix in Frobenius norm: negative eigenvalues are set to zero.
inline ComplexMatrix nearest_psd(const ComplexMatrix& m) {
  const HermitianEig eig = herm_eig(m);
  const RealVector clamped = eig.values.cwiseMax(0.0);
  ComplexMatrix out = eig.vectors * clamped.cast<Complex>().asDiagonal() * eig.vectors.adjoint();
  return hermitian_part(out);
}

inline double min_eigenvalue(const ComplexMatrix& m) {
  return herm_eig(m).values(0);
}

/// Smallest eigenvalue of the Hermitian part; usable on slightly non-Hermitian states.
inline double min_eigenvalue_hermitian_part(const ComplexMatrix& m) {
  require_square(m, "min_eigenvalue_hermitian_part input");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(m), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

inline bool is_psd(const ComplexMatrix& m, double rel_tol = kPsdRelTol) {
  const double scale = std::max(m.norm(), 1e-300);
  return min_eigenvalue(m) >= -rel_tol * scale;
}

/// Trace over every subsystem except `keep_index`. Subsystems are ordered as in
/// kron(first, second, ...), so the first factor is the most significant index.
inline ComplexMatrix partial_trace(const ComplexMatrix& rho, std::span<const int> subsystem_dims,
                                   int keep_index) {
  require_square(rho, "partial_trace input");
  if (subsystem_dims.empty() || keep_index < 0 ||
      keep_index >= static_cast<int>(subsystem_dims.size())) {
    throw Error(ErrorCode::DimensionMismatch, "partial_trace: keep_index out of range");
  }
  Eigen::Index total = 1;
  for (int d : subsystem_dims) {
    if (d <= 0) throw Error(ErrorCode::DimensionMismatch, "partial_trace: non-positive subsystem dim");
    total *= d;
  }
  if (total != rho.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                "partial_trace: product of subsystem dims " + std::to_string(total) +
                    " != matrix dim " + std::to_string(rho.rows()));
  }
  Eigen::Index before = 1;
  for (int k = 0; k < keep_index; ++k) before *= subsystem_dims[k];
  const Eigen::Index kept = subsystem_dims[keep_index];
  const Eigen::Index after = total / (before * kept);

  ComplexMatrix out = ComplexMatrix::Zero(kept, kept);
  for (Eigen::Index b = 0; b < before; ++b) {
    for (Eigen::Index i = 0; i < kept; ++i) {
      for (Eigen::Index j = 0; j < kept; ++j) {
        Complex acc{0.0, 0.0};
        const Eigen::Index row0 = (b * kept + i) * after;
        const Eigen::Index col0 = (b * kept + j) * after;
        for (Eigen::Index a = 0; a < after; ++a) acc += rho(row0 + a, col0 + a);
        out(i, j) += acc;
      }
    }
  }
  return out;
}

inline double frobenius_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "frobenius_distance: shapes differ");
  }
  return (a - b).norm();
}

/// Pure-state projector |ψ⟩⟨ψ|.
inline ComplexMatrix projector(const ComplexVector& psi) {
  return psi * psi.adjoint();
}

}  // namespace lindblad_forge
