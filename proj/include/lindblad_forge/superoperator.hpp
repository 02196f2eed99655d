#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Sparse>

#include "lindblad_forge/linalg.hpp"

namespace lindblad_forge {

using SparseComplexMatrix = Eigen::SparseMatrix<Complex>;

// Vectorization is column stacking throughout: vec(ρ)[i + j·L] = ρ(i, j),
// hence vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ).

inline ComplexVector vec(const ComplexMatrix& rho) {
  return Eigen::Map<const ComplexVector>(rho.data(), rho.size());
}

inline ComplexMatrix unvec(const ComplexVector& v, Eigen::Index dim) {
  if (dim * dim != v.size()) {
    throw Error(ErrorCode::DimensionMismatch, "unvec: vector length is not dim²");
  }
  return Eigen::Map<const ComplexMatrix>(v.data(), dim, dim);
}

/// Matrix of ρ ↦ A ρ.
inline ComplexMatrix left_multiplier(const ComplexMatrix& a) {
  return kron(ComplexMatrix::Identity(a.rows(), a.rows()), a);
}

/// Matrix of ρ ↦ ρ B.
inline ComplexMatrix right_multiplier(const ComplexMatrix& b) {
  return kron(b.transpose(), ComplexMatrix::Identity(b.rows(), b.rows()));
}

/// Matrix of ρ ↦ A ρ B.
inline ComplexMatrix sandwich(const ComplexMatrix& a, const ComplexMatrix& b) {
  return kron(b.transpose(), a);
}

inline SparseComplexMatrix sparse_kron(const SparseComplexMatrix& a, const SparseComplexMatrix& b) {
  std::vector<Eigen::Triplet<Complex>> triplets;
  triplets.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
  for (int ka = 0; ka < a.outerSize(); ++ka) {
    for (SparseComplexMatrix::InnerIterator ia(a, ka); ia; ++ia) {
      for (int kb = 0; kb < b.outerSize(); ++kb) {
        for (SparseComplexMatrix::InnerIterator ib(b, kb); ib; ++ib) {
          triplets.emplace_back(static_cast<int>(ia.row() * b.rows() + ib.row()),
                                static_cast<int>(ia.col() * b.cols() + ib.col()),
                                ia.value() * ib.value());
        }
      }
    }
  }
  SparseComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

inline SparseComplexMatrix sparse_identity(Eigen::Index n) {
  SparseComplexMatrix id(n, n);
  id.setIdentity();
  return id;
}

/// Linear generator acting on column-stacked L×L density matrices (rates in eV, ħ = 1).
class Superoperator {
 public:
  Superoperator() = default;

  explicit Superoperator(SparseComplexMatrix matrix) : matrix_(std::move(matrix)) {
    if (matrix_.rows() != matrix_.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "Superoperator matrix must be square");
    }
    const auto root = static_cast<Eigen::Index>(std::llround(std::sqrt(double(matrix_.rows()))));
    if (root * root != matrix_.rows()) {
      throw Error(ErrorCode::DimensionMismatch, "Superoperator size is not a perfect square");
    }
    dim_ = root;
    matrix_.makeCompressed();
  }

  static Superoperator from_dense(const ComplexMatrix& m) {
    return Superoperator(SparseComplexMatrix(m.sparseView()));
  }

  /// Hilbert-space dimension L (the matrix is L²×L²).
  Eigen::Index dim() const { return dim_; }
  const SparseComplexMatrix& matrix() const { return matrix_; }
  ComplexMatrix dense() const { return ComplexMatrix(matrix_); }

  ComplexMatrix apply(const ComplexMatrix& rho) const {
    if (rho.rows() != dim_ || rho.cols() != dim_) {
      throw Error(ErrorCode::DimensionMismatch, "Superoperator::apply: state has wrong shape");
    }
    ComplexVector out = matrix_ * vec(rho);
    return unvec(out, dim_);
  }

 private:
  SparseComplexMatrix matrix_;
  Eigen::Index dim_ = 0;
};

}  // namespace lindblad_forge
