#pragma once

#include <cctype>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lindblad_forge/bath.hpp"
#include "lindblad_forge/superoperator.hpp"
#include "lindblad_forge/system.hpp"

namespace lindblad_forge {

/// Γ_ij and Λ_ij evaluated at both frequencies of each transition pair (T×T each).
/// Entry (i, j) of `gamma_at_i` is Γ_ij(ω_i); of `gamma_at_j` is Γ_ij(ω_j).
struct RateTensors {
  ComplexMatrix gamma_at_i;
  ComplexMatrix gamma_at_j;
  ComplexMatrix lambda_at_i;
  ComplexMatrix lambda_at_j;
};

/// Rate tensors with transition j evaluated at `freqs(j)` instead of ω_j.
inline RateTensors rate_tensors_at(const TransitionTable& table, const SpectralModel& bath,
                                   const RealVector& freqs) {
  if (bath.channels() != table.channels) {
    throw Error(ErrorCode::DimensionMismatch,
                "bath has " + std::to_string(bath.channels()) + " channels, system has " +
                    std::to_string(table.channels));
  }
  const int t = table.size();
  const ComplexMatrix a = table.element_matrix();  // M×T
  RateTensors out{ComplexMatrix(t, t), ComplexMatrix(t, t), ComplexMatrix(t, t),
                  ComplexMatrix(t, t)};
  for (int k = 0; k < t; ++k) {
    const BathEval e = bath.evaluate(freqs(k));
    const ComplexMatrix gamma = 2.0 * kPi * e.J;
    // Γ_ik(ω_k) for all i, and Γ_kj(ω_k) for all j.
    out.gamma_at_j.col(k) = a.adjoint() * (gamma * a.col(k));
    out.lambda_at_j.col(k) = a.adjoint() * (e.lambda * a.col(k));
    out.gamma_at_i.row(k) = (a.col(k).adjoint() * gamma) * a;
    out.lambda_at_i.row(k) = (a.col(k).adjoint() * e.lambda) * a;
  }
  if (!out.gamma_at_i.allFinite() || !out.gamma_at_j.allFinite() ||
      !out.lambda_at_i.allFinite() || !out.lambda_at_j.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "rate tensors contain non-finite entries");
  }
  return out;
}

inline RateTensors rate_tensors(const TransitionTable& table, const SpectralModel& bath) {
  return rate_tensors_at(table, bath, table.frequencies());
}

enum class PrescriptionTag { BRE, gLgG, aLgG, aLaG, dLdG, dLgG };

inline std::string_view to_string(PrescriptionTag tag) {
  switch (tag) {
    case PrescriptionTag::BRE: return "BRE";
    case PrescriptionTag::gLgG: return "gLgG";
    case PrescriptionTag::aLgG: return "aLgG";
    case PrescriptionTag::aLaG: return "aLaG";
    case PrescriptionTag::dLdG: return "dLdG";
    case PrescriptionTag::dLgG: return "dLgG";
  }
  return "?";
}

struct Prescription {
  PrescriptionTag tag = PrescriptionTag::aLgG;
  bool repaired = false;                 // the (+) variant: negative Kossakowski eigenvalues dropped
  std::optional<double> cluster_width;   // required for dLdG / dLgG, eV
  std::optional<double> secular_cutoff;  // drop i≠j terms with |ω_i − ω_j| above this, eV

  bool uses_clusters() const {
    return tag == PrescriptionTag::dLdG || tag == PrescriptionTag::dLgG;
  }

  std::string name() const { return std::string(to_string(tag)) + (repaired ? "+" : ""); }

  /// Accepts "aLgG", "aLgG+", "aLgG(+)", "BRE", "bre(+)" ... (tag letters are case-sensitive
  /// except for BRE).
  static Prescription parse(std::string_view text) {
    Prescription p;
    std::string s(text);
    if (s.size() >= 3 && s.substr(s.size() - 3) == "(+)") {
      p.repaired = true;
      s.resize(s.size() - 3);
    } else if (!s.empty() && s.back() == '+') {
      p.repaired = true;
      s.pop_back();
    }
    std::string upper = s;
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (upper == "BRE") {
      p.tag = PrescriptionTag::BRE;
    } else if (s == "gLgG") {
      p.tag = PrescriptionTag::gLgG;
    } else if (s == "aLgG") {
      p.tag = PrescriptionTag::aLgG;
    } else if (s == "aLaG") {
      p.tag = PrescriptionTag::aLaG;
    } else if (s == "dLdG") {
      p.tag = PrescriptionTag::dLdG;
    } else if (s == "dLgG") {
      p.tag = PrescriptionTag::dLgG;
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown prescription '" + std::string(text) + "'");
    }
    return p;
  }
};

struct MasterEquation {
  ComplexMatrix delta;        // L×L energy shift in the eigenbasis (eV)
  ComplexMatrix kossakowski;  // T×T over table.transitions (eV), Hermitian
  ComplexMatrix shift_coefficients;  // Λ̃_ij, T×T
  TransitionTable table;
  Prescription prescription;
  double kossakowski_defect = 0.0;  // ‖Γ̃ − Γ̃†‖_F before Hermitianization
};

/// Principal square root with the cut on the negative real axis approached from above,
/// so √(−x) = i√x regardless of the sign of a zero imaginary part.
inline Complex principal_sqrt(Complex z) {
  if (z.imag() == 0.0) z = Complex(z.real(), 0.0);
  return std::sqrt(z);
}

inline Complex geometric_mean(Complex a, Complex b) {
  return principal_sqrt(a) * principal_sqrt(b);
}

inline Complex arithmetic_mean(Complex a, Complex b) {
  return 0.5 * (a + b);
}

/// Δ = Σ_ij c_ij σ_i†σ_j in the eigenbasis; σ_i†σ_j = δ(n_i, n_j)|m_i⟩⟨m_j|.
inline ComplexMatrix assemble_shift(const TransitionTable& table, const ComplexMatrix& coefficients) {
  ComplexMatrix delta = ComplexMatrix::Zero(table.dim(), table.dim());
  for (int i = 0; i < table.size(); ++i) {
    const auto& ti = table.transitions[static_cast<std::size_t>(i)];
    for (int j = 0; j < table.size(); ++j) {
      const auto& tj = table.transitions[static_cast<std::size_t>(j)];
      if (ti.bra_level != tj.bra_level) continue;
      delta(ti.ket_level, tj.ket_level) += coefficients(i, j);
    }
  }
  return delta;
}

namespace detail {

inline void apply_secular_cutoff(const TransitionTable& table, std::optional<double> cutoff,
                                 ComplexMatrix& kossakowski, ComplexMatrix& shift) {
  if (!cutoff) return;
  const RealVector w = table.frequencies();
  for (int i = 0; i < table.size(); ++i) {
    for (int j = 0; j < table.size(); ++j) {
      if (i != j && std::abs(w(i) - w(j)) > *cutoff) {
        kossakowski(i, j) = 0.0;
        shift(i, j) = 0.0;
      }
    }
  }
}

inline MasterEquation finish(const TransitionTable& table, const Prescription& p,
                             ComplexMatrix gamma_tilde, ComplexMatrix shift) {
  detail::apply_secular_cutoff(table, p.secular_cutoff, gamma_tilde, shift);
  MasterEquation me;
  me.kossakowski_defect = (gamma_tilde - gamma_tilde.adjoint()).norm();
  me.kossakowski = hermitian_part(gamma_tilde);
  me.shift_coefficients = std::move(shift);
  me.delta = assemble_shift(table, me.shift_coefficients);
  me.table = table;
  me.prescription = p;
  me.prescription.repaired = false;
  return me;
}

}  // namespace detail

/// Bloch-Redfield generator written term by term: Λ at ω_j on the left, Λ at ω_i on the
/// right, the Λ jump correction, the Γ halves and the refilling term. Built in the
/// eigenbasis (where every σ is a single matrix unit) and rotated to the native basis.
inline Superoperator build_bre(const TransitionTable& table, const SpectralModel& bath) {
  const RateTensors r = rate_tensors(table, bath);
  const Eigen::Index n = table.dim();
  const Eigen::Index n2 = n * n;
  ComplexMatrix gen = ComplexMatrix::Zero(n2, n2);
  auto idx = [n](Eigen::Index row, Eigen::Index col) { return row + col * n; };

  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      gen(idx(a, b), idx(a, b)) += -kI * (table.eigen_energies(a) - table.eigen_energies(b));
    }
  }
  for (int i = 0; i < table.size(); ++i) {
    const auto& ti = table.transitions[static_cast<std::size_t>(i)];
    for (int j = 0; j < table.size(); ++j) {
      const auto& tj = table.transitions[static_cast<std::size_t>(j)];
      const Complex lam_j = r.lambda_at_j(i, j);
      const Complex lam_i = r.lambda_at_i(i, j);
      const Complex gam_j = r.gamma_at_j(i, j);
      const Complex gam_i = r.gamma_at_i(i, j);

      if (ti.bra_level == tj.bra_level) {
        // σ_i†σ_j = |m_i⟩⟨m_j|
        const Complex left = -kI * lam_j - 0.5 * gam_j;
        const Complex right = kI * lam_i - 0.5 * gam_i;
        for (Eigen::Index k = 0; k < n; ++k) {
          gen(idx(ti.ket_level, k), idx(tj.ket_level, k)) += left;   // σ_i†σ_j ρ
          gen(idx(k, tj.ket_level), idx(k, ti.ket_level)) += right;  // ρ σ_i†σ_j
        }
      }
      // σ_j ρ σ_i† = |n_j⟩⟨m_j| ρ |m_i⟩⟨n_i|
      const Complex jump = kI * (lam_j - lam_i) + 0.5 * (gam_j + gam_i);
      gen(idx(tj.bra_level, ti.bra_level), idx(tj.ket_level, ti.ket_level)) += jump;
    }
  }
  const ComplexMatrix w = kron(table.basis.conjugate(), table.basis);
  return Superoperator::from_dense(w * gen * w.adjoint());
}

/// Exact rewrite of the BRE in Lindblad-like form through aO₁O₂ + bO₂O₁ =
/// (a+b)/2{O₁,O₂} + (a−b)/2[O₁,O₂], with K±_ij(ω) = Γ_ij(ω)/2 ± iΛ_ij(ω).
/// Kossakowski: K⁺_ij(ω_j) + K⁻_ij(ω_i). Shift: (K⁺_ij(ω_j) − K⁻_ij(ω_i))/(2i).
inline MasterEquation bre_lindblad_form(const TransitionTable& table, const SpectralModel& bath,
                                        std::optional<double> secular_cutoff = std::nullopt) {
  const RateTensors r = rate_tensors(table, bath);
  const ComplexMatrix k_plus_j = 0.5 * r.gamma_at_j + kI * r.lambda_at_j;
  const ComplexMatrix k_minus_i = 0.5 * r.gamma_at_i - kI * r.lambda_at_i;
  ComplexMatrix gamma_tilde = k_plus_j + k_minus_i;
  ComplexMatrix shift = (k_plus_j - k_minus_i) / (2.0 * kI);
  Prescription p;
  p.tag = PrescriptionTag::BRE;
  p.secular_cutoff = secular_cutoff;
  return detail::finish(table, p, std::move(gamma_tilde), std::move(shift));
}

inline MasterEquation repair_positive(const MasterEquation& me);

/// Mean-based prescriptions (and the BRE form for tag BRE); applies the (+) repair when
/// requested. A non-Hermitian Δ from gLgG is kept as is: it is the object under study.
inline MasterEquation build_prescription(const TransitionTable& table, const SpectralModel& bath,
                                         const Prescription& p) {
  MasterEquation me;
  if (p.tag == PrescriptionTag::BRE) {
    me = bre_lindblad_form(table, bath, p.secular_cutoff);
  } else {
    const int t = table.size();
    const RateTensors exact = rate_tensors(table, bath);
    std::optional<RateTensors> clustered;
    if (p.uses_clusters()) {
      if (!p.cluster_width || !(*p.cluster_width > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "dΛ prescriptions need cluster_width > 0");
      }
      clustered = rate_tensors_at(table, bath, cluster_mean_frequencies(table, *p.cluster_width));
    }
    ComplexMatrix gamma_tilde(t, t);
    ComplexMatrix shift(t, t);
    for (int i = 0; i < t; ++i) {
      for (int j = 0; j < t; ++j) {
        switch (p.tag) {
          case PrescriptionTag::gLgG:
            gamma_tilde(i, j) = geometric_mean(exact.gamma_at_i(i, j), exact.gamma_at_j(i, j));
            shift(i, j) = geometric_mean(exact.lambda_at_i(i, j), exact.lambda_at_j(i, j));
            break;
          case PrescriptionTag::aLgG:
            gamma_tilde(i, j) = geometric_mean(exact.gamma_at_i(i, j), exact.gamma_at_j(i, j));
            shift(i, j) = arithmetic_mean(exact.lambda_at_i(i, j), exact.lambda_at_j(i, j));
            break;
          case PrescriptionTag::aLaG:
            gamma_tilde(i, j) = arithmetic_mean(exact.gamma_at_i(i, j), exact.gamma_at_j(i, j));
            shift(i, j) = arithmetic_mean(exact.lambda_at_i(i, j), exact.lambda_at_j(i, j));
            break;
          case PrescriptionTag::dLdG:
            // Same-cluster pairs share ω̄, so both means reduce to the common value.
            gamma_tilde(i, j) =
                geometric_mean(clustered->gamma_at_i(i, j), clustered->gamma_at_j(i, j));
            shift(i, j) = arithmetic_mean(clustered->lambda_at_i(i, j), clustered->lambda_at_j(i, j));
            break;
          case PrescriptionTag::dLgG:
            gamma_tilde(i, j) = geometric_mean(exact.gamma_at_i(i, j), exact.gamma_at_j(i, j));
            shift(i, j) = arithmetic_mean(clustered->lambda_at_i(i, j), clustered->lambda_at_j(i, j));
            break;
          case PrescriptionTag::BRE:
            break;
        }
      }
    }
    me = detail::finish(table, p, std::move(gamma_tilde), std::move(shift));
  }
  return p.repaired ? repair_positive(me) : me;
}

/// Replaces the Kossakowski matrix by its nearest PSD matrix; Δ is untouched.
inline MasterEquation repair_positive(const MasterEquation& me) {
  if (!is_hermitian(me.kossakowski, 1e-10)) {
    throw Error(ErrorCode::NonHermitianKossakowski, "repair_positive needs a Hermitian Kossakowski");
  }
  if (!is_hermitian(me.delta, 1e-9)) {
    throw Error(ErrorCode::NonHermitianKossakowski,
                "repair_positive rejects a non-Hermitian energy shift; use an aΛ or dΛ prescription");
  }
  MasterEquation out = me;
  out.kossakowski = nearest_psd(me.kossakowski);
  out.prescription.repaired = true;
  return out;
}

/// Eq.-(1)-style generator: −i[H + Δ, ρ] + Σ_ij (K_ij/2)(−{σ_i†σ_j, ρ} + 2σ_j ρ σ_i†), in the
/// native basis. A non-Hermitian Δ enters the commutator verbatim.
inline Superoperator to_liouvillian(const MasterEquation& me) {
  const auto& table = me.table;
  const Eigen::Index n = table.dim();
  const ComplexMatrix h_eff = table.hamiltonian + table.to_native(me.delta);
  ComplexMatrix gen = -kI * (left_multiplier(h_eff) - right_multiplier(h_eff));

  std::vector<ComplexMatrix> sigma;
  sigma.reserve(static_cast<std::size_t>(table.size()));
  for (int j = 0; j < table.size(); ++j) sigma.push_back(table.sigma_native(j));

  ComplexMatrix anti = ComplexMatrix::Zero(n, n);  // Σ_ij K_ij σ_i†σ_j
  for (int j = 0; j < table.size(); ++j) {
    ComplexMatrix weighted_conj = ComplexMatrix::Zero(n, n);  // Σ_i K_ij conj(σ_i)
    for (int i = 0; i < table.size(); ++i) {
      const Complex k = me.kossakowski(i, j);
      if (k == Complex(0.0, 0.0)) continue;
      anti += k * sigma[static_cast<std::size_t>(i)].adjoint() * sigma[static_cast<std::size_t>(j)];
      weighted_conj += k * sigma[static_cast<std::size_t>(i)].conjugate();
    }
    gen += kron(weighted_conj, sigma[static_cast<std::size_t>(j)]);  // Σ_i K_ij σ_j ρ σ_i†
  }
  gen -= 0.5 * (left_multiplier(anti) + right_multiplier(anti));
  return Superoperator::from_dense(gen);
}

struct CollapseChannel {
  double rate = 0.0;   // eV
  ComplexMatrix op;    // native basis
};

/// Diagonal form of the dissipator: K = U diag(γ_k) U†, C_k = Σ_j conj(U_jk) σ_j.
inline std::vector<CollapseChannel> collapse_operators(const MasterEquation& me) {
  const HermitianEig eig = herm_eig(me.kossakowski);
  const double scale = std::max(me.kossakowski.norm(), 1e-300);
  if (eig.values.size() > 0 && eig.values(0) < -kPsdRelTol * scale) {
    throw Error(ErrorCode::NotPSD, "collapse_operators needs a PSD Kossakowski matrix; repair it first");
  }
  const double largest = eig.values.size() > 0 ? eig.values.maxCoeff() : 0.0;
  std::vector<CollapseChannel> out;
  for (Eigen::Index k = eig.values.size() - 1; k >= 0; --k) {
    const double rate = eig.values(k);
    if (!(rate > 1e-13 * largest)) continue;
    ComplexMatrix op = ComplexMatrix::Zero(me.table.dim(), me.table.dim());
    for (int j = 0; j < me.table.size(); ++j) {
      op += std::conj(eig.vectors(j, k)) * me.table.sigma_native(j);
    }
    out.push_back({rate, std::move(op)});
  }
  return out;
}

/// Dissipator superoperator Σ_k γ_k (C_k ρ C_k† − ½{C_k†C_k, ρ}).
inline Superoperator dissipator_from_channels(const std::vector<CollapseChannel>& channels,
                                              Eigen::Index dim) {
  ComplexMatrix gen = ComplexMatrix::Zero(dim * dim, dim * dim);
  for (const auto& c : channels) {
    const ComplexMatrix cdc = c.op.adjoint() * c.op;
    gen += c.rate * (sandwich(c.op, c.op.adjoint()) - 0.5 * left_multiplier(cdc) -
                     0.5 * right_multiplier(cdc));
  }
  return Superoperator::from_dense(gen);
}

}  // namespace lindblad_forge
