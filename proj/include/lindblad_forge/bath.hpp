#pragma once

#include <cmath>
#include <memory>
#include <variant>

#include <Eigen/LU>

#include "lindblad_forge/linalg.hpp"

namespace lindblad_forge {

/// Single Lorentzian peak: J(ω) = g²/π · (κ/2) / ((ω − ω_M)² + (κ/2)²). All in eV.
struct Lorentzian {
  double g = 0.0;
  double omega_m = 0.0;
  double kappa = 0.0;
};

/// N coupled lossy modes: h = Ω − i·diag(κ)/2, coupling g (M×N). All in eV.
struct PseudomodeNetwork {
  RealMatrix omega;  // real symmetric N×N
  RealVector kappa;  // N positive loss rates
  RealMatrix g;      // M×N

  int modes() const { return static_cast<int>(kappa.size()); }
  int channels() const { return static_cast<int>(g.rows()); }

  void validate() const {
    const auto n = kappa.size();
    if (n == 0 || omega.rows() != n || omega.cols() != n || g.cols() != n || g.rows() == 0) {
      throw Error(ErrorCode::DimensionMismatch, "PseudomodeNetwork: inconsistent shapes");
    }
    if (!omega.allFinite() || !kappa.allFinite() || !g.allFinite()) {
      throw Error(ErrorCode::InvalidArgument, "PseudomodeNetwork: non-finite parameters");
    }
    if ((omega - omega.transpose()).norm() > 1e-12 * std::max(1.0, omega.norm())) {
      throw Error(ErrorCode::InvalidArgument, "PseudomodeNetwork: Ω must be symmetric");
    }
    if ((kappa.array() <= 0.0).any()) {
      throw Error(ErrorCode::InvalidArgument, "PseudomodeNetwork: every κ must be positive");
    }
  }

  Eigen::MatrixXcd h() const {
    Eigen::MatrixXcd out = omega.cast<Complex>();
    for (int b = 0; b < modes(); ++b) out(b, b) -= kI * (0.5 * kappa(b));
    return out;
  }
};

/// Spectral density J and Lamb-shift integral λ at one frequency, both M×M Hermitian (eV).
struct BathEval {
  ComplexMatrix J;
  ComplexMatrix lambda;
  double at_frequency = 0.0;
};

class SpectralModel {
 public:
  static SpectralModel lorentzian(double g, double omega_m, double kappa) {
    if (!(kappa > 0.0) || !std::isfinite(g) || !std::isfinite(omega_m)) {
      throw Error(ErrorCode::InvalidArgument, "Lorentzian requires finite g, ω_M and κ > 0");
    }
    return SpectralModel(Lorentzian{g, omega_m, kappa});
  }

  static SpectralModel network(PseudomodeNetwork net) {
    net.validate();
    return SpectralModel(std::move(net));
  }

  static SpectralModel scaled(SpectralModel base, double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor)) {
      throw Error(ErrorCode::InvalidArgument, "Scaled factor must be positive");
    }
    return SpectralModel(Scaled{std::make_shared<const SpectralModel>(std::move(base)), factor});
  }

  int channels() const {
    if (const auto* n = std::get_if<PseudomodeNetwork>(&variant_)) return n->channels();
    if (const auto* s = std::get_if<Scaled>(&variant_)) return s->base->channels();
    return 1;
  }

  bool is_lorentzian() const { return std::holds_alternative<Lorentzian>(variant_); }
  bool is_network() const { return std::holds_alternative<PseudomodeNetwork>(variant_); }
  bool is_scaled() const { return std::holds_alternative<Scaled>(variant_); }

  const Lorentzian& as_lorentzian() const { return std::get<Lorentzian>(variant_); }
  const PseudomodeNetwork& as_network() const { return std::get<PseudomodeNetwork>(variant_); }
  const SpectralModel& scaled_base() const { return *std::get<Scaled>(variant_).base; }
  double scale_factor() const { return std::get<Scaled>(variant_).factor; }

  /// Total multiplicative factor and the innermost unscaled model.
  std::pair<double, const SpectralModel*> unwrap() const {
    double factor = 1.0;
    const SpectralModel* m = this;
    while (m->is_scaled()) {
      factor *= m->scale_factor();
      m = &m->scaled_base();
    }
    return {factor, m};
  }

  BathEval evaluate(double w) const {
    const auto [factor, inner] = unwrap();
    BathEval out = inner->evaluate_unscaled(w);
    out.J *= factor;
    out.lambda *= factor;
    return out;
  }

  /// Rough frequency scale (centre, width) used to size quadrature grids.
  std::pair<double, double> support() const {
    const auto [factor, inner] = unwrap();
    (void)factor;
    if (inner->is_lorentzian()) {
      const auto& l = inner->as_lorentzian();
      return {l.omega_m, l.kappa};
    }
    const auto& n = inner->as_network();
    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(n.omega, Eigen::EigenvaluesOnly);
    const RealVector ev = solver.eigenvalues();
    const double centre = 0.5 * (ev.minCoeff() + ev.maxCoeff());
    const double width = std::max(n.kappa.maxCoeff(), 0.5 * (ev.maxCoeff() - ev.minCoeff()));
    return {centre, width};
  }

 private:
  struct Scaled {
    std::shared_ptr<const SpectralModel> base;
    double factor = 1.0;
  };

  explicit SpectralModel(Lorentzian l) : variant_(l) {}
  explicit SpectralModel(PseudomodeNetwork n) : variant_(std::move(n)) {}
  explicit SpectralModel(Scaled s) : variant_(std::move(s)) {}

  BathEval evaluate_unscaled(double w) const {
    BathEval out;
    out.at_frequency = w;
    if (const auto* l = std::get_if<Lorentzian>(&variant_)) {
      const double x = w - l->omega_m;
      const double half = 0.5 * l->kappa;
      const double denom = x * x + half * half;
      out.J = ComplexMatrix::Constant(1, 1, l->g * l->g / kPi * half / denom);
      out.lambda = ComplexMatrix::Constant(1, 1, l->g * l->g * x / denom);
      return out;
    }
    const auto& n = std::get<PseudomodeNetwork>(variant_);
    // X = (h − ω)⁻¹ is complex symmetric. Im X = ½ X K X† keeps J manifestly PSD.
    Eigen::MatrixXcd shifted = n.h();
    shifted.diagonal().array() -= w;
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(shifted);
    if (!lu.isInvertible() || lu.rcond() < 1e-14) {
      throw Error(ErrorCode::SingularResolvent, "resolvent (h − ω) is numerically singular");
    }
    const Eigen::MatrixXcd x = lu.inverse();
    const Eigen::MatrixXcd gx = n.g.cast<Complex>() * x;
    const Eigen::MatrixXcd k = n.kappa.cast<Complex>().asDiagonal();
    const RealMatrix im_part = (0.5 * gx * k * gx.adjoint()).real();
    const RealMatrix re_part = (n.g * x.real() * n.g.transpose());
    out.J = (0.5 * (im_part + im_part.transpose()) / kPi).cast<Complex>();
    out.lambda = (-0.5 * (re_part + re_part.transpose())).cast<Complex>();
    return out;
  }

  std::variant<Lorentzian, PseudomodeNetwork, Scaled> variant_;
};

inline ComplexMatrix eval_J(const SpectralModel& model, double w) {
  return model.evaluate(w).J;
}

inline ComplexMatrix eval_lambda(const SpectralModel& model, double w) {
  return model.evaluate(w).lambda;
}

/// γ = 2πJ.
inline ComplexMatrix eval_gamma(const SpectralModel& model, double w) {
  return 2.0 * kPi * eval_J(model, w);
}

/// Principal-value quadrature settings. Nodes sit symmetrically at ω ± u_k with
/// u_k = window + (k + ½)h, h = 2·half_range/points, so a window of half-width
/// `pole_window` around the pole is excluded (default 0: only the pole cell itself).
struct KKGrid {
  double half_range = 0.0;  // 0 → |ω − centre| + 52 widths of the model support
  long points = 200000;
  double pole_window = 0.0;
};

/// Numerical P∫ J(ω′)/(ω − ω′) dω′, an independent check of eval_lambda.
inline ComplexMatrix kk_check(const SpectralModel& model, double w, const KKGrid& grid = {}) {
  const auto [centre, width] = model.support();
  const double half_range =
      grid.half_range > 0.0 ? grid.half_range : std::abs(w - centre) + 52.0 * width;
  const long pairs = std::max(1L, grid.points / 2);
  const double h = (half_range - grid.pole_window) / static_cast<double>(pairs);
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "kk_check: pole window exceeds range");

  const int m = model.channels();
  ComplexMatrix acc = ComplexMatrix::Zero(m, m);
  // Pairing ω − u with ω + u cancels the pole; J(ω−u) − J(ω+u) over u is smooth,
  // so the midpoint rule converges quadratically.
  for (long k = 0; k < pairs; ++k) {
    const double u = grid.pole_window + (static_cast<double>(k) + 0.5) * h;
    acc += (eval_J(model, w - u) - eval_J(model, w + u)) / u;
  }
  return acc * h;
}

/// Equivalent pseudomode network (Lorentzian → one mode; Scaled → g·√factor).
inline PseudomodeNetwork to_network(const SpectralModel& model) {
  const auto [factor, inner] = model.unwrap();
  PseudomodeNetwork net;
  if (inner->is_lorentzian()) {
    const auto& l = inner->as_lorentzian();
    net.omega = RealMatrix::Constant(1, 1, l.omega_m);
    net.kappa = RealVector::Constant(1, l.kappa);
    net.g = RealMatrix::Constant(1, 1, l.g);
  } else {
    net = inner->as_network();
  }
  net.g *= std::sqrt(factor);
  return net;
}

}  // namespace lindblad_forge
