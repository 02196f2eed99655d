#pragma once

#include <cmath>

#include "lindblad_forge/bath.hpp"
#include "lindblad_forge/rng.hpp"
#include "lindblad_forge/system.hpp"

namespace lindblad_forge {

struct InstanceShape {
  int levels = 3;    // L
  int channels = 2;  // M
  int modes = 2;     // N
};

/// One random system + pseudomode bath + pure initial state. Couplings g are the
/// unscaled ones (eV); a strength factor f enters later as Scaled{bath, f}.
struct RandomInstance {
  SystemSpec system;
  PseudomodeNetwork network;
  ComplexVector psi0;

  ComplexMatrix rho0() const { return projector(psi0); }
};

/// Draw order: system energies, mode energies, mode couplings (upper triangle, row-major),
/// loss rates, coupling operators (per α, upper triangle row-major), g (row-major),
/// state amplitudes, state phases.
inline RandomInstance gen_instance(RngStream& rng, const InstanceShape& shape = {}) {
  const int l = shape.levels;
  const int m = shape.channels;
  const int n = shape.modes;
  if (l < 2 || m < 1 || n < 1) {
    throw Error(ErrorCode::InvalidArgument, "instance shape needs L >= 2, M >= 1, N >= 1");
  }
  RandomInstance inst;
  inst.system.hamiltonian = ComplexMatrix::Zero(l, l);
  for (int i = 0; i < l; ++i) inst.system.hamiltonian(i, i) = rng.uniform(0.1, 5.0);

  inst.network.omega = RealMatrix::Zero(n, n);
  for (int b = 0; b < n; ++b) inst.network.omega(b, b) = rng.uniform(0.3, 2.0);
  for (int b = 0; b < n; ++b) {
    for (int c = b + 1; c < n; ++c) {
      const double w = rng.uniform(0.0, 1.0);
      inst.network.omega(b, c) = w;
      inst.network.omega(c, b) = w;
    }
  }
  inst.network.kappa = RealVector(n);
  for (int b = 0; b < n; ++b) inst.network.kappa(b) = rng.uniform(0.2, 0.5);

  for (int alpha = 0; alpha < m; ++alpha) {
    ComplexMatrix a = ComplexMatrix::Zero(l, l);
    for (int i = 0; i < l; ++i) {
      for (int j = i + 1; j < l; ++j) {
        const double v = rng.uniform(0.0, 1.0);
        a(i, j) = v;
        a(j, i) = v;
      }
    }
    inst.system.coupling_ops.push_back(std::move(a));
  }

  inst.network.g = RealMatrix(m, n);
  for (int alpha = 0; alpha < m; ++alpha) {
    for (int b = 0; b < n; ++b) inst.network.g(alpha, b) = rng.uniform(0.0, 1.0) * 1e-3;
  }

  RealVector amplitude(l);
  for (int i = 0; i < l; ++i) amplitude(i) = rng.uniform(0.0, 1.0);
  inst.psi0 = ComplexVector(l);
  for (int i = 0; i < l; ++i) {
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    inst.psi0(i) = std::polar(amplitude(i), phase);
  }
  const double norm = inst.psi0.norm();
  if (norm > 0.0) {
    inst.psi0 /= norm;
  } else {
    inst.psi0 = ComplexVector::Unit(l, 0);
  }
  return inst;
}

}  // namespace lindblad_forge
