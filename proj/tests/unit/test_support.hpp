#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "macrobell/dicke.hpp"
#include "macrobell/povm.hpp"

namespace testing_support {

using macrobell::ComplexMatrix2;
using macrobell::cplx;

inline ComplexMatrix2 random_unitary(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * macrobell::kPi);
  std::uniform_real_distribution<double> c(0.0, 1.0);
  const double theta = std::acos(1.0 - 2.0 * c(rng)) / 2.0;
  const double a = u(rng), b = u(rng), g = u(rng);
  ComplexMatrix2 m;
  m << std::polar(std::cos(theta), a), -std::polar(std::sin(theta), b),
      std::polar(std::sin(theta), g - b), std::polar(std::cos(theta), g - a);
  return m;
}

/// Binary POVM {E, I - E} with E = U diag(l1, l2) U^dag and outcomes on a
/// small integer lattice, so finite-N inversion stays cheap.
inline macrobell::SingleParticlePovm random_binary_povm(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lam(0.0, 1.0);
  std::uniform_int_distribution<int> out(-2, 2);
  for (;;) {
    const auto u = random_unitary(rng);
    ComplexMatrix2 d = ComplexMatrix2::Zero();
    d(0, 0) = lam(rng);
    d(1, 1) = lam(rng);
    ComplexMatrix2 e = u * d * u.adjoint();
    e = 0.5 * (e + e.adjoint());
    const ComplexMatrix2 f = ComplexMatrix2::Identity() - e;
    int a = out(rng), b = out(rng);
    if (a == b) continue;
    if (std::abs(e(0, 1)) * std::abs(a - b) < 1e-3) continue;
    return macrobell::validate_povm({static_cast<double>(a), static_cast<double>(b)}, {e, f});
  }
}

inline std::vector<cplx> random_coeffs(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<double> g;
  std::vector<cplx> c(d);
  for (auto& z : c) z = {g(rng), g(rng)};
  return macrobell::normalized(c);
}

inline macrobell::SingleParticlePovm sigma_x() { return macrobell::projective_from_bloch(macrobell::kPi / 2.0, 0.0); }

inline macrobell::SingleParticlePovm sigma_z() {
  const ComplexMatrix2 z = macrobell::pauli_z();
  const ComplexMatrix2 id = ComplexMatrix2::Identity();
  return macrobell::validate_povm({1.0, -1.0}, {0.5 * (id + z), 0.5 * (id - z)});
}

}  // namespace testing_support
