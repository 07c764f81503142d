#pragma once

// Brute-force reference for the finite-N engine: builds the full 2^N state
// vector and sums over every outcome string. Shares no code path with the
// symmetric-subspace formulas.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include "macrobell/dicke.hpp"
#include "macrobell/errors.hpp"
#include "macrobell/finite.hpp"
#include "macrobell/povm.hpp"

namespace macrobell {

inline constexpr std::int64_t kBruteForceMaxN = 14;

namespace detail {

inline std::vector<cplx> full_state_vector(const DickeSuperposition& state) {
  const std::int64_t n = state.n_particles;
  if (n > kBruteForceMaxN) throw Error(Errc::CapExceeded, "brute force is limited to N <= 14");
  // Pascal's triangle row for the Dicke normalization.
  std::vector<double> binom(n + 1, 1.0);
  for (std::int64_t r = 1; r <= n; ++r) {
    for (std::int64_t c = r - 1; c >= 1; --c) binom[c] += binom[c - 1];
  }
  const std::size_t dim = std::size_t{1} << n;
  std::vector<cplx> psi(dim);
  for (std::size_t b = 0; b < dim; ++b) {
    const auto k = static_cast<std::int64_t>(__builtin_popcountll(b));
    const std::int64_t j = k - state.offset;
    if (j < 0 || j >= static_cast<std::int64_t>(state.dimension())) continue;
    psi[b] = state.coeffs[j] / std::sqrt(binom[k]);
  }
  return psi;
}

/// v <- (op on qubit q) v, qubit q being bit q of the basis index.
inline void apply_single_qubit(std::vector<cplx>& v, const ComplexMatrix2& op, std::int64_t q) {
  const std::size_t bit = std::size_t{1} << q;
  for (std::size_t b = 0; b < v.size(); ++b) {
    if (b & bit) continue;
    const cplx v0 = v[b];
    const cplx v1 = v[b | bit];
    v[b] = op(0, 0) * v0 + op(0, 1) * v1;
    v[b | bit] = op(1, 0) * v0 + op(1, 1) * v1;
  }
}

inline cplx inner(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  CompensatedComplexSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add(std::conj(a[i]) * b[i]);
  return s.value();
}

}  // namespace detail

/// chi(t) by applying Acal to every qubit of the full state vector.
inline cplx brute_force_char_fn(const DickeSuperposition& state, const SingleParticlePovm& povm,
                                const DerivedParams& params, double alpha, double t) {
  const auto psi = detail::full_state_vector(state);
  const double scale = params.tau * std::pow(static_cast<double>(state.n_particles), alpha);
  ComplexMatrix2 op = ComplexMatrix2::Zero();
  for (std::size_t j = 0; j < povm.size(); ++j) {
    op += std::exp(cplx(0.0, t * (povm.outcomes()[j] - params.mu) / scale)) * povm.effects()[j];
  }
  auto phi = psi;
  for (std::int64_t q = 0; q < state.n_particles; ++q) detail::apply_single_qubit(phi, op, q);
  return detail::inner(psi, phi);
}

/// PMF of X by enumerating all outcome strings (depth-first, one effect per qubit).
inline LatticePmf brute_force_pmf(const DickeSuperposition& state, const SingleParticlePovm& povm,
                                  const DerivedParams& params, double alpha) {
  const auto psi = detail::full_state_vector(state);
  const std::int64_t n = state.n_particles;
  std::vector<std::vector<cplx>> level(n + 1);
  level[0] = psi;
  std::map<double, double> by_intensity;

  auto recurse = [&](auto&& self, std::int64_t q, double intensity) -> void {
    if (q == n) {
      by_intensity[intensity] += detail::inner(psi, level[n]).real();
      return;
    }
    for (std::size_t a = 0; a < povm.size(); ++a) {
      level[q + 1] = level[q];
      detail::apply_single_qubit(level[q + 1], povm.effects()[a], q);
      self(self, q + 1, intensity + povm.outcomes()[a]);
    }
  };
  recurse(recurse, 0, 0.0);

  // Merge intensities that differ only by summation rounding.
  LatticePmf pmf;
  const double scale = params.tau * std::pow(static_cast<double>(n), alpha);
  for (const auto& [intensity, p] : by_intensity) {
    const double x = (intensity - static_cast<double>(n) * params.mu) / scale;
    if (!pmf.values.empty() && std::abs(x - pmf.values.back()) <= 1e-9 * (1.0 + std::abs(x))) {
      pmf.probs.back() += p;
    } else {
      pmf.values.push_back(x);
      pmf.probs.push_back(p);
    }
  }
  return pmf;
}

}  // namespace macrobell
