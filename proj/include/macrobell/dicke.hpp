#pragma once

// Dicke-state superpositions and exact matrix elements of tensor powers
// <n,k| M^{(x)n} |n,l> restricted to the symmetric subspace.

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "macrobell/errors.hpp"
#include "macrobell/numeric.hpp"
#include "macrobell/povm.hpp"

namespace macrobell {

/// sum_j coeffs[j] |n, offset + j>. Half-mode states use offset 0; one-mode
/// states |2N, N+k> use offset N + k_min.
struct DickeSuperposition {
  std::int64_t n_particles = 1;
  std::int64_t offset = 0;
  std::vector<cplx> coeffs{1.0};

  std::size_t dimension() const { return coeffs.size(); }

  static DickeSuperposition make(std::int64_t n, std::vector<cplx> coeffs, std::int64_t offset = 0) {
    if (n < 1) throw Error(Errc::InvalidArgument, "particle number must be positive");
    if (coeffs.empty()) throw Error(Errc::InvalidArgument, "empty coefficient vector");
    if (offset < 0 || offset + static_cast<std::int64_t>(coeffs.size()) - 1 > n) {
      throw Error(Errc::InvalidArgument, "excitation numbers exceed the particle number");
    }
    double norm2 = 0.0;
    for (const auto& c : coeffs) norm2 += std::norm(c);
    if (std::abs(norm2 - 1.0) > kAlgebraTol) {
      throw Error(Errc::InvalidArgument, "coefficients are not normalized (sum |c|^2 = " + std::to_string(norm2) + ")");
    }
    return DickeSuperposition{n, offset, std::move(coeffs)};
  }

  /// |2N, N+k> superposition with k = k_min, k_min + 1, ...
  static DickeSuperposition centered(std::int64_t two_n, std::vector<cplx> coeffs, std::int64_t k_min) {
    if (two_n % 2 != 0) throw Error(Errc::InvalidArgument, "centered Dicke states need an even particle number");
    return make(two_n, std::move(coeffs), two_n / 2 + k_min);
  }
};

inline std::vector<cplx> normalized(std::vector<cplx> c) {
  double n2 = 0.0;
  for (const auto& z : c) n2 += std::norm(z);
  if (n2 <= 0.0) throw Error(Errc::InvalidArgument, "zero coefficient vector");
  const double s = 1.0 / std::sqrt(n2);
  for (auto& z : c) z *= s;
  return c;
}

namespace detail {

struct PolarFactor {
  double log_abs = 0.0;
  cplx unit{1.0, 0.0};
  bool zero = false;
};

inline PolarFactor polar_factor(cplx z) {
  const double r = std::abs(z);
  if (r == 0.0) return {0.0, {1.0, 0.0}, true};
  return {std::log(r), z / r, false};
}

}  // namespace detail

/// <n,k| M^{(x)n} |n,l>. Terms of the permutation sum are assembled in log
/// magnitude so that C(10^4, 5000)-sized binomials never overflow.
inline cplx dicke_matrix_element(const ComplexMatrix2& m, std::int64_t n, std::int64_t k, std::int64_t l) {
  if (k < 0 || l < 0 || k > n || l > n) throw Error(Errc::InvalidArgument, "Dicke index out of range");
  if (k < l) return dicke_matrix_element(m.transpose(), n, l, k);

  const auto f11 = detail::polar_factor(m(1, 1));
  const auto f10 = detail::polar_factor(m(1, 0));
  const auto f01 = detail::polar_factor(m(0, 1));
  const auto f00 = detail::polar_factor(m(0, 0));
  const double half_ratio = 0.5 * log_binomial_ratio(n, k, l);

  CompensatedComplexSum acc;
  const std::int64_t q_lo = std::max<std::int64_t>(0, l - (n - k));
  for (std::int64_t q = q_lo; q <= l; ++q) {
    const std::int64_t e11 = q;
    const std::int64_t e10 = k - q;
    const std::int64_t e01 = l - q;
    const std::int64_t e00 = n - k - l + q;
    if ((f11.zero && e11 > 0) || (f10.zero && e10 > 0) || (f01.zero && e01 > 0) || (f00.zero && e00 > 0)) continue;
    double log_mag = half_ratio + log_binomial(k, q) + log_binomial(n - k, l - q);
    cplx phase{1.0, 0.0};
    if (e11 > 0) { log_mag += e11 * f11.log_abs; phase *= ipow(f11.unit, e11); }
    if (e10 > 0) { log_mag += e10 * f10.log_abs; phase *= ipow(f10.unit, e10); }
    if (e01 > 0) { log_mag += e01 * f01.log_abs; phase *= ipow(f01.unit, e01); }
    if (e00 > 0) { log_mag += e00 * f00.log_abs; phase *= ipow(f00.unit, e00); }
    acc.add(std::exp(log_mag) * phase);
  }
  return acc.value();
}

/// <Psi| M^{(x)n} |Psi> for a Dicke superposition.
inline cplx symmetric_expectation(const DickeSuperposition& state, const ComplexMatrix2& m) {
  const auto d = static_cast<std::int64_t>(state.dimension());
  CompensatedComplexSum acc;
  for (std::int64_t i = 0; i < d; ++i) {
    const cplx ci = std::conj(state.coeffs[i]);
    if (ci == 0.0) continue;
    for (std::int64_t j = 0; j < d; ++j) {
      const cplx cj = state.coeffs[j];
      if (cj == 0.0) continue;
      acc.add(ci * cj * dicke_matrix_element(m, state.n_particles, state.offset + i, state.offset + j));
    }
  }
  return acc.value();
}

/// Branching amplitudes |n,k> = b0 |0>|n-1,k> + b1 |1>|n-1,k-1>.
inline double branch_amplitude(std::int64_t n, std::int64_t k, int bit) {
  if (k < 0 || k > n) return 0.0;
  return bit == 0 ? std::sqrt(static_cast<double>(n - k) / static_cast<double>(n))
                  : std::sqrt(static_cast<double>(k) / static_cast<double>(n));
}

/// <Psi| M (x) I^{(n-1)} |Psi>: single-particle expectation on a symmetric state.
inline cplx single_particle_expectation(const DickeSuperposition& state, const ComplexMatrix2& m) {
  const auto d = static_cast<std::int64_t>(state.dimension());
  const std::int64_t n = state.n_particles;
  CompensatedComplexSum acc;
  for (std::int64_t a = 0; a < d; ++a) {
    for (std::int64_t b = 0; b < d; ++b) {
      const std::int64_t k = state.offset + a;
      const std::int64_t l = state.offset + b;
      for (int i = 0; i < 2; ++i) {
        const int j = static_cast<int>(l - (k - i));
        if (j < 0 || j > 1) continue;
        acc.add(std::conj(state.coeffs[a]) * state.coeffs[b] * branch_amplitude(n, k, i) * branch_amplitude(n, l, j) *
                m(i, j));
      }
    }
  }
  return acc.value();
}

}  // namespace macrobell
