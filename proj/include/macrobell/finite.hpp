#pragma once

// Exact finite-N statistics of the macroscopic variable on Dicke
// superpositions: characteristic function, lattice PMF and moments.

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "macrobell/dicke.hpp"
#include "macrobell/errors.hpp"
#include "macrobell/numeric.hpp"
#include "macrobell/povm.hpp"

namespace macrobell {

struct LatticePmf {
  std::vector<double> values;  // strictly increasing
  std::vector<double> probs;
};

/// Outcomes written as a_min + index * step.
struct OutcomeLattice {
  double a_min = 0.0;
  double step = 1.0;
  std::vector<std::int64_t> index;
  std::int64_t max_index = 0;
};

struct FiniteOptions {
  /// Largest admissible number of intensity lattice points (N * steps + 1).
  std::int64_t max_lattice = std::int64_t{1} << 22;
  /// Largest number of lattice steps between outcomes.
  std::int64_t max_outcome_steps = 4096;
  unsigned threads = 0;
};

inline OutcomeLattice outcome_lattice(const std::vector<double>& outcomes, std::int64_t max_steps) {
  OutcomeLattice lat;
  lat.a_min = *std::min_element(outcomes.begin(), outcomes.end());
  const double a_max = *std::max_element(outcomes.begin(), outcomes.end());
  const double span = a_max - lat.a_min;
  const double tol = 1e-9;

  // Approximate real gcd of the offsets by Euclid with a relative tolerance.
  double g = span;
  for (double a : outcomes) {
    double d = a - lat.a_min;
    if (d <= tol * span) continue;
    double x = std::max(g, d);
    double y = std::min(g, d);
    while (y > tol * span) {
      const double r = std::fmod(x, y);
      x = y;
      y = (r > y - tol * span) ? 0.0 : r;
    }
    g = x;
    if (span / g > static_cast<double>(max_steps)) {
      throw Error(Errc::OffLattice, "outcomes are not commensurate on a lattice with <= " + std::to_string(max_steps) + " steps");
    }
  }
  lat.max_index = std::llround(span / g);
  lat.step = span / static_cast<double>(lat.max_index);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const double r = (outcomes[i] - lat.a_min) / lat.step;
    const auto j = std::llround(r);
    if (std::abs(r - static_cast<double>(j)) > 1e-7) {
      throw Error(Errc::OffLattice, "outcome " + std::to_string(i) + " is off the lattice", i);
    }
    lat.index.push_back(j);
  }
  return lat;
}

/// Exact PMF of the intensity I = sum_i a_i, on the full lattice
/// N a_min + m step, m = 0..N*steps. Obtained by evaluating the generating
/// function at the discrete Fourier nodes and inverting.
inline LatticePmf intensity_pmf(const DickeSuperposition& state, const SingleParticlePovm& povm,
                                const FiniteOptions& opts = {}) {
  const auto lat = outcome_lattice(povm.outcomes(), opts.max_outcome_steps);
  const std::int64_t n = state.n_particles;
  if (lat.max_index > 0 && n > (opts.max_lattice - 1) / lat.max_index) {
    throw Error(Errc::CapExceeded, "intensity lattice exceeds the configured cap");
  }
  const std::int64_t support = n * lat.max_index + 1;
  std::int64_t fft_size = 2;
  while (fft_size < support) fft_size <<= 1;

  std::vector<cplx> gen(static_cast<std::size_t>(fft_size));
  const std::int64_t half = fft_size / 2;
  parallel_for(static_cast<std::size_t>(half + 1), opts.threads, [&](std::size_t r) {
    const double omega = 2.0 * kPi * static_cast<double>(r) / static_cast<double>(fft_size);
    ComplexMatrix2 m = ComplexMatrix2::Zero();
    for (std::size_t j = 0; j < povm.size(); ++j) {
      m += std::polar(1.0, omega * static_cast<double>(lat.index[j])) * povm.effects()[j];
    }
    gen[r] = r == 0 ? cplx(1.0, 0.0) : symmetric_expectation(state, m);
  });
  for (std::int64_t r = half + 1; r < fft_size; ++r) gen[r] = std::conj(gen[fft_size - r]);

  Eigen::FFT<double> fft;
  std::vector<cplx> raw;
  fft.fwd(raw, gen);

  LatticePmf pmf;
  pmf.values.resize(static_cast<std::size_t>(support));
  pmf.probs.resize(static_cast<std::size_t>(support));
  const double inv = 1.0 / static_cast<double>(fft_size);
  for (std::int64_t m = 0; m < fft_size; ++m) {
    const cplx p = raw[m] * inv;
    if (std::abs(p.imag()) > 1e-10) throw Error(Errc::NumericFailure, "complex probability from Fourier inversion");
    if (m >= support) {
      if (std::abs(p.real()) > 1e-10) throw Error(Errc::NumericFailure, "probability mass outside the lattice support");
      continue;
    }
    double v = p.real();
    if (v < 0.0) {
      if (v < -1e-12) throw Error(Errc::NumericFailure, "negative probability " + std::to_string(v));
      v = 0.0;
    }
    pmf.values[m] = static_cast<double>(n) * lat.a_min + static_cast<double>(m) * lat.step;
    pmf.probs[m] = v;
  }
  const double total = compensated_sum(pmf.probs);
  for (auto& p : pmf.probs) p /= total;
  return pmf;
}

/// Maps intensities to X = (I - N mu) / (tau N^alpha).
inline LatticePmf to_macroscopic(LatticePmf intensity, std::int64_t n, const DerivedParams& params, double alpha) {
  const double scale = params.tau * std::pow(static_cast<double>(n), alpha);
  for (auto& v : intensity.values) v = (v - static_cast<double>(n) * params.mu) / scale;
  return intensity;
}

inline LatticePmf pmf_finite(const DickeSuperposition& state, const SingleParticlePovm& povm,
                             const DerivedParams& params, double alpha, const FiniteOptions& opts = {}) {
  return to_macroscopic(intensity_pmf(state, povm, opts), state.n_particles, params, alpha);
}

/// chi(t) = <Psi| Acal^{(x)N} |Psi>, Acal = sum_a E_a exp(i t (a - mu) / (N^alpha tau)).
inline cplx char_fn_finite(const DickeSuperposition& state, const SingleParticlePovm& povm,
                           const DerivedParams& params, double alpha, double t) {
  if (t == 0.0) return {1.0, 0.0};
  const double scale = params.tau * std::pow(static_cast<double>(state.n_particles), alpha);
  ComplexMatrix2 m = ComplexMatrix2::Zero();
  for (std::size_t j = 0; j < povm.size(); ++j) {
    m += std::polar(1.0, t * (povm.outcomes()[j] - params.mu) / scale) * povm.effects()[j];
  }
  return symmetric_expectation(state, m);
}

/// Parameters for the nonlinear variable: mu replaced by the state's own mean outcome.
inline DerivedParams nonlinear_params(DerivedParams params, const DickeSuperposition& state,
                                      const SingleParticlePovm& povm) {
  params.mu = single_particle_expectation(state, outcome_moment_matrices(povm).first).real();
  return params;
}

struct Moments {
  std::vector<double> raw;      // E[X^r]
  std::vector<double> central;  // E[(X - E X)^r]
};

inline Moments moments(const LatticePmf& pmf, int order) {
  if (order < 0 || order > 4) throw Error(Errc::InvalidArgument, "moment order must be in [0, 4]");
  Moments m;
  m.raw.assign(order + 1, 0.0);
  m.central.assign(order + 1, 0.0);
  for (int r = 0; r <= order; ++r) {
    CompensatedSum s;
    for (std::size_t i = 0; i < pmf.values.size(); ++i) s.add(pmf.probs[i] * std::pow(pmf.values[i], r));
    m.raw[r] = s.value();
  }
  const double mean = order >= 1 ? m.raw[1] : 0.0;
  for (int r = 0; r <= order; ++r) {
    CompensatedSum s;
    for (std::size_t i = 0; i < pmf.values.size(); ++i) s.add(pmf.probs[i] * std::pow(pmf.values[i] - mean, r));
    m.central[r] = s.value();
  }
  return m;
}

inline Moments moments_finite(const DickeSuperposition& state, const SingleParticlePovm& povm,
                              const DerivedParams& params, double alpha, int order, const FiniteOptions& opts = {}) {
  return moments(pmf_finite(state, povm, params, alpha, opts), order);
}

/// Total variation distance between two lattice PMFs, matching values to 1e-9 relative.
inline double total_variation(const LatticePmf& a, const LatticePmf& b) {
  std::size_t i = 0, j = 0;
  CompensatedSum s;
  auto same = [](double x, double y) { return std::abs(x - y) <= 1e-9 * (1.0 + std::abs(x)); };
  while (i < a.values.size() || j < b.values.size()) {
    if (j >= b.values.size() || (i < a.values.size() && !same(a.values[i], b.values[j]) && a.values[i] < b.values[j])) {
      s.add(std::abs(a.probs[i++]));
    } else if (i >= a.values.size() || (!same(a.values[i], b.values[j]) && b.values[j] < a.values[i])) {
      s.add(std::abs(b.probs[j++]));
    } else {
      s.add(std::abs(a.probs[i++] - b.probs[j++]));
    }
  }
  return 0.5 * s.value();
}

}  // namespace macrobell
