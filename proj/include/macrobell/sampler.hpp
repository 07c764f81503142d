#pragma once

// Exact Monte Carlo sampling of collective measurement records on Dicke
// superpositions, one particle at a time, plus the statistics used to check
// convergence (KS distance, chi-square, variance-scaling exponent).

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "macrobell/dicke.hpp"
#include "macrobell/errors.hpp"
#include "macrobell/finite.hpp"
#include "macrobell/numeric.hpp"
#include "macrobell/povm.hpp"
#include "macrobell/rng.hpp"

namespace macrobell {

struct SampleBatch {
  std::vector<double> values;
  std::int64_t n_particles = 0;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
};

struct SamplerOptions {
  /// Largest Dicke window of the reduced state. Half-mode states keep the
  /// window at d; one-mode states widen it by one per measured particle.
  std::size_t max_window = 64;
  unsigned threads = 0;
};

inline constexpr std::int64_t kMaxSampledParticles = 1'000'000;

namespace detail {

/// Reduced state of the unmeasured particles: rho_kl over Dicke indices lo..hi.
class ReducedState {
 public:
  ReducedState(const DickeSuperposition& s, std::size_t max_window)
      : n_(s.n_particles), lo_(s.offset), hi_(s.offset + static_cast<std::int64_t>(s.dimension()) - 1), cap_(max_window) {
    const std::size_t w = s.dimension();
    if (w > cap_) throw Error(Errc::CapExceeded, "state dimension exceeds the sampler window");
    rho_.assign(cap_ * cap_, 0.0);
    next_.assign(cap_ * cap_, 0.0);
    for (std::size_t k = 0; k < w; ++k)
      for (std::size_t l = 0; l < w; ++l) rho_[k * cap_ + l] = s.coeffs[k] * std::conj(s.coeffs[l]);
  }

  /// Measures one particle; returns the index of the drawn outcome.
  std::size_t measure(const SingleParticlePovm& povm, double u) {
    const std::int64_t nlo = std::max<std::int64_t>(lo_ - 1, 0);
    const std::int64_t nhi = std::min<std::int64_t>(hi_, n_ - 1);
    if (static_cast<std::size_t>(nhi - nlo + 1) > cap_) {
      throw Error(Errc::CapExceeded, "reduced-state window exceeds " + std::to_string(cap_));
    }

    // tr T_ij with T_ij = sum_kl rho_kl b_i(k) b_j(l) |k-i><l-j|.
    cplx tr[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (std::int64_t k = lo_; k <= hi_; ++k) {
      for (int i = 0; i < 2; ++i) {
        const std::int64_t kk = k - i;
        if (kk < nlo || kk > nhi) continue;
        const double bi = branch_amplitude(n_, k, i);
        if (bi == 0.0) continue;
        for (int j = 0; j < 2; ++j) {
          const std::int64_t l = kk + j;
          if (l < lo_ || l > hi_) continue;
          tr[i][j] += bi * branch_amplitude(n_, l, j) * at(k, l);
        }
      }
    }

    std::size_t pick = povm.size() - 1;
    double cum = 0.0;
    for (std::size_t a = 0; a < povm.size(); ++a) {
      const auto& e = povm.effects()[a];
      double p = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) p += (e(j, i) * tr[i][j]).real();
      probs_[a] = std::max(0.0, p);
      cum += probs_[a];
    }
    double target = u * cum;
    for (std::size_t a = 0; a < povm.size(); ++a) {
      if (target < probs_[a]) {
        pick = a;
        break;
      }
      target -= probs_[a];
    }

    const auto& e = povm.effects()[pick];
    const std::int64_t nw = nhi - nlo + 1;
    std::fill(next_.begin(), next_.begin() + static_cast<std::ptrdiff_t>(nw * static_cast<std::int64_t>(cap_)), cplx(0.0));
    for (std::int64_t k = lo_; k <= hi_; ++k)
      for (int i = 0; i < 2; ++i) {
        const std::int64_t kk = k - i;
        if (kk < nlo || kk > nhi) continue;
        const double bi = branch_amplitude(n_, k, i);
        if (bi == 0.0) continue;
        for (std::int64_t l = lo_; l <= hi_; ++l)
          for (int j = 0; j < 2; ++j) {
            const std::int64_t ll = l - j;
            if (ll < nlo || ll > nhi) continue;
            next_[static_cast<std::size_t>(kk - nlo) * cap_ + static_cast<std::size_t>(ll - nlo)] +=
                e(j, i) * bi * branch_amplitude(n_, l, j) * at(k, l);
          }
      }
    const double norm = probs_[pick] > 0.0 ? 1.0 / probs_[pick] : 0.0;
    for (std::int64_t a = 0; a < nw; ++a)
      for (std::int64_t b = 0; b < nw; ++b) next_[a * cap_ + b] *= norm;
    std::swap(rho_, next_);
    lo_ = nlo;
    hi_ = nhi;
    --n_;
    return pick;
  }

  void reserve_outcomes(std::size_t m) { probs_.assign(m, 0.0); }

 private:
  cplx at(std::int64_t k, std::int64_t l) const {
    return rho_[static_cast<std::size_t>(k - lo_) * cap_ + static_cast<std::size_t>(l - lo_)];
  }

  std::int64_t n_;
  std::int64_t lo_;
  std::int64_t hi_;
  std::size_t cap_;
  std::vector<cplx> rho_;
  std::vector<cplx> next_;
  std::vector<double> probs_;
};

}  // namespace detail

/// Intensity sum_i a_i of one measurement record, drawn from the stream.
inline double sample_intensity(const DickeSuperposition& state, const SingleParticlePovm& povm, PhiloxStream& rng,
                               std::size_t max_window = 64) {
  detail::ReducedState rho(state, max_window);
  rho.reserve_outcomes(povm.size());
  CompensatedSum intensity;
  for (std::int64_t q = 0; q < state.n_particles; ++q) intensity.add(povm.outcomes()[rho.measure(povm, rng.uniform())]);
  return intensity.value();
}

/// n_samples i.i.d. draws of X = (I - N mu) / (tau N^alpha). Sample i uses
/// Philox stream (seed, i), so the batch does not depend on the thread count.
inline SampleBatch sample_outcomes(const DickeSuperposition& state, const SingleParticlePovm& povm,
                                   const DerivedParams& params, double alpha, std::size_t n_samples, std::uint64_t seed,
                                   const SamplerOptions& opts = {}) {
  if (state.n_particles > kMaxSampledParticles) throw Error(Errc::CapExceeded, "sampler is limited to N <= 10^6");
  if (state.dimension() > 16) throw Error(Errc::CapExceeded, "sampler is limited to d <= 16");
  SampleBatch batch{std::vector<double>(n_samples), state.n_particles, seed, n_samples};
  const double n = static_cast<double>(state.n_particles);
  const double scale = params.tau * std::pow(n, alpha);
  parallel_for(n_samples, opts.threads, [&](std::size_t i) {
    PhiloxStream rng(seed, i);
    batch.values[i] = (sample_intensity(state, povm, rng, opts.max_window) - n * params.mu) / scale;
  });
  return batch;
}

/// sup_x |F_emp(x) - F(x)|, checking both one-sided limits at every sample value.
inline double ks_distance(std::vector<double> values, const std::function<double(double)>& cdf,
                          const std::vector<double>& extra_points = {}) {
  if (values.empty()) throw Error(Errc::InvalidArgument, "empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size();) {
    std::size_t j = i;
    while (j < values.size() && values[j] == values[i]) ++j;
    const double v = values[i];
    d = std::max(d, std::abs(static_cast<double>(j) / n - cdf(v)));
    d = std::max(d, std::abs(static_cast<double>(i) / n - cdf(std::nextafter(v, -INFINITY))));
    i = j;
  }
  // Jumps of a discrete reference CDF away from the sample points.
  for (double x : extra_points) {
    const auto below = static_cast<double>(std::lower_bound(values.begin(), values.end(), x) - values.begin());
    const auto upto = static_cast<double>(std::upper_bound(values.begin(), values.end(), x) - values.begin());
    d = std::max(d, std::abs(upto / n - cdf(x)));
    d = std::max(d, std::abs(below / n - cdf(std::nextafter(x, -INFINITY))));
  }
  return d;
}

/// Right-continuous CDF of a lattice PMF.
inline std::function<double(double)> pmf_cdf(const LatticePmf& pmf) {
  std::vector<double> cum(pmf.probs.size());
  CompensatedSum s;
  for (std::size_t i = 0; i < cum.size(); ++i) {
    s.add(pmf.probs[i]);
    cum[i] = s.value();
  }
  return [values = pmf.values, cum](double x) {
    const auto it = std::upper_bound(values.begin(), values.end(), x);
    if (it == values.begin()) return 0.0;
    return std::min(1.0, cum[static_cast<std::size_t>(it - values.begin()) - 1]);
  };
}

/// Index of the lattice value within 1e-9 (relative) of x, or -1.
inline std::ptrdiff_t lattice_index(const LatticePmf& pmf, double x) {
  const double tol = 1e-9 * (1.0 + std::abs(x));
  const auto it = std::lower_bound(pmf.values.begin(), pmf.values.end(), x - tol);
  if (it == pmf.values.end() || std::abs(*it - x) > tol) return -1;
  return it - pmf.values.begin();
}

/// Samples are snapped onto the lattice first, so rounding in X never splits a jump.
inline double ks_distance(std::vector<double> values, const LatticePmf& pmf) {
  for (auto& v : values) {
    const auto i = lattice_index(pmf, v);
    if (i >= 0) v = pmf.values[static_cast<std::size_t>(i)];
  }
  return ks_distance(std::move(values), pmf_cdf(pmf), pmf.values);
}

/// sup_x |F_pmf(x) - F(x)| for a lattice PMF against a continuous CDF.
inline double ks_distance(const LatticePmf& pmf, const std::function<double(double)>& cdf) {
  CompensatedSum cum;
  double d = 0.0;
  for (std::size_t i = 0; i < pmf.values.size(); ++i) {
    const double f = cdf(pmf.values[i]);
    d = std::max(d, std::abs(cum.value() - f));
    cum.add(pmf.probs[i]);
    d = std::max(d, std::abs(cum.value() - f));
  }
  return d;
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Pearson test of samples against a lattice PMF; adjacent bins are pooled
/// until each expected count is >= min_expected.
inline ChiSquareResult chi_square_test(const std::vector<double>& values, const LatticePmf& pmf, double min_expected = 5.0) {
  if (values.empty()) throw Error(Errc::InvalidArgument, "empty sample");
  std::vector<double> observed(pmf.values.size(), 0.0);
  for (double x : values) {
    const auto i = lattice_index(pmf, x);
    if (i < 0) return {INFINITY, 0, 0.0};
    observed[static_cast<std::size_t>(i)] += 1.0;
  }
  const double n = static_cast<double>(values.size());
  std::vector<double> obs_bins, exp_bins;
  double o = 0.0, e = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o += observed[i];
    e += n * pmf.probs[i];
    if (e >= min_expected) {
      obs_bins.push_back(o);
      exp_bins.push_back(e);
      o = e = 0.0;
    }
  }
  if (e > 0.0 || o > 0.0) {
    if (exp_bins.empty()) {
      obs_bins.push_back(o);
      exp_bins.push_back(e);
    } else {
      obs_bins.back() += o;
      exp_bins.back() += e;
    }
  }
  ChiSquareResult r;
  for (std::size_t i = 0; i < obs_bins.size(); ++i) {
    if (exp_bins[i] <= 0.0) {
      if (obs_bins[i] > 0.0) return {INFINITY, 0, 0.0};
      continue;
    }
    r.statistic += (obs_bins[i] - exp_bins[i]) * (obs_bins[i] - exp_bins[i]) / exp_bins[i];
  }
  r.dof = static_cast<int>(obs_bins.size()) - 1;
  if (r.dof < 1) return {r.statistic, r.dof, 1.0};
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), r.statistic));
  return r;
}

/// beta from the least-squares slope of log Var(I) against log N, halved.
/// Returns -inf when the intensity is deterministic for some N.
inline double scaling_exponent(const std::function<DickeSuperposition(std::int64_t)>& family,
                               const SingleParticlePovm& povm, const std::vector<std::int64_t>& n_list,
                               const FiniteOptions& opts = {}) {
  if (n_list.size() < 4) throw Error(Errc::InvalidArgument, "need at least 4 particle numbers");
  std::vector<double> lx, ly;
  for (std::int64_t n : n_list) {
    const auto m = moments(intensity_pmf(family(n), povm, opts), 2);
    const double var = m.central[2];
    if (var <= 1e-10 * std::max(1.0, m.raw[2])) return -std::numeric_limits<double>::infinity();
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(var));
  }
  const double k = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / k;
    my += ly[i] / k;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return 0.5 * sxy / sxx;
}

}  // namespace macrobell
