#pragma once

// Analytic limit laws of the macroscopic variable.
//
// alpha = 1/2: Dicke states map to oscillator number states and a coarse-
// grained POVM maps to U_phi^dag e_s(x) U_phi, so
//   P(x) = sum_{kl} conj(c_k e^{ik phi}) c_l e^{il phi} (G_s * <k|.><.|l>)(x).
// alpha = 1: a rotor on theta in [0, pi] with x = cos(theta).

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "macrobell/errors.hpp"
#include "macrobell/hermite.hpp"
#include "macrobell/numeric.hpp"
#include "macrobell/povm.hpp"

namespace macrobell {

enum class Domain { RealLine, RotorHalfCircle };

struct GridDensity {
  std::vector<double> grid;
  std::vector<double> density;
  Domain domain = Domain::RealLine;

  double integral() const { return trapezoid(grid, density); }
};

/// CDF of the piecewise-linear interpolant of a grid density, renormalized to 1.
class GridCdf {
 public:
  explicit GridCdf(const GridDensity& d) : grid_(d.grid), dens_(d.density), cum_(d.grid.size(), 0.0) {
    for (std::size_t i = 1; i < grid_.size(); ++i) {
      cum_[i] = cum_[i - 1] + 0.5 * (grid_[i] - grid_[i - 1]) * (dens_[i] + dens_[i - 1]);
    }
    total_ = cum_.back();
  }

  double operator()(double x) const {
    if (x <= grid_.front()) return 0.0;
    if (x >= grid_.back()) return 1.0;
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - grid_.begin()) - 1;
    const double h = grid_[i + 1] - grid_[i];
    const double f = dens_[i] + (dens_[i + 1] - dens_[i]) * (x - grid_[i]) / h;
    return (cum_[i] + 0.5 * (x - grid_[i]) * (dens_[i] + f)) / total_;
  }

 private:
  std::vector<double> grid_;
  std::vector<double> dens_;
  std::vector<double> cum_;
  double total_ = 1.0;
};

struct LimitState {
  std::vector<cplx> coeffs{1.0};
  /// Phase of U_phi = e^{i phi k} in the limit POVM.
  double phi = 0.0;
  /// Gaussian width s of e_s(x).
  double width = 0.0;
};

/// Limit state for alpha = 1/2 with the limit-law phase arg(A01) = params.phi + pi.
/// (The half-mode params.phi = arg(-A01) belongs to the (-it) form of the
/// limit characteristic function; in the Born form it mirrors x.)
inline LimitState limit_state_alpha_half(const DerivedParams& params, std::vector<cplx> coeffs) {
  return {std::move(coeffs), wrap_angle(params.phi + kPi), std::sqrt(params.s2)};
}

inline LimitState limit_state_alpha_one(const DerivedParams& params, std::vector<cplx> coeffs) {
  return {std::move(coeffs), params.phi, 0.0};
}

/// x in [-L, L], L = (12 + 2 k_max) sqrt(1 + s^2).
inline std::vector<double> default_real_grid(int k_max, double width = 0.0, std::size_t points = 4001) {
  const double half = (12.0 + 2.0 * k_max) * std::sqrt(1.0 + width * width);
  return linspace(-half, half, points);
}

inline std::vector<double> default_theta_grid(std::size_t points = 2001) { return linspace(0.0, kPi, points); }

/// F_kl(x) = int G_s(x - x') <k|x'><x'|l> dx' for k, l <= k_max, row-major.
/// The Gaussian factors are combined analytically, leaving a polynomial that
/// Gauss-Hermite integrates exactly.
inline void smeared_overlaps(int k_max, double s, double x, std::vector<double>& out, int nodes = kDefaultHermiteNodes) {
  const int d = k_max + 1;
  out.assign(static_cast<std::size_t>(d * d), 0.0);
  std::vector<double> p(d);
  if (s == 0.0) {
    normalized_hermite_all(k_max, x, p.data());
    const double g = std::exp(-0.5 * x * x);
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l) out[k * d + l] = p[k] * p[l] * g;
    return;
  }
  const double s2 = s * s;
  const double mean = x / (1.0 + s2);
  const double sd = std::sqrt(s2 / (1.0 + s2));
  const double pref = std::exp(-0.5 * x * x / (1.0 + s2)) / std::sqrt(2.0 * kPi * (1.0 + s2));
  if (pref == 0.0) return;
  const auto& rule = gauss_hermite_rule(nodes);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    normalized_hermite_all(k_max, mean + sd * rule.nodes[i], p.data());
    const double w = rule.weights[i] * pref;
    for (int k = 0; k < d; ++k) {
      const double wk = w * p[k];
      for (int l = k; l < d; ++l) out[k * d + l] += wk * p[l];
    }
  }
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < k; ++l) out[k * d + l] = out[l * d + k];
}

namespace detail {

inline void check_boundary(const GridDensity& d, double tol = 1e-10) {
  if (d.density.front() > tol || d.density.back() > tol) {
    throw Error(Errc::GridTooNarrow, "density at the grid boundary exceeds " + std::to_string(tol));
  }
}

inline std::vector<cplx> phased(const std::vector<cplx>& c, double phi) {
  std::vector<cplx> a(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) a[k] = c[k] * std::polar(1.0, static_cast<double>(k) * phi);
  return a;
}

}  // namespace detail

inline GridDensity limit_density_alpha_half(const LimitState& state, const std::vector<double>& grid,
                                            unsigned threads = 0) {
  if (state.width < 0.0) throw Error(Errc::InvalidArgument, "width must be non-negative");
  const int k_max = static_cast<int>(state.coeffs.size()) - 1;
  const int d = k_max + 1;
  const auto a = detail::phased(state.coeffs, state.phi);
  GridDensity out{grid, std::vector<double>(grid.size()), Domain::RealLine};
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    std::vector<double> f;
    smeared_overlaps(k_max, state.width, grid[i], f);
    CompensatedSum s;
    for (int k = 0; k < d; ++k) {
      s.add(std::norm(a[k]) * f[k * d + k]);
      for (int l = k + 1; l < d; ++l) s.add(2.0 * (std::conj(a[k]) * a[l]).real() * f[k * d + l]);
    }
    out.density[i] = std::max(0.0, s.value());
  });
  detail::check_boundary(out);
  return out;
}

/// Fourier transform int P(x) e^{itx} dx of limit_density_alpha_half:
/// e^{-(1+s^2) t^2/2} sum_{kl} conj(a_k) a_l sum_q sqrt(k! l!)/(q!(k-q)!(l-q)!) (it)^{k+l-2q}.
inline cplx limit_charfn_alpha_half(const LimitState& state, double t) {
  if (t == 0.0) return {1.0, 0.0};
  const auto a = detail::phased(state.coeffs, state.phi);
  const int d = static_cast<int>(a.size());
  CompensatedComplexSum acc;
  for (int k = 0; k < d; ++k) {
    for (int l = 0; l < d; ++l) {
      CompensatedComplexSum inner;
      for (int q = 0; q <= std::min(k, l); ++q) {
        const double coef = std::sqrt(factorial(k) * factorial(l)) / (factorial(q) * factorial(k - q) * factorial(l - q));
        inner.add(coef * ipow(cplx(0.0, t), k + l - 2 * q));
      }
      acc.add(std::conj(a[k]) * a[l] * inner.value());
    }
  }
  return std::exp(-0.5 * (1.0 + state.width * state.width) * t * t) * acc.value();
}

/// Same, with the width given through sigma/tau = sqrt(1 + s^2).
inline cplx limit_charfn_alpha_half(std::vector<cplx> coeffs, double phi, double sigma_over_tau, double t) {
  if (sigma_over_tau < 1.0) throw Error(Errc::InvalidArgument, "sigma/tau must be at least 1");
  return limit_charfn_alpha_half(LimitState{std::move(coeffs), phi, std::sqrt(sigma_over_tau * sigma_over_tau - 1.0)}, t);
}

/// P(theta) = sum_{kl} e^{-ik phi} conj(c_k) c_l e^{il phi} (e^{-i(k-l)theta} + e^{i(k-l)theta}) / (2 pi).
inline GridDensity limit_density_alpha_one(const std::vector<cplx>& coeffs, double phi, const std::vector<double>& theta_grid) {
  const auto a = detail::phased(coeffs, phi);
  const int d = static_cast<int>(a.size());
  GridDensity out{theta_grid, std::vector<double>(theta_grid.size()), Domain::RotorHalfCircle};
  for (std::size_t i = 0; i < theta_grid.size(); ++i) {
    CompensatedSum s;
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l) {
        // (k,l) and (l,k) terms are conjugate, so only the real part survives.
        s.add((std::conj(a[k]) * a[l]).real() * 2.0 * std::cos((k - l) * theta_grid[i]) / (2.0 * kPi));
      }
    const double v = s.value();
    if (v < -1e-10) throw Error(Errc::NegativeDensity, "rotor density is negative", i);
    out.density[i] = std::max(0.0, v);
  }
  return out;
}

/// Rotor density pushed forward to x = cos(theta) (with the 1/|sin theta|
/// Jacobian). Endpoints theta = 0, pi are dropped; a non-zero density there
/// means an integrable singularity at x = +-1, which is flagged.
struct RotorPushforward {
  GridDensity x_density;
  bool singular_at_minus_one = false;
  bool singular_at_plus_one = false;
};

inline RotorPushforward rotor_pushforward(const GridDensity& rotor) {
  if (rotor.domain != Domain::RotorHalfCircle) throw Error(Errc::InvalidArgument, "expected a rotor density");
  RotorPushforward out;
  out.x_density.domain = Domain::RealLine;
  const auto& th = rotor.grid;
  for (std::size_t i = th.size(); i-- > 0;) {
    const double sn = std::sin(th[i]);
    if (sn <= 1e-12) continue;
    out.x_density.grid.push_back(std::cos(th[i]));
    out.x_density.density.push_back(rotor.density[i] / sn);
  }
  out.singular_at_plus_one = th.front() <= 1e-12 && rotor.density.front() > 1e-12;
  out.singular_at_minus_one = th.back() >= kPi - 1e-12 && rotor.density.back() > 1e-12;
  return out;
}

/// CDF of x = cos(theta) from a rotor density.
inline double rotor_x_cdf(const GridCdf& theta_cdf, double x) {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return 1.0 - theta_cdf(std::acos(x));
}

/// Max |LHS - RHS| over x_grid for the Hermite product identity with
/// alpha^2 = beta^2 + gamma^2:
///   G_alpha(x) sum_s (1/s!) C(m+n-2s, n-s) (gamma/alpha)^{m+n-2s} He_{m+n-2s}(x/alpha)/(m+n-2s)!
///     = int G_beta(x-x') G_gamma(x') He_m(x'/gamma) He_n(x'/gamma) / (m! n!) dx'.
/// The right side is integrated by Gauss-Hermite after completing the square.
inline double verify_hermite_lemma(int m, int n, double beta, double gamma, const std::vector<double>& x_grid,
                                   int nodes = kDefaultHermiteNodes) {
  if (n > m || n < 0) throw Error(Errc::InvalidArgument, "need 0 <= n <= m");
  if (beta <= 0.0 || gamma <= 0.0) throw Error(Errc::InvalidArgument, "beta and gamma must be positive");
  const double alpha = std::hypot(beta, gamma);
  const auto& rule = gauss_hermite_rule(nodes);
  // He_j / j! is Nielsen's generalized polynomial at a = 1/2.
  auto scaled_hermite = [](int j, double x) { return hermite(j, x) / factorial(j); };
  double worst = 0.0;
  for (double x : x_grid) {
    const double g_alpha = std::exp(-0.5 * x * x / (alpha * alpha)) / (std::sqrt(2.0 * kPi) * alpha);
    CompensatedSum lhs;
    for (int s = 0; s <= n; ++s) {
      const int j = m + n - 2 * s;
      lhs.add(binomial(j, n - s) / factorial(s) * std::pow(gamma / alpha, j) * scaled_hermite(j, x / alpha));
    }
    const double cond_mean = x * gamma * gamma / (alpha * alpha);
    const double cond_sd = beta * gamma / alpha;
    CompensatedSum rhs;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double xp = (cond_mean + cond_sd * rule.nodes[i]) / gamma;
      rhs.add(rule.weights[i] * scaled_hermite(m, xp) * scaled_hermite(n, xp));
    }
    const double diff = g_alpha * (lhs.value() - rhs.value() / std::sqrt(2.0 * kPi));
    worst = std::max(worst, std::abs(diff));
  }
  return worst;
}

}  // namespace macrobell
