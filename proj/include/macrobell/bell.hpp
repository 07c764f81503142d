#pragma once

// Bipartite limit correlations for Schmidt-diagonal states sum_k c_k |k>|k>.
// alpha = 1/2: sign-binned phase-space measurements, CHSH evaluation and
// optimization. alpha = 1: the rotor joint and its local hidden-variable model.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "macrobell/errors.hpp"
#include "macrobell/hermite.hpp"
#include "macrobell/limit.hpp"
#include "macrobell/numeric.hpp"

namespace macrobell {

inline constexpr int kMaxSchmidtRank = 16;

/// Real symmetric (k_max+1)^2 table, row-major.
struct OverlapTable {
  int dim = 0;
  std::vector<double> v;

  double operator()(int k, int l) const { return v[static_cast<std::size_t>(k * dim + l)]; }
  double& operator()(int k, int l) { return v[static_cast<std::size_t>(k * dim + l)]; }
};

/// t_kl = int h(x) <k|x><x|l> dx for an odd response h (|h| <= 1). Entries with
/// k + l even vanish exactly; the others are 2 int_0^inf by composite
/// Gauss-Legendre, with panel edges forced at the given kinks of h.
inline OverlapTable odd_response_table(int k_max, const std::function<double(double)>& h,
                                       std::vector<double> kinks = {}, double panel = 0.25) {
  if (k_max < 0) throw Error(Errc::InvalidArgument, "k_max must be non-negative");
  using Rule = boost::math::quadrature::gauss<double, 20>;
  const int d = k_max + 1;
  const double cutoff = 16.0 + 2.0 * k_max;

  std::vector<double> edges{0.0};
  kinks.push_back(cutoff);
  std::sort(kinks.begin(), kinks.end());
  for (double k : kinks) {
    if (k <= edges.back() || k > cutoff) continue;
    const int pieces = std::max(1, static_cast<int>(std::ceil((k - edges.back()) / panel)));
    const double a = edges.back();
    for (int j = 1; j <= pieces; ++j) edges.push_back(a + (k - a) * j / pieces);
  }

  // Gauss-Legendre abscissae are stored for x >= 0 only.
  std::vector<double> xs, ws;
  const auto& ab = Rule::abscissa();
  const auto& wt = Rule::weights();
  for (std::size_t p = 1; p < edges.size(); ++p) {
    const double c = 0.5 * (edges[p] + edges[p - 1]);
    const double r = 0.5 * (edges[p] - edges[p - 1]);
    for (std::size_t i = 0; i < ab.size(); ++i) {
      const int copies = ab[i] == 0.0 ? 1 : 2;
      for (int s = 0; s < copies; ++s) {
        const double z = s == 0 ? ab[i] : -ab[i];
        xs.push_back(c + r * z);
        ws.push_back(r * wt[i]);
      }
    }
  }

  OverlapTable t{d, std::vector<double>(static_cast<std::size_t>(d * d), 0.0)};
  std::vector<double> p(d);
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(d * d));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    normalized_hermite_all(k_max, xs[i], p.data());
    const double w = 2.0 * ws[i] * h(xs[i]) * std::exp(-0.5 * xs[i] * xs[i]);
    for (int k = 0; k < d; ++k)
      for (int l = k + 1; l < d; l += 2) acc[k * d + l].add(w * p[k] * p[l]);
  }
  for (int k = 0; k < d; ++k)
    for (int l = k + 1; l < d; l += 2) t(k, l) = t(l, k) = acc[k * d + l].value();
  return t;
}

/// i_kl = int sgn(x) <k|x><x|l> dx.
inline OverlapTable sign_overlap_table(int k_max, double panel = 0.25) {
  return odd_response_table(k_max, [](double) { return 1.0; }, {}, panel);
}

/// i_kl for the Gaussian-smeared sign: int erf(x / (s sqrt 2)) <k|x><x|l> dx.
inline OverlapTable smeared_sign_overlap_table(int k_max, double s) {
  if (s < 0.0) throw Error(Errc::InvalidArgument, "width must be non-negative");
  if (s == 0.0) return sign_overlap_table(k_max);
  const double scale = 1.0 / (s * std::sqrt(2.0));
  return odd_response_table(k_max, [scale](double x) { return std::erf(x * scale); }, {}, std::min(0.25, s));
}

enum class Pair { AB, ABp, ApB, ApBp };

struct BellAngles {
  double a = 0.0;
  double a_prime = 0.0;
  double b = 0.0;
  double b_prime = 0.0;
};

struct BellConfig {
  std::vector<cplx> schmidt_coeffs;
  BellAngles angles;
  double width_a = 0.0;
  double width_b = 0.0;
};

namespace detail {

inline void check_schmidt(const std::vector<cplx>& c) {
  if (c.empty() || static_cast<int>(c.size()) > kMaxSchmidtRank) {
    throw Error(Errc::InvalidArgument, "Schmidt rank must be in [1, 16]");
  }
  double n2 = 0.0;
  for (const auto& z : c) n2 += std::norm(z);
  if (std::abs(n2 - 1.0) > 1e-12) throw Error(Errc::InvalidArgument, "Schmidt coefficients are not normalized");
}

inline std::pair<double, double> pair_angles(const BellAngles& g, Pair p) {
  switch (p) {
    case Pair::AB: return {g.a, g.b};
    case Pair::ABp: return {g.a, g.b_prime};
    case Pair::ApB: return {g.a_prime, g.b};
    case Pair::ApBp: return {g.a_prime, g.b_prime};
  }
  return {0.0, 0.0};
}

}  // namespace detail

/// <A B> = sum_kl conj(c_k) c_l e^{i(l-k) Phi} t_kl, Phi = phi_A + phi_B, with
/// t_kl the product of the two parties' overlap entries.
inline double correlation_at(const std::vector<cplx>& c, const OverlapTable& ta, const OverlapTable& tb, double total_phase) {
  const int d = static_cast<int>(c.size());
  CompensatedSum s;
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      const double t = ta(k, l) * tb(k, l);
      if (t == 0.0) continue;
      s.add(t * (std::conj(c[k]) * c[l] * std::polar(1.0, (l - k) * total_phase)).real());
    }
  return s.value();
}

/// Precomputed Fourier form of the correlator: C(Phi) = sum_m (re_m cos m Phi - im_m sin m Phi).
class CorrelatorSeries {
 public:
  CorrelatorSeries(const std::vector<cplx>& c, const OverlapTable& ta, const OverlapTable& tb) {
    const int d = static_cast<int>(c.size());
    coef_.assign(static_cast<std::size_t>(d), cplx(0.0, 0.0));
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l) {
        const double t = ta(k, l) * tb(k, l);
        if (t == 0.0) continue;
        const int m = l - k;
        // Pair (k,l) with (l,k): conj(c_k) c_l e^{im Phi} + c.c.
        if (m > 0) coef_[m] += 2.0 * t * std::conj(c[k]) * c[l];
        if (m == 0) coef_[0] += t * std::norm(c[k]);
      }
  }

  double operator()(double phase) const {
    double v = coef_.empty() ? 0.0 : coef_[0].real();
    for (std::size_t m = 1; m < coef_.size(); ++m) {
      v += (coef_[m] * std::polar(1.0, static_cast<double>(m) * phase)).real();
    }
    return v;
  }

 private:
  std::vector<cplx> coef_;
};

inline double correlator(const BellConfig& cfg, Pair which) {
  detail::check_schmidt(cfg.schmidt_coeffs);
  if (cfg.width_a < 0.0 || cfg.width_b < 0.0) throw Error(Errc::InvalidArgument, "widths must be non-negative");
  const int k_max = static_cast<int>(cfg.schmidt_coeffs.size()) - 1;
  const auto ta = smeared_sign_overlap_table(k_max, cfg.width_a);
  const auto tb = cfg.width_b == cfg.width_a ? ta : smeared_sign_overlap_table(k_max, cfg.width_b);
  const auto [pa, pb] = detail::pair_angles(cfg.angles, which);
  return correlation_at(cfg.schmidt_coeffs, ta, tb, pa + pb);
}

struct ChshResult {
  double value = 0.0;
  std::array<double, 4> correlators{};  // AB, AB', A'B, A'B'
};

inline ChshResult chsh_from_series(const CorrelatorSeries& corr, const BellAngles& g) {
  ChshResult r;
  r.correlators = {corr(g.a + g.b), corr(g.a + g.b_prime), corr(g.a_prime + g.b), corr(g.a_prime + g.b_prime)};
  r.value = r.correlators[0] + r.correlators[1] + r.correlators[2] - r.correlators[3];
  return r;
}

inline ChshResult chsh_detail(const BellConfig& cfg) {
  detail::check_schmidt(cfg.schmidt_coeffs);
  const int k_max = static_cast<int>(cfg.schmidt_coeffs.size()) - 1;
  const auto ta = smeared_sign_overlap_table(k_max, cfg.width_a);
  const auto tb = cfg.width_b == cfg.width_a ? ta : smeared_sign_overlap_table(k_max, cfg.width_b);
  return chsh_from_series(CorrelatorSeries(cfg.schmidt_coeffs, ta, tb), cfg.angles);
}

inline double chsh_value(const BellConfig& cfg) { return chsh_detail(cfg).value; }

struct ChshOptimum {
  BellAngles angles;
  double value = 0.0;
};

/// Maximizes CHSH over the four angles: exhaustive search on a grid of step
/// `step` over [0, 2 pi), then coordinate descent with Brent line searches on
/// [x - step, x + step]. Ties on the grid go to the lexicographically smallest
/// (a, a', b, b').
inline ChshOptimum optimize_chsh_series(const CorrelatorSeries& corr, double step = kPi / 36.0) {
  const int m = static_cast<int>(std::lround(2.0 * kPi / step));
  std::vector<double> table(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) table[i] = corr(i * step);
  auto at = [&](int i) { return table[static_cast<std::size_t>(i % m)]; };

  // For fixed (a, a') the best b and the best b' are independent.
  int best[4] = {0, 0, 0, 0};
  double best_val = -INFINITY;
  for (int a = 0; a < m; ++a) {
    for (int ap = 0; ap < m; ++ap) {
      int bb = 0, bbp = 0;
      double vb = -INFINITY, vbp = -INFINITY;
      for (int b = 0; b < m; ++b) {
        const double x = at(a + b) + at(ap + b);
        if (x > vb + 1e-12) { vb = x; bb = b; }
        const double y = at(a + b) - at(ap + b);
        if (y > vbp + 1e-12) { vbp = y; bbp = b; }
      }
      if (vb + vbp > best_val + 1e-12) {
        best_val = vb + vbp;
        best[0] = a; best[1] = ap; best[2] = bb; best[3] = bbp;
      }
    }
  }

  std::array<double, 4> x = {best[0] * step, best[1] * step, best[2] * step, best[3] * step};
  auto objective = [&](const std::array<double, 4>& v) {
    return chsh_from_series(corr, BellAngles{v[0], v[1], v[2], v[3]}).value;
  };
  double val = objective(x);
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double before = val;
    for (int c = 0; c < 4; ++c) {
      auto line = [&](double t) {
        auto y = x;
        y[c] = t;
        return -objective(y);
      };
      const auto [t, neg] = boost::math::tools::brent_find_minima(line, x[c] - step, x[c] + step, 52);
      if (-neg > val) {
        x[c] = t;
        val = -neg;
      }
    }
    if (val - before < 1e-10) break;
  }
  return {BellAngles{x[0], x[1], x[2], x[3]}, val};
}

inline ChshOptimum optimize_chsh(const std::vector<cplx>& coeffs, double width_a = 0.0, double width_b = 0.0) {
  detail::check_schmidt(coeffs);
  const int k_max = static_cast<int>(coeffs.size()) - 1;
  const auto ta = smeared_sign_overlap_table(k_max, width_a);
  const auto tb = width_b == width_a ? ta : smeared_sign_overlap_table(k_max, width_b);
  return optimize_chsh_series(CorrelatorSeries(coeffs, ta, tb));
}

/// Joint density on x_grid x y_grid, row-major in x.
struct JointDensity {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> density;

  double at(std::size_t i, std::size_t j) const { return density[i * y.size() + j]; }
};

/// P(x, y) = sum_kl conj(a_k) a_l F^A_kl(x) F^B_kl(y), a_k = c_k e^{ik(phi_A + phi_B)},
/// F the Gaussian-smeared oscillator overlaps of each party.
inline JointDensity bipartite_density_alpha_half(const std::vector<cplx>& coeffs, double phi_a, double phi_b,
                                                 double width_a, double width_b, const std::vector<double>& x_grid,
                                                 const std::vector<double>& y_grid, unsigned threads = 0) {
  detail::check_schmidt(coeffs);
  const int k_max = static_cast<int>(coeffs.size()) - 1;
  const int d = k_max + 1;
  std::vector<cplx> a(coeffs.size());
  for (int k = 0; k < d; ++k) a[k] = coeffs[k] * std::polar(1.0, k * (phi_a + phi_b));

  auto overlaps = [&](const std::vector<double>& grid, double s) {
    std::vector<std::vector<double>> out(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) { smeared_overlaps(k_max, s, grid[i], out[i]); });
    return out;
  };
  const auto fa = overlaps(x_grid, width_a);
  const auto fb = overlaps(y_grid, width_b);

  // Only (k,l) pairs survive with weight conj(a_k) a_l; fold (k,l) with (l,k).
  std::vector<double> w(static_cast<std::size_t>(d * d), 0.0);
  for (int k = 0; k < d; ++k) {
    w[k * d + k] = std::norm(a[k]);
    for (int l = k + 1; l < d; ++l) w[k * d + l] = 2.0 * (std::conj(a[k]) * a[l]).real();
  }

  JointDensity out{x_grid, y_grid, std::vector<double>(x_grid.size() * y_grid.size())};
  parallel_for(x_grid.size(), threads, [&](std::size_t i) {
    std::vector<double> wa(static_cast<std::size_t>(d * d));
    for (int k = 0; k < d; ++k)
      for (int l = k; l < d; ++l) wa[k * d + l] = w[k * d + l] * fa[i][k * d + l];
    for (std::size_t j = 0; j < y_grid.size(); ++j) {
      double v = 0.0;
      for (int k = 0; k < d; ++k)
        for (int l = k; l < d; ++l) v += wa[k * d + l] * fb[j][k * d + l];
      out.density[i * y_grid.size() + j] = std::max(0.0, v);
    }
  });

  const double tol = 1e-10;
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    if (out.at(i, 0) > tol || out.at(i, y_grid.size() - 1) > tol) throw Error(Errc::GridTooNarrow, "joint density at the y boundary");
  }
  for (std::size_t j = 0; j < y_grid.size(); ++j) {
    if (out.at(0, j) > tol || out.at(x_grid.size() - 1, j) > tol) throw Error(Errc::GridTooNarrow, "joint density at the x boundary");
  }
  return out;
}

inline JointDensity bipartite_density_alpha_half(const BellConfig& cfg, Pair which, const std::vector<double>& x_grid,
                                                 const std::vector<double>& y_grid, unsigned threads = 0) {
  const auto [pa, pb] = detail::pair_angles(cfg.angles, which);
  return bipartite_density_alpha_half(cfg.schmidt_coeffs, pa, pb, cfg.width_a, cfg.width_b, x_grid, y_grid, threads);
}

namespace detail {

/// Composite Simpson weights on a uniform grid with an even number of intervals.
inline std::vector<double> simpson_weights(std::size_t points, double h) {
  if (points < 3 || points % 2 == 0) throw Error(Errc::InvalidArgument, "Simpson needs an odd number of points >= 3");
  std::vector<double> w(points);
  for (std::size_t i = 0; i < points; ++i) w[i] = (i == 0 || i + 1 == points) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  for (auto& v : w) v *= h / 3.0;
  return w;
}

/// Weights for int sgn(x) f(x) dx on a uniform grid symmetric about 0: Simpson on
/// each half-line, with the kink at x = 0 a grid node.
inline std::vector<double> signed_simpson_weights(const std::vector<double>& g) {
  const std::size_t n = g.size();
  if (n % 2 == 0) throw Error(Errc::InvalidArgument, "sign binning needs 0 as the middle grid node");
  const std::size_t mid = n / 2;
  const double h = g[1] - g[0];
  if (std::abs(g[mid]) > 1e-12 * h) throw Error(Errc::InvalidArgument, "sign binning needs 0 as the middle grid node");
  const auto half = simpson_weights(mid + 1, h);
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i <= mid; ++i) {
    w[i] -= half[i];
    w[mid + i] += half[i];
  }
  return w;
}

}  // namespace detail

/// int int sgn(x) sgn(y) P(x, y) dx dy.
inline double sign_binned_correlation(const JointDensity& joint) {
  const auto wx = detail::signed_simpson_weights(joint.x);
  const auto wy = detail::signed_simpson_weights(joint.y);
  CompensatedSum s;
  for (std::size_t i = 0; i < joint.x.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < joint.y.size(); ++j) row += wy[j] * joint.at(i, j);
    s.add(wx[i] * row);
  }
  return s.value();
}

/// Marginal of x, integrating y by the trapezoid rule.
inline GridDensity marginal_x(const JointDensity& joint) {
  GridDensity m{joint.x, std::vector<double>(joint.x.size()), Domain::RealLine};
  std::vector<double> row(joint.y.size());
  for (std::size_t i = 0; i < joint.x.size(); ++i) {
    for (std::size_t j = 0; j < joint.y.size(); ++j) row[j] = joint.at(i, j);
    m.density[i] = trapezoid(joint.y, row);
  }
  return m;
}

/// d x d coefficient matrix c_kl of sum_kl c_kl |k>|l>, row-major.
struct TwoModeCoeffs {
  int dim = 0;
  std::vector<cplx> c;

  cplx operator()(int k, int l) const { return c[static_cast<std::size_t>(k * dim + l)]; }

  static TwoModeCoeffs diagonal(const std::vector<cplx>& schmidt) {
    const int d = static_cast<int>(schmidt.size());
    TwoModeCoeffs m{d, std::vector<cplx>(static_cast<std::size_t>(d * d))};
    for (int k = 0; k < d; ++k) m.c[k * d + k] = schmidt[k];
    return m;
  }
};

struct LocalModelResult {
  JointDensity quantum;
  JointDensity lhv;
  double max_abs_diff = 0.0;
  double total_variation = 0.0;
};

namespace detail {

inline double trapezoid_2d(const JointDensity& j, const std::vector<double>& f) {
  std::vector<double> row(j.y.size()), col(j.x.size());
  for (std::size_t a = 0; a < j.x.size(); ++a) {
    for (std::size_t b = 0; b < j.y.size(); ++b) row[b] = f[a * j.y.size() + b];
    col[a] = trapezoid(j.y, row);
  }
  return trapezoid(j.x, col);
}

}  // namespace detail

namespace detail {

inline std::vector<cplx> phased_two_mode(const TwoModeCoeffs& coeffs, double phi_a, double phi_b) {
  const int d = coeffs.dim;
  if (d < 1 || static_cast<int>(coeffs.c.size()) != d * d) throw Error(Errc::InvalidArgument, "coefficient matrix must be square");
  double n2 = 0.0;
  for (const auto& z : coeffs.c) n2 += std::norm(z);
  if (std::abs(n2 - 1.0) > 1e-12) throw Error(Errc::InvalidArgument, "coefficients are not normalized");
  std::vector<cplx> a(coeffs.c.size());
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) a[k * d + l] = coeffs(k, l) * std::polar(1.0, k * phi_a + l * phi_b);
  return a;
}

}  // namespace detail

/// Born-rule rotor joint on [0, pi]^2, expanded as
///   sum_{klk'l'} conj(a_kl) a_k'l' 2cos((k-k') th_A) 2cos((l-l') th_B) / (4 pi^2),
/// a_kl = c_kl e^{i(k phi_A + l phi_B)}.
inline JointDensity rotor_joint_quantum(const TwoModeCoeffs& coeffs, double phi_a, double phi_b,
                                        const std::vector<double>& theta_a, const std::vector<double>& theta_b) {
  const int d = coeffs.dim;
  const auto a = detail::phased_two_mode(coeffs, phi_a, phi_b);
  const int span = 2 * d - 1;
  // g(dk, dl) = sum over index pairs with k' - k = dk, l' - l = dl.
  std::vector<double> g(static_cast<std::size_t>(span * span), 0.0);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      for (int kp = 0; kp < d; ++kp)
        for (int lp = 0; lp < d; ++lp)
          g[(kp - k + d - 1) * span + (lp - l + d - 1)] += (std::conj(a[k * d + l]) * a[kp * d + lp]).real();

  auto cos_table = [&](const std::vector<double>& th) {
    std::vector<double> c(th.size() * span);
    for (std::size_t i = 0; i < th.size(); ++i)
      for (int m = 0; m < span; ++m) c[i * span + m] = 2.0 * std::cos((m - d + 1) * th[i]);
    return c;
  };
  const auto ca = cos_table(theta_a);
  const auto cb = cos_table(theta_b);
  JointDensity out{theta_a, theta_b, std::vector<double>(theta_a.size() * theta_b.size())};
  std::vector<double> ga(span);
  for (std::size_t i = 0; i < theta_a.size(); ++i) {
    for (int n = 0; n < span; ++n) {
      double s = 0.0;
      for (int m = 0; m < span; ++m) s += g[m * span + n] * ca[i * span + m];
      ga[n] = s;
    }
    for (std::size_t j = 0; j < theta_b.size(); ++j) {
      double s = 0.0;
      for (int n = 0; n < span; ++n) s += ga[n] * cb[j * span + n];
      out.density[i * theta_b.size() + j] = s / (4.0 * kPi * kPi);
    }
  }
  return out;
}

/// Hidden-variable joint: lambda = (p1, p2) with density
///   mu(p1, p2) = |(1/2pi) sum_kl e^{ik(phi_A - p1) + il(phi_B - p2)} c_kl|^2
/// and deterministic outcomes th = |p|, so P(th_A, th_B) = sum over signs of mu(+-th_A, +-th_B).
inline JointDensity rotor_joint_lhv(const TwoModeCoeffs& coeffs, double phi_a, double phi_b,
                                    const std::vector<double>& theta_a, const std::vector<double>& theta_b) {
  const int d = coeffs.dim;
  detail::phased_two_mode(coeffs, phi_a, phi_b);
  JointDensity out{theta_a, theta_b, std::vector<double>(theta_a.size() * theta_b.size())};
  // row[k] = sum_l c_kl e^{il(phi_B - p2)} for both signs of p2 = +-th_B.
  std::vector<cplx> eb(theta_b.size() * 2 * d);
  for (std::size_t j = 0; j < theta_b.size(); ++j)
    for (int s = 0; s < 2; ++s)
      for (int k = 0; k < d; ++k) {
        cplx v = 0.0;
        for (int l = 0; l < d; ++l) v += coeffs(k, l) * std::polar(1.0, l * (phi_b - (s ? -1.0 : 1.0) * theta_b[j]));
        eb[(j * 2 + s) * d + k] = v;
      }
  std::vector<cplx> ea(2 * d);
  for (std::size_t i = 0; i < theta_a.size(); ++i) {
    for (int s = 0; s < 2; ++s)
      for (int k = 0; k < d; ++k) ea[s * d + k] = std::polar(1.0, k * (phi_a - (s ? -1.0 : 1.0) * theta_a[i]));
    for (std::size_t j = 0; j < theta_b.size(); ++j) {
      double p = 0.0;
      for (int sa = 0; sa < 2; ++sa)
        for (int sb = 0; sb < 2; ++sb) {
          cplx amp = 0.0;
          for (int k = 0; k < d; ++k) amp += ea[sa * d + k] * eb[(j * 2 + sb) * d + k];
          p += std::norm(amp);
        }
      out.density[i * theta_b.size() + j] = p / (4.0 * kPi * kPi);
    }
  }
  return out;
}

inline LocalModelResult local_model_alpha_one(const TwoModeCoeffs& coeffs, double phi_a, double phi_b,
                                              const std::vector<double>& theta_a, const std::vector<double>& theta_b) {
  LocalModelResult r;
  r.quantum = rotor_joint_quantum(coeffs, phi_a, phi_b, theta_a, theta_b);
  r.lhv = rotor_joint_lhv(coeffs, phi_a, phi_b, theta_a, theta_b);
  std::vector<double> diff(r.quantum.density.size());
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff[i] = std::abs(r.quantum.density[i] - r.lhv.density[i]);
    r.max_abs_diff = std::max(r.max_abs_diff, diff[i]);
  }
  r.total_variation = 0.5 * detail::trapezoid_2d(r.quantum, diff);
  return r;
}

/// Largest |CHSH| over random +-1 binnings (i.i.d. and threshold) of the rotor outcomes and random
/// settings from the grid {j pi / (n_theta - 1)}. With trapezoid weights the
/// binned correlators are expectations under a discrete hidden-variable
/// model, so the bound 2 holds up to rounding.
inline double lhv_binning_chsh_max(const TwoModeCoeffs& coeffs, std::size_t n_theta, int trials, std::uint64_t seed) {
  const auto theta = linspace(0.0, kPi, n_theta);
  const double h = theta[1] - theta[0];
  std::vector<double> w(n_theta, h);
  w.front() = w.back() = 0.5 * h;
  const int settings = static_cast<int>(2 * (n_theta - 1));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_setting(0, settings - 1);
  std::bernoulli_distribution coin(0.5);

  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const double sa[2] = {pick_setting(rng) * h, pick_setting(rng) * h};
    const double sb[2] = {pick_setting(rng) * h, pick_setting(rng) * h};
    std::vector<double> bin_a[2], bin_b[2];
    // Even trials: i.i.d. bins. Odd trials: threshold bins +-sgn(theta0 - theta).
    auto fill = [&](std::vector<double>& bin) {
      bin.resize(n_theta);
      if (t % 2 == 0) {
        for (auto& v : bin) v = coin(rng) ? 1.0 : -1.0;
        return;
      }
      const std::size_t cut = static_cast<std::size_t>(pick_setting(rng)) % n_theta;
      const double sign = coin(rng) ? 1.0 : -1.0;
      for (std::size_t p = 0; p < n_theta; ++p) bin[p] = p < cut ? sign : -sign;
    };
    for (int s = 0; s < 2; ++s) {
      fill(bin_a[s]);
      fill(bin_b[s]);
    }
    double e[2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const auto joint = rotor_joint_quantum(coeffs, sa[i], sb[j], theta, theta);
        CompensatedSum s;
        for (std::size_t p = 0; p < n_theta; ++p)
          for (std::size_t q = 0; q < n_theta; ++q)
            s.add(w[p] * w[q] * bin_a[i][p] * bin_b[j][q] * joint.density[p * n_theta + q]);
        e[i][j] = s.value();
      }
    worst = std::max(worst, std::abs(e[0][0] + e[0][1] + e[1][0] - e[1][1]));
  }
  return worst;
}

}  // namespace macrobell
