#pragma once

// Robustness: particle loss, depolarizing / dephasing channels absorbed into
// the single-particle POVM, and bounded classical noise on the macroscopic
// variable.

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "macrobell/bell.hpp"
#include "macrobell/dicke.hpp"
#include "macrobell/errors.hpp"
#include "macrobell/limit.hpp"
#include "macrobell/numeric.hpp"
#include "macrobell/povm.hpp"

namespace macrobell {

enum class NoiseShape { Uniform, TruncatedGaussian };

struct NoiseSpec {
  double loss_p = 1.0;
  double depol_lambda = 0.0;
  double dephase_lambda = 0.0;
  double classical_eps = 0.0;
  NoiseShape classical_shape = NoiseShape::Uniform;
};

/// Standard deviation of the truncated Gaussian, relative to its bound.
inline constexpr double kTruncatedGaussianSigma = 0.5;

inline constexpr double kDivergentWidth = 1e12;

inline void check_loss_p(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw Error(Errc::InvalidP, "loss probability must lie in (0, 1]");
}

/// s_p^2 = sigma^2 / (p^3 tau^2) - 1.
inline double loss_width(const DerivedParams& params, double p) {
  check_loss_p(p);
  if (p == 1.0) return params.s2;
  const double s2 = params.sigma2 / (p * p * p * params.tau * params.tau) - 1.0;
  if (!(s2 <= kDivergentWidth)) throw Error(Errc::Divergent, "loss width exceeds 1e12");
  return s2;
}

/// chi_p(t) = <Psi| Acal_p^{(x)N} |Psi>, Acal_p = sum_a E_a (1 - p + p e^{it(a - mu)/(p tau sqrt N)}).
inline cplx loss_char_fn_finite(const DickeSuperposition& state, const SingleParticlePovm& povm,
                                const DerivedParams& params, double p, double t) {
  check_loss_p(p);
  if (t == 0.0) return {1.0, 0.0};
  const double scale = p * params.tau * std::sqrt(static_cast<double>(state.n_particles));
  ComplexMatrix2 m = ComplexMatrix2::Zero();
  for (std::size_t j = 0; j < povm.size(); ++j) {
    m += (1.0 - p + p * std::polar(1.0, t * (povm.outcomes()[j] - params.mu) / scale)) * povm.effects()[j];
  }
  return symmetric_expectation(state, m);
}

/// Mean and second raw moment from central differences of a characteristic function.
struct CharFnMoments {
  double mean = 0.0;
  double second = 0.0;
};

inline CharFnMoments moments_from_char_fn(const std::function<cplx(double)>& chi, double h = 1e-3) {
  const cplx plus = chi(h);
  const cplx minus = chi(-h);
  return {(plus - minus).imag() / (2.0 * h), -(plus + minus - 2.0).real() / (h * h)};
}

namespace detail {

inline void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(Errc::InvalidArgument, "channel parameter must lie in [0, 1]");
}

inline SingleParticlePovm revalidate(const SingleParticlePovm& povm, std::vector<ComplexMatrix2> effects) {
  try {
    return validate_povm(povm.outcomes(), std::move(effects));
  } catch (const Error& e) {
    throw Error(Errc::NumericFailure, std::string("adjoint channel broke POVM validity: ") + e.what());
  }
}

}  // namespace detail

/// E_a -> (1 - lambda) E_a + (lambda / 2) tr(E_a) I.
inline SingleParticlePovm depolarize_povm(const SingleParticlePovm& povm, double lambda) {
  detail::check_lambda(lambda);
  std::vector<ComplexMatrix2> out;
  for (const auto& e : povm.effects()) out.push_back((1.0 - lambda) * e + 0.5 * lambda * e.trace() * ComplexMatrix2::Identity());
  return detail::revalidate(povm, std::move(out));
}

/// E_a -> (1 - lambda) E_a + lambda Z E_a Z.
inline SingleParticlePovm dephase_povm(const SingleParticlePovm& povm, double lambda) {
  detail::check_lambda(lambda);
  const ComplexMatrix2 z = pauli_z();
  std::vector<ComplexMatrix2> out;
  for (const auto& e : povm.effects()) out.push_back((1.0 - lambda) * e + lambda * z * e * z);
  return detail::revalidate(povm, std::move(out));
}

struct EffectiveLimit {
  double mu = 0.0;
  double tau = 0.0;
  double sigma2 = 0.0;
  double s2 = 0.0;
  double phi = 0.0;
};

/// Closed-form width and phase of the limit POVM after depolarizing, then
/// dephasing, then loss:
///   A00 -> (1-lp) A00 + lp trA/2,  A2_00 -> (1-lp) A2_00 + lp trA2/2,
///   tau -> (1-lp) |1-2ld| tau,     phi -> phi + pi when ld > 1/2,
///   s'^2 = sigma'^2 / (p^3 tau'^2) - 1.
inline EffectiveLimit noisy_limit_params(const SingleParticlePovm& povm, const NoiseSpec& noise,
                                         AlphaMode mode = AlphaMode::Half) {
  detail::check_lambda(noise.depol_lambda);
  detail::check_lambda(noise.dephase_lambda);
  check_loss_p(noise.loss_p);
  if (noise.depol_lambda >= 1.0 - 1e-12) throw Error(Errc::SingularChannel, "fully depolarizing channel");
  if (std::abs(noise.dephase_lambda - 0.5) <= 1e-12) throw Error(Errc::SingularChannel, "dephasing at lambda = 1/2 erases the off-diagonal");

  const auto base = derive_params(povm, mode);
  const double lp = noise.depol_lambda;
  const double ld = noise.dephase_lambda;
  const double tr_a = base.A.trace().real();
  const double tr_a2 = base.A2.trace().real();
  const double a00 = (1.0 - lp) * base.A(0, 0).real() + 0.5 * lp * tr_a;
  const double a2_00 = (1.0 - lp) * base.A2(0, 0).real() + 0.5 * lp * tr_a2;

  EffectiveLimit out;
  out.mu = mode == AlphaMode::Half ? a00 : 0.5 * tr_a;
  out.tau = (1.0 - lp) * std::abs(1.0 - 2.0 * ld) * base.tau;
  out.sigma2 = std::max(0.0, a2_00 - a00 * a00);
  const double p3 = noise.loss_p * noise.loss_p * noise.loss_p;
  out.s2 = std::max(0.0, out.sigma2 / (p3 * out.tau * out.tau) - 1.0);
  if (!(out.s2 <= kDivergentWidth)) throw Error(Errc::Divergent, "effective width exceeds 1e12");
  out.phi = ld > 0.5 ? wrap_angle(base.phi + kPi) : base.phi;
  return out;
}

namespace detail {

inline double uniform_spacing(const std::vector<double>& g) {
  if (g.size() < 3) throw Error(Errc::InvalidArgument, "grid needs at least 3 points");
  const double h = (g.back() - g.front()) / static_cast<double>(g.size() - 1);
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (std::abs(g[i] - g[i - 1] - h) > 1e-9 * h) throw Error(Errc::InvalidArgument, "classical noise needs a uniform grid");
  }
  return h;
}

/// Kernel weights for offsets j h, j = -m..m: Simpson weights times the noise
/// density, so that moments up to order 3 of the kernel are exact.
inline std::vector<double> noise_kernel(int m, double h, double eps, NoiseShape shape) {
  std::vector<double> w(static_cast<std::size_t>(2 * m + 1));
  const double sig = kTruncatedGaussianSigma * eps;
  CompensatedSum total;
  for (int j = -m; j <= m; ++j) {
    const int i = j + m;
    const double simpson = (i == 0 || i == 2 * m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double u = j * h;
    const double dens = shape == NoiseShape::Uniform ? 1.0 / (2.0 * eps) : std::exp(-0.5 * u * u / (sig * sig));
    w[i] = simpson * h / 3.0 * dens;
    total.add(w[i]);
  }
  for (auto& v : w) v /= total.value();
  return w;
}

inline std::vector<double> convolve_uniform(const std::vector<double>& f, const std::vector<double>& kernel) {
  const std::size_t m = kernel.size() / 2;
  std::vector<double> g(f.size() + 2 * m, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 0.0;
    // g(x_i) = sum_j w_j f(x_i - j h); f index = i - m - j.
    for (std::size_t jj = 0; jj < kernel.size(); ++jj) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(jj);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(f.size())) continue;
      s += kernel[jj] * f[static_cast<std::size_t>(src)];
    }
    g[i] = s;
  }
  return g;
}

/// Half-width m (even) in grid steps and the step that makes eps = m h exactly.
inline std::pair<int, double> kernel_steps(double eps, double h) {
  const double ratio = eps / h;
  const long even = 2 * std::lround(ratio / 2.0);
  if (even >= 2 && std::abs(ratio - static_cast<double>(even)) <= 1e-9 * ratio) return {static_cast<int>(even), h};
  const int m = 2 * static_cast<int>(std::ceil(ratio / 2.0));
  return {m, eps / m};
}

}  // namespace detail

/// Density of x + r with r bounded by eps, independent of x. The support
/// grows by eps on each side. When eps is not an even multiple of the grid
/// step the density is first resampled by cubic B-spline onto a finer grid.
inline GridDensity convolve_classical_noise(const GridDensity& density, double eps, NoiseShape shape = NoiseShape::Uniform) {
  if (density.domain != Domain::RealLine) throw Error(Errc::InvalidArgument, "classical noise applies to real-line densities");
  if (eps < 0.0) throw Error(Errc::InvalidArgument, "noise bound must be non-negative");
  if (eps == 0.0) return density;
  const double h = detail::uniform_spacing(density.grid);
  const auto [m, step] = detail::kernel_steps(eps, h);

  std::vector<double> f = density.density;
  double x0 = density.grid.front();
  if (step != h) {
    boost::math::interpolators::cardinal_cubic_b_spline<double> spline(density.density.begin(), density.density.end(), x0, h);
    const double x1 = density.grid.back();
    const auto n = static_cast<std::size_t>(std::floor((x1 - x0) / step + 1e-9)) + 1;
    f.resize(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = std::max(0.0, spline(x0 + step * static_cast<double>(i)));
  }
  const auto kernel = detail::noise_kernel(m, step, eps, shape);
  GridDensity out;
  out.domain = Domain::RealLine;
  out.density = detail::convolve_uniform(f, kernel);
  out.grid.resize(out.density.size());
  for (std::size_t i = 0; i < out.grid.size(); ++i) out.grid[i] = x0 - m * step + step * static_cast<double>(i);
  return out;
}

inline GridDensity convolve_classical_noise(const GridDensity& density, const NoiseSpec& noise) {
  return convolve_classical_noise(density, noise.classical_eps, noise.classical_shape);
}

/// Independent classical noise on both parties of a joint density (grid step must divide eps evenly).
inline JointDensity convolve_joint_classical_noise(const JointDensity& joint, double eps, NoiseShape shape = NoiseShape::Uniform) {
  if (eps == 0.0) return joint;
  const double hx = detail::uniform_spacing(joint.x);
  const double hy = detail::uniform_spacing(joint.y);
  const auto [mx, sx] = detail::kernel_steps(eps, hx);
  const auto [my, sy] = detail::kernel_steps(eps, hy);
  if (sx != hx || sy != hy) throw Error(Errc::InvalidArgument, "joint noise needs eps to be an even multiple of the grid step");
  const auto kx = detail::noise_kernel(mx, hx, eps, shape);
  const auto ky = detail::noise_kernel(my, hy, eps, shape);

  const std::size_t nx = joint.x.size(), ny = joint.y.size();
  const std::size_t ny2 = ny + 2 * my, nx2 = nx + 2 * mx;
  std::vector<double> rows(nx * ny2);
  std::vector<double> line(ny);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) line[j] = joint.at(i, j);
    const auto g = detail::convolve_uniform(line, ky);
    std::copy(g.begin(), g.end(), rows.begin() + static_cast<std::ptrdiff_t>(i * ny2));
  }
  JointDensity out;
  out.x.resize(nx2);
  out.y.resize(ny2);
  for (std::size_t i = 0; i < nx2; ++i) out.x[i] = joint.x.front() - mx * hx + hx * static_cast<double>(i);
  for (std::size_t j = 0; j < ny2; ++j) out.y[j] = joint.y.front() - my * hy + hy * static_cast<double>(j);
  out.density.assign(nx2 * ny2, 0.0);
  std::vector<double> col(nx);
  for (std::size_t j = 0; j < ny2; ++j) {
    for (std::size_t i = 0; i < nx; ++i) col[i] = rows[i * ny2 + j];
    const auto g = detail::convolve_uniform(col, kx);
    for (std::size_t i = 0; i < nx2; ++i) out.density[i * ny2 + j] = g[i];
  }
  return out;
}

/// E_r[sgn(u + r + g)] with g ~ N(0, s^2) and r the bounded classical noise.
/// Odd in u; this is the effective response of one sign-binned party.
inline double noisy_sign_response(double u, double s, double eps, NoiseShape shape) {
  const double rt2 = std::sqrt(2.0);
  auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
  if (eps == 0.0) return s == 0.0 ? sgn(u) : std::erf(u / (s * rt2));

  if (shape == NoiseShape::Uniform) {
    if (s == 0.0) return std::clamp(u / eps, -1.0, 1.0);
    if (eps < 1e-6 * s) return std::erf(u / (s * rt2));
    // int erf = z erf(z) + e^{-z^2}/sqrt(pi).
    auto prim = [](double z) { return z * std::erf(z) + std::exp(-z * z) / std::sqrt(kPi); };
    const double zp = (u + eps) / (s * rt2);
    const double zm = (u - eps) / (s * rt2);
    return s * rt2 / (2.0 * eps) * (prim(zp) - prim(zm));
  }

  const double sig = kTruncatedGaussianSigma * eps;
  const double mass = std::erf(eps / (sig * rt2));
  // P(r <= v) for the truncated Gaussian.
  auto cdf = [&](double v) {
    if (v <= -eps) return 0.0;
    if (v >= eps) return 1.0;
    return 0.5 + 0.5 * std::erf(v / (sig * rt2)) / mass;
  };
  if (s == 0.0) return 2.0 * cdf(u) - 1.0;

  // Outside |u + r| < 8 s the erf is +-1 to double precision.
  const double lo = std::max(-eps, -u - 8.0 * s);
  const double hi = std::min(eps, -u + 8.0 * s);
  double result = (1.0 - cdf(hi)) - cdf(lo);
  if (hi > lo) {
    using Rule = boost::math::quadrature::gauss<double, 20>;
    const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / (0.5 * s))));
    const double norm = 1.0 / (sig * std::sqrt(2.0 * kPi) * mass);
    auto integrand = [&](double r) { return std::erf((u + r) / (s * rt2)) * norm * std::exp(-0.5 * r * r / (sig * sig)); };
    for (int p = 0; p < panels; ++p) {
      const double a = lo + (hi - lo) * p / panels;
      const double b = lo + (hi - lo) * (p + 1) / panels;
      result += Rule::integrate(integrand, a, b);
    }
  }
  return result;
}

/// Overlap table of the noisy sign response.
inline OverlapTable noisy_sign_table(int k_max, double s, double eps, NoiseShape shape) {
  if (s < 0.0 || eps < 0.0) throw Error(Errc::InvalidArgument, "widths must be non-negative");
  if (eps == 0.0) return smeared_sign_overlap_table(k_max, s);
  std::vector<double> kinks;
  if (s == 0.0) kinks.push_back(eps);
  const double panel = std::min(0.25, std::max(0.02, std::min(s > 0.0 ? s : eps, eps)));
  return odd_response_table(k_max, [=](double u) { return noisy_sign_response(u, s, eps, shape); }, kinks, panel);
}

struct SweepCell {
  double s = 0.0;
  double eps = 0.0;
  double chsh = 0.0;
  BellAngles angles;
};

struct SweepResult {
  std::vector<double> s_grid;
  std::vector<double> eps_grid;
  std::vector<SweepCell> cells;  // eps-major: cells[e * s_grid.size() + i]
  /// Per eps row: first s at which CHSH falls to 2 (linear interpolation), NaN if none.
  std::vector<double> crossing_s;
  /// Per eps row: CHSH non-increasing in s (to 1e-9).
  std::vector<bool> monotone_in_s;

  const SweepCell& at(std::size_t e, std::size_t i) const { return cells[e * s_grid.size() + i]; }
};

/// Optimal CHSH per (s, eps) cell, both parties with width s and classical
/// noise bound eps. Each cell re-optimizes the angles.
inline SweepResult noisy_chsh_sweep(const std::vector<cplx>& coeffs, const std::vector<double>& s_grid,
                                    const std::vector<double>& eps_grid, NoiseShape shape = NoiseShape::Uniform,
                                    unsigned threads = 0) {
  detail::check_schmidt(coeffs);
  for (double v : s_grid)
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::InvalidArgument, "s grid must be finite and non-negative");
  for (double v : eps_grid)
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::InvalidArgument, "eps grid must be finite and non-negative");
  const int k_max = static_cast<int>(coeffs.size()) - 1;

  SweepResult r{s_grid, eps_grid, std::vector<SweepCell>(s_grid.size() * eps_grid.size()), {}, {}};
  parallel_for(r.cells.size(), threads, [&](std::size_t idx) {
    const std::size_t e = idx / s_grid.size();
    const std::size_t i = idx % s_grid.size();
    const auto table = noisy_sign_table(k_max, s_grid[i], eps_grid[e], shape);
    const auto opt = optimize_chsh_series(CorrelatorSeries(coeffs, table, table));
    r.cells[idx] = {s_grid[i], eps_grid[e], opt.value, opt.angles};
  });

  for (std::size_t e = 0; e < eps_grid.size(); ++e) {
    double cross = std::numeric_limits<double>::quiet_NaN();
    bool mono = true;
    for (std::size_t i = 0; i + 1 < s_grid.size(); ++i) {
      const double v0 = r.at(e, i).chsh;
      const double v1 = r.at(e, i + 1).chsh;
      if (v1 > v0 + 1e-9) mono = false;
      if (std::isnan(cross) && v0 > 2.0 && v1 <= 2.0) {
        cross = s_grid[i] + (s_grid[i + 1] - s_grid[i]) * (v0 - 2.0) / (v0 - v1);
      }
    }
    r.crossing_s.push_back(cross);
    r.monotone_in_s.push_back(mono);
  }
  return r;
}

/// The same CHSH value through the joint density: smeared bipartite density,
/// classical noise on each party, then sign binning of each correlator.
inline double noisy_chsh_density_route(const std::vector<cplx>& coeffs, const BellAngles& angles, double s, double eps,
                                       NoiseShape shape, const std::vector<double>& grid, unsigned threads = 0) {
  BellConfig cfg{coeffs, angles, s, s};
  double value = 0.0;
  const Pair pairs[4] = {Pair::AB, Pair::ABp, Pair::ApB, Pair::ApBp};
  for (int q = 0; q < 4; ++q) {
    const auto joint = convolve_joint_classical_noise(bipartite_density_alpha_half(cfg, pairs[q], grid, grid, threads), eps, shape);
    value += (q == 3 ? -1.0 : 1.0) * sign_binned_correlation(joint);
  }
  return value;
}

}  // namespace macrobell
