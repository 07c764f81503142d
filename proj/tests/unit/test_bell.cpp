#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "macrobell/bell.hpp"
#include "macrobell/hermite.hpp"
#include "test_support.hpp"

using namespace macrobell;
using Catch::Approx;

namespace {

const std::vector<cplx> kReferenceState{2.0 / std::sqrt(10.0), 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(10.0)};
const double kReferenceChsh = 2.0 * std::sqrt(10.0) / kPi;

// 2 int_0^inf <k|x><x|l> dx by fine composite Simpson (odd k+l only).
double simpson_sign_overlap(int k, int l) {
  const int n = 40000;
  const double h = 40.0 / n;
  CompensatedSum s;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double x = i * h;
    s.add(w * oscillator_wavefunction(k, x) * oscillator_wavefunction(l, x));
  }
  return 2.0 * s.value() * h / 3.0;
}

// Max CHSH on the angle grid {j step}: for fixed (a, a') the b and b' terms separate.
double grid_chsh_max(const CorrelatorSeries& corr, int m) {
  const double step = 2.0 * kPi / m;
  std::vector<double> c(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) c[i] = corr(i * step);
  double best = -1e300;
  for (int a = 0; a < m; ++a)
    for (int ap = 0; ap < m; ++ap) {
      double plus = -1e300, minus = -1e300;
      for (int b = 0; b < m; ++b) {
        plus = std::max(plus, c[(a + b) % m] + c[(ap + b) % m]);
        minus = std::max(minus, c[(a + b) % m] - c[(ap + b) % m]);
      }
      best = std::max(best, plus + minus);
    }
  return best;
}

std::vector<double> sign_grid(double half, std::size_t points) { return linspace(-half, half, points); }

}  // namespace

TEST_CASE("sign overlaps: closed forms, parity zeros and the quadrature oracle") {
  const auto t = sign_overlap_table(6);
  CHECK(t(0, 1) == Approx(std::sqrt(2.0 / kPi)).epsilon(1e-12));
  CHECK(t(1, 0) == t(0, 1));
  CHECK(t(1, 2) == Approx(1.0 / std::sqrt(kPi)).epsilon(1e-12));
  for (int k = 0; k <= 6; ++k)
    for (int l = 0; l <= 6; ++l) {
      if ((k + l) % 2 == 0) {
        CHECK(t(k, l) == 0.0);
      } else {
        CHECK(t(k, l) == Approx(t(l, k)).epsilon(1e-15));
        CHECK(t(k, l) == Approx(simpson_sign_overlap(k, l)).margin(1e-10));
      }
    }
  const auto fine = sign_overlap_table(6, 0.125);
  for (std::size_t i = 0; i < t.v.size(); ++i) CHECK(std::abs(t.v[i] - fine.v[i]) <= 1e-10);
}

TEST_CASE("reference-state correlator is (sqrt5/pi) cos(phi_A + phi_B)") {
  for (double phase : {0.0, 0.4, kPi / 2.0, 2.0}) {
    const BellConfig cfg{kReferenceState, {phase, 0.0, 0.0, 0.0}};
    const double v = correlator(cfg, Pair::AB);
    if (phase == kPi / 2.0) {
      CHECK(std::abs(v) <= 1e-12);
    } else {
      CHECK(v == Approx(std::sqrt(5.0) / kPi * std::cos(phase)).epsilon(1e-10));
    }
  }
  const BellConfig vac{{1.0}, {0.3, 1.0, -0.2, 2.0}};
  CHECK(correlator(vac, Pair::AB) == 0.0);
  CHECK(chsh_value(vac) == 0.0);
}

TEST_CASE("correlator depends only on phi_A + phi_B") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = testing_support::random_coeffs(rng, 5);
    const double a = ang(rng), b = ang(rng), delta = ang(rng);
    const double v0 = correlator({c, {a, 0.0, b, 0.0}}, Pair::AB);
    const double v1 = correlator({c, {a + delta, 0.0, b - delta, 0.0}}, Pair::AB);
    CHECK(std::abs(v0 - v1) <= 1e-12);
  }
}

TEST_CASE("CHSH at the standard arrangement") {
  const BellConfig cfg{kReferenceState, {0.0, kPi / 2.0, -kPi / 4.0, kPi / 4.0}};
  CHECK(std::abs(chsh_value(cfg) - kReferenceChsh) <= 1e-9);
  const BellConfig same{kReferenceState, {0.3, 0.3, 0.3, 0.3}};
  const double ab = correlator(same, Pair::AB);
  CHECK(chsh_value(same) == Approx(2.0 * ab).epsilon(1e-12));
  CHECK(chsh_value(same) <= 2.0 * std::sqrt(5.0) / kPi + 1e-12);
}

TEST_CASE("optimize_chsh") {
  const auto best = optimize_chsh(kReferenceState);
  CHECK(best.value >= kReferenceChsh - 1e-6);
  CHECK(best.value <= kReferenceChsh + 1e-9);
  CHECK(std::abs(chsh_value({kReferenceState, best.angles}) - best.value) <= 1e-12);

  CHECK(optimize_chsh({1.0}).value == 0.0);

  const double r = 1.0 / std::sqrt(2.0);
  const auto two = optimize_chsh({r, r});
  CHECK(two.value == Approx(4.0 * std::sqrt(2.0) / kPi).epsilon(1e-9));
  const auto t = sign_overlap_table(1);
  const double oracle = grid_chsh_max(CorrelatorSeries({r, r}, t, t), 360);
  CHECK(two.value >= oracle - 1e-12);
  CHECK(two.value <= oracle + 1e-3);

  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 3; ++trial) {
    const auto c = testing_support::random_coeffs(rng, 4);
    const auto tt = sign_overlap_table(3);
    const double g = grid_chsh_max(CorrelatorSeries(c, tt, tt), 360);
    const double v = optimize_chsh(c).value;
    CHECK(v >= g - 1e-12);
    CHECK(v <= g + 1e-3);
  }
}

TEST_CASE("optimize_chsh is deterministic") {
  const auto a = optimize_chsh(kReferenceState);
  const auto b = optimize_chsh(kReferenceState);
  CHECK(a.value == b.value);
  CHECK(a.angles.a == b.angles.a);
  CHECK(a.angles.b_prime == b.angles.b_prime);
}

TEST_CASE("Tsirelson and classical-table bounds") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = testing_support::random_coeffs(rng, 6);
    CHECK(std::abs(optimize_chsh(c).value) <= 2.0 * std::sqrt(2.0) + 1e-9);
  }
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = testing_support::random_coeffs(rng, 5);
    OverlapTable classical{5, std::vector<double>(25, 0.0)};
    for (int k = 0; k < 5; ++k) classical.v[k * 5 + k] = coin(rng) ? 1.0 : -1.0;
    CHECK(optimize_chsh_series(CorrelatorSeries(c, classical, classical)).value <= 2.0 + 1e-12);
  }
}

TEST_CASE("bipartite density: vacuum, sign binning and marginal") {
  const auto g = sign_grid(12.0, 801);
  const auto vac = bipartite_density_alpha_half({1.0}, 0.2, 0.3, 0.0, 0.0, g, g);
  for (std::size_t i = 0; i < g.size(); i += 37)
    for (std::size_t j = 0; j < g.size(); j += 41) {
      const double ref = std::exp(-0.5 * (g[i] * g[i] + g[j] * g[j])) / (2.0 * kPi);
      CHECK(vac.at(i, j) == Approx(ref).margin(1e-15));
    }

  const auto wide = sign_grid(18.0, 1601);
  for (double phase : {0.0, 0.9, 2.5}) {
    const auto joint = bipartite_density_alpha_half(kReferenceState, phase, 0.0, 0.0, 0.0, wide, wide);
    CHECK(std::abs(sign_binned_correlation(joint) - std::sqrt(5.0) / kPi * std::cos(phase)) <= 1e-6);
  }

  // The marginal of a Schmidt-diagonal state is the incoherent mixture sum |c_k|^2 |<x|k>|^2.
  const auto joint = bipartite_density_alpha_half(kReferenceState, 0.7, 0.0, 0.0, 0.0, wide, wide);
  const auto marg = marginal_x(joint);
  for (std::size_t i = 0; i < wide.size(); i += 53) {
    double ref = 0.0;
    for (int k = 0; k < 3; ++k) ref += std::norm(kReferenceState[k]) * std::pow(oscillator_wavefunction(k, wide[i]), 2);
    CHECK(std::abs(marg.density[i] - ref) <= 1e-8);
  }
}

TEST_CASE("bipartite density with widths reproduces the smeared correlator") {
  const auto g = sign_grid(24.0, 1601);
  BellConfig cfg{kReferenceState, {0.4, 0.0, 0.3, 0.0}, 0.6, 0.9};
  const auto joint = bipartite_density_alpha_half(cfg, Pair::AB, g, g);
  CHECK(std::abs(sign_binned_correlation(joint) - correlator(cfg, Pair::AB)) <= 1e-6);
}

TEST_CASE("grids without a node at 0 are rejected for sign binning") {
  const auto g = linspace(-10.0, 10.0, 800);
  const auto joint = bipartite_density_alpha_half({1.0}, 0.0, 0.0, 0.0, 0.0, g, g);
  CHECK_THROWS_AS(sign_binned_correlation(joint), Error);
}

TEST_CASE("alpha = 1 local model") {
  const auto th = linspace(0.0, kPi, 201);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 1 + trial % 4;
    TwoModeCoeffs c{d, testing_support::random_coeffs(rng, static_cast<std::size_t>(d * d))};
    const auto r = local_model_alpha_one(c, 0.3 * trial, -0.2 * trial, th, th);
    CHECK(r.total_variation <= 1e-8);
    CHECK(r.max_abs_diff <= 1e-10);
  }

  // Product coefficients give a product of single-mode rotor laws.
  const auto a = testing_support::random_coeffs(rng, 3);
  const auto b = testing_support::random_coeffs(rng, 3);
  TwoModeCoeffs prod{3, std::vector<cplx>(9)};
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) prod.c[k * 3 + l] = a[k] * b[l];
  const auto r = local_model_alpha_one(prod, 0.4, 1.3, th, th);
  const auto pa = limit_density_alpha_one(a, 0.4, th);
  const auto pb = limit_density_alpha_one(b, 1.3, th);
  for (std::size_t i = 0; i < th.size(); i += 7)
    for (std::size_t j = 0; j < th.size(); j += 11) {
      CHECK(std::abs(r.quantum.at(i, j) - pa.density[i] * pb.density[j]) <= 1e-12);
      CHECK(std::abs(r.lhv.at(i, j) - pa.density[i] * pb.density[j]) <= 1e-12);
    }
}

TEST_CASE("binned alpha = 1 statistics never violate CHSH") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    const int d = 2 + trial;
    TwoModeCoeffs c{d, testing_support::random_coeffs(rng, static_cast<std::size_t>(d * d))};
    CHECK(lhv_binning_chsh_max(c, 61, 50, 100 + trial) <= 2.0 + 1e-9);
  }
  CHECK(lhv_binning_chsh_max(TwoModeCoeffs::diagonal(kReferenceState), 61, 50, 1) <= 2.0 + 1e-9);
}
