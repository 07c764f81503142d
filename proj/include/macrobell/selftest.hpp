#pragma once

// Quick invariant suite behind `macrobell selftest`.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "macrobell/bell.hpp"
#include "macrobell/dicke.hpp"
#include "macrobell/finite.hpp"
#include "macrobell/limit.hpp"
#include "macrobell/oracle.hpp"
#include "macrobell/povm.hpp"

namespace macrobell {

struct SelftestItem {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
};

inline std::vector<SelftestItem> run_selftest() {
  std::vector<SelftestItem> items;
  auto record = [&](std::string name, double measured, double tol) {
    items.push_back({std::move(name), std::isfinite(measured) && measured <= tol, measured, tol});
  };
  auto guarded = [&](const std::string& name, double tol, const std::function<double()>& fn) {
    try {
      record(name, fn(), tol);
    } catch (const std::exception&) {
      record(name, INFINITY, tol);
    }
  };

  guarded("finite_vs_brute_force", 1e-10, [] {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int trial = 0; trial < 4; ++trial) {
      const std::int64_t n = 6 + trial;
      std::vector<cplx> c(3);
      for (auto& z : c) z = {g(rng), g(rng)};
      const auto state = DickeSuperposition::make(n, normalized(c));
      const auto povm = projective_from_bloch(0.3 + 0.4 * trial, 0.7 * trial);
      const auto params = derive_params(povm, AlphaMode::Half);
      worst = std::max(worst, total_variation(pmf_finite(state, povm, params, 0.5), brute_force_pmf(state, povm, params, 0.5)));
      for (double t : {-2.0, 0.5, 3.0}) {
        worst = std::max(worst, std::abs(char_fn_finite(state, povm, params, 0.5, t) -
                                         brute_force_char_fn(state, povm, params, 0.5, t)));
      }
    }
    return worst;
  });

  guarded("hermite_lemma", 1e-8, [] {
    const auto grid = linspace(-6.0, 6.0, 61);
    double worst = 0.0;
    for (int m = 0; m <= 4; ++m)
      for (int n = 0; n <= m; ++n) worst = std::max(worst, verify_hermite_lemma(m, n, 0.5, 2.0, grid));
    return worst;
  });

  guarded("limit_density_normalization", 1e-6, [] {
    const LimitState st{normalized({1.0, cplx(0.5, 0.5), 0.3}), 0.4, 0.7};
    return std::abs(limit_density_alpha_half(st, default_real_grid(2, st.width)).integral() - 1.0);
  });

  guarded("rotor_normalization", 1e-9, [] {
    return std::abs(limit_density_alpha_one(normalized({1.0, cplx(0.0, 1.0), 0.5}), 0.3, default_theta_grid()).integral() - 1.0);
  });

  guarded("sign_overlaps", 1e-9, [] {
    const auto t = sign_overlap_table(2);
    return std::max(std::abs(t(0, 1) - std::sqrt(2.0 / kPi)), std::abs(t(1, 2) - 1.0 / std::sqrt(kPi)));
  });

  guarded("chsh_reference_state", 1e-9, [] {
    const std::vector<cplx> c{2.0 / std::sqrt(10.0), 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(10.0)};
    const BellConfig cfg{c, {0.0, kPi / 2.0, -kPi / 4.0, kPi / 4.0}};
    return std::abs(chsh_value(cfg) - 2.0 * std::sqrt(10.0) / kPi);
  });

  return items;
}

}  // namespace macrobell
