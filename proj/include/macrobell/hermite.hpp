#pragma once

// Probabilists' Hermite polynomials He_k, oscillator wave functions
// <x|k> = (2 pi)^{-1/4} (k!)^{-1/2} e^{-x^2/4} He_k(x), and Gauss-Hermite
// quadrature for the weight e^{-x^2/2}.

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "macrobell/errors.hpp"
#include "macrobell/numeric.hpp"

namespace macrobell {

/// He_k(x) via He_{k+1} = x He_k - k He_{k-1}.
inline double hermite(int k, double x) {
  if (k < 0) throw Error(Errc::InvalidArgument, "Hermite order must be non-negative");
  if (k == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int j = 1; j < k; ++j) {
    const double next = x * cur - j * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// p_0..p_kmax at x, with p_k = (2 pi)^{-1/4} He_k(x) / sqrt(k!) (orthonormal for e^{-x^2/2}).
inline void normalized_hermite_all(int k_max, double x, double* out) {
  out[0] = 1.0 / std::pow(2.0 * kPi, 0.25);
  if (k_max >= 1) out[1] = x * out[0];
  for (int k = 1; k < k_max; ++k) {
    out[k + 1] = (x * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) / std::sqrt(static_cast<double>(k + 1));
  }
}

/// <x|k>, normalized recurrence so large k never overflows.
inline double oscillator_wavefunction(int k, double x) {
  if (k < 0) throw Error(Errc::InvalidArgument, "oscillator level must be non-negative");
  std::vector<double> p(k + 1);
  normalized_hermite_all(k, x, p.data());
  return p[k] * std::exp(-0.25 * x * x);
}

/// Nodes and weights with sum_i w_i f(z_i) ~ int e^{-z^2/2} f(z) dz.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussRule make_gauss_hermite(int n) {
  if (n < 1) throw Error(Errc::InvalidArgument, "quadrature needs at least one node");
  // Golub-Welsch on the monic recurrence, then Newton polishing on p_n.
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) jac(k, k - 1) = jac(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac, Eigen::EigenvaluesOnly);
  GaussRule rule;
  rule.nodes.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
  std::vector<double> p(n + 1);
  for (double& z : rule.nodes) {
    for (int it = 0; it < 3; ++it) {
      normalized_hermite_all(n, z, p.data());
      const double dp = std::sqrt(static_cast<double>(n)) * p[n - 1];
      if (dp == 0.0) break;
      z -= p[n] / dp;
    }
  }
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    normalized_hermite_all(n - 1, rule.nodes[i], p.data());
    CompensatedSum s;
    for (int k = 0; k < n; ++k) s.add(p[k] * p[k]);
    rule.weights[i] = 1.0 / s.value();
  }
  return rule;
}

/// Cached rule; thread-safe.
inline const GaussRule& gauss_hermite_rule(int n) {
  static std::mutex mtx;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mtx);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussRule>(make_gauss_hermite(n));
  return *slot;
}

inline constexpr int kDefaultHermiteNodes = 200;

}  // namespace macrobell
