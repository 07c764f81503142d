#pragma once

// Small numerical helpers shared by the engines: compensated sums, log-space
// binomials, integer powers and a deterministic parallel loop.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <span>
#include <thread>
#include <vector>

namespace macrobell {

using cplx = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class CompensatedComplexSum {
 public:
  void add(cplx z) {
    re_.add(z.real());
    im_.add(z.imag());
  }
  cplx value() const { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum re_;
  CompensatedSum im_;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

/// ln C(n, k). Exact-product path for small min(k, n-k), log-gamma otherwise.
inline double log_binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return -INFINITY;
  const std::int64_t m = std::min(k, n - k);
  if (m == 0) return 0.0;
  if (m <= 64) {
    CompensatedSum s;
    for (std::int64_t j = 1; j <= m; ++j) {
      s.add(std::log(static_cast<double>(n - m + j)) - std::log(static_cast<double>(j)));
    }
    return s.value();
  }
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

/// ln(C(n, k) / C(n, l)) by telescoping C(n, j+1)/C(n, j) = (n-j)/(j+1); cost O(|k-l|).
inline double log_binomial_ratio(std::int64_t n, std::int64_t k, std::int64_t l) {
  if (k == l) return 0.0;
  const bool flip = k < l;
  const std::int64_t lo = flip ? k : l;
  const std::int64_t hi = flip ? l : k;
  CompensatedSum s;
  for (std::int64_t j = lo; j < hi; ++j) {
    s.add(std::log(static_cast<double>(n - j)) - std::log(static_cast<double>(j + 1)));
  }
  return flip ? -s.value() : s.value();
}

inline double binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0.0;
  return std::round(std::exp(log_binomial(n, k)));
}

inline double factorial(int n) {
  double f = 1.0;
  for (int j = 2; j <= n; ++j) f *= j;
  return f;
}

/// z^e by repeated squaring; 0^0 == 1.
template <typename T>
T ipow(T z, std::int64_t e) {
  T result(1);
  while (e > 0) {
    if (e & 1) result *= z;
    z *= z;
    e >>= 1;
  }
  return result;
}

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

/// Thread cap: MACROBELL_THREADS if set, else hardware concurrency.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("MACROBELL_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs fn(i) for i in [0, n) over contiguous chunks. Callers write results
/// by index so the outcome never depends on the thread count.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

/// Uniform grid of `points` values on [lo, hi].
inline std::vector<double> linspace(double lo, double hi, std::size_t points) {
  std::vector<double> g(points);
  if (points == 1) {
    g[0] = lo;
    return g;
  }
  const double h = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) g[i] = lo + h * static_cast<double>(i);
  g.back() = hi;
  return g;
}

/// Trapezoid rule on an arbitrary increasing grid.
inline double trapezoid(std::span<const double> x, std::span<const double> y) {
  CompensatedSum s;
  for (std::size_t i = 1; i < x.size(); ++i) s.add(0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]));
  return s.value();
}

}  // namespace macrobell
