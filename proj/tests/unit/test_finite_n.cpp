#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "macrobell/finite.hpp"
#include "macrobell/oracle.hpp"
#include "test_support.hpp"

using namespace macrobell;
using Catch::Approx;

namespace {

DerivedParams external_params(double mu, double tau) {
  DerivedParams p;
  p.mu = mu;
  p.tau = tau;
  return p;
}

// <N,k|M^{(x)N}|N,l> straight from the 2^N state vectors.
cplx brute_matrix_element(const ComplexMatrix2& m, std::int64_t n, std::int64_t k, std::int64_t l) {
  const auto bra = detail::full_state_vector(DickeSuperposition::make(n, {1.0}, k));
  auto ket = detail::full_state_vector(DickeSuperposition::make(n, {1.0}, l));
  for (std::int64_t q = 0; q < n; ++q) detail::apply_single_qubit(ket, m, q);
  return detail::inner(bra, ket);
}

ComplexMatrix2 random_matrix(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix2 m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) m(i, j) = {g(rng), g(rng)};
  return m;
}

}  // namespace

TEST_CASE("dicke_matrix_element: identity, diagonal and N=2 closed forms") {
  for (std::int64_t k = 0; k <= 7; ++k)
    for (std::int64_t l = 0; l <= 7; ++l)
      CHECK(std::abs(dicke_matrix_element(ComplexMatrix2::Identity(), 7, k, l) - (k == l ? 1.0 : 0.0)) < 1e-14);

  const cplx z0(0.3, 0.4), z1(-0.7, 0.2);
  ComplexMatrix2 d = ComplexMatrix2::Zero();
  d(0, 0) = z0;
  d(1, 1) = z1;
  for (std::int64_t k = 0; k <= 9; ++k) CHECK(std::abs(dicke_matrix_element(d, 9, k, k) - std::pow(z0, 9 - k) * std::pow(z1, k)) < 1e-14);

  std::mt19937_64 rng(2);
  const auto m = random_matrix(rng);
  CHECK(std::abs(dicke_matrix_element(m, 2, 1, 1) - (m(1, 1) * m(0, 0) + m(1, 0) * m(0, 1))) < 1e-14);
}

TEST_CASE("dicke_matrix_element agrees with the state-vector oracle and its adjoint") {
  std::mt19937_64 rng(9);
  for (std::int64_t n : {1, 3, 6, 9}) {
    const auto m = random_matrix(rng);
    for (std::int64_t k = 0; k <= n; ++k)
      for (std::int64_t l = 0; l <= n; ++l) {
        const cplx fast = dicke_matrix_element(m, n, k, l);
        CHECK(std::abs(fast - brute_matrix_element(m, n, k, l)) < 1e-11 * std::max(1.0, std::abs(fast)));
        CHECK(std::abs(dicke_matrix_element(m.adjoint(), n, l, k) - std::conj(fast)) < 1e-12 * std::max(1.0, std::abs(fast)));
      }
  }
}

TEST_CASE("dicke_matrix_element stays finite at N = 10^4") {
  const ComplexMatrix2 u = std::exp(cplx(0.0, 0.01)) * ComplexMatrix2::Identity();
  const cplx v = dicke_matrix_element(u, 10000, 5000, 5000);
  CHECK(std::abs(v - std::exp(cplx(0.0, 100.0))) < 1e-9);
}

TEST_CASE("N=2 W state under sigma_x: +-sqrt2 with probability 1/2") {
  const auto povm = testing_support::sigma_x();
  const auto params = derive_params(povm, AlphaMode::Half);
  const auto state = DickeSuperposition::make(2, {1.0}, 1);
  for (const auto& pmf : {pmf_finite(state, povm, params, 0.5), brute_force_pmf(state, povm, params, 0.5)}) {
    double p0 = 0.0, pp = 0.0, pm = 0.0;
    for (std::size_t i = 0; i < pmf.values.size(); ++i) {
      if (std::abs(pmf.values[i]) < 1e-12) p0 += pmf.probs[i];
      if (std::abs(pmf.values[i] - std::sqrt(2.0)) < 1e-12) pp += pmf.probs[i];
      if (std::abs(pmf.values[i] + std::sqrt(2.0)) < 1e-12) pm += pmf.probs[i];
    }
    CHECK(pp == Approx(0.5).epsilon(1e-12));
    CHECK(pm == Approx(0.5).epsilon(1e-12));
    CHECK(p0 == Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("sigma_z on a Dicke state is a point mass at N - 2k") {
  const auto povm = testing_support::sigma_z();
  for (std::int64_t k : {0, 3, 11}) {
    const auto pmf = pmf_finite(DickeSuperposition::make(20, {1.0}, k), povm, external_params(0.0, 1.0), 1.0);
    double mass = 0.0;
    for (std::size_t i = 0; i < pmf.values.size(); ++i)
      if (std::abs(pmf.values[i] - (20.0 - 2.0 * k) / 20.0) < 1e-12) mass += pmf.probs[i];
    CHECK(mass == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("oracle equivalence on random instances") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> nd(1, 10), dd(1, 4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::int64_t n = std::max(nd(rng), 3);
    const std::size_t d = static_cast<std::size_t>(dd(rng));
    std::uniform_int_distribution<std::int64_t> off(0, n + 1 - static_cast<std::int64_t>(d));
    const auto state = DickeSuperposition::make(n, testing_support::random_coeffs(rng, d), off(rng));
    const auto povm = testing_support::random_binary_povm(rng);
    const auto params = derive_params(povm, AlphaMode::Half);
    const double alpha = trial % 2 ? 0.5 : 1.0;
    CHECK(total_variation(pmf_finite(state, povm, params, alpha), brute_force_pmf(state, povm, params, alpha)) <= 1e-10);
    for (double t : {-3.0, -0.7, 0.4, 2.5}) {
      CHECK(std::abs(char_fn_finite(state, povm, params, alpha, t) - brute_force_char_fn(state, povm, params, alpha, t)) <= 1e-10);
    }
  }
}

TEST_CASE("brute-force probabilities sum to one; |4,2> is symmetric under sigma_x") {
  const auto povm = testing_support::sigma_x();
  const auto params = derive_params(povm, AlphaMode::Half);
  const auto pmf = brute_force_pmf(DickeSuperposition::make(4, {1.0}, 2), povm, params, 0.5);
  double total = 0.0;
  for (double p : pmf.probs) total += p;
  CHECK(total == Approx(1.0).epsilon(1e-12));
  const std::size_t m = pmf.values.size();
  for (std::size_t i = 0; i < m; ++i) {
    CHECK(pmf.values[i] == Approx(-pmf.values[m - 1 - i]).margin(1e-12));
    CHECK(pmf.probs[i] == Approx(pmf.probs[m - 1 - i]).margin(1e-12));
  }
}

TEST_CASE("char_fn_finite: normalization, bound and Bochner positivity") {
  std::mt19937_64 rng(4);
  const auto povm = testing_support::random_binary_povm(rng);
  const auto params = derive_params(povm, AlphaMode::Half);
  const auto state = DickeSuperposition::make(40, testing_support::random_coeffs(rng, 3), 5);
  CHECK(char_fn_finite(state, povm, params, 0.5, 0.0) == cplx(1.0, 0.0));
  const auto t = linspace(-4.0, 4.0, 33);
  for (double ti : t) CHECK(std::abs(char_fn_finite(state, povm, params, 0.5, ti)) <= 1.0 + 1e-9);
  Eigen::MatrixXcd toeplitz(t.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j) toeplitz(i, j) = char_fn_finite(state, povm, params, 0.5, t[i] - t[j]);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(toeplitz);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("moments: product state variance 1, W state variance 3 - 2/N") {
  const auto povm = testing_support::sigma_x();
  const auto params = derive_params(povm, AlphaMode::Half);
  for (std::int64_t n : {10, 100, 1000}) {
    const auto prod = moments_finite(DickeSuperposition::make(n, {1.0}, 0), povm, params, 0.5, 4);
    CHECK(prod.raw[0] == Approx(1.0).epsilon(1e-12));
    CHECK(prod.central[2] == Approx(1.0).epsilon(1e-9));
    const auto w = moments_finite(DickeSuperposition::make(n, {1.0}, 1), povm, params, 0.5, 2);
    CHECK(w.raw[1] == Approx(0.0).margin(1e-9));
    CHECK(w.central[2] == Approx(3.0 - 2.0 / static_cast<double>(n)).epsilon(1e-9));
  }
}

TEST_CASE("nonlinear variable is centered") {
  std::mt19937_64 rng(8);
  const auto povm = testing_support::random_binary_povm(rng);
  const auto state = DickeSuperposition::make(30, testing_support::random_coeffs(rng, 3), 2);
  const auto params = nonlinear_params(derive_params(povm, AlphaMode::Half), state, povm);
  CHECK(moments_finite(state, povm, params, 0.5, 1).raw[1] == Approx(0.0).margin(1e-9));
}

TEST_CASE("finite engine errors") {
  const ComplexMatrix2 id = ComplexMatrix2::Identity();
  const auto irrational = validate_povm({0.0, 1.0, std::sqrt(2.0)}, {id / 3.0, id / 3.0, id / 3.0});
  const auto state = DickeSuperposition::make(5, {1.0}, 1);
  CHECK_THROWS_AS(intensity_pmf(state, irrational), Error);
  try {
    intensity_pmf(state, irrational);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::OffLattice);
  }
  FiniteOptions tiny;
  tiny.max_lattice = 4;
  try {
    intensity_pmf(state, testing_support::sigma_x(), tiny);
    FAIL("expected CapExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CapExceeded);
  }
  try {
    brute_force_pmf(DickeSuperposition::make(15, {1.0}, 0), testing_support::sigma_x(),
                    derive_params(testing_support::sigma_x(), AlphaMode::Half), 0.5);
    FAIL("expected CapExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CapExceeded);
  }
}
