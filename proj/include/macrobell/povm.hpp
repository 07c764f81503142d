#pragma once

// Single-particle qubit POVMs and the scalar parameters they induce on the
// macroscopic variable X = sum_i (a_i - mu) / (tau N^alpha).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "macrobell/errors.hpp"
#include "macrobell/numeric.hpp"

namespace macrobell {

using ComplexMatrix2 = Eigen::Matrix2cd;

inline constexpr double kAlgebraTol = 1e-12;
inline constexpr double kDegenerateOffDiagonal = 1e-14;

inline double hermiticity_defect(const ComplexMatrix2& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

/// Smallest eigenvalue of the Hermitian part of a 2x2 matrix.
inline double min_eigenvalue(const ComplexMatrix2& m) {
  const double a = m(0, 0).real();
  const double d = m(1, 1).real();
  const cplx b = 0.5 * (m(0, 1) + std::conj(m(1, 0)));
  return 0.5 * (a + d - std::hypot(a - d, 2.0 * std::abs(b)));
}

inline ComplexMatrix2 pauli_x() { return (ComplexMatrix2() << 0, 1, 1, 0).finished(); }
inline ComplexMatrix2 pauli_y() { return (ComplexMatrix2() << 0, cplx(0, -1), cplx(0, 1), 0).finished(); }
inline ComplexMatrix2 pauli_z() { return (ComplexMatrix2() << 1, 0, 0, -1).finished(); }

class SingleParticlePovm {
 public:
  const std::vector<double>& outcomes() const { return outcomes_; }
  const std::vector<ComplexMatrix2>& effects() const { return effects_; }
  std::size_t size() const { return outcomes_.size(); }

 private:
  SingleParticlePovm(std::vector<double> outcomes, std::vector<ComplexMatrix2> effects)
      : outcomes_(std::move(outcomes)), effects_(std::move(effects)) {}
  friend SingleParticlePovm validate_povm(std::vector<double>, std::vector<ComplexMatrix2>);

  std::vector<double> outcomes_;
  std::vector<ComplexMatrix2> effects_;
};

/// Checks Hermiticity, positivity, distinct outcomes and completeness (in that order).
inline SingleParticlePovm validate_povm(std::vector<double> outcomes, std::vector<ComplexMatrix2> effects) {
  if (outcomes.size() != effects.size()) {
    throw Error(Errc::InvalidArgument, "outcome and effect lists differ in length");
  }
  if (outcomes.size() < 2) throw Error(Errc::InvalidArgument, "a POVM needs at least two outcomes");
  for (std::size_t i = 0; i < effects.size(); ++i) {
    if (!effects[i].allFinite() || !std::isfinite(outcomes[i])) {
      throw Error(Errc::InvalidArgument, "non-finite entry in effect " + std::to_string(i), i);
    }
    if (hermiticity_defect(effects[i]) > kAlgebraTol) {
      throw Error(Errc::NotHermitian, "effect " + std::to_string(i) + " is not Hermitian", i);
    }
    if (min_eigenvalue(effects[i]) < -kAlgebraTol) {
      throw Error(Errc::NotPositive, "effect " + std::to_string(i) + " has a negative eigenvalue", i);
    }
  }
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (outcomes[i] == outcomes[j]) {
        throw Error(Errc::DuplicateOutcome, "outcome " + std::to_string(i) + " repeats outcome " + std::to_string(j), i);
      }
    }
  }
  ComplexMatrix2 total = ComplexMatrix2::Zero();
  for (const auto& e : effects) total += e;
  if ((total - ComplexMatrix2::Identity()).cwiseAbs().maxCoeff() > kAlgebraTol) {
    throw Error(Errc::NotComplete, "effects do not sum to the identity");
  }
  return SingleParticlePovm(std::move(outcomes), std::move(effects));
}

/// Projective +-1 measurement along the Bloch direction (theta, phi): effects (I +- n.sigma)/2.
inline SingleParticlePovm projective_from_bloch(double theta, double phi_bloch) {
  const ComplexMatrix2 n_sigma = std::sin(theta) * std::cos(phi_bloch) * pauli_x() +
                                 std::sin(theta) * std::sin(phi_bloch) * pauli_y() + std::cos(theta) * pauli_z();
  const ComplexMatrix2 id = ComplexMatrix2::Identity();
  return validate_povm({1.0, -1.0}, {0.5 * (id + n_sigma), 0.5 * (id - n_sigma)});
}

enum class AlphaMode { Half, One };

inline double alpha_value(AlphaMode m) { return m == AlphaMode::Half ? 0.5 : 1.0; }

/// First and second outcome moments as matrices: A = sum a E_a, A2 = sum a^2 E_a.
inline std::pair<ComplexMatrix2, ComplexMatrix2> outcome_moment_matrices(const SingleParticlePovm& povm) {
  ComplexMatrix2 a = ComplexMatrix2::Zero();
  ComplexMatrix2 a2 = ComplexMatrix2::Zero();
  for (std::size_t i = 0; i < povm.size(); ++i) {
    const double v = povm.outcomes()[i];
    a += v * povm.effects()[i];
    a2 += v * v * povm.effects()[i];
  }
  return {a, a2};
}

struct DerivedParams {
  ComplexMatrix2 A = ComplexMatrix2::Zero();
  ComplexMatrix2 A2 = ComplexMatrix2::Zero();
  double mu = 0.0;
  double tau = 1.0;
  double sigma2 = 0.0;
  /// arg(-A01) in half mode, arg(A01) in one mode.
  double phi = 0.0;
  double s2 = 0.0;
  AlphaMode mode = AlphaMode::Half;
};

inline double width_squared(double sigma2, double tau2) { return std::max(0.0, sigma2 / tau2 - 1.0); }

inline DerivedParams derive_params(const SingleParticlePovm& povm, AlphaMode mode) {
  DerivedParams p;
  std::tie(p.A, p.A2) = outcome_moment_matrices(povm);
  p.mode = mode;
  const cplx a01 = p.A(0, 1);
  p.tau = std::abs(a01);
  if (p.tau <= kDegenerateOffDiagonal) {
    throw Error(Errc::DegenerateOffDiagonal, "|A01| vanishes; the macroscopic normalization is undefined");
  }
  const double a00 = p.A(0, 0).real();
  p.mu = mode == AlphaMode::Half ? a00 : 0.5 * p.A.trace().real();
  p.sigma2 = std::max(0.0, p.A2(0, 0).real() - a00 * a00);
  p.phi = wrap_angle(mode == AlphaMode::Half ? std::arg(-a01) : std::arg(a01));
  p.s2 = width_squared(p.sigma2, p.tau * p.tau);
  return p;
}

/// Same POVM with outcomes relabelled a -> u a + v.
inline SingleParticlePovm relabel_outcomes(const SingleParticlePovm& povm, double u, double v) {
  std::vector<double> out = povm.outcomes();
  for (double& a : out) a = u * a + v;
  return validate_povm(std::move(out), povm.effects());
}

}  // namespace macrobell
