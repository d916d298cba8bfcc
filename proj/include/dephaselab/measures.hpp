#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "dephaselab/errors.hpp"
#include "dephaselab/states.hpp"

// State functionals: Wootters concurrence, Horodecki maximal CHSH value,
// linear-entropy mixedness, purity, Uhlmann-Jozsa fidelity, and the closed
// forms these reduce to for phi-family states under collective dephasing.

namespace dephaselab {

struct MeasureReport {
  double concurrence = 0.0;
  double bell_max = 0.0;  // > 2 signals CHSH violation, 2*sqrt(2) is maximal
  double mixedness = 0.0;
  double purity = 1.0;
  std::optional<double> fidelity;  // vs. a reference state, when supplied
};

namespace detail {

// rho_tilde = (sigma_y x sigma_y) rho* (sigma_y x sigma_y); conjugation is
// entrywise in the fixed computational basis.
inline CMat4 spin_flip(const CMat4& rho) {
  static const CMat4 yy = kron2(sigma_y(), sigma_y());
  return yy * conj_entries(rho) * yy;
}

// Eigenvalues of a Hermitian PSD-up-to-roundoff matrix, clamped and
// square-rooted, descending.
inline std::array<double, 4> sqrt_eigs_desc(const CMat4& m) {
  const auto eig = herm_eigen(m);
  const double scale = std::max(1.0, frobenius_norm(m));
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i) {
    double v = eig.values[3 - i];
    if (v < 0.0) {
      if (v < -1e-10 * scale)
        throw NotPositiveSemidefinite("sqrt_eigs: eigenvalue below -1e-10 * scale");
      v = 0.0;
    }
    out[i] = std::sqrt(v);
  }
  return out;
}

}  // namespace detail

// Signed spin-flip combination lambda1 - lambda2 - lambda3 - lambda4; its
// positive part is the concurrence. Kept unclamped for threshold detection:
// a separable state is strictly negative here, while a still-entangled state
// with exponentially small concurrence is strictly positive.
inline double concurrence_unclamped(const DensityMatrix& rho) {
  const CMat4 s = psd_sqrt(rho.m);
  const CMat4 sandwich = hermitian_part(s * detail::spin_flip(rho.m) * s);
  const auto lam = detail::sqrt_eigs_desc(sandwich);
  return lam[0] - lam[1] - lam[2] - lam[3];
}

inline double concurrence(const DensityMatrix& rho) {
  return std::max(0.0, concurrence_unclamped(rho));
}

// Concurrence of r|phi><phi| + (1-r)/4 I after collective dephasing for a
// scaled time gamma_t: max(0, (r-1)/2 + r e^{-2 gamma t}).
inline double concurrence_phi_analytic(double r, double gamma_t) {
  if (!(r >= 0.0 && r <= 1.0))
    throw ParameterOutOfRange("concurrence_phi_analytic: r must lie in [0, 1]");
  if (!std::isfinite(gamma_t) || gamma_t < 0.0)
    throw ParameterOutOfRange("concurrence_phi_analytic: gamma_t must be >= 0");
  return std::max(0.0, 0.5 * (r - 1.0) + r * std::exp(-2.0 * gamma_t));
}

// Correlation matrix T_nm = Tr(rho sigma_n x sigma_m), n, m in {x, y, z}.
inline RMat3 bell_t_matrix(const DensityMatrix& rho) {
  const CMat2 paulis[3] = {sigma_x(), sigma_y(), sigma_z()};
  RMat3 t;
  for (int n = 0; n < 3; ++n)
    for (int m = 0; m < 3; ++m) {
      const Complex tr = trace(rho.m * kron2(paulis[n], paulis[m]));
      if (std::abs(tr.imag()) > 1e-10)
        throw NonRealCorrelation("bell_t_matrix: correlation has imaginary residue");
      t(n, m) = tr.real();
    }
  return t;
}

// Horodecki's maximal CHSH expectation 2 sqrt(lambda + lambda~) from the two
// largest eigenvalues of T^T T. Reported even when <= 2.
inline double bell_max(const DensityMatrix& rho) {
  const RMat3 t = bell_t_matrix(rho);
  RMat3 tt;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += t(k, i) * t(k, j);
      tt(i, j) = s;
    }
  const auto ev = sym3_eigen(tt);
  return 2.0 * std::sqrt(std::max(0.0, ev[0] + ev[1]));
}

// Maximal CHSH value of the dephasing phi-family: 2 sqrt(r^2 (1 + e^{-4 gamma t})).
inline double bell_phi_analytic(double r, double gamma_t) {
  if (!(r >= 0.0 && r <= 1.0))
    throw ParameterOutOfRange("bell_phi_analytic: r must lie in [0, 1]");
  if (!std::isfinite(gamma_t) || gamma_t < 0.0)
    throw ParameterOutOfRange("bell_phi_analytic: gamma_t must be >= 0");
  return 2.0 * std::sqrt(r * r * (1.0 + std::exp(-4.0 * gamma_t)));
}

inline double purity(const DensityMatrix& rho) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s += std::norm(rho.m(i, j));
  return s;
}

inline double mixedness(const DensityMatrix& rho) {
  return (4.0 / 3.0) * (1.0 - purity(rho));
}

// Uhlmann-Jozsa fidelity [Tr sqrt(sqrt(rho_i) rho_f sqrt(rho_i))]^2.
inline double fidelity(const DensityMatrix& rho_i, const DensityMatrix& rho_f) {
  const CMat4 s = psd_sqrt(rho_i.m);
  const CMat4 sandwich = hermitian_part(s * rho_f.m * s);
  const auto lam = detail::sqrt_eigs_desc(sandwich);
  const double tr = lam[0] + lam[1] + lam[2] + lam[3];
  return tr * tr;
}

// Fidelity between the initial phi-family state at weight r and its dephased
// image at scaled time gamma_t:
//   (1/16) [2(1-r) + sqrt((1+3r)(1+r+2r e^{-2gt})) + sqrt((1-r)(1+r(1-2e^{-2gt})))]^2.
// The second radicand is analytically >= 0 but can round below zero at r -> 1.
inline double fidelity_w_analytic(double r, double gamma_t) {
  if (!(r >= 0.0 && r <= 1.0))
    throw ParameterOutOfRange("fidelity_w_analytic: r must lie in [0, 1]");
  if (!std::isfinite(gamma_t) || gamma_t < 0.0)
    throw ParameterOutOfRange("fidelity_w_analytic: gamma_t must be >= 0");
  const double e = std::exp(-2.0 * gamma_t);
  auto radicand = [](double v) {
    if (v < 0.0) {
      if (v < -1e-12) throw NegativeRadicand("fidelity_w_analytic: radicand below -1e-12");
      return 0.0;
    }
    return v;
  };
  const double a = radicand((1.0 + 3.0 * r) * (1.0 + r + 2.0 * r * e));
  const double b = radicand((1.0 - r) * (1.0 + r * (1.0 - 2.0 * e)));
  const double sum = 2.0 * (1.0 - r) + std::sqrt(a) + std::sqrt(b);
  return sum * sum / 16.0;
}

inline MeasureReport measure(const DensityMatrix& rho) {
  MeasureReport rep;
  rep.concurrence = concurrence(rho);
  rep.bell_max = bell_max(rho);
  rep.purity = purity(rho);
  rep.mixedness = (4.0 / 3.0) * (1.0 - rep.purity);
  return rep;
}

inline MeasureReport measure(const DensityMatrix& rho, const DensityMatrix& reference) {
  MeasureReport rep = measure(rho);
  rep.fidelity = fidelity(reference, rho);
  return rep;
}

}  // namespace dephaselab
