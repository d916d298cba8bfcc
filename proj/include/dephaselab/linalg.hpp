#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>

#include "dephaselab/errors.hpp"

// Dense complex linear algebra for the fixed sizes this library needs:
// 2x2 / 4x4 complex matrices and 3x3 real symmetric matrices. Eigenproblems
// are solved with cyclic Jacobi rotations, which are unconditionally stable
// at these sizes and keep the library dependency-free.

namespace dephaselab {

using Complex = std::complex<double>;

template <int N>
struct CMat {
  std::array<Complex, static_cast<std::size_t>(N) * N> e{};

  static constexpr int dim = N;

  Complex& operator()(int r, int c) { return e[static_cast<std::size_t>(r) * N + c]; }
  const Complex& operator()(int r, int c) const { return e[static_cast<std::size_t>(r) * N + c]; }

  static CMat identity() {
    CMat m;
    for (int i = 0; i < N; ++i) m(i, i) = 1.0;
    return m;
  }

  CMat& operator+=(const CMat& o) {
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += o.e[i];
    return *this;
  }
  CMat& operator-=(const CMat& o) {
    for (std::size_t i = 0; i < e.size(); ++i) e[i] -= o.e[i];
    return *this;
  }
  CMat& operator*=(Complex s) {
    for (auto& x : e) x *= s;
    return *this;
  }
};

using CMat2 = CMat<2>;
using CMat4 = CMat<4>;
using CVec4 = std::array<Complex, 4>;

struct RMat3 {
  std::array<double, 9> e{};
  double& operator()(int r, int c) { return e[static_cast<std::size_t>(r) * 3 + c]; }
  const double& operator()(int r, int c) const { return e[static_cast<std::size_t>(r) * 3 + c]; }
};

template <int N>
inline CMat<N> operator+(CMat<N> a, const CMat<N>& b) { return a += b; }

template <int N>
inline CMat<N> operator-(CMat<N> a, const CMat<N>& b) { return a -= b; }

template <int N>
inline CMat<N> operator*(Complex s, CMat<N> m) { return m *= s; }

template <int N>
inline CMat<N> operator*(double s, CMat<N> m) { return m *= Complex(s, 0.0); }

template <int N>
inline CMat<N> operator*(CMat<N> m, Complex s) { return m *= s; }

template <int N>
inline CMat<N> operator*(const CMat<N>& a, const CMat<N>& b) {
  CMat<N> r;
  for (int i = 0; i < N; ++i) {
    for (int k = 0; k < N; ++k) {
      const Complex aik = a(i, k);
      if (aik == Complex(0.0, 0.0)) continue;
      for (int j = 0; j < N; ++j) r(i, j) += aik * b(k, j);
    }
  }
  return r;
}

template <int N>
inline CMat<N> adjoint(const CMat<N>& m) {
  CMat<N> r;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) r(i, j) = std::conj(m(j, i));
  return r;
}

// Entrywise complex conjugate (no transpose).
template <int N>
inline CMat<N> conj_entries(const CMat<N>& m) {
  CMat<N> r;
  for (std::size_t i = 0; i < m.e.size(); ++i) r.e[i] = std::conj(m.e[i]);
  return r;
}

template <int N>
inline Complex trace(const CMat<N>& m) {
  Complex t = 0.0;
  for (int i = 0; i < N; ++i) t += m(i, i);
  return t;
}

template <int N>
inline double frobenius_norm(const CMat<N>& m) {
  double s = 0.0;
  for (const auto& x : m.e) s += std::norm(x);
  return std::sqrt(s);
}

template <int N>
inline double hermiticity_defect(const CMat<N>& m) {
  return frobenius_norm(m - adjoint(m));
}

template <int N>
inline CMat<N> hermitian_part(const CMat<N>& m) {
  return 0.5 * (m + adjoint(m));
}

template <int N>
inline bool all_finite(const CMat<N>& m) {
  for (const auto& x : m.e)
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
  return true;
}

inline double frobenius_norm(const RMat3& m) {
  double s = 0.0;
  for (double x : m.e) s += x * x;
  return std::sqrt(s);
}

inline CVec4 matvec(const CMat4& m, const CVec4& v) {
  CVec4 r{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r[i] += m(i, j) * v[j];
  return r;
}

inline CMat4 outer(const CVec4& a, const CVec4& b) {
  CMat4 r;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r(i, j) = a[i] * std::conj(b[j]);
  return r;
}

// Single-qubit operators in the basis order (|1>, |0>), matching the
// two-qubit basis (|11>, |10>, |01>, |00>) used throughout.
inline CMat2 identity2() { return CMat2::identity(); }

inline CMat2 sigma_x() {
  CMat2 m;
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

inline CMat2 sigma_y() {
  CMat2 m;
  m(0, 1) = Complex(0.0, 1.0);
  m(1, 0) = Complex(0.0, -1.0);
  return m;
}

inline CMat2 sigma_z() {
  CMat2 m;
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

// Kronecker product; the left factor is qubit 1, so the output row index is
// 2*(row of a) + (row of b), consistent with the basis order above.
inline CMat4 kron2(const CMat2& a, const CMat2& b) {
  CMat4 r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) r(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
  return r;
}

namespace detail {

template <int N>
inline double off_diagonal_norm(const CMat<N>& a) {
  double s = 0.0;
  for (int p = 0; p < N; ++p)
    for (int q = 0; q < N; ++q)
      if (p != q) s += std::norm(a(p, q));
  return std::sqrt(s);
}

// Cyclic Jacobi for a Hermitian matrix. Diagonalizes `a` in place and
// accumulates the unitary in `v` (columns are eigenvectors), sweeping until
// the off-diagonal Frobenius norm drops below 1e-13 * max(1, ||a||_F).
template <int N>
inline void jacobi_hermitian(CMat<N>& a, CMat<N>& v) {
  v = CMat<N>::identity();
  const double scale = std::max(1.0, frobenius_norm(a));
  constexpr int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) <= 1e-13 * scale) return;
    for (int p = 0; p < N - 1; ++p) {
      for (int q = p + 1; q < N; ++q) {
        const Complex apq = a(p, q);
        const double abs_apq = std::abs(apq);
        if (abs_apq <= 1e-18 * scale) continue;
        const Complex phase = apq / abs_apq;
        // Zero a(p,q) with the unitary U = [[c, -s*phase], [s*conj(phase), c]]
        // acting on the (p,q) plane; tan(2*theta) = 2|a_pq| / (a_pp - a_qq).
        const double zeta = (a(p, p).real() - a(q, q).real()) / (2.0 * abs_apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const Complex sp = s * phase;
        for (int k = 0; k < N; ++k) {  // A <- A * U
          const Complex akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * c + akq * std::conj(sp);
          a(k, q) = akq * c - akp * sp;
        }
        for (int k = 0; k < N; ++k) {  // A <- U^dag * A
          const Complex apk = a(p, k), aqk = a(q, k);
          a(p, k) = apk * c + aqk * sp;
          a(q, k) = aqk * c - apk * std::conj(sp);
        }
        for (int k = 0; k < N; ++k) {  // V <- V * U
          const Complex vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * c + vkq * std::conj(sp);
          v(k, q) = vkq * c - vkp * sp;
        }
      }
    }
  }
  // Quadratic convergence makes this unreachable for well-formed input.
  throw std::runtime_error("jacobi_hermitian: no convergence after 60 sweeps");
}

// Fix the overall phase of each eigenvector column: first component of
// magnitude above 1e-12 is made real and positive.
template <int N>
inline void normalize_column_phases(CMat<N>& v) {
  for (int col = 0; col < N; ++col) {
    for (int row = 0; row < N; ++row) {
      const Complex x = v(row, col);
      const double ax = std::abs(x);
      if (ax > 1e-12) {
        const Complex ph = std::conj(x) / ax;
        for (int k = 0; k < N; ++k) v(k, col) *= ph;
        break;
      }
    }
  }
}

}  // namespace detail

struct HermEigen4 {
  std::array<double, 4> values;  // ascending
  CMat4 vectors;                 // column k is the eigenvector of values[k]
};

inline HermEigen4 herm_eigen(const CMat4& m) {
  const double scale = std::max(1.0, frobenius_norm(m));
  if (!all_finite(m)) throw NonHermitianInput("herm_eigen: non-finite entries");
  if (hermiticity_defect(m) > 1e-9 * scale)
    throw NonHermitianInput("herm_eigen: input is not Hermitian within tolerance");

  CMat4 a = hermitian_part(m);
  CMat4 v;
  detail::jacobi_hermitian(a, v);

  std::array<int, 4> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(),
                   [&a](int i, int j) { return a(i, i).real() < a(j, j).real(); });

  HermEigen4 out;
  for (int k = 0; k < 4; ++k) {
    out.values[k] = a(order[k], order[k]).real();
    for (int row = 0; row < 4; ++row) out.vectors(row, k) = v(row, order[k]);
  }
  detail::normalize_column_phases(out.vectors);
  return out;
}

// Hermitian PSD square root. Eigenvalues in [-1e-10 * max(1, ||m||_F), 0) are
// treated as integration round-off and clamped to zero; anything more
// negative is a genuine error.
inline CMat4 psd_sqrt(const CMat4& m) {
  const HermEigen4 eig = herm_eigen(m);
  const double scale = std::max(1.0, frobenius_norm(m));
  CMat4 r;
  for (int k = 0; k < 4; ++k) {
    double lambda = eig.values[k];
    if (lambda < 0.0) {
      if (lambda < -1e-10 * scale)
        throw NotPositiveSemidefinite("psd_sqrt: eigenvalue below -1e-10 tolerance");
      lambda = 0.0;
    }
    const double root = std::sqrt(lambda);
    for (int i = 0; i < 4; ++i) {
      const Complex vik = eig.vectors(i, k);
      if (vik == Complex(0.0, 0.0)) continue;
      for (int j = 0; j < 4; ++j) r(i, j) += root * vik * std::conj(eig.vectors(j, k));
    }
  }
  return r;
}

// Eigenvalues of a real symmetric 3x3 matrix, sorted descending.
inline std::array<double, 3> sym3_eigen(const RMat3& m) {
  double asym = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double d = m(i, j) - m(j, i);
      asym += d * d;
    }
  asym = std::sqrt(asym);
  const double scale = std::max(1.0, frobenius_norm(m));
  if (asym > 1e-9 * scale)
    throw AsymmetricInput("sym3_eigen: input is not symmetric within tolerance");

  CMat<3> a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
  CMat<3> v;
  detail::jacobi_hermitian(a, v);

  std::array<double, 3> vals{a(0, 0).real(), a(1, 1).real(), a(2, 2).real()};
  std::sort(vals.begin(), vals.end(), std::greater<double>());
  return vals;
}

}  // namespace dephaselab
