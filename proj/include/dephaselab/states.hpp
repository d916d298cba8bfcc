#pragma once

#include <cmath>

#include "dephaselab/errors.hpp"
#include "dephaselab/linalg.hpp"

// Two-qubit states in the fixed basis order (|11>, |10>, |01>, |00>).
// Qubit 1 is the left tensor factor. All constructors fill in exact rational
// entries so validator tolerances are not consumed at construction time.

namespace dephaselab {

enum class BellKind { PsiMinus, PsiPlus, PhiPlus, PhiMinus };

struct WernerSpec {
  BellKind family;
  double r;  // weight of the maximally entangled component, in [0, 1]
};

struct DensityMatrix {
  CMat4 m;
};

struct StateDiagnostics {
  double hermiticity_defect;  // ||m - m^dag||_F
  double trace_defect;        // |Tr m - 1|
  double min_eigenvalue;

  bool within(double tol) const {
    return hermiticity_defect <= tol && trace_defect <= tol && min_eigenvalue >= -tol;
  }
};

inline CVec4 bell_vector(BellKind kind) {
  const double h = 1.0 / std::sqrt(2.0);
  switch (kind) {
    case BellKind::PsiMinus: return {0.0, h, -h, 0.0};
    case BellKind::PsiPlus: return {0.0, h, h, 0.0};
    case BellKind::PhiPlus: return {h, 0.0, 0.0, h};
    case BellKind::PhiMinus: return {h, 0.0, 0.0, -h};
  }
  throw ParameterOutOfRange("bell_vector: unknown BellKind");
}

inline DensityMatrix bell_state(BellKind kind) {
  CMat4 m;
  switch (kind) {
    case BellKind::PsiMinus:
      m(1, 1) = m(2, 2) = 0.5;
      m(1, 2) = m(2, 1) = -0.5;
      break;
    case BellKind::PsiPlus:
      m(1, 1) = m(2, 2) = 0.5;
      m(1, 2) = m(2, 1) = 0.5;
      break;
    case BellKind::PhiPlus:
      m(0, 0) = m(3, 3) = 0.5;
      m(0, 3) = m(3, 0) = 0.5;
      break;
    case BellKind::PhiMinus:
      m(0, 0) = m(3, 3) = 0.5;
      m(0, 3) = m(3, 0) = -0.5;
      break;
  }
  return DensityMatrix{m};
}

inline DensityMatrix werner(const WernerSpec& spec) {
  if (!(spec.r >= 0.0 && spec.r <= 1.0))
    throw ParameterOutOfRange("werner: r must lie in [0, 1]");
  CMat4 m = bell_state(spec.family).m;
  m *= Complex(spec.r, 0.0);
  const double mixed = (1.0 - spec.r) / 4.0;
  for (int i = 0; i < 4; ++i) m(i, i) += mixed;
  return DensityMatrix{m};
}

// Reporting only; never throws and never mutates the input.
inline StateDiagnostics validate(const DensityMatrix& rho) {
  if (!all_finite(rho.m)) {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf, -inf};
  }
  StateDiagnostics d;
  d.hermiticity_defect = hermiticity_defect(rho.m);
  const Complex tr = trace(rho.m);
  d.trace_defect = std::abs(tr - Complex(1.0, 0.0));
  // Eigenvalues of the Hermitian part; the hermiticity defect is reported
  // separately, so the non-Hermitian residue is not double counted here.
  d.min_eigenvalue = herm_eigen(hermitian_part(rho.m)).values[0];
  return d;
}

}  // namespace dephaselab
