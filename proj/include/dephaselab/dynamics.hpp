#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "dephaselab/errors.hpp"
#include "dephaselab/states.hpp"

// Collective-dephasing master equation
//   d rho/dt = -(i/2)[H_drive(t), rho] + (gamma/2)(2 J rho J - J^2 rho - rho J^2)
// in four flavours: bare J_z dephasing, always-on sigma_x drives on one or both
// qubits, a step-function drive that switches off at t_off, and dephasing along
// a rotated collective axis J_theta. Fixed-step RK4 plus the exact element-wise
// propagator (the dissipator is diagonal in the J eigenbasis).

namespace dephaselab {

enum class ModelVariant {
  PureDephasing,
  SymmetricDrive,
  AsymmetricDrive,
  StepDrive,
  RotatedDephasing,
};

struct ModelSpec {
  ModelVariant variant = ModelVariant::PureDephasing;
  double gamma = 1.0;   // dephasing rate
  double omega1 = 0.0;  // drive intensity, qubit 1 (SymmetricDrive/AsymmetricDrive)
  double omega2 = 0.0;  // drive intensity, qubit 2
  double zeta1 = 0.0;   // step-drive intensity, qubit 1 (StepDrive)
  double t_off = 0.0;   // step-drive cutoff time T (StepDrive)
  double theta = 0.0;   // dephasing-axis angle in radians (RotatedDephasing)

  static ModelSpec pure_dephasing(double gamma) {
    ModelSpec m;
    m.variant = ModelVariant::PureDephasing;
    m.gamma = gamma;
    return m;
  }
  static ModelSpec symmetric_drive(double gamma, double omega) {
    ModelSpec m;
    m.variant = ModelVariant::SymmetricDrive;
    m.gamma = gamma;
    m.omega1 = m.omega2 = omega;
    return m;
  }
  static ModelSpec asymmetric_drive(double gamma, double omega1, double omega2) {
    ModelSpec m;
    m.variant = ModelVariant::AsymmetricDrive;
    m.gamma = gamma;
    m.omega1 = omega1;
    m.omega2 = omega2;
    return m;
  }
  static ModelSpec step_drive(double gamma, double zeta1, double t_off) {
    ModelSpec m;
    m.variant = ModelVariant::StepDrive;
    m.gamma = gamma;
    m.zeta1 = zeta1;
    m.t_off = t_off;
    return m;
  }
  static ModelSpec rotated_dephasing(double gamma, double theta) {
    ModelSpec m;
    m.variant = ModelVariant::RotatedDephasing;
    m.gamma = gamma;
    m.theta = theta;
    return m;
  }
};

inline void validate_model(const ModelSpec& m) {
  auto ok_rate = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!std::isfinite(m.gamma) || m.gamma <= 0.0)
    throw ParameterOutOfRange("ModelSpec: gamma must be finite and > 0");
  if (!ok_rate(m.omega1) || !ok_rate(m.omega2) || !ok_rate(m.zeta1))
    throw ParameterOutOfRange("ModelSpec: drive intensities must be finite and >= 0");
  if (!std::isfinite(m.t_off) || m.t_off < 0.0)
    throw ParameterOutOfRange("ModelSpec: t_off must be finite and >= 0");
  if (!std::isfinite(m.theta) || m.theta < 0.0 || m.theta > std::acos(-1.0) / 2.0)
    throw ParameterOutOfRange("ModelSpec: theta must lie in [0, pi/2]");
  if (m.variant == ModelVariant::SymmetricDrive && m.omega1 != m.omega2)
    throw ParameterOutOfRange("ModelSpec: SymmetricDrive requires omega1 == omega2");
}

inline CMat4 collective_jz() {
  CMat4 j;
  j(0, 0) = 1.0;
  j(3, 3) = -1.0;
  return j;
}

// J_theta = (sigma_theta x I + I x sigma_theta)/2 with
// sigma_theta = cos(2 theta) sigma_z + sin(2 theta) sigma_x.
inline CMat4 collective_jtheta(double theta) {
  CMat2 st = std::cos(2.0 * theta) * sigma_z() + std::sin(2.0 * theta) * sigma_x();
  const CMat2 id = identity2();
  CMat4 j = kron2(st, id) + kron2(id, st);
  j *= Complex(0.5, 0.0);
  return j;
}

inline double default_dt(const ModelSpec& m) {
  const double rate =
      std::max({1.0, m.gamma, m.omega1, m.omega2, m.zeta1});
  return 1e-3 / rate;
}

namespace detail {

// Generator for one constant-in-time segment: the dissipator plus an optional
// drive Hamiltonian. J_z is diagonal, so its double commutator reduces to an
// element-wise decay table; the rotated axis keeps the full matrix products.
struct Generator {
  bool diag_j = true;
  std::array<double, 16> decay{};  // -(gamma/2)(j_k - j_l)^2
  CMat4 j, j_sq;                   // rotated-axis case
  double gamma = 0.0;
  bool has_drive = false;
  CMat4 h;
};

inline Generator make_generator(const ModelSpec& m, bool drive_on) {
  Generator g;
  g.gamma = m.gamma;
  if (m.variant == ModelVariant::RotatedDephasing) {
    g.diag_j = false;
    g.j = collective_jtheta(m.theta);
    g.j_sq = g.j * g.j;
  } else {
    const std::array<double, 4> jd{1.0, 0.0, 0.0, -1.0};
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 4; ++l) {
        const double d = jd[k] - jd[l];
        g.decay[4 * k + l] = -0.5 * m.gamma * d * d;
      }
  }
  double o1 = 0.0, o2 = 0.0;
  switch (m.variant) {
    case ModelVariant::SymmetricDrive:
    case ModelVariant::AsymmetricDrive:
      o1 = m.omega1;
      o2 = m.omega2;
      break;
    case ModelVariant::StepDrive:
      if (drive_on) o1 = m.zeta1;
      break;
    default:
      break;
  }
  if (o1 != 0.0 || o2 != 0.0) {
    g.has_drive = true;
    g.h = Complex(o1, 0.0) * kron2(sigma_x(), identity2()) +
          Complex(o2, 0.0) * kron2(identity2(), sigma_x());
  }
  return g;
}

inline CMat4 apply_generator(const Generator& g, const CMat4& rho) {
  CMat4 out;
  if (g.diag_j) {
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 4; ++l) out(k, l) = g.decay[4 * k + l] * rho(k, l);
  } else {
    out = g.j * rho * g.j;
    out *= Complex(2.0, 0.0);
    out -= g.j_sq * rho;
    out -= rho * g.j_sq;
    out *= Complex(0.5 * g.gamma, 0.0);
  }
  if (g.has_drive) {
    CMat4 comm = g.h * rho - rho * g.h;
    comm *= Complex(0.0, -0.5);
    out += comm;
  }
  return out;
}

inline void rk4_step(const Generator& g, CMat4& rho, double h) {
  const CMat4 k1 = apply_generator(g, rho);
  const CMat4 k2 = apply_generator(g, rho + Complex(0.5 * h, 0.0) * k1);
  const CMat4 k3 = apply_generator(g, rho + Complex(0.5 * h, 0.0) * k2);
  const CMat4 k4 = apply_generator(g, rho + Complex(h, 0.0) * k3);
  CMat4 incr = k1 + Complex(2.0, 0.0) * k2 + Complex(2.0, 0.0) * k3 + k4;
  incr *= Complex(h / 6.0, 0.0);
  rho += incr;
}

struct Segment {
  double t0;
  double len;
  bool drive_on;
};

// The step drive switches off after t_off; never let an RK4 stage straddle
// the discontinuity. Theta(T - t) = 1 at t = T exactly, which only matters
// for the point evaluation in liouvillian_apply — integrals are unaffected.
inline std::vector<Segment> plan_segments(const ModelSpec& m, double t0, double t1) {
  std::vector<Segment> segs;
  if (t1 <= t0) return segs;
  if (m.variant == ModelVariant::StepDrive) {
    if (t1 <= m.t_off) {
      segs.push_back({t0, t1 - t0, true});
    } else if (t0 >= m.t_off) {
      segs.push_back({t0, t1 - t0, false});
    } else {
      segs.push_back({t0, m.t_off - t0, true});
      segs.push_back({m.t_off, t1 - m.t_off, false});
    }
  } else {
    segs.push_back({t0, t1 - t0, true});
  }
  return segs;
}

inline void check_step_size(const ModelSpec& m, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw ParameterOutOfRange("evolve: dt must be finite and > 0");
  const double rate = std::max({m.gamma, m.omega1, m.omega2, m.zeta1});
  if (dt > 0.05 / rate)
    throw StepTooLarge("evolve: dt exceeds 0.05 / max(gamma, omega1, omega2, zeta1)");
}

// Per-step hygiene: re-symmetrize, renormalize trace when it drifts past
// 1e-12, and report the defects seen *before* correction.
inline void scrub(CMat4& rho, double& max_herm, double& max_trace) {
  const double hd = hermiticity_defect(rho);
  if (hd > max_herm) max_herm = hd;
  rho = hermitian_part(rho);
  const double tr = trace(rho).real();
  const double td = std::abs(tr - 1.0);
  if (td > max_trace) max_trace = td;
  if (td > 1e-12) rho *= Complex(1.0 / tr, 0.0);
}

}  // namespace detail

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
  ModelSpec model;
  double max_trace_defect = 0.0;  // worst |Tr rho - 1| before renormalization
  double max_herm_defect = 0.0;   // worst ||rho - rho^dag||_F before re-symmetrization
};

inline CMat4 liouvillian_apply(const ModelSpec& m, const DensityMatrix& rho, double t) {
  validate_model(m);
  if (!std::isfinite(t) || t < 0.0) throw InvalidTime("liouvillian_apply: t must be >= 0");
  if (!all_finite(rho.m)) throw ParameterOutOfRange("liouvillian_apply: non-finite state");
  const bool drive_on = (m.variant != ModelVariant::StepDrive) || (t <= m.t_off);
  return detail::apply_generator(detail::make_generator(m, drive_on), rho.m);
}

inline Trajectory evolve_rk4(const ModelSpec& m, const DensityMatrix& rho0, double t_end,
                             double dt, std::size_t sample_stride = 1) {
  validate_model(m);
  if (!std::isfinite(t_end) || t_end < 0.0)
    throw InvalidTime("evolve_rk4: t_end must be finite and >= 0");
  detail::check_step_size(m, dt);
  if (sample_stride == 0) sample_stride = 1;
  {
    const auto d = validate(rho0);
    if (!d.within(1e-9))
      throw ParameterOutOfRange("evolve_rk4: rho0 is not a valid density matrix");
  }

  Trajectory traj;
  traj.model = m;
  traj.times.push_back(0.0);
  traj.states.push_back(rho0);

  auto check_positivity = [](const CMat4& rho) {
    if (herm_eigen(rho).values[0] < -1e-6)
      throw PositivityLost("evolve_rk4: sampled state has eigenvalue below -1e-6");
  };

  CMat4 rho = rho0.m;
  std::size_t step_index = 0;
  const auto segs = detail::plan_segments(m, 0.0, t_end);
  for (std::size_t si = 0; si < segs.size(); ++si) {
    const auto& seg = segs[si];
    const auto gen = detail::make_generator(m, seg.drive_on);
    const auto n_full = static_cast<std::size_t>(std::floor(seg.len / dt + 1e-9));
    const double rem = seg.len - static_cast<double>(n_full) * dt;
    const bool has_rem = rem > 1e-12 * dt;
    const std::size_t n_steps = n_full + (has_rem ? 1 : 0);
    for (std::size_t i = 0; i < n_steps; ++i) {
      const bool last_in_seg = (i + 1 == n_steps);
      const double h = (has_rem && last_in_seg) ? rem : dt;
      detail::rk4_step(gen, rho, h);
      detail::scrub(rho, traj.max_herm_defect, traj.max_trace_defect);
      ++step_index;
      const double t = last_in_seg ? seg.t0 + seg.len
                                   : seg.t0 + static_cast<double>(i + 1) * dt;
      const bool final_sample = last_in_seg && (si + 1 == segs.size());
      if (step_index % sample_stride == 0 || final_sample) {
        check_positivity(rho);
        traj.times.push_back(t);
        traj.states.push_back(DensityMatrix{rho});
      }
    }
  }
  // A final state landing exactly on a stride boundary would be pushed twice.
  if (traj.times.size() >= 2 &&
      traj.times[traj.times.size() - 1] == traj.times[traj.times.size() - 2]) {
    traj.times.pop_back();
    traj.states.pop_back();
  }
  return traj;
}

// Continue a state from t0 to t1 under the same stepping rules (used by the
// threshold bisection refinement so it needn't re-run whole trajectories).
inline DensityMatrix integrate_to(const ModelSpec& m, const DensityMatrix& rho_t0, double t0,
                                  double t1, double dt) {
  validate_model(m);
  if (!std::isfinite(t0) || !std::isfinite(t1) || t0 < 0.0 || t1 < t0)
    throw InvalidTime("integrate_to: need 0 <= t0 <= t1");
  detail::check_step_size(m, dt);
  CMat4 rho = rho_t0.m;
  double herm = 0.0, tr = 0.0;
  for (const auto& seg : detail::plan_segments(m, t0, t1)) {
    const auto gen = detail::make_generator(m, seg.drive_on);
    const auto n_full = static_cast<std::size_t>(std::floor(seg.len / dt + 1e-9));
    const double rem = seg.len - static_cast<double>(n_full) * dt;
    const bool has_rem = rem > 1e-12 * dt;
    const std::size_t n_steps = n_full + (has_rem ? 1 : 0);
    for (std::size_t i = 0; i < n_steps; ++i) {
      const double h = (has_rem && i + 1 == n_steps) ? rem : dt;
      detail::rk4_step(gen, rho, h);
      detail::scrub(rho, herm, tr);
    }
  }
  return DensityMatrix{rho};
}

// Exact solution of the dephasing-only equation: in the J_theta eigenbasis a
// coherence between eigenvalues m_k, m_l decays by exp(-gamma (m_k - m_l)^2 t / 2).
// The product basis below diagonalizes J_theta with eigenvalues (1, 0, 0, -1),
// and at theta = 0 it is exactly the computational basis.
namespace detail {

inline CMat4 jtheta_eigenbasis(double theta) {
  CMat2 u;
  u(0, 0) = std::cos(theta);
  u(1, 0) = std::sin(theta);
  u(0, 1) = -std::sin(theta);
  u(1, 1) = std::cos(theta);
  return kron2(u, u);
}

template <class Factor>
inline DensityMatrix dephase_with(const DensityMatrix& rho, double theta, Factor&& factor) {
  static constexpr std::array<double, 4> mval{1.0, 0.0, 0.0, -1.0};
  const CMat4 v = jtheta_eigenbasis(theta);
  CMat4 a = adjoint(v) * rho.m * v;
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) a(k, l) *= factor(mval[k] - mval[l]);
  return DensityMatrix{v * a * adjoint(v)};
}

}  // namespace detail

inline DensityMatrix analytic_dephase(const DensityMatrix& rho0, double gamma, double t,
                                      double theta = 0.0) {
  if (!std::isfinite(t) || t < 0.0) throw InvalidTime("analytic_dephase: t must be >= 0");
  if (!std::isfinite(gamma) || gamma < 0.0)
    throw ParameterOutOfRange("analytic_dephase: gamma must be >= 0");
  return detail::dephase_with(rho0, theta, [&](double dm) {
    return std::exp(-0.5 * gamma * dm * dm * t);
  });
}

// t -> infinity limit: project onto the J_theta eigenspaces. The degenerate
// m = 0 pair keeps its internal coherence (the decoherence-free subspace).
inline DensityMatrix dephase_projection(const DensityMatrix& rho, double theta = 0.0) {
  return detail::dephase_with(rho, theta,
                              [](double dm) { return dm == 0.0 ? 1.0 : 0.0; });
}

}  // namespace dephaselab
