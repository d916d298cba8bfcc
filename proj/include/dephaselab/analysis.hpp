#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dephaselab/csv.hpp"
#include "dephaselab/dynamics.hpp"
#include "dephaselab/errors.hpp"
#include "dephaselab/measures.hpp"
#include "dephaselab/parallel.hpp"
#include "dephaselab/states.hpp"

// Derived quantities and the experiment harness: closed-form and bisection
// threshold times, Werner-state classification, stationary states, and the
// parameter sweeps behind the six figure datasets and the fidelity table.

namespace dephaselab {

inline double default_theta() { return 17.0 * std::acos(-1.0) / 180.0; }

enum class WernerClass { MaximallyMixed, Separable, EntangledLocal, NonlocalFragile };

// A threshold time is finite, absent (the state never crosses the threshold
// because it starts below it), or "never" (provably not reached in finite
// time, e.g. pure Bell states under pure dephasing).
struct ThresholdTime {
  enum class Kind { Finite, None, Never };
  Kind kind = Kind::None;
  double value = 0.0;  // meaningful only when kind == Finite

  static ThresholdTime finite(double v) { return {Kind::Finite, v}; }
  static ThresholdTime none() { return {Kind::None, 0.0}; }
  static ThresholdTime never() { return {Kind::Never, 0.0}; }
  bool is_finite() const { return kind == Kind::Finite; }
  bool is_none() const { return kind == Kind::None; }
  bool is_never() const { return kind == Kind::Never; }
};

enum class ThresholdMethod { Analytic, Bisection };

struct ThresholdResult {
  ThresholdTime t_c;
  ThresholdTime t_c_bell;
  ThresholdMethod method = ThresholdMethod::Analytic;
};

namespace detail {

inline void check_r_gamma(double r, double gamma, const char* who) {
  if (!(r >= 0.0 && r <= 1.0))
    throw ParameterOutOfRange(std::string(who) + ": r must lie in [0, 1]");
  if (!std::isfinite(gamma) || gamma <= 0.0)
    throw ParameterOutOfRange(std::string(who) + ": gamma must be finite and > 0");
}

}  // namespace detail

// Disentanglement time of the dephasing phi-family: -(1/2 gamma) ln((1-r)/(2r)).
// Defined for r above the separability boundary 1/3; the boundary itself maps
// to 0 (the log argument reaches 1 there, up to round-off).
inline ThresholdTime t_c_analytic(double r, double gamma) {
  detail::check_r_gamma(r, gamma, "t_c_analytic");
  if (r == 1.0) return ThresholdTime::never();
  if (r == 0.0) return ThresholdTime::none();
  const double ratio = (1.0 - r) / (2.0 * r);
  if (ratio >= 1.0 + 1e-12) return ThresholdTime::none();
  return ThresholdTime::finite(std::max(0.0, -std::log(ratio) / (2.0 * gamma)));
}

// Nonlocality-loss time of the same family: -(1/4 gamma) ln((1-r^2)/r^2),
// defined above the violation boundary r = sqrt(1/2).
inline ThresholdTime t_c_bell_analytic(double r, double gamma) {
  detail::check_r_gamma(r, gamma, "t_c_bell_analytic");
  if (r == 1.0) return ThresholdTime::never();
  if (r == 0.0) return ThresholdTime::none();
  const double ratio = (1.0 - r * r) / (r * r);
  if (ratio >= 1.0 + 1e-12) return ThresholdTime::none();
  return ThresholdTime::finite(std::max(0.0, -std::log(ratio) / (4.0 * gamma)));
}

inline WernerClass classify_werner(double r) {
  if (!(r >= 0.0 && r <= 1.0))
    throw ParameterOutOfRange("classify_werner: r must lie in [0, 1]");
  if (r == 0.0) return WernerClass::MaximallyMixed;
  if (r <= 1.0 / 3.0) return WernerClass::Separable;
  if (r <= std::sqrt(0.5)) return WernerClass::EntangledLocal;
  return WernerClass::NonlocalFragile;
}

namespace detail {

// First time the metric drops below `threshold` and stays there for a
// confirmation window of 1/gamma (a plain first crossing would misfire on the
// oscillatory driven cases). The coarse scan runs on ~0.01/gamma sample
// spacing; the crossing is then refined by bisection to 1e-4/gamma.
template <class Metric>
inline std::optional<double> first_sustained_drop(const ModelSpec& model,
                                                  const DensityMatrix& rho0, double t_max,
                                                  double threshold, Metric&& metric) {
  validate_model(model);
  if (!std::isfinite(t_max) || t_max <= 0.0)
    throw ParameterOutOfRange("threshold search: t_max must be > 0");
  const double window = 1.0 / model.gamma;
  const double dt = default_dt(model);
  const double spacing = 0.01 / model.gamma;
  const auto stride = static_cast<std::size_t>(
      std::max(1.0, std::floor(spacing / dt + 0.5)));
  const Trajectory traj = evolve_rk4(model, rho0, t_max + window, dt, stride);
  const std::size_t n = traj.times.size();
  std::vector<double> vals(n);
  for (std::size_t i = 0; i < n; ++i) vals[i] = metric(traj.states[i]);

  std::size_t i = 0;
  while (i < n) {
    if (!(vals[i] < threshold)) {
      ++i;
      continue;
    }
    if (traj.times[i] > t_max) return std::nullopt;
    std::size_t j = i + 1;
    bool sustained = true;
    while (j < n && traj.times[j] <= traj.times[i] + window) {
      if (!(vals[j] < threshold)) {
        sustained = false;
        break;
      }
      ++j;
    }
    if (!sustained) {
      i = j;
      continue;
    }
    if (i == 0) return 0.0;
    double lo = traj.times[i - 1];
    double hi = traj.times[i];
    DensityMatrix at_lo = traj.states[i - 1];
    const double resolution = 1e-4 / model.gamma;
    while (hi - lo > resolution) {
      const double mid = 0.5 * (lo + hi);
      DensityMatrix rm = integrate_to(model, at_lo, lo, mid, dt);
      if (metric(rm) < threshold) {
        hi = mid;
      } else {
        lo = mid;
        at_lo = rm;
      }
    }
    return 0.5 * (lo + hi);
  }
  return std::nullopt;
}

}  // namespace detail

// Numeric counterpart of t_c_analytic for arbitrary models: first sustained
// concurrence zero within t_max. Detection runs on the signed spin-flip
// combination crossing -1e-10: exact death is a strictly negative combination,
// whereas an exponentially decaying but still-entangled state stays positive
// forever (pure Bell states under pure dephasing must report "none" here, no
// matter how small their concurrence gets).
inline std::optional<double> find_disentanglement_time(const ModelSpec& model,
                                                       const DensityMatrix& rho0,
                                                       double t_max) {
  return detail::first_sustained_drop(
      model, rho0, t_max, -1e-10,
      [](const DensityMatrix& s) { return concurrence_unclamped(s); });
}

// First sustained drop of the maximal CHSH value below 2.
inline std::optional<double> find_bell_threshold_time(const ModelSpec& model,
                                                      const DensityMatrix& rho0,
                                                      double t_max) {
  return detail::first_sustained_drop(model, rho0, t_max, 2.0,
                                      [](const DensityMatrix& s) { return bell_max(s); });
}

// Stationary state of the variants that reach one: project out the decaying
// coherences (exactly the t -> infinity limit); for the step drive, first
// integrate through the driven window [0, t_off].
inline DensityMatrix stationary_state(const ModelSpec& model, const DensityMatrix& rho0) {
  validate_model(model);
  switch (model.variant) {
    case ModelVariant::PureDephasing:
      return dephase_projection(rho0, 0.0);
    case ModelVariant::RotatedDephasing:
      return dephase_projection(rho0, model.theta);
    case ModelVariant::StepDrive: {
      if (model.t_off <= 0.0) return dephase_projection(rho0, 0.0);
      const double rate = std::max({1.0, model.gamma, model.zeta1});
      const double dt_target = 0.01 / rate;
      auto n = static_cast<std::size_t>(std::ceil(model.t_off / dt_target - 1e-9));
      if (n == 0) n = 1;
      const DensityMatrix end =
          integrate_to(model, rho0, 0.0, model.t_off, model.t_off / static_cast<double>(n));
      return dephase_projection(end, 0.0);
    }
    default:
      throw UnsupportedVariant(
          "stationary_state: always-on drives have no guaranteed stationary limit");
  }
}

struct SweepResult {
  std::string axis;                         // name of the swept variable
  std::vector<double> grid;                 // its values, one per row
  std::vector<std::string> columns;         // derived-scalar column names
  std::vector<std::vector<double>> values;  // values[column][row]
  std::vector<std::string> provenance;      // emitted as `# provenance:` lines
};

inline std::string to_csv(const SweepResult& s) {
  std::string out;
  for (const auto& line : s.provenance) {
    out += "# provenance: ";
    out += line;
    out += "\n";
  }
  out += s.axis;
  for (const auto& c : s.columns) {
    out += ',';
    out += c;
  }
  out += '\n';
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    out += format_sci(s.grid[i]);
    for (const auto& col : s.values) {
      out += ',';
      out += format_sci(col[i]);
    }
    out += '\n';
  }
  return out;
}

namespace detail {

// Integer steps per grid cell so trajectory samples land exactly on the grid.
// Sweep stepping targets 0.01/rate: ~10x coarser than default_dt but with RK4
// error orders of magnitude below the dataset tolerances, and ~10x faster.
inline std::pair<double, std::size_t> sweep_steps(double cell, double rate) {
  const double dt_target = 0.01 / std::max(1.0, rate);
  auto k = static_cast<std::size_t>(std::ceil(cell / dt_target - 1e-9));
  if (k == 0) k = 1;
  return {cell / static_cast<double>(k), k};
}

// Concurrence along one trajectory sampled on an n-point grid of spacing cell.
inline std::vector<double> concurrence_curve(const ModelSpec& model,
                                             const DensityMatrix& rho0, double cell,
                                             std::size_t n_rows) {
  const double rate = std::max({model.gamma, model.omega1, model.omega2, model.zeta1});
  const auto [dt, stride] = sweep_steps(cell, rate);
  const double t_end = cell * static_cast<double>(n_rows - 1);
  const Trajectory traj = evolve_rk4(model, rho0, t_end, dt, stride);
  std::vector<double> out(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) out[i] = concurrence(traj.states[i]);
  return out;
}

inline std::vector<double> linear_grid(double start, double step, std::size_t count) {
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) g[i] = start + step * static_cast<double>(i);
  return g;
}

}  // namespace detail

// Dataset 1: both closed-form threshold times vs r. The Bell-threshold column
// only exists above the violation boundary; below it the rows hold nan.
inline SweepResult threshold_sweep_fig1() {
  SweepResult s;
  s.axis = "r";
  s.grid = detail::linear_grid(0.34, 0.01, 66);
  s.columns = {"gamma_t_c", "gamma_t_c_bell"};
  s.values.assign(2, std::vector<double>(s.grid.size()));
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    const double r = s.grid[i];
    const auto tc = t_c_analytic(r, 1.0);
    s.values[0][i] = tc.is_finite() ? tc.value : std::nan("");
    if (r >= 0.71 - 1e-9) {
      const auto tb = t_c_bell_analytic(r, 1.0);
      s.values[1][i] = tb.is_finite() ? tb.value : std::nan("");
    } else {
      s.values[1][i] = std::nan("");
    }
  }
  s.provenance = {
      "figure=1 gamma=1 method=closed-form",
      "grid=r[0.34:0.01:0.99] bell-column-defined-for r>=0.71 (violation boundary sqrt(1/2))"};
  return s;
}

// Dataset 2: concurrence vs gamma_t for the three triplet Bell states under
// the symmetric drive, one column per (state, Omega/gamma in {1,2,3}).
inline SweepResult drive_sweep_fig2() {
  SweepResult s;
  s.axis = "gamma_t";
  const double cell = 0.01;
  s.grid = detail::linear_grid(0.0, cell, 501);
  const BellKind states[3] = {BellKind::PhiMinus, BellKind::PhiPlus, BellKind::PsiPlus};
  const char* tags[3] = {"phi_minus", "phi_plus", "psi_plus"};
  for (int k = 0; k < 3; ++k)
    for (int w = 1; w <= 3; ++w)
      s.columns.push_back(std::string("c_") + tags[k] + "_omega" + std::to_string(w));
  s.values.assign(9, {});
  parallel_for(9, [&](std::size_t job) {
    const auto state = states[job / 3];
    const double omega = static_cast<double>(job % 3 + 1);
    s.values[job] = detail::concurrence_curve(ModelSpec::symmetric_drive(1.0, omega),
                                              bell_state(state), cell, s.grid.size());
  });
  s.provenance = {
      "figure=2 model=sym-drive gamma=1 omega/gamma={1,2,3} initial={phi-,phi+,psi+}",
      "grid=gamma_t[0:0.01:5] integrator=rk4 dt=cell/ceil(cell*max(1,rates)/0.01)"};
  return s;
}

// Dataset 3: concurrence vs gamma_t for all four Bell states under the
// one-sided drive Omega1=gamma, Omega2=0, plus the undriven phi reference.
inline SweepResult drive_sweep_fig3() {
  SweepResult s;
  s.axis = "gamma_t";
  const double cell = 0.01;
  s.grid = detail::linear_grid(0.0, cell, 501);
  s.columns = {"c_psi_minus", "c_psi_plus", "c_phi_plus", "c_phi_minus", "c_phi_nodrive"};
  const BellKind states[4] = {BellKind::PsiMinus, BellKind::PsiPlus, BellKind::PhiPlus,
                              BellKind::PhiMinus};
  s.values.assign(5, {});
  parallel_for(5, [&](std::size_t job) {
    const ModelSpec model = (job < 4) ? ModelSpec::asymmetric_drive(1.0, 1.0, 0.0)
                                      : ModelSpec::pure_dephasing(1.0);
    const BellKind state = (job < 4) ? states[job] : BellKind::PhiPlus;
    s.values[job] =
        detail::concurrence_curve(model, bell_state(state), cell, s.grid.size());
  });
  s.provenance = {
      "figure=3 model=asym-drive gamma=1 omega1=1 omega2=0 initial=all-bell "
      "reference=phi+ under pure dephasing",
      "grid=gamma_t[0:0.01:5] integrator=rk4 dt=cell/ceil(cell*max(1,rates)/0.01)"};
  return s;
}

inline std::vector<double> default_fig4_grid() { return detail::linear_grid(0.0, 0.005, 601); }

// Dataset 4: stationary concurrence and CHSH maximum vs the drive cutoff
// gamma_T for phi+ under the step drive.
inline SweepResult stationary_sweep_fig4(double zeta1_over_gamma,
                                         const std::vector<double>& gammaT_grid) {
  if (!std::isfinite(zeta1_over_gamma) || zeta1_over_gamma < 0.0)
    throw ParameterOutOfRange("stationary_sweep_fig4: zeta1/gamma must be >= 0");
  if (gammaT_grid.empty())
    throw ParameterOutOfRange("stationary_sweep_fig4: grid must be nonempty");
  for (std::size_t i = 0; i + 1 < gammaT_grid.size(); ++i)
    if (!(gammaT_grid[i] < gammaT_grid[i + 1]))
      throw ParameterOutOfRange("stationary_sweep_fig4: grid must be ascending");
  SweepResult s;
  s.axis = "gamma_T";
  s.grid = gammaT_grid;
  s.columns = {"C_s", "B_s_max"};
  s.values.assign(2, std::vector<double>(s.grid.size()));
  const DensityMatrix rho0 = bell_state(BellKind::PhiPlus);
  parallel_for(s.grid.size(), [&](std::size_t i) {
    const ModelSpec model = ModelSpec::step_drive(1.0, zeta1_over_gamma, s.grid[i]);
    const DensityMatrix st = stationary_state(model, rho0);
    s.values[0][i] = concurrence(st);
    s.values[1][i] = bell_max(st);
  });
  s.provenance = {
      "figure=4 model=step-drive gamma=1 zeta1/gamma=" + format_sci(zeta1_over_gamma) +
          " initial=bell:phi+",
      "stationary=integrate-to-t_off-then-project dt=t_off/ceil(t_off*max(1,zeta1)/0.01)"};
  return s;
}

// Dataset 5: fidelity between each non-singlet Werner family and its fully
// dephased (projected) state under the rotated axis, vs r.
inline SweepResult fidelity_sweep_fig5(double theta) {
  if (!std::isfinite(theta) || theta < 0.0 || theta > std::acos(-1.0) / 2.0)
    throw ParameterOutOfRange("fidelity_sweep_fig5: theta must lie in [0, pi/2]");
  SweepResult s;
  s.axis = "r";
  s.grid = detail::linear_grid(0.0, 0.01, 101);
  s.columns = {"f_phi_plus", "f_phi_minus", "f_psi_plus"};
  s.values.assign(3, std::vector<double>(s.grid.size()));
  const BellKind fams[3] = {BellKind::PhiPlus, BellKind::PhiMinus, BellKind::PsiPlus};
  for (std::size_t i = 0; i < s.grid.size(); ++i)
    for (int f = 0; f < 3; ++f) {
      const DensityMatrix rho = werner({fams[f], s.grid[i]});
      s.values[f][i] = fidelity(rho, dephase_projection(rho, theta));
    }
  s.provenance = {"figure=5 theta_rad=" + format_sci(theta) +
                      " families={phi+,phi-,psi+} final=dephase-projection",
                  "grid=r[0:0.01:1] method=closed-kernel (exact projection, no integration)"};
  return s;
}

// Dataset 6: fidelity between each family at fixed r and its dephased image
// at scaled time gamma_t, under the rotated axis.
inline SweepResult fidelity_sweep_fig6(double r, double theta) {
  if (!(r >= 0.0 && r <= 1.0))
    throw ParameterOutOfRange("fidelity_sweep_fig6: r must lie in [0, 1]");
  if (!std::isfinite(theta) || theta < 0.0 || theta > std::acos(-1.0) / 2.0)
    throw ParameterOutOfRange("fidelity_sweep_fig6: theta must lie in [0, pi/2]");
  SweepResult s;
  s.axis = "gamma_t";
  s.grid = detail::linear_grid(0.0, 0.01, 601);
  s.columns = {"f_phi_plus", "f_phi_minus", "f_psi_plus"};
  s.values.assign(3, std::vector<double>(s.grid.size()));
  const BellKind fams[3] = {BellKind::PhiPlus, BellKind::PhiMinus, BellKind::PsiPlus};
  for (int f = 0; f < 3; ++f) {
    const DensityMatrix rho0 = werner({fams[f], r});
    for (std::size_t i = 0; i < s.grid.size(); ++i)
      s.values[f][i] = fidelity(rho0, analytic_dephase(rho0, 1.0, s.grid[i], theta));
  }
  s.provenance = {"figure=6 r=" + format_sci(r) + " theta_rad=" + format_sci(theta) +
                      " families={phi+,phi-,psi+}",
                  "grid=gamma_t[0:0.01:6] propagator=exact-elementwise"};
  return s;
}

inline std::vector<double> default_table1_r() { return {0.2, 0.4, 0.6, 0.8, 0.99}; }

// Fidelity table: each family against its stationary (projected) state under
// the rotated axis, one row per r.
inline SweepResult fidelity_table1(const std::vector<double>& r_values, double theta) {
  if (r_values.empty()) throw ParameterOutOfRange("fidelity_table1: empty r list");
  if (!std::isfinite(theta) || theta < 0.0 || theta > std::acos(-1.0) / 2.0)
    throw ParameterOutOfRange("fidelity_table1: theta must lie in [0, pi/2]");
  SweepResult s;
  s.axis = "r";
  s.grid = r_values;
  s.columns = {"f1_phi_plus", "f2_phi_minus", "f3_psi_plus", "f4_psi_minus"};
  s.values.assign(4, std::vector<double>(s.grid.size()));
  const BellKind fams[4] = {BellKind::PhiPlus, BellKind::PhiMinus, BellKind::PsiPlus,
                            BellKind::PsiMinus};
  for (std::size_t i = 0; i < s.grid.size(); ++i)
    for (int f = 0; f < 4; ++f) {
      const DensityMatrix rho = werner({fams[f], s.grid[i]});  // validates r
      s.values[f][i] = fidelity(rho, dephase_projection(rho, theta));
    }
  s.provenance = {"table=1 theta_rad=" + format_sci(theta) +
                      " columns={phi+,phi-,psi+,psi-} final=dephase-projection",
                  "r-list=caller-supplied"};
  return s;
}

inline SweepResult figure_sweeps(int figure_id) {
  switch (figure_id) {
    case 1: return threshold_sweep_fig1();
    case 2: return drive_sweep_fig2();
    case 3: return drive_sweep_fig3();
    case 4: return stationary_sweep_fig4(41.25, default_fig4_grid());
    case 5: return fidelity_sweep_fig5(default_theta());
    case 6: return fidelity_sweep_fig6(0.99, default_theta());
    default: throw UnknownFigure("figure_sweeps: figure id must be 1..6");
  }
}

}  // namespace dephaselab
