// Command-line frontend: regenerate the figure/table datasets, run ad-hoc
// evolutions, and query threshold times. CSV out for curves, JSON for scalars.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dephaselab/analysis.hpp"

namespace dl = dephaselab;
using nlohmann::json;

namespace {

const double kPi = std::acos(-1.0);

dl::BellKind parse_family(const std::string& name) {
  if (name == "psi-") return dl::BellKind::PsiMinus;
  if (name == "psi+") return dl::BellKind::PsiPlus;
  if (name == "phi+") return dl::BellKind::PhiPlus;
  if (name == "phi-") return dl::BellKind::PhiMinus;
  throw dl::ParameterOutOfRange("unknown state family '" + name +
                                "' (expected psi-, psi+, phi+ or phi-)");
}

double parse_real(const std::string& text, const char* what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size())
    throw dl::ParameterOutOfRange(std::string(what) + ": '" + text + "' is not a number");
  return v;
}

dl::DensityMatrix load_state_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dl::ParameterOutOfRange("state file not readable: " + path);
  dl::CMat4 m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double re = 0.0, im = 0.0;
      if (!(in >> re >> im))
        throw dl::ParameterOutOfRange(
            "state file must hold 32 reals (row-major, re im interleaved): " + path);
      m(i, j) = dl::Complex(re, im);
    }
  dl::DensityMatrix rho{m};
  if (!dl::validate(rho).within(1e-9))
    throw dl::ParameterOutOfRange("state file is not a valid density matrix: " + path);
  return rho;
}

// state mini-language: werner:<family>:<r> | bell:<kind> | file:<path>
dl::DensityMatrix parse_state(const std::string& s) {
  const auto c1 = s.find(':');
  const std::string scheme = s.substr(0, c1);
  if (scheme == "werner" && c1 != std::string::npos) {
    const auto c2 = s.find(':', c1 + 1);
    if (c2 == std::string::npos)
      throw dl::ParameterOutOfRange("werner state needs a mixing weight: " + s);
    const auto family = parse_family(s.substr(c1 + 1, c2 - c1 - 1));
    return dl::werner({family, parse_real(s.substr(c2 + 1), "werner weight")});
  }
  if (scheme == "bell" && c1 != std::string::npos)
    return dl::bell_state(parse_family(s.substr(c1 + 1)));
  if (scheme == "file" && c1 != std::string::npos) return load_state_file(s.substr(c1 + 1));
  throw dl::ParameterOutOfRange(
      "unknown state spec '" + s + "' (expected werner:<family>:<r>, bell:<kind>, file:<path>)");
}

// mixing weight when the state is a phi-family mixture (the closed-form case)
std::optional<double> phi_family_weight(const std::string& s) {
  const auto c1 = s.find(':');
  if (c1 == std::string::npos) return std::nullopt;
  const std::string scheme = s.substr(0, c1);
  if (scheme == "bell") {
    const std::string fam = s.substr(c1 + 1);
    if (fam == "phi+" || fam == "phi-") return 1.0;
    return std::nullopt;
  }
  if (scheme != "werner") return std::nullopt;
  const auto c2 = s.find(':', c1 + 1);
  if (c2 == std::string::npos) return std::nullopt;
  const std::string fam = s.substr(c1 + 1, c2 - c1 - 1);
  if (fam != "phi+" && fam != "phi-") return std::nullopt;
  return parse_real(s.substr(c2 + 1), "werner weight");
}

struct ModelFlags {
  std::string name = "pure-dephasing";
  double gamma = 1.0;
  double omega = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;
  double zeta1 = 0.0;
  double t_off = 0.0;
  double theta_deg = 17.0;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
  const auto last = CLI::MultiOptionPolicy::TakeLast;
  cmd->add_option("--model", f.name,
                  "pure-dephasing | sym-drive | asym-drive | step-drive | rotated")
      ->multi_option_policy(last);
  cmd->add_option("--gamma", f.gamma, "dephasing rate")->multi_option_policy(last);
  cmd->add_option("--omega", f.omega, "drive intensity, both qubits (sym-drive)")
      ->multi_option_policy(last);
  cmd->add_option("--omega1", f.omega1, "drive intensity, qubit 1 (asym-drive)")
      ->multi_option_policy(last);
  cmd->add_option("--omega2", f.omega2, "drive intensity, qubit 2 (asym-drive)")
      ->multi_option_policy(last);
  cmd->add_option("--zeta1", f.zeta1, "step-drive intensity, qubit 1")
      ->multi_option_policy(last);
  cmd->add_option("--t-off", f.t_off, "step-drive cutoff time")->multi_option_policy(last);
  cmd->add_option("--theta-deg", f.theta_deg, "dephasing-axis angle in degrees (rotated)")
      ->multi_option_policy(last);
}

dl::ModelSpec build_model(const ModelFlags& f) {
  dl::ModelSpec m;
  if (f.name == "pure-dephasing") {
    m = dl::ModelSpec::pure_dephasing(f.gamma);
  } else if (f.name == "sym-drive") {
    m = dl::ModelSpec::symmetric_drive(f.gamma, f.omega);
  } else if (f.name == "asym-drive") {
    m = dl::ModelSpec::asymmetric_drive(f.gamma, f.omega1, f.omega2);
  } else if (f.name == "step-drive") {
    m = dl::ModelSpec::step_drive(f.gamma, f.zeta1, f.t_off);
  } else if (f.name == "rotated") {
    m = dl::ModelSpec::rotated_dephasing(f.gamma, f.theta_deg * kPi / 180.0);
  } else {
    throw dl::ParameterOutOfRange("unknown model '" + f.name + "'");
  }
  dl::validate_model(m);
  return m;
}

int run_figure(int id, std::string out, double zeta_over_gamma, double r, double theta_deg) {
  const double theta = theta_deg * kPi / 180.0;
  dl::SweepResult s;
  switch (id) {
    case 4: s = dl::stationary_sweep_fig4(zeta_over_gamma, dl::default_fig4_grid()); break;
    case 5: s = dl::fidelity_sweep_fig5(theta); break;
    case 6: s = dl::fidelity_sweep_fig6(r, theta); break;
    default: s = dl::figure_sweeps(id); break;  // throws UnknownFigure on bad ids
  }
  if (out.empty()) out = "fig" + std::to_string(id) + ".csv";
  dl::write_file_atomic(out, dl::to_csv(s));
  std::cout << out << ": " << s.grid.size() << " rows\n";
  return 0;
}

std::vector<double> parse_real_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string::npos ? text.size() : comma;
    out.push_back(parse_real(text.substr(start, end - start), what));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int run_table(int id, const std::string& r_list, double theta_deg, std::string out) {
  if (id != 1) throw dl::ParameterOutOfRange("only table 1 exists");
  const auto rows =
      r_list.empty() ? dl::default_table1_r() : parse_real_list(r_list, "mixing weight");
  const auto s = dl::fidelity_table1(rows, theta_deg * kPi / 180.0);
  if (out.empty()) out = "table1.csv";
  dl::write_file_atomic(out, dl::to_csv(s));
  std::cout << out << ": " << s.grid.size() << " rows\n";
  return 0;
}

int run_evolve(const ModelFlags& mf, const std::string& state_str, double t_end, double dt,
               std::size_t stride, bool full_state, const std::string& out) {
  const auto model = build_model(mf);
  const auto rho0 = parse_state(state_str);
  const double step = dt > 0.0 ? dt : dl::default_dt(model);
  const auto traj = dl::evolve_rk4(model, rho0, t_end, step, stride);

  std::string csv = "# provenance: model=" + mf.name + " gamma=" + dl::format_sci(mf.gamma) +
                    " state=" + state_str + " dt=" + dl::format_sci(step) +
                    " stride=" + std::to_string(stride) + "\n";
  csv += "t,C,B,M,purity";
  if (full_state)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const std::string tag = "rho" + std::to_string(i) + std::to_string(j);
        csv += "," + tag + "_re," + tag + "_im";
      }
  csv += "\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const auto rep = dl::measure(traj.states[k]);
    csv += dl::format_sci(traj.times[k]);
    csv += ',' + dl::format_sci(rep.concurrence);
    csv += ',' + dl::format_sci(rep.bell_max);
    csv += ',' + dl::format_sci(rep.mixedness);
    csv += ',' + dl::format_sci(rep.purity);
    if (full_state)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          csv += ',' + dl::format_sci(traj.states[k].m(i, j).real());
          csv += ',' + dl::format_sci(traj.states[k].m(i, j).imag());
        }
    csv += '\n';
  }
  dl::write_file_atomic(out, csv);
  std::cout << out << ": " << traj.times.size() << " rows\n";
  return 0;
}

void fill_threshold(json& j, const char* key, const dl::ThresholdTime& t) {
  const std::string status_key = std::string(key) + "_status";
  if (t.is_finite()) {
    j[key] = t.value;
    j[status_key] = "finite";
  } else {
    j[key] = nullptr;
    j[status_key] = t.is_never() ? "never" : "none";
  }
}

int run_threshold(const ModelFlags& mf, const std::string& state_str, double t_max,
                  const std::string& out) {
  const auto model = build_model(mf);
  json j;
  j["model"] = mf.name;
  j["state"] = state_str;
  j["gamma"] = mf.gamma;
  j["t_max"] = t_max;

  if (model.variant == dl::ModelVariant::PureDephasing) {
    if (const auto r = phi_family_weight(state_str)) {
      j["method"] = "analytic";
      fill_threshold(j, "t_c", dl::t_c_analytic(*r, model.gamma));
      fill_threshold(j, "t_c_bell", dl::t_c_bell_analytic(*r, model.gamma));
      const std::string text = j.dump(2) + "\n";
      if (!out.empty()) dl::write_file_atomic(out, text);
      std::cout << text;
      return 0;
    }
  }

  const auto rho0 = parse_state(state_str);
  const auto tc = dl::find_disentanglement_time(model, rho0, t_max);
  const auto tb = dl::find_bell_threshold_time(model, rho0, t_max);
  j["method"] = "bisection";
  j["t_c"] = tc ? json(*tc) : json(nullptr);
  j["t_c_status"] = tc ? "finite" : "none";
  j["t_c_bell"] = tb ? json(*tb) : json(nullptr);
  j["t_c_bell_status"] = tb ? "finite" : "none";
  const std::string text = j.dump(2) + "\n";
  if (!out.empty()) dl::write_file_atomic(out, text);
  std::cout << text;
  return 0;
}

// Expand `--config FILE` into its key=value pairs, injected right after the
// subcommand token so explicit flags (parsed last) win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (auto it = args.begin(); it != args.end();) {
    if (*it == "--config") {
      if (std::next(it) == args.end())
        throw dl::ParameterOutOfRange("--config needs a file path");
      path = *std::next(it);
      it = args.erase(it, std::next(it, 2));
    } else if (it->rfind("--config=", 0) == 0) {
      path = it->substr(9);
      it = args.erase(it);
    } else {
      ++it;
    }
  }
  if (path.empty()) return args;

  std::ifstream in(path);
  if (!in) throw dl::ParameterOutOfRange("config file not readable: " + path);
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  std::vector<std::string> injected;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw dl::ParameterOutOfRange("config line must be key = value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw dl::ParameterOutOfRange("config line must be key = value: " + line);
    injected.push_back("--" + key);
    injected.push_back(value);
  }
  const auto sub = std::find_if(args.begin(), args.end(),
                                [](const std::string& a) { return !a.empty() && a[0] != '-'; });
  if (sub == args.end())
    throw dl::ParameterOutOfRange("--config requires a subcommand to apply to");
  args.insert(std::next(sub), injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-qubit collective-dephasing toolkit"};
  app.require_subcommand(1);
  const auto last = CLI::MultiOptionPolicy::TakeLast;

  // figure
  int fig_id = 0;
  std::string fig_out;
  double fig_zog = 41.25, fig_r = 0.99, fig_theta_deg = 17.0;
  auto* fig = app.add_subcommand("figure", "write one curve dataset as CSV");
  fig->add_option("id", fig_id, "dataset id, 1..6")->required();
  fig->add_option("--out", fig_out, "output path (default fig<id>.csv)")
      ->multi_option_policy(last);
  fig->add_option("--zeta-over-gamma", fig_zog, "step-drive intensity ratio (dataset 4)")
      ->multi_option_policy(last);
  fig->add_option("--r", fig_r, "mixing weight (dataset 6)")->multi_option_policy(last);
  fig->add_option("--theta-deg", fig_theta_deg, "dephasing-axis angle (datasets 5, 6)")
      ->multi_option_policy(last);

  // table
  int table_id = 1;
  std::string table_r;
  double table_theta_deg = 17.0;
  std::string table_out;
  auto* table = app.add_subcommand("table", "write the stationary-fidelity table as CSV");
  table->add_option("id", table_id, "table id (1)");
  table->add_option("--r", table_r, "comma-separated mixing weights")
      ->multi_option_policy(last);
  table->add_option("--theta-deg", table_theta_deg, "dephasing-axis angle in degrees")
      ->multi_option_policy(last);
  table->add_option("--out", table_out, "output path (default table1.csv)")
      ->multi_option_policy(last);

  // evolve
  ModelFlags ev_model;
  std::string ev_state, ev_out = "evolve.csv";
  double ev_t_end = 0.0, ev_dt = 0.0;
  std::size_t ev_stride = 1;
  bool ev_full = false;
  auto* ev = app.add_subcommand("evolve", "integrate one trajectory, write measures as CSV");
  add_model_flags(ev, ev_model);
  ev->add_option("--state", ev_state, "werner:<family>:<r> | bell:<kind> | file:<path>")
      ->required()
      ->multi_option_policy(last);
  ev->add_option("--t-end", ev_t_end, "end time")->required()->multi_option_policy(last);
  ev->add_option("--dt", ev_dt, "step size (0 = auto)")->multi_option_policy(last);
  ev->add_option("--stride", ev_stride, "store every n-th step")->multi_option_policy(last);
  ev->add_flag("--full-state", ev_full, "append the 32 state components per row");
  ev->add_option("--out", ev_out, "output path")->multi_option_policy(last);

  // threshold
  ModelFlags th_model;
  std::string th_state, th_out;
  double th_t_max = 20.0;
  auto* th = app.add_subcommand("threshold", "report threshold times as JSON");
  add_model_flags(th, th_model);
  th->add_option("--state", th_state, "werner:<family>:<r> | bell:<kind> | file:<path>")
      ->required()
      ->multi_option_policy(last);
  th->add_option("--t-max", th_t_max, "search horizon for the numeric path")
      ->multi_option_policy(last);
  th->add_option("--out", th_out, "also write the JSON to this path")
      ->multi_option_policy(last);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(std::move(args));
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::vector<const char*> cargv;
  cargv.push_back(argv[0]);
  for (const auto& a : args) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fig->parsed()) return run_figure(fig_id, fig_out, fig_zog, fig_r, fig_theta_deg);
    if (table->parsed()) return run_table(table_id, table_r, table_theta_deg, table_out);
    if (ev->parsed())
      return run_evolve(ev_model, ev_state, ev_t_end, ev_dt, ev_stride, ev_full, ev_out);
    if (th->parsed()) return run_threshold(th_model, th_state, th_t_max, th_out);
  } catch (const dl::PositivityLost& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const dl::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;  // no subcommand selected (require_subcommand should prevent this)
}
