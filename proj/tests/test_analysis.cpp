#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "dephaselab/analysis.hpp"
#include "test_helpers.hpp"

using namespace dephaselab;

namespace {

// index of the first row from which a sweep column stays exactly at zero
std::size_t death_row(const std::vector<double>& col) {
  std::size_t i = col.size();
  while (i > 0 && col[i - 1] == 0.0) --i;
  return i;
}

}  // namespace

TEST_CASE("threshold-time taxonomy", "[analysis]") {
  CHECK(ThresholdTime::finite(1.5).is_finite());
  CHECK(ThresholdTime::finite(1.5).value == 1.5);
  CHECK(ThresholdTime::none().is_none());
  CHECK(ThresholdTime::never().is_never());
  CHECK_FALSE(ThresholdTime::never().is_finite());
}

TEST_CASE("closed-form disentanglement time", "[analysis]") {
  SECTION("frozen values") {
    const auto tc = t_c_analytic(0.8, 1.0);
    REQUIRE(tc.is_finite());
    CHECK(tc.value == Catch::Approx(1.0397207708399179).margin(1e-12));  // 0.5 ln 8
    CHECK(tc.value == Catch::Approx(0.5 * std::log(8.0)).margin(1e-15));

    const auto scaled = t_c_analytic(0.8, 2.0);
    CHECK(scaled.value == Catch::Approx(tc.value / 2.0).margin(1e-12));
  }
  SECTION("boundary and degenerate cases") {
    const auto at_boundary = t_c_analytic(1.0 / 3.0, 1.0);
    REQUIRE(at_boundary.is_finite());
    CHECK(at_boundary.value <= 1e-9);
    CHECK(t_c_analytic(1.0, 1.0).is_never());
    CHECK(t_c_analytic(0.0, 1.0).is_none());
    CHECK(t_c_analytic(0.2, 1.0).is_none());
    CHECK(t_c_analytic(0.3333, 1.0).is_none());
  }
  SECTION("monotone in r above the boundary") {
    double prev = -1.0;
    for (int i = 34; i <= 99; ++i) {
      const auto tc = t_c_analytic(0.01 * i, 1.0);
      REQUIRE(tc.is_finite());
      CHECK(tc.value > prev);
      prev = tc.value;
    }
  }
  SECTION("parameter validation") {
    CHECK_THROWS_AS(t_c_analytic(-0.1, 1.0), ParameterOutOfRange);
    CHECK_THROWS_AS(t_c_analytic(1.1, 1.0), ParameterOutOfRange);
    CHECK_THROWS_AS(t_c_analytic(0.5, 0.0), ParameterOutOfRange);
    CHECK_THROWS_AS(t_c_analytic(0.5, -1.0), ParameterOutOfRange);
  }
}

TEST_CASE("closed-form nonlocality-loss time", "[analysis]") {
  SECTION("frozen values") {
    const auto tb = t_c_bell_analytic(0.9, 1.0);
    REQUIRE(tb.is_finite());
    CHECK(tb.value == Catch::Approx(0.36250254387649966).margin(1e-12));
    CHECK(tb.value == Catch::Approx(0.25 * std::log(0.81 / 0.19)).margin(1e-15));

    const auto tb8 = t_c_bell_analytic(0.8, 1.0);
    REQUIRE(tb8.is_finite());
    CHECK(tb8.value == Catch::Approx(0.14384103622589046).margin(1e-12));
  }
  SECTION("boundary and degenerate cases") {
    const auto at_boundary = t_c_bell_analytic(std::sqrt(0.5), 1.0);
    REQUIRE(at_boundary.is_finite());
    CHECK(at_boundary.value <= 1e-9);
    CHECK(t_c_bell_analytic(1.0, 1.0).is_never());
    CHECK(t_c_bell_analytic(0.0, 1.0).is_none());
    CHECK(t_c_bell_analytic(0.5, 1.0).is_none());
    CHECK(t_c_bell_analytic(0.7, 1.0).is_none());
  }
  SECTION("monotone in r above the boundary") {
    double prev = -1.0;
    for (int i = 71; i <= 99; ++i) {
      const auto tb = t_c_bell_analytic(0.01 * i, 1.0);
      REQUIRE(tb.is_finite());
      CHECK(tb.value > prev);
      prev = tb.value;
    }
  }
  SECTION("loss of violation precedes loss of entanglement") {
    for (double r : {0.75, 0.85, 0.95}) {
      CHECK(t_c_bell_analytic(r, 1.0).value < t_c_analytic(r, 1.0).value);
    }
  }
}

TEST_CASE("werner mixing-weight classes", "[analysis]") {
  CHECK(classify_werner(0.0) == WernerClass::MaximallyMixed);
  CHECK(classify_werner(0.2) == WernerClass::Separable);
  CHECK(classify_werner(1.0 / 3.0) == WernerClass::Separable);
  CHECK(classify_werner(0.34) == WernerClass::EntangledLocal);
  CHECK(classify_werner(std::sqrt(0.5)) == WernerClass::EntangledLocal);
  CHECK(classify_werner(0.71) == WernerClass::NonlocalFragile);
  CHECK(classify_werner(1.0) == WernerClass::NonlocalFragile);
  CHECK_THROWS_AS(classify_werner(-0.01), ParameterOutOfRange);
  CHECK_THROWS_AS(classify_werner(1.01), ParameterOutOfRange);

  SECTION("boundaries agree with the matrix-level measures") {
    CHECK(concurrence(werner({BellKind::PsiMinus, 1.0 / 3.0})) <= 1e-10);
    CHECK(concurrence(werner({BellKind::PsiMinus, 0.35})) > 0.0);
    CHECK(bell_max(werner({BellKind::PsiMinus, std::sqrt(0.5)})) ==
          Catch::Approx(2.0).margin(1e-9));
  }
}

TEST_CASE("numeric threshold search matches the closed forms", "[analysis]") {
  const auto model = ModelSpec::pure_dephasing(1.0);
  SECTION("disentanglement time") {
    for (double r : {0.4, 0.55, 0.7, 0.8, 0.95}) {
      const auto found = find_disentanglement_time(model, werner({BellKind::PhiPlus, r}), 4.0);
      REQUIRE(found.has_value());
      CHECK(*found == Catch::Approx(t_c_analytic(r, 1.0).value).margin(1e-3));
    }
  }
  SECTION("nonlocality-loss time") {
    for (double r : {0.75, 0.8, 0.9, 0.95}) {
      const auto found = find_bell_threshold_time(model, werner({BellKind::PhiPlus, r}), 2.0);
      REQUIRE(found.has_value());
      CHECK(*found == Catch::Approx(t_c_bell_analytic(r, 1.0).value).margin(1e-3));
    }
  }
  SECTION("gamma rescaling carries through the search") {
    const auto fast = ModelSpec::pure_dephasing(2.0);
    const auto found = find_disentanglement_time(fast, werner({BellKind::PhiPlus, 0.8}), 2.0);
    REQUIRE(found.has_value());
    CHECK(*found == Catch::Approx(t_c_analytic(0.8, 2.0).value).margin(1e-3));
  }
}

TEST_CASE("threshold search edge semantics", "[analysis]") {
  SECTION("a pure Bell state never disentangles, however small its concurrence") {
    const auto found = find_disentanglement_time(ModelSpec::pure_dephasing(1.0),
                                                 bell_state(BellKind::PhiPlus), 20.0);
    CHECK_FALSE(found.has_value());
  }
  SECTION("the one-sided drive kills even the singlet in finite time") {
    const auto found = find_disentanglement_time(ModelSpec::asymmetric_drive(1.0, 1.0, 0.0),
                                                 bell_state(BellKind::PsiMinus), 10.0);
    REQUIRE(found.has_value());
    CHECK(*found == Catch::Approx(3.0593).margin(2e-3));
  }
  SECTION("a state below the threshold from the start reports zero") {
    const auto found = find_disentanglement_time(ModelSpec::pure_dephasing(1.0),
                                                 werner({BellKind::PhiPlus, 0.2}), 5.0);
    REQUIRE(found.has_value());
    CHECK(*found == 0.0);
    const auto bell_found = find_bell_threshold_time(ModelSpec::pure_dephasing(1.0),
                                                     werner({BellKind::PhiPlus, 0.5}), 5.0);
    REQUIRE(bell_found.has_value());
    CHECK(*bell_found == 0.0);
  }
  SECTION("invalid search horizon") {
    CHECK_THROWS_AS(find_disentanglement_time(ModelSpec::pure_dephasing(1.0),
                                              bell_state(BellKind::PhiPlus), 0.0),
                    ParameterOutOfRange);
  }
}

TEST_CASE("stationary states", "[analysis]") {
  SECTION("the singlet family is already stationary") {
    const auto rho = werner({BellKind::PsiMinus, 0.7});
    const auto st = stationary_state(ModelSpec::pure_dephasing(1.0), rho);
    CHECK(testutil::frobenius_distance(st.m, rho.m) < 1e-15);
  }
  SECTION("zero-length drive window reduces to the bare projection") {
    const auto st =
        stationary_state(ModelSpec::step_drive(1.0, 41.25, 0.0), bell_state(BellKind::PhiPlus));
    CHECK(std::abs(st.m(0, 0) - Complex(0.5, 0.0)) < 1e-15);
    CHECK(std::abs(st.m(3, 3) - Complex(0.5, 0.0)) < 1e-15);
    CHECK(std::abs(st.m(0, 3)) < 1e-15);
  }
  SECTION("rotated axis: projection equals a long integration") {
    const auto model = ModelSpec::rotated_dephasing(1.0, default_theta());
    const auto rho0 = werner({BellKind::PhiPlus, 0.99});
    const auto st = stationary_state(model, rho0);
    const auto traj = evolve_rk4(model, rho0, 30.0, 1e-3, 1 << 20);
    CHECK(testutil::frobenius_distance(st.m, traj.states.back().m) < 1e-6);
  }
  SECTION("step drive: stationary state equals a long integration") {
    const auto model = ModelSpec::step_drive(1.0, 41.25, 0.1);
    const auto rho0 = bell_state(BellKind::PhiPlus);
    const auto st = stationary_state(model, rho0);
    const auto traj = evolve_rk4(model, rho0, 35.0, 1e-3, 1 << 20);
    CHECK(testutil::frobenius_distance(st.m, traj.states.back().m) < 1e-6);
  }
  SECTION("stationary states are fixed points of the generator") {
    const auto pd = ModelSpec::pure_dephasing(1.0);
    const auto rot = ModelSpec::rotated_dephasing(1.0, 0.4);
    const auto step = ModelSpec::step_drive(1.0, 10.0, 0.3);
    std::mt19937_64 rng(77);
    for (int it = 0; it < 10; ++it) {
      const auto rho = testutil::random_density(rng);
      CHECK(frobenius_norm(liouvillian_apply(pd, stationary_state(pd, rho), 0.0)) <= 1e-9);
      CHECK(frobenius_norm(liouvillian_apply(rot, stationary_state(rot, rho), 0.0)) <= 1e-9);
      CHECK(frobenius_norm(liouvillian_apply(step, stationary_state(step, rho), 1.0)) <= 1e-9);
    }
  }
  SECTION("always-on drives have no stationary limit") {
    CHECK_THROWS_AS(
        stationary_state(ModelSpec::symmetric_drive(1.0, 1.0), bell_state(BellKind::PhiPlus)),
        UnsupportedVariant);
    CHECK_THROWS_AS(
        stationary_state(ModelSpec::asymmetric_drive(1.0, 1.0, 0.0), bell_state(BellKind::PhiPlus)),
        UnsupportedVariant);
  }
}

TEST_CASE("threshold dataset over the mixing weight", "[analysis]") {
  const SweepResult s = threshold_sweep_fig1();
  CHECK(s.axis == "r");
  REQUIRE(s.grid.size() == 66);
  REQUIRE(s.columns.size() == 2);
  CHECK(s.columns[0] == "gamma_t_c");
  CHECK(s.columns[1] == "gamma_t_c_bell");
  CHECK(s.grid.front() == Catch::Approx(0.34).margin(1e-12));
  CHECK(s.grid.back() == Catch::Approx(0.99).margin(1e-12));

  // row at r = 0.8
  CHECK(s.grid[46] == Catch::Approx(0.8).margin(1e-12));
  CHECK(s.values[0][46] == Catch::Approx(1.0397207708399179).margin(1e-9));
  CHECK(s.values[1][46] == Catch::Approx(0.14384103622589046).margin(1e-9));

  // the CHSH column only exists above the violation boundary
  CHECK(std::isnan(s.values[1][0]));
  CHECK(std::isnan(s.values[1][36]));  // r = 0.70
  CHECK_FALSE(std::isnan(s.values[1][37]));  // r = 0.71
  for (std::size_t i = 0; i < s.grid.size(); ++i) CHECK_FALSE(std::isnan(s.values[0][i]));

  SECTION("the numeric search reproduces the CHSH row at r = 0.8") {
    const auto found = find_bell_threshold_time(ModelSpec::pure_dephasing(1.0),
                                                werner({BellKind::PhiPlus, 0.8}), 2.0);
    REQUIRE(found.has_value());
    CHECK(*found == Catch::Approx(s.values[1][46]).margin(1e-3));
  }
}

TEST_CASE("symmetric-drive dataset", "[analysis]") {
  const SweepResult s = drive_sweep_fig2();
  CHECK(s.axis == "gamma_t");
  REQUIRE(s.grid.size() == 501);
  REQUIRE(s.columns.size() == 9);
  CHECK(s.columns[0] == "c_phi_minus_omega1");
  CHECK(s.columns[8] == "c_psi_plus_omega3");
  for (const auto& col : s.values) {
    REQUIRE(col.size() == s.grid.size());
    CHECK(col[0] == Catch::Approx(1.0).margin(1e-9));  // all start from a Bell state
    CHECK(col.back() == 0.0);                          // and are dead by gamma_t = 5
  }
  SECTION("phi- entanglement dies strictly first at every drive strength") {
    for (int w = 0; w < 3; ++w) {
      const auto d_phi_minus = death_row(s.values[0 + w]);
      const auto d_phi_plus = death_row(s.values[3 + w]);
      const auto d_psi_plus = death_row(s.values[6 + w]);
      CHECK(d_phi_minus < d_phi_plus);
      CHECK(d_phi_minus < d_psi_plus);
    }
  }
}

TEST_CASE("one-sided-drive dataset", "[analysis]") {
  const SweepResult s = drive_sweep_fig3();
  REQUIRE(s.grid.size() == 501);
  REQUIRE(s.columns.size() == 5);

  SECTION("parity partners evolve identically under this drive") {
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
      CHECK(s.values[0][i] == Catch::Approx(s.values[1][i]).margin(1e-9));  // psi-, psi+
      CHECK(s.values[2][i] == Catch::Approx(s.values[3][i]).margin(1e-9));  // phi+, phi-
    }
  }
  SECTION("singlet-family states survive about twice as long as the others") {
    const double t_psi = s.grid[death_row(s.values[0])];
    const double t_phi = s.grid[death_row(s.values[2])];
    CHECK(t_psi / t_phi > 1.5);
    CHECK(t_psi / t_phi < 2.5);
  }
  SECTION("the undriven reference column follows the closed form and never dies") {
    for (std::size_t i = 0; i < s.grid.size(); i += 25)
      CHECK(s.values[4][i] ==
            Catch::Approx(concurrence_phi_analytic(1.0, s.grid[i])).margin(1e-8));
    CHECK(s.values[4].back() > 0.0);
  }
}

TEST_CASE("step-drive stationary dataset", "[analysis]") {
  const std::vector<double> grid{0.0, 0.1, 0.5, 1.0, 1.5, 2.1, 2.5};
  const SweepResult s = stationary_sweep_fig4(41.25, grid);
  CHECK(s.axis == "gamma_T");
  REQUIRE(s.columns.size() == 2);
  REQUIRE(s.values[0].size() == grid.size());

  // no drive window: phi+ fully dephases, leaving classical correlations only
  CHECK(s.values[0][0] == 0.0);
  CHECK(s.values[1][0] == Catch::Approx(2.0).margin(1e-9));

  // a short window protects a sizable stationary concurrence...
  CHECK(s.values[0][1] == Catch::Approx(0.4808).margin(5e-3));
  // ... while long windows destroy it again (non-monotone in gamma_T)
  CHECK(s.values[0][5] == 0.0);
  CHECK(s.values[0][6] == 0.0);

  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(s.values[1][i] <= 2.0 * std::sqrt(2.0) + 1e-9);
    CHECK(s.values[1][i] >= 0.0);
  }

  SECTION("input validation") {
    CHECK_THROWS_AS(stationary_sweep_fig4(-1.0, grid), ParameterOutOfRange);
    CHECK_THROWS_AS(stationary_sweep_fig4(41.25, {}), ParameterOutOfRange);
    CHECK_THROWS_AS(stationary_sweep_fig4(41.25, {0.2, 0.1}), ParameterOutOfRange);
  }
}

TEST_CASE("fidelity-vs-r dataset", "[analysis]") {
  const SweepResult s = fidelity_sweep_fig5(default_theta());
  REQUIRE(s.grid.size() == 101);
  REQUIRE(s.columns.size() == 3);
  for (int f = 0; f < 3; ++f) {
    CHECK(s.values[f][0] == Catch::Approx(1.0).margin(1e-12));  // r = 0: flat mixture
    for (std::size_t i = 1; i < s.grid.size(); ++i)
      CHECK(s.values[f][i] <= s.values[f][i - 1] + 1e-12);  // worsens with r
  }
  SECTION("family ordering at the rotated axis") {
    for (std::size_t i = 10; i < s.grid.size(); i += 10) {
      CHECK(s.values[2][i] > s.values[0][i]);  // psi+ above phi+
      CHECK(s.values[0][i] > s.values[1][i]);  // phi+ above phi-
    }
  }
  CHECK_THROWS_AS(fidelity_sweep_fig5(-0.1), ParameterOutOfRange);
  CHECK_THROWS_AS(fidelity_sweep_fig5(2.0), ParameterOutOfRange);
}

TEST_CASE("fidelity-vs-time dataset", "[analysis]") {
  const SweepResult s = fidelity_sweep_fig6(0.99, default_theta());
  REQUIRE(s.grid.size() == 601);
  REQUIRE(s.columns.size() == 3);
  for (int f = 0; f < 3; ++f) {
    CHECK(s.values[f][0] == Catch::Approx(1.0).margin(1e-12));
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
      CHECK(s.values[f][i] >= -1e-12);
      CHECK(s.values[f][i] <= 1.0 + 1e-9);
    }
    CHECK(s.values[f].back() < s.values[f][0]);
  }
  SECTION("phi- transiently beats phi+ at high mixing weight") {
    for (std::size_t i = 1; i <= 50; ++i) CHECK(s.values[1][i] > s.values[0][i]);
  }
  CHECK_THROWS_AS(fidelity_sweep_fig6(1.5, 0.1), ParameterOutOfRange);
  CHECK_THROWS_AS(fidelity_sweep_fig6(0.5, -0.1), ParameterOutOfRange);
}

TEST_CASE("stationary fidelity table", "[analysis]") {
  SECTION("defaults") {
    const auto r = default_table1_r();
    REQUIRE(r.size() == 5);
    CHECK(r.front() == 0.2);
    CHECK(r.back() == 0.99);
  }
  SECTION("flat mixture is a fixed point for every family") {
    const SweepResult s = fidelity_table1({0.0}, default_theta());
    for (int f = 0; f < 4; ++f) CHECK(s.values[f][0] == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("at theta = 0 both single-excitation families are untouched") {
    const SweepResult s = fidelity_table1({0.3, 0.8}, 0.0);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(s.values[2][i] == Catch::Approx(1.0).margin(1e-12));
      CHECK(s.values[3][i] == Catch::Approx(1.0).margin(1e-12));
    }
  }
  SECTION("theta = 0 phi+ column equals the long-time closed form") {
    const SweepResult s = fidelity_table1({0.2, 0.5, 0.8}, 0.0);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(s.values[0][i] ==
            Catch::Approx(fidelity_w_analytic(s.grid[i], 30.0)).margin(1e-9));
  }
  SECTION("family ordering at the rotated axis") {
    const SweepResult s = fidelity_table1({0.2, 0.4, 0.6, 0.8, 0.99}, default_theta());
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
      CHECK(s.values[2][i] > s.values[0][i]);  // f3 > f1
      CHECK(s.values[0][i] > s.values[1][i]);  // f1 > f2
    }
  }
  SECTION("columns worsen with r") {
    const SweepResult s =
        fidelity_table1({0.1, 0.3, 0.5, 0.7, 0.9}, default_theta());
    for (int f = 0; f < 4; ++f)
      for (std::size_t i = 1; i < s.grid.size(); ++i)
        CHECK(s.values[f][i] <= s.values[f][i - 1] + 1e-12);
  }
  SECTION("input validation") {
    CHECK_THROWS_AS(fidelity_table1({}, 0.1), ParameterOutOfRange);
    CHECK_THROWS_AS(fidelity_table1({0.5}, -0.2), ParameterOutOfRange);
    CHECK_THROWS_AS(fidelity_table1({1.2}, 0.1), ParameterOutOfRange);
  }
}

TEST_CASE("dataset dispatch", "[analysis]") {
  CHECK_THROWS_AS(figure_sweeps(0), UnknownFigure);
  CHECK_THROWS_AS(figure_sweeps(7), UnknownFigure);
  CHECK_THROWS_AS(figure_sweeps(-3), UnknownFigure);
  CHECK(figure_sweeps(1).grid.size() == 66);
  CHECK(figure_sweeps(5).grid.size() == 101);
  CHECK(figure_sweeps(6).grid.size() == 601);
}

TEST_CASE("csv serialization", "[analysis]") {
  SweepResult s;
  s.axis = "x";
  s.grid = {0.0, 0.5};
  s.columns = {"y"};
  s.values = {{1.0, std::nan("")}};
  s.provenance = {"note=1"};
  CHECK(to_csv(s) ==
        "# provenance: note=1\n"
        "x,y\n"
        "0.000000000e+00,1.000000000e+00\n"
        "5.000000000e-01,nan\n");

  SECTION("serialization is deterministic") {
    CHECK(to_csv(threshold_sweep_fig1()) == to_csv(threshold_sweep_fig1()));
  }
  SECTION("atomic writes land complete or not at all") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "dephaselab-csv-test";
    fs::create_directories(dir);
    const fs::path target = dir / "out.csv";
    write_file_atomic(target.string(), "a,b\n1,2\n");
    std::ifstream in(target);
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(body == "a,b\n1,2\n");
    CHECK_FALSE(fs::exists(target.string() + ".tmp"));
    fs::remove_all(dir);

    CHECK_THROWS_AS(write_file_atomic("/nonexistent-dir/x.csv", "data"), IoError);
  }
}

TEST_CASE("worker pool helpers", "[analysis]") {
  SECTION("every index is visited exactly once") {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
  SECTION("exceptions propagate to the caller") {
    CHECK_THROWS_AS(parallel_for(64,
                                 [&](std::size_t i) {
                                   if (i == 37) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
  }
  SECTION("thread cap honors the environment override") {
    setenv("DEPHASELAB_THREADS", "1", 1);
    CHECK(max_workers() == 1);
    unsetenv("DEPHASELAB_THREADS");
    CHECK(max_workers() >= 1);
  }
}
