#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "twohop/divergence.hpp"
#include "twohop/single_letter.hpp"

using namespace twohop;

namespace {
SolverConfig fast_cfg() {
  SolverConfig cfg;
  cfg.restarts = 12;
  cfg.threads = 2;
  return cfg;
}
}  // namespace

TEST_CASE("induced joint has the aux markov structure") {
  std::mt19937_64 rng(3);
  TwoHopSource s = support::random_source(rng);
  AuxCoupling aux = AuxCoupling::copy(s);
  JointPmf j = induced_joint(s, aux);
  CHECK(j.rank() == 5);
  CHECK(conditional_mutual_information(j, {"U"}, {"Y"}, {"X"}) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(conditional_mutual_information(j, {"V"}, {"Z"}, {"Y"}) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // copy aux: U = X, V = Y exactly
  CHECK(mutual_information(j, {"U"}, {"X"}) ==
        doctest::Approx(entropy(s.p_x())).epsilon(1e-10));
}

TEST_CASE("objective at the constant coupling is zero") {
  std::mt19937_64 rng(4);
  TwoHopSource s = support::random_source(rng);
  AuxCoupling aux = AuxCoupling::constant(s);
  CHECK(objective_r(s, aux, {1.0, 1.0, 1.0}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("sub-minimizer matches the simplex grid oracle on binary") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  JointPmf p_xy = s.p_xy();
  SolverConfig cfg = fast_cfg();
  for (auto [a, b] : {std::pair{2.0, 1.0}, {1.0, 2.0}, {0.5, 1.5}}) {
    SubSolveResult r = minimize_info_tradeoff(p_xy, a, b, 2, cfg);
    double oracle = support::grid_min_info_tradeoff(p_xy, a, b);
    CHECK(r.value <= oracle + 1e-6);     // solver at least as good as the grid
    CHECK(r.value >= oracle - 2e-3);     // and the grid brackets it from below
  }
}

TEST_CASE("solve_r closed form at b = d = 0") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 3; ++t) {
    TwoHopSource s = support::random_source(rng);
    double ixy = mutual_information(s.p_xyz(), {"X"}, {"Y"});
    double iyz = mutual_information(s.p_xyz(), {"Y"}, {"Z"});
    for (double c : {0.5, 1.0}) {
      SolveResult r = solve_r(s, {0.0, c, 0.0}, {}, fast_cfg());
      CHECK(r.value == doctest::Approx(-(1.0 + c) * ixy - c * iyz).epsilon(1e-4));
    }
  }
}

TEST_CASE("solve_r vanishes for independent sources") {
  std::mt19937_64 rng(6);
  TwoHopSource s = support::random_independent_source(rng);
  for (auto w : {TradeoffWeights{1, 1, 1}, {2, 0.5, 1}, {0, 2, 0}}) {
    SolveResult r = solve_r(s, w, {}, fast_cfg());
    CHECK(std::abs(r.value) <= 1e-6);
  }
}

TEST_CASE("solve_r is monotone in the weights") {
  TwoHopSource s = TwoHopSource::dsbs(0.15, 0.1);
  SolverConfig cfg = fast_cfg();
  double base = solve_r(s, {1.0, 1.0, 1.0}, {}, cfg).value;
  // larger b or d can only increase the minimum; larger c can only decrease it
  CHECK(solve_r(s, {2.0, 1.0, 1.0}, {}, cfg).value >= base - 1e-8);
  CHECK(solve_r(s, {1.0, 1.0, 2.0}, {}, cfg).value >= base - 1e-8);
  CHECK(solve_r(s, {1.0, 2.0, 1.0}, {}, cfg).value <= base + 1e-8);
}

TEST_CASE("solve_r separates into u and v parts") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 5; ++t) {
    TwoHopSource s = support::random_source(rng);
    TradeoffWeights w{1.0 + (t % 3), 0.5 * (t % 2 + 1), 1.0};
    SolveResult r = solve_r(s, w, {}, fast_cfg());
    CHECK(r.value == doctest::Approx(r.u_part + r.v_part).epsilon(1e-12));
    // the reported argmin reproduces the reported value
    CHECK(objective_r(s, r.argmin, w) == doctest::Approx(r.value).epsilon(1e-7));
  }
}

TEST_CASE("solve_r_tilde splits the b weight") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  SolverConfig cfg = fast_cfg();
  SolveResult4 r4 = solve_r_tilde(s, {1.0, 1.0, 1.0, 1.0}, {}, cfg);
  // splitting the relay minimization over two kernels relaxes the joint
  // problem with b = b1 + b2
  SolveResult r = solve_r(s, {2.0, 1.0, 1.0}, {}, cfg);
  CHECK(r4.value <= r.value + 1e-8);
}

TEST_CASE("certify_in finds a witness for an achievable point") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  double ixy = mutual_information(s.p_xyz(), {"X"}, {"Y"});
  double iyz = mutual_information(s.p_xyz(), {"Y"}, {"Z"});
  double hx = entropy(s.p_x()), hy = entropy(s.p_y());
  RegionPoint inside{hx + 0.01, hy + 0.01, ixy - 0.01, ixy + iyz - 0.01};
  auto w = certify_in(s, inside, {}, fast_cfg());
  REQUIRE(w.has_value());
  JointPmf j = induced_joint(s, *w);
  CHECK(mutual_information(j, {"U"}, {"X"}) <= inside.r1 + 1e-9);
  CHECK(mutual_information(j, {"V"}, {"Y"}) <= inside.r2 + 1e-9);
  CHECK(mutual_information(j, {"U"}, {"Y"}) >= inside.e1 - 1e-9);
  CHECK(mutual_information(j, {"U"}, {"Y"}) + mutual_information(j, {"V"}, {"Z"}) >=
        inside.e2 - 1e-9);
}

TEST_CASE("certify_out rejects an infeasible exponent point") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  RegionPoint outside{10.0, 10.0, 0.45, 0.0};  // e1 above I(X;Y)
  auto w = certify_out(s, outside, default_weight_grid(), {}, fast_cfg());
  CHECK(w.has_value());
}

TEST_CASE("q1 band and gamma objective") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  CHECK(q1_band_ok(s, s.p_xy(), 0.01));
  Axis x{"X", {"0", "1"}}, y{"Y", {"0", "1"}};
  JointPmf skew({x, y}, {0.6, 0.1, 0.1, 0.2});  // Q_Y = (0.7, 0.3)
  std::size_t bad = 99;
  CHECK_FALSE(q1_band_ok(s, skew, 0.1, &bad));
  CHECK(bad < 2);
  CHECK(q1_band_ok(s, skew, 0.5));
}

TEST_CASE("solve_r_gamma lower bounds solve_r") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  SolverConfig cfg = fast_cfg();
  cfg.gamma_starts = 4;
  cfg.gamma_outer_iters = 30;
  TradeoffWeights w{1.0, 1.0, 1.0};
  double plain = solve_r(s, w, {}, cfg).value;
  SolveGammaResult g = solve_r_gamma(s, w, 1.0, 0.2, {}, cfg);
  CHECK(g.value <= plain + 1e-8);  // the band-relaxed minimum can only be lower
  CHECK(q1_band_ok(s, g.argmin.q_xy, 0.2 + 1e-9));
  CHECK(objective_r_gamma(s, g.argmin, w, 1.0) == doctest::Approx(g.value).epsilon(1e-7));
}

TEST_CASE("perturbation preserves the y marginal") {
  std::mt19937_64 rng(11);
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  for (int t = 0; t < 10; ++t) {
    Q1Coupling q1;
    q1.theta = 0.3;
    // in-band Q_XY: mix the truth with a random joint
    std::vector<double> noise = support::random_simplex(rng, 4);
    std::vector<double> mix(4);
    for (int i = 0; i < 4; ++i) mix[i] = 0.85 * s.p_xy().mass()[i] + 0.15 * noise[i];
    q1.q_xy = JointPmf(s.p_xy().axes(), mix);
    REQUIRE(q1_band_ok(s, q1.q_xy, q1.theta));
    Axis xy{"XY", {"00", "01", "10", "11"}}, u{"U", {"u0", "u1"}};
    std::vector<double> urows;
    for (int i = 0; i < 4; ++i) {
      auto r = support::random_simplex(rng, 2);
      urows.insert(urows.end(), r.begin(), r.end());
    }
    q1.u_given_xy = Kernel(xy, u, urows);
    Axis yax{"Y", {"0", "1"}}, v{"V", {"v0", "v1"}};
    std::vector<double> vrows;
    for (int i = 0; i < 2; ++i) {
      auto r = support::random_simplex(rng, 2);
      vrows.insert(vrows.end(), r.begin(), r.end());
    }
    q1.v_given_y = Kernel(yax, v, vrows);
    PerturbationReport rep = perturb_gamma(s, q1, {1.0, 1.0, 1.0}, 2.0, q1.theta);
    CHECK(rep.all_pass());
    CHECK(rep.vstar_mass == doctest::Approx(q1.theta / (1.0 + q1.theta)));
    FinitePmf py = rep.perturbed.marginal1("Y");
    CHECK(py[0] == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("perturbation refuses out-of-band couplings") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  Q1Coupling q1;
  q1.theta = 0.05;
  Axis x{"X", {"0", "1"}}, y{"Y", {"0", "1"}};
  q1.q_xy = JointPmf({x, y}, {0.6, 0.1, 0.1, 0.2});
  Axis xy{"XY", {"00", "01", "10", "11"}}, u{"U", {"u0"}};
  q1.u_given_xy = Kernel(xy, u, {1, 1, 1, 1});
  Axis v{"V", {"v0"}};
  q1.v_given_y = Kernel(y, v, {1, 1});
  CHECK_THROWS_AS(perturb_gamma(s, q1, {1, 1, 1}, 1.0, q1.theta), std::domain_error);
}
