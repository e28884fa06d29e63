#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "twohop/divergence.hpp"
#include "twohop/pmf.hpp"
#include "twohop/source.hpp"

using namespace twohop;

namespace {
double hb(double p) { return -p * std::log(p) - (1 - p) * std::log(1 - p); }
}  // namespace

TEST_CASE("finite pmf basics") {
  FinitePmf p({"a", "b", "c"}, {0.2, 0.3, 0.5});
  CHECK(p.size() == 3);
  CHECK(p.index_of("b") == 1);
  CHECK(p[2] == doctest::Approx(0.5));
  CHECK(p.min_positive_mass() == doctest::Approx(0.2));
  FinitePmf u = FinitePmf::uniform({"0", "1"});
  CHECK(u[0] == doctest::Approx(0.5));
  FinitePmf pt = FinitePmf::point_mass({"0", "1"}, 1);
  CHECK(pt[0] == 0.0);
  CHECK(pt[1] == 1.0);
  CHECK_THROWS(FinitePmf({"a"}, {0.5}));           // not normalized
  CHECK_THROWS(FinitePmf({"a", "b"}, {1.2, -0.2}));  // negative mass
}

TEST_CASE("kl divergence pinned values") {
  // hand-derived: 0.3 log(0.3/0.7) + 0.7 log(0.7/0.3)
  CHECK(kl_divergence(std::vector<double>{0.3, 0.7}, {0.7, 0.3}) ==
        doctest::Approx(0.3389191442).epsilon(1e-9));
  CHECK(binary_divergence(0.2, 0.6) == doctest::Approx(0.3347952867).epsilon(1e-9));
  CHECK(kl_divergence(std::vector<double>{0.5, 0.5}, {0.5, 0.5}) == doctest::Approx(0.0));
  CHECK(std::isinf(kl_divergence(std::vector<double>{1.0, 0.0}, {0.0, 1.0})));
  CHECK(entropy(std::vector<double>{0.5, 0.5}) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("joint pmf marginals and conditionals") {
  Axis x{"X", {"0", "1"}}, y{"Y", {"0", "1"}};
  JointPmf j({x, y}, {0.45, 0.05, 0.05, 0.45});
  FinitePmf mx = j.marginal1("X");
  CHECK(mx[0] == doctest::Approx(0.5));
  JointPmf cond = j.conditional("X", 0);
  CHECK(cond.at(0) == doctest::Approx(0.9));
  JointPmf swapped = j.marginal({"Y", "X"});
  CHECK(swapped.axis(0).name == "Y");
  CHECK(swapped.at(swapped.flat_index({1, 0})) == doctest::Approx(0.05));
}

TEST_CASE("nfold and product") {
  Axis x{"X", {"0", "1"}};
  JointPmf p = JointPmf::from_pmf("X", FinitePmf({"0", "1"}, {0.3, 0.7}));
  JointPmf p2 = JointPmf::nfold(p, 2);
  CHECK(p2.size() == 4);
  CHECK(p2.at(0) == doctest::Approx(0.09));
  CHECK(p2.at(3) == doctest::Approx(0.49));
  JointPmf q = JointPmf::from_pmf("Y", FinitePmf({"0", "1"}, {0.5, 0.5}));
  JointPmf pq = JointPmf::product(p, q);
  CHECK(pq.at(pq.flat_index({1, 0})) == doctest::Approx(0.35));
}

TEST_CASE("kernel attach and identity") {
  Axis y{"Y", {"0", "1"}}, z{"Z", {"0", "1"}};
  Kernel k(y, z, {0.9, 0.1, 0.1, 0.9});
  CHECK(k.at(0, 0) == doctest::Approx(0.9));
  CHECK_FALSE(k.is_deterministic());
  CHECK(Kernel::identity(y, "Z").is_deterministic());
  JointPmf py = JointPmf::from_pmf("Y", FinitePmf({"0", "1"}, {0.5, 0.5}));
  JointPmf yz = attach(py, {"Y"}, k, "Z");
  CHECK(yz.at(yz.flat_index({0, 1})) == doctest::Approx(0.05));
}

TEST_CASE("dsbs source constants") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  JointPmf xy = s.p_xy();
  CHECK(xy.at(0) == doctest::Approx(0.45));
  CHECK(mutual_information(s.p_xyz(), {"X"}, {"Y"}) ==
        doctest::Approx(std::log(2.0) - hb(0.1)).epsilon(1e-10));
  CHECK(mutual_information(s.p_xyz(), {"Y"}, {"Z"}) ==
        doctest::Approx(std::log(2.0) - hb(0.1)).epsilon(1e-10));
  CHECK(s.alpha() == doctest::Approx(1.8));
  CHECK(s.mu() == doctest::Approx(2.0));
  SourceConstants c = source_constants(s, 4, 0.2, 0.2);
  CHECK(c.theta_n == doctest::Approx(std::sqrt(3.0 * 2.0 / 4.0 * std::log(16.0 / 0.6))));
  CHECK(c.psi ==
        doctest::Approx(2.0 * std::sqrt(4.0 * 0.8 * std::log(1.4 / 0.6))));
  CHECK_FALSE(c.alpha_is_one);
  CHECK_THROWS_AS(source_constants(s, 4, 0.5, 0.5), std::domain_error);
}

TEST_CASE("markov structure of the h0 law") {
  std::mt19937_64 rng(7);
  TwoHopSource s = support::random_source(rng, 2, 3, 2);
  // X - Y - Z: I(X;Z|Y) = 0 exactly
  CHECK(conditional_mutual_information(s.p_xyz(), {"X"}, {"Z"}, {"Y"}) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("independent source has alpha 1") {
  std::mt19937_64 rng(9);
  TwoHopSource s = support::random_independent_source(rng);
  CHECK(s.alpha() == doctest::Approx(1.0));
  CHECK(mutual_information(s.p_xyz(), {"X"}, {"Y"}) == doctest::Approx(0.0).epsilon(1e-12));
  SourceConstants c = source_constants(s, 3, 0.1, 0.1);
  CHECK(c.alpha_is_one);
  CHECK(c.psi == 0.0);
}

TEST_CASE("property: chain rule for mutual information") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 25; ++t) {
    TwoHopSource s = support::random_source(rng, 2, 2, 3);
    const JointPmf& j = s.p_xyz();
    double lhs = mutual_information(j, {"X"}, {"Y", "Z"});
    double rhs = mutual_information(j, {"X"}, {"Y"}) +
                 conditional_mutual_information(j, {"X"}, {"Z"}, {"Y"});
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("property: data processing along the chain") {
  std::mt19937_64 rng(22);
  for (int t = 0; t < 25; ++t) {
    TwoHopSource s = support::random_source(rng, 2, 3, 2);
    const JointPmf& j = s.p_xyz();
    CHECK(mutual_information(j, {"X"}, {"Z"}) <=
          mutual_information(j, {"X"}, {"Y"}) + 1e-10);
    CHECK(mutual_information(j, {"X"}, {"Z"}) <=
          mutual_information(j, {"Y"}, {"Z"}) + 1e-10);
  }
}

TEST_CASE("property: kl additivity under n-fold products") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> p = support::random_simplex(rng, 3), q = support::random_simplex(rng, 3);
    JointPmf jp = JointPmf::from_pmf("A", FinitePmf(support::labels("a", 3), p));
    JointPmf jq = JointPmf::from_pmf("A", FinitePmf(support::labels("a", 3), q));
    JointPmf jp3 = JointPmf::nfold(jp, 3), jq3 = JointPmf::nfold(jq, 3);
    CHECK(kl_divergence(jp3, jq3) == doctest::Approx(3.0 * kl_divergence(jp, jq)).epsilon(1e-9));
  }
}

TEST_CASE("relabeling invariance") {
  std::mt19937_64 rng(24);
  TwoHopSource s = support::random_source(rng);
  const JointPmf& j = s.p_xyz();
  JointPmf r = j.with_axis_names({"A", "B", "C"});
  CHECK(mutual_information(j, {"X"}, {"Y"}) ==
        doctest::Approx(mutual_information(r, {"A"}, {"B"})));
  CHECK(entropy(j) == doctest::Approx(entropy(r)));
}

TEST_CASE("source json round trip") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.2);
  TwoHopSource r = TwoHopSource::from_json(s.to_json());
  CHECK(r.p_xy().at(0) == doctest::Approx(s.p_xy().at(0)));
  CHECK(r.z_given_y().at(1, 0) == doctest::Approx(0.2));
  CHECK(r.alpha() == doctest::Approx(s.alpha()));
}
