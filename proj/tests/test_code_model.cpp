#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "twohop/code_model.hpp"
#include "twohop/divergence.hpp"

using namespace twohop;

namespace {

/// n=1 binary code: identity relay encoder, match-test deciders.
TwoHopCode match_code_n1() {
  TwoHopCode c;
  c.n = 1;
  c.N1 = 2;
  c.N2 = 2;
  c.f1 = {0, 1};
  c.f2 = {0, 0, 1, 1};       // forward m1
  c.g1 = {0, 1, 1, 0};       // accept iff m1 == y
  c.g2 = {0, 1, 1, 0};       // accept iff m2 == z
  return c;
}

TwoHopCode random_code(std::mt19937_64& rng, int n, std::uint32_t n1, std::uint32_t n2,
                       std::size_t sx, std::size_t sy, std::size_t sz) {
  TwoHopCode c;
  c.n = n;
  c.N1 = n1;
  c.N2 = n2;
  std::uniform_int_distribution<std::uint32_t> d1(0, n1 - 1), d2(0, n2 - 1), bit(0, 1);
  c.f1.resize(pow_size(sx, n));
  for (auto& v : c.f1) v = d1(rng);
  c.f2.resize(std::size_t{n1} * pow_size(sy, n));
  for (auto& v : c.f2) v = d2(rng);
  c.g1.resize(std::size_t{n1} * pow_size(sy, n));
  for (auto& v : c.g1) v = static_cast<std::uint8_t>(bit(rng));
  c.g2.resize(std::size_t{n2} * pow_size(sz, n));
  for (auto& v : c.g2) v = static_cast<std::uint8_t>(bit(rng));
  return c;
}

}  // namespace

TEST_CASE("sequence ranking round trip") {
  CHECK(pow_size(3, 4) == 81);
  for (std::size_t r = 0; r < 81; ++r)
    CHECK(rank_seq(unrank_seq(r, 3, 4), 3) == r);
  // first coordinate most significant
  CHECK(unrank_seq(1, 2, 3) == std::vector<std::size_t>{0, 0, 1});
  std::vector<double> p = seq_probs({0.25, 0.75}, 2);
  CHECK(p[0] == doctest::Approx(0.0625));
  CHECK(p[3] == doctest::Approx(0.5625));
}

TEST_CASE("exact errors of the n=1 match code") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  TwoHopCode c = match_code_n1();
  c.validate(s);
  ErrorProfile p = exact_errors(c, s);
  CHECK(p.beta1 == doctest::Approx(0.1));   // mismatch probability
  CHECK(p.beta2 == doctest::Approx(0.5));   // independent y agrees half the time
  CHECK(p.eta1 == doctest::Approx(1.0 - 0.9 * 0.9 - 0.1 * 0.1));  // both hops must match
  CHECK(p.eta2 == doctest::Approx(0.5));
}

TEST_CASE("accept-all code has zero type-one error") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  TwoHopCode c = match_code_n1();
  std::fill(c.g1.begin(), c.g1.end(), 0);
  std::fill(c.g2.begin(), c.g2.end(), 0);
  ErrorProfile p = exact_errors(c, s);
  CHECK(p.beta1 == 0.0);
  CHECK(p.eta1 == 0.0);
  CHECK(p.beta2 == doctest::Approx(1.0));
  CHECK(p.eta2 == doctest::Approx(1.0));
}

TEST_CASE("induced h1 law factorizes") {
  std::mt19937_64 rng(31);
  TwoHopSource s = support::random_source(rng);
  TwoHopCode c = random_code(rng, 2, 2, 3, 2, 2, 2);
  InducedLaw law = induced_laws(c, s);
  CHECK(mutual_information(law.h1_m1y, {"M1"}, {"Yn"}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(mutual_information(law.h1_m2z, {"M2"}, {"Zn"}) == doctest::Approx(0.0).epsilon(1e-12));
  // h0 laws are normalized
  double sum = 0.0;
  for (double v : law.h0_m2z.mass()) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("errors are invariant under relay message relabeling") {
  std::mt19937_64 rng(32);
  TwoHopSource s = support::random_source(rng);
  TwoHopCode c = random_code(rng, 2, 3, 2, 2, 2, 2);
  ErrorProfile base = exact_errors(c, s);
  // swap messages 0 and 2
  TwoHopCode r = c;
  std::size_t syn = pow_size(2, 2);
  for (auto& v : r.f1) v = (v == 0) ? 2 : (v == 2 ? 0 : v);
  for (std::size_t m1 = 0; m1 < 3; ++m1) {
    std::size_t src = (m1 == 0) ? 2 : (m1 == 2 ? 0 : m1);
    for (std::size_t yr = 0; yr < syn; ++yr) {
      r.f2[m1 * syn + yr] = c.f2[src * syn + yr];
      r.g1[m1 * syn + yr] = c.g1[src * syn + yr];
    }
  }
  ErrorProfile perm = exact_errors(r, s);
  CHECK(perm.beta1 == doctest::Approx(base.beta1).epsilon(1e-12));
  CHECK(perm.beta2 == doctest::Approx(base.beta2).epsilon(1e-12));
  CHECK(perm.eta1 == doctest::Approx(base.eta1).epsilon(1e-12));
  CHECK(perm.eta2 == doctest::Approx(base.eta2).epsilon(1e-12));
}

TEST_CASE("exact errors are thread count independent") {
  std::mt19937_64 rng(33);
  TwoHopSource s = support::random_source(rng);
  TwoHopCode c = random_code(rng, 3, 2, 2, 2, 2, 2);
  ErrorProfile a = exact_errors(c, s, 1);
  ErrorProfile b = exact_errors(c, s, 4);
  CHECK(a.beta1 == b.beta1);
  CHECK(a.beta2 == b.beta2);
  CHECK(a.eta1 == b.eta1);
  CHECK(a.eta2 == b.eta2);
}

TEST_CASE("monte carlo agrees with exact within 3 sigma") {
  std::mt19937_64 rng(34);
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  TwoHopCode c = random_code(rng, 3, 2, 2, 2, 2, 2);
  ErrorProfile ex = exact_errors(c, s);
  ErrorProfile mc = mc_errors(c, s, 200000, 42);
  REQUIRE(mc.samples.has_value());
  double m = static_cast<double>(*mc.samples);
  auto within = [&](double est, double truth) {
    double sd = std::sqrt(std::max(truth * (1 - truth), 1e-12) / m);
    return std::abs(est - truth) <= 3.0 * sd + 1e-12;
  };
  CHECK(within(mc.beta1, ex.beta1));
  CHECK(within(mc.beta2, ex.beta2));
  CHECK(within(mc.eta1, ex.eta1));
  CHECK(within(mc.eta2, ex.eta2));
}

TEST_CASE("monte carlo is deterministic per seed and thread independent") {
  std::mt19937_64 rng(35);
  TwoHopSource s = support::random_source(rng);
  TwoHopCode c = random_code(rng, 2, 2, 2, 2, 2, 2);
  ErrorProfile a = mc_errors(c, s, 20000, 7, 1);
  ErrorProfile b = mc_errors(c, s, 20000, 7, 4);
  CHECK(a.beta1 == b.beta1);
  CHECK(a.beta2 == b.beta2);
  CHECK(a.eta1 == b.eta1);
  CHECK(a.eta2 == b.eta2);
  ErrorProfile d = mc_errors(c, s, 20000, 8, 1);
  CHECK((a.beta1 != d.beta1 || a.beta2 != d.beta2 || a.eta1 != d.eta1 || a.eta2 != d.eta2));
}

TEST_CASE("wilson intervals cover the estimate") {
  std::mt19937_64 rng(36);
  TwoHopSource s = support::random_source(rng);
  TwoHopCode c = random_code(rng, 2, 2, 2, 2, 2, 2);
  ErrorProfile mc = mc_errors(c, s, 50000, 9);
  REQUIRE(mc.ci.has_value());
  REQUIRE(mc.ci->size() == 4);
  const double est[] = {mc.beta1, mc.beta2, mc.eta1, mc.eta2};
  for (int i = 0; i < 4; ++i) CHECK((*mc.ci)[i].contains(est[i]));
}

TEST_CASE("code json round trip") {
  TwoHopCode c = match_code_n1();
  TwoHopCode r = TwoHopCode::from_json(c.to_json());
  CHECK(r.n == c.n);
  CHECK(r.N1 == c.N1);
  CHECK(r.f1 == c.f1);
  CHECK(r.f2 == c.f2);
  CHECK(r.g1 == c.g1);
  CHECK(r.g2 == c.g2);
}

TEST_CASE("validate rejects malformed codes") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  TwoHopCode c = match_code_n1();
  c.f1 = {0, 5};  // message out of range
  CHECK_THROWS(c.validate(s));
  c = match_code_n1();
  c.f2.pop_back();
  CHECK_THROWS(c.validate(s));
}

TEST_CASE("weighted objective handles zero errors") {
  ErrorProfile p;
  p.beta2 = 0.25;
  p.eta2 = 0.5;
  TradeoffWeights w{1.0, 1.0, 1.0};
  CHECK(weighted_lhs(p, 2, 4, w) ==
        doctest::Approx(std::log(0.25) + std::log(2.0) + std::log(0.5) + std::log(4.0)));
  p.eta2 = 0.0;
  CHECK(weighted_lhs(p, 2, 4, w) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("budget guard raises on oversized exact runs") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  TwoHopCode c;
  c.n = 14;  // 2^14 x 2^14 joint cells: beyond the 2^26 budget
  c.N1 = 1;
  c.N2 = 1;
  std::size_t len = pow_size(2, 14);
  c.f1.assign(len, 0);
  c.f2.assign(len, 0);
  c.g1.assign(len, 0);
  c.g2.assign(len, 0);
  CHECK_THROWS_AS(exact_errors(c, s), BudgetError);
}
