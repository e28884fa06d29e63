#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "twohop/converse_lab.hpp"

using namespace twohop;

namespace {

TwoHopCode match_code_n1() {
  TwoHopCode c;
  c.n = 1;
  c.N1 = 2;
  c.N2 = 2;
  c.f1 = {0, 1};
  c.f2 = {0, 0, 1, 1};
  c.g1 = {0, 1, 1, 0};
  c.g2 = {0, 1, 1, 0};
  return c;
}

TwoHopCode accept_all_n2() {
  TwoHopCode c;
  c.n = 2;
  c.N1 = 2;
  c.N2 = 2;
  c.f1 = {0, 0, 1, 1};
  c.f2.assign(8, 0);
  for (std::size_t i = 4; i < 8; ++i) c.f2[i] = 1;
  c.g1.assign(8, 0);
  c.g2.assign(8, 0);
  return c;
}

}  // namespace

TEST_CASE("acceptance sets reflect the decision tables") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  TwoHopCode c = match_code_n1();
  AcceptanceSets a = acceptance_sets(c, s);
  // relay bitmap: accept iff g1 == 0
  REQUIRE(a.relay.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.relay[i] == (c.g1[i] == 0 ? 1 : 0));
  // d_y pulls the relay set back through f1
  REQUIRE(a.d_y.size() == 4);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y)
      CHECK(a.d_y[x * 2 + y] == a.relay[std::size_t{c.f1[x]} * 2 + y]);
  // d_z pulls the receiver regions back through both encoders
  REQUIRE(a.d_z.size() == 8);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t z = 0; z < 2; ++z) {
        std::size_t m2 = c.f2[std::size_t{c.f1[x]} * 2 + y];
        CHECK(a.d_z[(x * 2 + y) * 2 + z] == (c.g2[m2 * 2 + z] == 0 ? 1 : 0));
      }
  // accept-all code: d_y full, g full
  TwoHopCode open = accept_all_n2();
  AcceptanceSets ao = acceptance_sets(open, s);
  for (auto v : ao.d_y) CHECK(v == 1);
  for (auto v : ao.g) CHECK(v == 1);
}

TEST_CASE("truncation of an accept-all code") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  TwoHopCode c = accept_all_n2();
  TruncationArtifacts art = build_truncation(c, s, 0.2, 0.2);
  CHECK(art.errors.beta1 == 0.0);
  CHECK(art.errors.eta1 == 0.0);
  // no rejections: the good set is the full typical band
  for (auto v : art.b_set) CHECK(v == 1);
  CHECK(art.mass > 0.0);
  CHECK(art.mass <= 1.0 + 1e-12);
  // restricted law is normalized and supported on the good set
  double sum = 0.0;
  for (std::size_t i = 0; i < art.trunc_xy.size(); ++i) {
    sum += art.trunc_xy[i];
    if (!art.c_set[i]) CHECK(art.trunc_xy[i] == 0.0);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  // KL identity: D(trunc || product) = -log mass
  double kl = 0.0;
  for (std::size_t i = 0; i < art.trunc_xy.size(); ++i)
    if (art.trunc_xy[i] > 0.0) kl += art.trunc_xy[i] * std::log(art.trunc_xy[i] / art.pxyn[i]);
  CHECK(kl == doctest::Approx(-std::log(art.mass)).epsilon(1e-10));
  CHECK_FALSE(art.checks.any_fail());
}

TEST_CASE("truncation dominances hold when the mass premise holds") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  TwoHopCode c = match_code_n1();
  TruncationArtifacts art = build_truncation(c, s, 0.2, 0.2);
  if (art.mass_premise) {
    double cap = 2.0 / (1.0 - art.eps1 - art.eps2);
    for (std::size_t i = 0; i < art.trunc_xy.size(); ++i)
      CHECK(art.trunc_xy[i] <= cap * art.pxyn[i] + 1e-12);
  }
  CHECK_FALSE(art.checks.any_fail());
}

TEST_CASE("truncation refuses out-of-contract inputs") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  TwoHopCode c = accept_all_n2();
  CHECK_THROWS_AS(build_truncation(c, s, 0.6, 0.4), std::domain_error);
  // reject-all relay: measured beta1 = 1 > eps1
  TwoHopCode bad = accept_all_n2();
  std::fill(bad.g1.begin(), bad.g1.end(), 1);
  CHECK_THROWS_AS(build_truncation(bad, s, 0.2, 0.2), std::domain_error);
}

TEST_CASE("semigroup operators: identity at t = 0, unit preservation, domination") {
  std::mt19937_64 rng(41);
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  int n = 3;
  std::size_t szn = pow_size(2, n);
  std::vector<std::size_t> yseq = {0, 1, 0};
  std::vector<double> h(szn);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (auto& v : h) v = uni(rng);

  // t -> 0 recovers the identity (t = 0 itself is outside the contract)
  std::vector<double> id = semigroup_apply(SemigroupKind::markov, s, 1e-9, yseq, h, n);
  for (std::size_t i = 0; i < szn; ++i) CHECK(id[i] == doctest::Approx(h[i]).epsilon(1e-6));

  // markov kind fixes constants
  std::vector<double> ones(szn, 1.0);
  std::vector<double> t1 = semigroup_apply(SemigroupKind::markov, s, 0.7, yseq, ones, n);
  for (double v : t1) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  // lambda dominates markov pointwise on nonnegative inputs
  for (double t : {0.2, 0.8}) {
    std::vector<double> lam = semigroup_apply(SemigroupKind::lambda, s, t, yseq, h, n);
    std::vector<double> mar = semigroup_apply(SemigroupKind::markov, s, t, yseq, h, n);
    for (std::size_t i = 0; i < szn; ++i) CHECK(lam[i] >= mar[i] - 1e-12);
    // and lambda expands constants (alpha >= 1)
    std::vector<double> l1 = semigroup_apply(SemigroupKind::lambda, s, t, yseq, ones, n);
    for (double v : l1) CHECK(v >= 1.0 - 1e-12);
  }
}

TEST_CASE("relay and receiver chains pass on a conforming code") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  TwoHopCode c = match_code_n1();  // beta1 = 0.1, eta1 = 0.18 within eps = 0.2
  TruncationArtifacts art = build_truncation(c, s, 0.2, 0.2);
  ChainLedger relay = relay_chain(c, s, art);
  CHECK(relay.entries.size() > 0);
  CHECK_FALSE(relay.any_fail());
  ChainLedger recv = receiver_chain(c, s, art);
  CHECK(recv.entries.size() > 0);
  CHECK_FALSE(recv.any_fail());
}

TEST_CASE("multi-letter assembly and the gap formula") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  TwoHopCode c = match_code_n1();
  TruncationArtifacts art = build_truncation(c, s, 0.2, 0.2);
  TradeoffWeights w{1.0, 1.0, 1.0};
  MultiletterResult multi = multiletter_r(c, s, art, w, 1.0);
  CHECK_FALSE(multi.checks.any_fail());
  CHECK(multi.d_trunc == doctest::Approx(-std::log(art.mass)).epsilon(1e-10));
  CHECK(multi.i_m1y >= -1e-12);
  CHECK(multi.i_m2z >= -1e-12);
  CHECK(multi.h_m1 >= multi.i_m1y - 1e-9);  // entropy bounds the information
  // gap is linear in r_hat with slope -n
  CHECK(lemma2_gap(multi, 1, multi.r_n) == doctest::Approx(0.0));
  CHECK(lemma2_gap(multi, 1, multi.r_n - 0.5) == doctest::Approx(0.5));
}

TEST_CASE("verify_code runs the full audit without failures") {
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  for (TwoHopCode c : {match_code_n1(), accept_all_n2()}) {
    ChainLedger led = verify_code(c, s, 0.2, 0.2, {1.0, 1.0, 1.0}, 1.0);
    CHECK(led.entries.size() > 0);
    CHECK_FALSE(led.any_fail());
  }
}

TEST_CASE("verify_code audits random small codes") {
  std::mt19937_64 rng(44);
  TwoHopSource s = TwoHopSource::dsbs(0.1, 0.1);
  std::uniform_int_distribution<int> bit(0, 1);
  int audited = 0;
  for (int t = 0; t < 20; ++t) {
    TwoHopCode c = accept_all_n2();
    for (auto& v : c.g1) v = static_cast<std::uint8_t>(bit(rng));
    for (auto& v : c.g2) v = static_cast<std::uint8_t>(bit(rng));
    try {
      ChainLedger led = verify_code(c, s, 0.3, 0.3, {1.0, 1.0, 1.0}, 1.0);
      CHECK_FALSE(led.any_fail());
      ++audited;
    } catch (const std::domain_error&) {
      // measured errors above the eps budget: refusal is the contract
    }
  }
  CHECK(audited > 0);
}
