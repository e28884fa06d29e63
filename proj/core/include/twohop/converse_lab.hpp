#pragma once

#include <cstdint>
#include <vector>

#include "twohop/code_model.hpp"
#include "twohop/ledger.hpp"
#include "twohop/single_letter.hpp"
#include "twohop/source.hpp"

namespace twohop {

/// Exact set extensions of a code's decision tables, as bitmaps over ranks.
struct AcceptanceSets {
  std::vector<std::uint8_t> relay;  // N1 x |Y|^n cells accepted by the relay
  std::vector<std::uint8_t> d_y;    // |X|^n x |Y|^n: relay accepts via f1
  std::vector<std::uint8_t> d_z;    // |X|^n x |Y|^n x |Z|^n: receiver accepts
  std::vector<std::uint8_t> g;      // N2 x |Z|^n: per-message receiver regions
};

AcceptanceSets acceptance_sets(const TwoHopCode& code, const TwoHopSource& s);

/// The truncated source construction: the good set C (intersection of the
/// likely receiver-acceptance set B, the relay acceptance set and the typical
/// y-band), its mass, and the restricted/renormalized (x^n, y^n) law.
struct TruncationArtifacts {
  int n = 1;
  double eps1 = 0.0, eps2 = 0.0;
  SourceConstants consts;
  ErrorProfile errors;  // exact errors of the audited code
  std::size_t sxn = 0, syn = 0, szn = 0;
  std::vector<double> pxn, pyn, pzn;
  std::vector<double> pxyn;            // |X|^n x |Y|^n product law
  std::vector<std::uint8_t> b_set;     // |X|^n x |Y|^n
  std::vector<std::uint8_t> typical;   // |Y|^n
  std::vector<std::uint8_t> c_set;     // |X|^n x |Y|^n
  double mass = 0.0;                   // product mass of c_set
  std::vector<double> trunc_xy;        // restricted, renormalized
  bool typicality_premise = false;     // P^n(typical) >= 1 - (1-e1-e2)/4
  bool mass_premise = false;           // mass >= (1-e1-e2)/2
  ChainLedger checks;
};

/// Refuses (domain_error naming the premise) when eps1+eps2 >= 1 or the code's
/// measured type-I errors exceed (eps1, eps2). A failed typicality premise at
/// small n is reported in the artifacts, not thrown.
TruncationArtifacts build_truncation(const TwoHopCode& code, const TwoHopSource& s, double eps1,
                                     double eps2);

ChainLedger relay_chain(const TwoHopCode& code, const TwoHopSource& s,
                        const TruncationArtifacts& art);

enum class SemigroupKind { lambda, markov };

/// Applies the product-form smoothing operator to h (dense over z^n ranks).
/// lambda: per coordinate f -> exp(-t) f + alpha (1-exp(-t)) E_{P_Z}[f];
/// markov: per coordinate i, f -> exp(-t) f + (1-exp(-t)) E_{P_{Z|y_i}}[f].
std::vector<double> semigroup_apply(SemigroupKind kind, const TwoHopSource& s, double t,
                                    const std::vector<std::size_t>& yseq, std::vector<double> h,
                                    int n);

ChainLedger receiver_chain(const TwoHopCode& code, const TwoHopSource& s,
                           const TruncationArtifacts& art);

struct MultiletterResult {
  double r_n = 0.0;       // weighted multi-letter objective of the truncated code
  double i_m1y = 0.0;     // I(relay message; y-block) under the truncated law
  double i_m2y = 0.0;
  double i_m2z = 0.0;
  double h_m1 = 0.0;
  double h_m2 = 0.0;
  double d_zm = 0.0;      // D(trunc (m2, z-block) law || product reference)
  double d_trunc = 0.0;   // -log mass
  ChainLedger checks;
};

MultiletterResult multiletter_r(const TwoHopCode& code, const TwoHopSource& s,
                                const TruncationArtifacts& art, const TradeoffWeights& w,
                                double gamma);

/// R^(n) - n * r_hat, where r_hat is a numeric (upper-bound) solution of the
/// single-letter band-constrained minimization at the same (w, gamma, theta_n).
double lemma2_gap(const MultiletterResult& multi, int n, double r_hat);

/// Full audit: truncation checks + relay chain + receiver chain + multi-letter
/// assembly in one ledger.
ChainLedger verify_code(const TwoHopCode& code, const TwoHopSource& s, double eps1, double eps2,
                        const TradeoffWeights& w, double gamma);

}  // namespace twohop
