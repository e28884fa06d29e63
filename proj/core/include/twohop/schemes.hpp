#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "twohop/code_model.hpp"
#include "twohop/single_letter.hpp"
#include "twohop/source.hpp"

namespace twohop {

struct RateMargins {
  double relay = 0.1;     // codebook rate slack over I(U;X), nats
  double receiver = 0.1;  // codebook rate slack over I(V;Y), nats
  /// Relay decider: greedy likelihood-ratio acceptance until the H1 mass of
  /// the accepted (m1, y^n) cells reaches exp(-n * relay_type2_target). A
  /// small constant target keeps the measured type-II exponent nondecreasing
  /// in n (integer cell effects shrink with n) while the type-I error decays.
  double relay_type2_target = 0.022;
  /// Receiver decider: greedy acceptance until the H0 mass reaches
  /// 1 - (beta1 + receiver_type1_base * receiver_type1_decay^n).
  double receiver_type1_base = 0.73;
  double receiver_type1_decay = 0.8;
};

/// Quantize-and-bin style code: random codebooks drawn from the aux marginals,
/// encoders by maximum likelihood-ratio score, deciders by greedy
/// likelihood-ratio acceptance calibrated to the targets above. Deterministic
/// given (seed, source, aux, n). The receiver message carries the relay accept
/// bit, so N2 doubles (except for the fully degenerate constant aux).
TwoHopCode build_quantize_bin(const TwoHopSource& s, const AuxCoupling& aux, int n,
                              const RateMargins& margins, std::uint64_t seed);

/// Greedy split of X^n (by descending product mass) into (X1, X2) with
/// P(X1) > 1-eps1 and P(X2) > 1-eps2; requires eps1+eps2 > 1.
/// Returns a bitmap over x^n ranks: 1 => X1.
std::vector<std::uint8_t> default_x_partition(const TwoHopSource& s, int n, double eps1,
                                              double eps2);

/// Composite code with a routing bit prepended to both messages: on X1 the
/// relay runs the relay-only decider and the receiver declares H1; on X2 the
/// relay declares H1 and the receiver runs the receiver-only decider.
TwoHopCode build_timeshare(const TwoHopCode& relay_only, const TwoHopCode& receiver_only,
                           const std::vector<std::uint8_t>& x_partition, const TwoHopSource& s,
                           double eps1, double eps2);

struct ScanRow {
  int n = 0;
  double relay_exponent = 0.0;     // -log(beta2)/n
  double receiver_exponent = 0.0;  // -log(eta2)/n
  double beta1 = 0.0;
  double eta1 = 0.0;
  bool degenerate = false;  // beta2 or eta2 hit zero exactly
};

std::vector<ScanRow> exponent_scan(const std::function<TwoHopCode(int)>& builder,
                                   const TwoHopSource& s, const std::vector<int>& n_list,
                                   int threads = 1);

}  // namespace twohop
