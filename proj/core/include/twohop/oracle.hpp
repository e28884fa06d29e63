#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "twohop/code_model.hpp"
#include "twohop/converse_lab.hpp"
#include "twohop/single_letter.hpp"
#include "twohop/source.hpp"

namespace twohop {

/// One deterministic test on (message, sequence) cells: its two error
/// probabilities and the acceptance bitmap over cells.
struct FrontierPoint {
  double type1 = 0.0;
  double type2 = 0.0;
  std::vector<std::uint8_t> accept;
};

struct Frontiers {
  std::vector<FrontierPoint> relay;     // (beta1, beta2) over (m1, y^n) tests
  std::vector<FrontierPoint> receiver;  // (eta1, eta2) over (m2, z^n) tests
  bool tie_cap_hit = false;  // some tie group exceeded the subset-enumeration cap
};

/// Exact Pareto sets of deterministic likelihood-ratio tests for the relay and
/// receiver decision problems induced by the encoders (all threshold positions
/// plus all tie-group inclusion subsets, groups capped at 12 cells).
Frontiers np_frontier(const std::vector<std::uint32_t>& f1, const std::vector<std::uint32_t>& f2,
                      std::uint32_t N1, std::uint32_t N2, const TwoHopSource& s, int n);

struct OracleSummary {
  std::size_t encoder_pairs = 0;  // canonical pairs examined
  std::size_t codes_checked = 0;  // feasible frontier codes audited
  std::size_t ledger_entries = 0;
  std::size_t passes = 0;
  std::size_t fails = 0;
  std::size_t vacuous = 0;
  std::size_t premise_failed = 0;
  double best_lhs = 0.0;
  bool best_found = false;
  TwoHopCode best_code;
  bool tie_cap_hit = false;
};

/// Enumerates every encoder pair (up to message relabeling), attaches the
/// best feasible frontier decoders, tracks the minimal weighted objective and
/// optionally audits every feasible code against the full inequality ledger.
/// on_code, when set, receives every feasible frontier code.
OracleSummary exhaustive_search(
    const TwoHopSource& s, int n, std::uint32_t N1, std::uint32_t N2, double eps1, double eps2,
    const TradeoffWeights& w, double gamma, bool run_ledger,
    const std::function<void(const TwoHopCode&, const ErrorProfile&)>& on_code = nullptr);

}  // namespace twohop
