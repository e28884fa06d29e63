#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "twohop/pmf.hpp"
#include "twohop/single_letter.hpp"
#include "twohop/source.hpp"

namespace twohop {

/// Raised when an exact enumeration would exceed the cell budget.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kExactCellBudget = std::size_t{1} << 26;

/// Sequences x^n are enumerated row-major with the first coordinate most
/// significant; that ordering is part of the on-disk format.
std::size_t pow_size(std::size_t base, int n);
std::vector<std::size_t> unrank_seq(std::size_t index, std::size_t base, int n);
std::size_t rank_seq(const std::vector<std::size_t>& seq, std::size_t base);
/// Per-sequence i.i.d. probabilities, all base^n of them.
std::vector<double> seq_probs(const std::vector<double>& single, int n);

/// Deterministic (n, N1, N2)-code: relay encoder/decider and receiver
/// encoder/decider as dense lookup tables. Decision values: 0 = H0, 1 = H1.
struct TwoHopCode {
  int n = 1;
  std::uint32_t N1 = 1;
  std::uint32_t N2 = 1;
  std::vector<std::uint32_t> f1;  // |X|^n -> [N1]
  std::vector<std::uint32_t> f2;  // N1 x |Y|^n -> [N2], row-major by m1
  std::vector<std::uint8_t> g1;   // N1 x |Y|^n -> {0,1}
  std::vector<std::uint8_t> g2;   // N2 x |Z|^n -> {0,1}

  void validate(const TwoHopSource& s) const;

  static TwoHopCode from_json(const std::string& json_text);
  static TwoHopCode load(const std::string& path);
  std::string to_json() const;
};

struct ErrorProfile {
  enum class Mode { exact, monte_carlo };
  struct Ci {
    double lo = 0.0;
    double hi = 1.0;
    double half() const { return (hi - lo) / 2.0; }
    bool contains(double v) const { return lo <= v && v <= hi; }
  };

  double beta1 = 0.0;
  double beta2 = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  Mode mode = Mode::exact;
  std::optional<std::vector<Ci>> ci;  // beta1, beta2, eta1, eta2
  std::optional<std::uint64_t> samples;
};

/// Exact joint laws of (M1, Y^n) and (M2, Z^n) under both hypotheses.
/// Axis names: "M1"/"Yn" and "M2"/"Zn"; sequence labels are "i<rank>".
struct InducedLaw {
  JointPmf h0_m1y;
  JointPmf h1_m1y;
  JointPmf h0_m2z;
  JointPmf h1_m2z;
};

InducedLaw induced_laws(const TwoHopCode& code, const TwoHopSource& s);

ErrorProfile exact_errors(const TwoHopCode& code, const TwoHopSource& s, int threads = 1);

ErrorProfile mc_errors(const TwoHopCode& code, const TwoHopSource& s, std::uint64_t n_samples,
                       std::uint64_t seed, int threads = 1);

/// log beta2 + b log N1 + c log eta2 + d log N2; -inf when beta2 or eta2 is 0.
double weighted_lhs(const ErrorProfile& p, std::uint32_t N1, std::uint32_t N2,
                    const TradeoffWeights& w);

}  // namespace twohop
