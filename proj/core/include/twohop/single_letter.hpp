#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "twohop/ledger.hpp"
#include "twohop/pmf.hpp"
#include "twohop/source.hpp"

namespace twohop {

struct TradeoffWeights {
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
};

struct Weights4 {
  double b1 = 0.0;
  double b2 = 0.0;
  double c = 0.0;
  double d = 0.0;
};

/// Conditional kernels (P_{U|X}, P_{V|Y}); combined with a source they induce
/// a coupling with the Markov structure U-X-Y and V-Y-Z.
struct AuxCoupling {
  Kernel u_given_x;
  Kernel v_given_y;

  static AuxCoupling constant(const TwoHopSource& s);
  static AuxCoupling copy(const TwoHopSource& s);  // U = X, V = Y
};

struct RegionPoint {
  double r1 = 0.0;
  double r2 = 0.0;
  double e1 = 0.0;
  double e2 = 0.0;
};

struct CardBounds {
  std::size_t u_extra = 1;  // |U| <= |X| + u_extra
  std::size_t v_extra = 1;  // |V| <= |Y| + v_extra
};

struct SolverConfig {
  int restarts = 64;
  int max_iters = 10000;
  double damping = 0.5;
  double tol = 1e-10;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Exhaustive simplex-grid cross-check (only applied when |X|,|Y| <= 3).
  bool grid_cross_check = false;
  double grid_step = 0.02;
  double grid_refine_step = 0.002;
  /// solve_r_gamma descent parameters.
  int gamma_outer_iters = 60;
  int gamma_starts = 8;
};

/// Joint over (X, Y, Z, U, V) induced by source + aux.
JointPmf induced_joint(const TwoHopSource& s, const AuxCoupling& aux);

/// R_{b,c,d}(Q) = -I(U;Y) + b I(U;X) - c (I(U;Y) + I(V;Z)) + d I(V;Y).
double objective_r(const TwoHopSource& s, const AuxCoupling& aux, const TradeoffWeights& w);

/// min over P_{U|X} of a*I(U;X) - b*I(U;W), (X,W) ~ p_xw (rank-2 joint).
struct SubSolveResult {
  double value = 0.0;
  Kernel kernel;
  bool converged = true;
};
SubSolveResult minimize_info_tradeoff(const JointPmf& p_xw, double a, double b,
                                      std::size_t u_card, const SolverConfig& cfg);

struct SolveResult {
  double value = 0.0;
  AuxCoupling argmin;
  bool converged = true;
  double u_part = 0.0;
  double v_part = 0.0;
};

/// R_{b,c,d} = min over Q of R_{b,c,d}(Q); separable into the U- and V-parts.
SolveResult solve_r(const TwoHopSource& s, const TradeoffWeights& w, const CardBounds& cards = {},
                    const SolverConfig& cfg = {});

struct SolveResult4 {
  double value = 0.0;
  Kernel u1_given_x;
  Kernel u2_given_x;
  Kernel v_given_y;
  bool converged = true;
};

/// Rtilde_{b1,b2,c,d}: three independent sub-minima over P_{U1|X}, P_{U2|X}, P_{V|Y}.
SolveResult4 solve_r_tilde(const TwoHopSource& s, const Weights4& w, const CardBounds& cards = {},
                           const SolverConfig& cfg = {});

/// Searches for an aux coupling witnessing pt in the single-letter region:
/// R1 >= I(U;X), R2 >= I(V;Y), E1 <= I(U;Y), E2 <= I(U;Y) + I(V;Z).
/// none-found is not a proof of exclusion.
std::optional<AuxCoupling> certify_in(const TwoHopSource& s, const RegionPoint& pt,
                                      const CardBounds& cards = {}, const SolverConfig& cfg = {});

/// Scans the weight grid for a violated supporting half-space:
/// -E1 + b R1 - c E2 + d R2 < R_{b,c,d} - tol.
std::optional<TradeoffWeights> certify_out(const TwoHopSource& s, const RegionPoint& pt,
                                           const std::vector<TradeoffWeights>& weight_grid,
                                           const CardBounds& cards = {},
                                           const SolverConfig& cfg = {}, double tol = 1e-6);

/// Default certify_out grid: b,c,d in {0} U {2^k : k = -3..6}.
std::vector<TradeoffWeights> default_weight_grid();

/// A coupling in the band-constrained set: Q_XY free up to the Y-band,
/// U conditioned on (X,Y), V on Y, and Z attached through the true P_{Z|Y}.
struct Q1Coupling {
  JointPmf q_xy;       // axes X, Y
  Kernel u_given_xy;   // rows indexed row-major over (X,Y)
  Kernel v_given_y;
  double theta = 0.0;
};

/// |Q_Y(y) - P_Y(y)| <= theta * P_Y(y) for every y.
bool q1_band_ok(const TwoHopSource& s, const JointPmf& q_xy, double theta,
                std::size_t* offending_y = nullptr);

/// Joint over (X, Y, Z, U, V) induced by q1 with Q_{Z|Y} = P_{Z|Y}.
JointPmf q1_joint(const TwoHopSource& s, const Q1Coupling& q1);

/// R_{b,c,d}(Q) + (b+gamma) D(Q_XY||P_XY) + d D(Q_Y||P_Y) + gamma I_Q(U;Y|X).
double objective_r_gamma(const TwoHopSource& s, const Q1Coupling& q1, const TradeoffWeights& w,
                         double gamma);

struct SolveGammaResult {
  double value = 0.0;
  Q1Coupling argmin;
  bool converged = true;
};

SolveGammaResult solve_r_gamma(const TwoHopSource& s, const TradeoffWeights& w, double gamma,
                               double theta, const CardBounds& cards = {},
                               const SolverConfig& cfg = {});

/// The v*-extension of a band-feasible coupling and its continuity bounds.
struct PerturbationReport {
  double gamma = 0.0;
  double theta = 0.0;
  double a_prime = 0.0;  // b log|X| + d log|Y|
  double a = 0.0;        // a' + (c+1) log|Y| + c log|Z|
  double vstar_mass = 0.0;
  FinitePmf p_vtilde;
  Kernel y_given_vtilde;
  JointPmf perturbed;  // axes X, Y, Z, U, Vt
  double entropy_continuity_bound = 0.0;
  ChainLedger checks;
  bool all_pass() const { return !checks.any_fail(); }
};

PerturbationReport perturb_gamma(const TwoHopSource& s, const Q1Coupling& q1,
                                 const TradeoffWeights& w, double gamma, double theta);

}  // namespace twohop
