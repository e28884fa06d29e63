#pragma once

#include <vector>

#include "twohop/pmf.hpp"

namespace twohop {

/// All quantities in nats. 0*log(0/q) := 0; p>0 where q=0 gives +infinity.

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);
double kl_divergence(const FinitePmf& p, const FinitePmf& q);
/// Requires identical axes (names and labels, same order).
double kl_divergence(const JointPmf& p, const JointPmf& q);

/// D_b(p||q) = p log(p/q) + (1-p) log((1-p)/(1-q)).
double binary_divergence(double p, double q);

double entropy(const std::vector<double>& p);
double entropy(const FinitePmf& p);
double entropy(const JointPmf& p);
/// H(A|B) for disjoint axis sets of j.
double conditional_entropy(const JointPmf& j, const std::vector<Label>& a,
                           const std::vector<Label>& b);

/// I(A;B) = D(P_AB || P_A P_B); axesA and axesB must be disjoint.
double mutual_information(const JointPmf& j, const std::vector<Label>& axes_a,
                          const std::vector<Label>& axes_b);

/// I(A;B|C); axis sets pairwise disjoint.
double conditional_mutual_information(const JointPmf& j, const std::vector<Label>& axes_a,
                                      const std::vector<Label>& axes_b,
                                      const std::vector<Label>& axes_c);

}  // namespace twohop
