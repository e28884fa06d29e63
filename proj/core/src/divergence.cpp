#include "twohop/divergence.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace twohop {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_disjoint(const std::vector<Label>& a, const std::vector<Label>& b) {
  std::unordered_set<Label> sa(a.begin(), a.end());
  for (const auto& l : b)
    if (sa.count(l)) throw std::invalid_argument("axis sets overlap at '" + l + "'");
}
}  // namespace

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return kInf;
    d += p[i] * std::log(p[i] / q[i]);
  }
  return d < 0.0 && d > -1e-15 ? 0.0 : d;
}

double kl_divergence(const FinitePmf& p, const FinitePmf& q) {
  if (p.labels() != q.labels()) throw std::invalid_argument("kl_divergence: alphabet mismatch");
  return kl_divergence(p.mass(), q.mass());
}

double kl_divergence(const JointPmf& p, const JointPmf& q) {
  if (p.axes().size() != q.axes().size())
    throw std::invalid_argument("kl_divergence: axis rank mismatch");
  for (std::size_t i = 0; i < p.axes().size(); ++i)
    if (!(p.axis(i) == q.axis(i))) throw std::invalid_argument("kl_divergence: axis mismatch");
  return kl_divergence(p.mass(), q.mass());
}

double binary_divergence(double p, double q) {
  if (p < 0.0 || p > 1.0 || q < 0.0 || q > 1.0)
    throw std::invalid_argument("binary_divergence: arguments must lie in [0,1]");
  double d = 0.0;
  if (p > 0.0) {
    if (q == 0.0) return kInf;
    d += p * std::log(p / q);
  }
  if (p < 1.0) {
    if (q == 1.0) return kInf;
    d += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  }
  return d < 0.0 && d > -1e-15 ? 0.0 : d;
}

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double entropy(const FinitePmf& p) { return entropy(p.mass()); }
double entropy(const JointPmf& p) { return entropy(p.mass()); }

double conditional_entropy(const JointPmf& j, const std::vector<Label>& a,
                           const std::vector<Label>& b) {
  check_disjoint(a, b);
  std::vector<Label> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  return entropy(j.marginal(ab)) - entropy(j.marginal(b));
}

double mutual_information(const JointPmf& j, const std::vector<Label>& axes_a,
                          const std::vector<Label>& axes_b) {
  check_disjoint(axes_a, axes_b);
  std::vector<Label> ab = axes_a;
  ab.insert(ab.end(), axes_b.begin(), axes_b.end());
  double i = entropy(j.marginal(axes_a)) + entropy(j.marginal(axes_b)) - entropy(j.marginal(ab));
  return i < 0.0 && i > -1e-12 ? 0.0 : i;
}

double conditional_mutual_information(const JointPmf& j, const std::vector<Label>& axes_a,
                                      const std::vector<Label>& axes_b,
                                      const std::vector<Label>& axes_c) {
  check_disjoint(axes_a, axes_b);
  check_disjoint(axes_a, axes_c);
  check_disjoint(axes_b, axes_c);
  std::vector<Label> bc = axes_b;
  bc.insert(bc.end(), axes_c.begin(), axes_c.end());
  double i = mutual_information(j, axes_a, bc) - mutual_information(j, axes_a, axes_c);
  return i < 0.0 && i > -1e-10 ? 0.0 : i;
}

}  // namespace twohop
