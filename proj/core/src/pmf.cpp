#include "twohop/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace twohop {

namespace {
constexpr double kSumTol = 1e-12;

void check_distribution(const std::vector<double>& mass, const char* what) {
  double sum = 0.0;
  for (double m : mass) {
    if (m < 0.0) throw std::invalid_argument(std::string(what) + ": negative mass");
    if (!std::isfinite(m)) throw std::invalid_argument(std::string(what) + ": non-finite mass");
    sum += m;
  }
  if (std::abs(sum - 1.0) > kSumTol * std::max<double>(1.0, mass.size()))
    throw std::invalid_argument(std::string(what) + ": mass sums to " + std::to_string(sum));
}

void check_unique(const std::vector<Label>& labels, const char* what) {
  std::unordered_set<Label> seen;
  for (const auto& l : labels)
    if (!seen.insert(l).second)
      throw std::invalid_argument(std::string(what) + ": duplicate label '" + l + "'");
}
}  // namespace

FinitePmf::FinitePmf(std::vector<Label> labels, std::vector<double> mass)
    : labels_(std::move(labels)), mass_(std::move(mass)) {
  if (labels_.size() != mass_.size())
    throw std::invalid_argument("FinitePmf: labels/mass size mismatch");
  if (labels_.empty()) throw std::invalid_argument("FinitePmf: empty alphabet");
  check_unique(labels_, "FinitePmf");
  check_distribution(mass_, "FinitePmf");
}

FinitePmf FinitePmf::uniform(std::vector<Label> labels) {
  std::vector<double> m(labels.size(), 1.0 / static_cast<double>(labels.size()));
  return FinitePmf(std::move(labels), std::move(m));
}

FinitePmf FinitePmf::point_mass(std::vector<Label> labels, std::size_t at) {
  std::vector<double> m(labels.size(), 0.0);
  m.at(at) = 1.0;
  return FinitePmf(std::move(labels), std::move(m));
}

std::size_t FinitePmf::index_of(const Label& l) const {
  auto it = std::find(labels_.begin(), labels_.end(), l);
  if (it == labels_.end()) throw std::out_of_range("FinitePmf: unknown label '" + l + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

double FinitePmf::min_positive_mass() const {
  double m = std::numeric_limits<double>::infinity();
  for (double v : mass_)
    if (v > 0.0) m = std::min(m, v);
  return m;
}

void JointPmf::compute_strides() {
  strides_.assign(axes_.size(), 1);
  for (std::size_t i = axes_.size(); i-- > 1;)
    strides_[i - 1] = strides_[i] * axes_[i].size();
}

void JointPmf::validate() const {
  std::size_t cells = 1;
  std::vector<Label> names;
  for (const auto& ax : axes_) {
    if (ax.labels.empty()) throw std::invalid_argument("JointPmf: empty axis " + ax.name);
    check_unique(ax.labels, "JointPmf axis");
    names.push_back(ax.name);
    cells *= ax.size();
  }
  check_unique(names, "JointPmf axes");
  if (cells != mass_.size()) throw std::invalid_argument("JointPmf: mass size mismatch");
  check_distribution(mass_, "JointPmf");
}

JointPmf::JointPmf(std::vector<Axis> axes, std::vector<double> mass)
    : axes_(std::move(axes)), mass_(std::move(mass)) {
  if (axes_.empty()) throw std::invalid_argument("JointPmf: no axes");
  compute_strides();
  validate();
}

JointPmf JointPmf::from_pmf(const Label& axis_name, const FinitePmf& p) {
  return JointPmf({Axis{axis_name, p.labels()}}, p.mass());
}

JointPmf JointPmf::product(const JointPmf& a, const JointPmf& b) {
  std::vector<Axis> axes = a.axes_;
  axes.insert(axes.end(), b.axes_.begin(), b.axes_.end());
  std::vector<double> m;
  m.reserve(a.size() * b.size());
  for (double va : a.mass_)
    for (double vb : b.mass_) m.push_back(va * vb);
  return JointPmf(std::move(axes), std::move(m));
}

JointPmf JointPmf::nfold(const JointPmf& p, int n) {
  if (n < 1) throw std::invalid_argument("nfold: n must be >= 1");
  auto renamed = [&](int i) {
    std::vector<Label> names;
    for (const auto& ax : p.axes()) names.push_back(ax.name + std::to_string(i));
    return p.with_axis_names(names);
  };
  JointPmf out = renamed(1);
  for (int i = 2; i <= n; ++i) out = product(out, renamed(i));
  return out;
}

std::size_t JointPmf::axis_index(const Label& name) const {
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (axes_[i].name == name) return i;
  throw std::out_of_range("JointPmf: unknown axis '" + name + "'");
}

bool JointPmf::has_axis(const Label& name) const {
  for (const auto& ax : axes_)
    if (ax.name == name) return true;
  return false;
}

std::size_t JointPmf::flat_index(const std::vector<std::size_t>& idx) const {
  if (idx.size() != axes_.size()) throw std::invalid_argument("flat_index: rank mismatch");
  std::size_t f = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= axes_[i].size()) throw std::out_of_range("flat_index: symbol out of range");
    f += idx[i] * strides_[i];
  }
  return f;
}

std::vector<std::size_t> JointPmf::unflatten(std::size_t flat) const {
  std::vector<std::size_t> idx(axes_.size());
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    idx[i] = flat / strides_[i];
    flat %= strides_[i];
  }
  return idx;
}

JointPmf JointPmf::marginal(const std::vector<Label>& keep) const {
  std::vector<std::size_t> kept;
  std::vector<Axis> out_axes;
  for (const auto& name : keep) {
    kept.push_back(axis_index(name));
    out_axes.push_back(axes_[kept.back()]);
  }
  std::vector<std::size_t> out_strides(kept.size(), 1);
  for (std::size_t i = kept.size(); i-- > 1;)
    out_strides[i - 1] = out_strides[i] * out_axes[i].size();
  std::size_t out_cells = out_axes.empty() ? 1 : out_strides[0] * out_axes[0].size();
  std::vector<double> out(out_cells, 0.0);
  for (std::size_t f = 0; f < mass_.size(); ++f) {
    if (mass_[f] == 0.0) continue;
    std::size_t of = 0, rem = f;
    // decode only the kept coordinates
    std::vector<std::size_t> idx(axes_.size());
    for (std::size_t i = 0; i < axes_.size(); ++i) {
      idx[i] = rem / strides_[i];
      rem %= strides_[i];
    }
    for (std::size_t k = 0; k < kept.size(); ++k) of += idx[kept[k]] * out_strides[k];
    out[of] += mass_[f];
  }
  return JointPmf(std::move(out_axes), std::move(out));
}

FinitePmf JointPmf::marginal1(const Label& name) const {
  JointPmf m = marginal({name});
  return FinitePmf(m.axes_[0].labels, m.mass_);
}

JointPmf JointPmf::conditional(const Label& name, std::size_t symbol) const {
  std::size_t ai = axis_index(name);
  if (symbol >= axes_[ai].size()) throw std::out_of_range("conditional: symbol out of range");
  std::vector<Axis> out_axes;
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (i != ai) out_axes.push_back(axes_[i]);
  if (out_axes.empty()) throw std::invalid_argument("conditional: nothing left to condition");
  std::vector<double> out;
  out.reserve(mass_.size() / axes_[ai].size());
  double total = 0.0;
  for (std::size_t f = 0; f < mass_.size(); ++f) {
    if ((f / strides_[ai]) % axes_[ai].size() == symbol) {
      out.push_back(mass_[f]);
      total += mass_[f];
    }
  }
  if (total <= 0.0) throw std::domain_error("conditional: conditioning symbol has zero mass");
  for (double& v : out) v /= total;
  return JointPmf(std::move(out_axes), std::move(out));
}

JointPmf JointPmf::with_axis_names(std::vector<Label> names) const {
  if (names.size() != axes_.size()) throw std::invalid_argument("with_axis_names: rank mismatch");
  std::vector<Axis> axes = axes_;
  for (std::size_t i = 0; i < axes.size(); ++i) axes[i].name = std::move(names[i]);
  return JointPmf(std::move(axes), mass_);
}

Kernel::Kernel(Axis from, Axis to, std::vector<double> rows)
    : from_(std::move(from)), to_(std::move(to)), rows_(std::move(rows)) {
  if (rows_.size() != from_.size() * to_.size())
    throw std::invalid_argument("Kernel: rows size mismatch");
  check_unique(from_.labels, "Kernel from");
  check_unique(to_.labels, "Kernel to");
  for (std::size_t x = 0; x < from_.size(); ++x) {
    std::vector<double> row(rows_.begin() + x * to_.size(), rows_.begin() + (x + 1) * to_.size());
    check_distribution(row, "Kernel row");
  }
}

Kernel Kernel::identity(const Axis& a, const Label& to_name) {
  std::vector<double> rows(a.size() * a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) rows[i * a.size() + i] = 1.0;
  return Kernel(a, Axis{to_name, a.labels}, std::move(rows));
}

Kernel Kernel::constant(const Axis& from, const Axis& to, std::size_t at) {
  std::vector<double> rows(from.size() * to.size(), 0.0);
  for (std::size_t i = 0; i < from.size(); ++i) rows[i * to.size() + at] = 1.0;
  return Kernel(from, to, std::move(rows));
}

FinitePmf Kernel::row(std::size_t x) const {
  std::vector<double> m(rows_.begin() + x * to_.size(), rows_.begin() + (x + 1) * to_.size());
  return FinitePmf(to_.labels, std::move(m));
}

bool Kernel::is_deterministic() const {
  for (double v : rows_)
    if (v != 0.0 && v != 1.0) return false;
  return true;
}

JointPmf attach(const JointPmf& base, const std::vector<Label>& given, const Kernel& k,
                const Label& new_axis) {
  std::vector<std::size_t> gi;
  std::size_t rows = 1;
  for (const auto& name : given) {
    gi.push_back(base.axis_index(name));
    rows *= base.axis(gi.back()).size();
  }
  if (rows != k.from().size())
    throw std::invalid_argument("attach: kernel row count does not match given axes");
  if (base.has_axis(new_axis)) throw std::invalid_argument("attach: axis name already present");

  std::vector<Axis> axes = base.axes();
  axes.push_back(Axis{new_axis, k.to().labels});
  std::size_t to_n = k.to().size();
  std::vector<double> out(base.size() * to_n, 0.0);
  for (std::size_t f = 0; f < base.size(); ++f) {
    double m = base.at(f);
    if (m == 0.0) continue;
    auto idx = base.unflatten(f);
    std::size_t row = 0;
    for (std::size_t g : gi) row = row * base.axis(g).size() + idx[g];
    for (std::size_t u = 0; u < to_n; ++u) out[f * to_n + u] = m * k.at(row, u);
  }
  return JointPmf(std::move(axes), std::move(out));
}

}  // namespace twohop
