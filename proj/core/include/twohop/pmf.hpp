#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace twohop {

using Label = std::string;

/// Probability mass function over a finite, ordered alphabet of labels.
/// Immutable after construction; iteration order is the label order, so
/// floating-point sums are deterministic.
class FinitePmf {
 public:
  FinitePmf(std::vector<Label> labels, std::vector<double> mass);

  static FinitePmf uniform(std::vector<Label> labels);
  static FinitePmf point_mass(std::vector<Label> labels, std::size_t at);

  std::size_t size() const { return mass_.size(); }
  const std::vector<Label>& labels() const { return labels_; }
  const std::vector<double>& mass() const { return mass_; }
  double operator[](std::size_t i) const { return mass_[i]; }
  std::size_t index_of(const Label& l) const;

  double min_positive_mass() const;

 private:
  std::vector<Label> labels_;
  std::vector<double> mass_;
};

struct Axis {
  Label name;
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
  bool operator==(const Axis& o) const { return name == o.name && labels == o.labels; }
};

/// Joint pmf over named finite alphabets, stored row-major in axis order.
class JointPmf {
 public:
  JointPmf() = default;  // empty placeholder, to be assigned
  JointPmf(std::vector<Axis> axes, std::vector<double> mass);

  static JointPmf from_pmf(const Label& axis_name, const FinitePmf& p);
  /// Product of two joints with disjoint axis names.
  static JointPmf product(const JointPmf& a, const JointPmf& b);
  /// n-fold i.i.d. product; axes renamed name+"1"..name+"n".
  static JointPmf nfold(const JointPmf& p, int n);

  std::size_t rank() const { return axes_.size(); }
  const std::vector<Axis>& axes() const { return axes_; }
  const Axis& axis(std::size_t i) const { return axes_[i]; }
  std::size_t axis_index(const Label& name) const;
  bool has_axis(const Label& name) const;

  std::size_t size() const { return mass_.size(); }
  const std::vector<double>& mass() const { return mass_; }
  double at(std::size_t flat) const { return mass_[flat]; }

  const std::vector<std::size_t>& strides() const { return strides_; }
  std::size_t flat_index(const std::vector<std::size_t>& idx) const;
  std::vector<std::size_t> unflatten(std::size_t flat) const;

  /// Marginal onto the listed axes (result axis order = listed order).
  JointPmf marginal(const std::vector<Label>& keep) const;
  FinitePmf marginal1(const Label& name) const;

  /// Conditional joint over the remaining axes given axis `name` = symbol.
  /// Throws if the conditioning symbol has zero mass.
  JointPmf conditional(const Label& name, std::size_t symbol) const;

  /// Same axes relabeled (used for relabeling-invariance checks).
  JointPmf with_axis_names(std::vector<Label> names) const;

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::vector<double> mass_;

  void compute_strides();
  void validate() const;
};

/// Conditional distribution: one FinitePmf row per conditioning symbol.
class Kernel {
 public:
  Kernel() = default;  // empty placeholder, to be assigned
  Kernel(Axis from, Axis to, std::vector<double> rows);  // rows |from| x |to|, row-major

  static Kernel identity(const Axis& a, const Label& to_name);
  static Kernel constant(const Axis& from, const Axis& to, std::size_t at);

  const Axis& from() const { return from_; }
  const Axis& to() const { return to_; }
  double at(std::size_t x, std::size_t z) const { return rows_[x * to_.size() + z]; }
  FinitePmf row(std::size_t x) const;
  const std::vector<double>& rows() const { return rows_; }

  bool is_deterministic() const;

 private:
  Axis from_;
  Axis to_;
  std::vector<double> rows_;
};

/// Extends `base` with a new axis distributed per `k`, conditioned on the
/// listed axes of `base` (row index of `k` is the row-major combination of
/// the given axes' symbols).
JointPmf attach(const JointPmf& base, const std::vector<Label>& given, const Kernel& k,
                const Label& new_axis);

}  // namespace twohop
