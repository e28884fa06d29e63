#pragma once

#include <iosfwd>
#include <string>

#include "twohop/pmf.hpp"

namespace twohop {

/// The pair (P_XY, P_{Z|Y}); induces the H0 law P_XYZ = P_XY P_{Z|Y} and the
/// H1 law P_X P_Y P_Z. Axis names are fixed to "X", "Y", "Z".
class TwoHopSource {
 public:
  TwoHopSource(JointPmf p_xy, Kernel p_z_given_y);

  const JointPmf& p_xy() const { return p_xy_; }
  const Kernel& z_given_y() const { return p_z_given_y_; }
  const JointPmf& p_xyz() const { return p_xyz_; }

  FinitePmf p_x() const { return p_xy_.marginal1("X"); }
  FinitePmf p_y() const { return p_xy_.marginal1("Y"); }
  FinitePmf p_z() const { return p_xyz_.marginal1("Z"); }

  const Axis& x_axis() const { return p_xy_.axis(0); }
  const Axis& y_axis() const { return p_xy_.axis(1); }
  const Axis& z_axis() const { return p_z_given_y_.to(); }

  /// max_{y,z: P_Z(z)>0} P_{Z|Y}(z|y)/P_Z(z), always >= 1.
  double alpha() const { return alpha_; }
  /// (min_{y: P_Y(y)>0} P_Y(y))^{-1}.
  double mu() const { return mu_; }

  /// Doubly symmetric binary source: uniform X, crossover p1 to Y, p2 to Z.
  static TwoHopSource dsbs(double p1, double p2);
  /// Product source P_XY = P_X P_Y with Z drawn from P_Z independent of Y.
  static TwoHopSource independent(const FinitePmf& px, const FinitePmf& py, const FinitePmf& pz);

  static TwoHopSource from_json(const std::string& json_text);
  static TwoHopSource load(const std::string& path);
  std::string to_json() const;

 private:
  JointPmf p_xy_;
  Kernel p_z_given_y_;
  JointPmf p_xyz_;
  double alpha_ = 1.0;
  double mu_ = 0.0;
};

struct SourceConstants {
  double alpha = 1.0;
  double mu = 0.0;
  double theta_n = 0.0;
  double psi = 0.0;
  /// alpha == 1: Psi is returned as 0 and the t = 1/sqrt(n) fallback applies.
  bool alpha_is_one = false;
};

/// theta_n = sqrt(3 mu / n * log(8|Y|/(1-eps1-eps2)));
/// Psi = 2 sqrt(n (alpha-1) log((1+3 eps2-eps1)/(1-eps1-eps2))).
/// Requires eps1 + eps2 < 1.
SourceConstants source_constants(const TwoHopSource& s, int n, double eps1, double eps2);

}  // namespace twohop
