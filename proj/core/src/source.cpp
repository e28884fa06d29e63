#include "twohop/source.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "twohop/divergence.hpp"

namespace twohop {

TwoHopSource::TwoHopSource(JointPmf p_xy, Kernel p_z_given_y)
    : p_xy_(std::move(p_xy)),
      p_z_given_y_(std::move(p_z_given_y)),
      p_xyz_(attach(p_xy_, {"Y"}, p_z_given_y_, "Z")) {
  if (p_xy_.rank() != 2 || p_xy_.axis(0).name != "X" || p_xy_.axis(1).name != "Y")
    throw std::invalid_argument("TwoHopSource: p_xy must have axes (X, Y)");
  if (!(p_z_given_y_.from().labels == p_xy_.axis(1).labels))
    throw std::invalid_argument("TwoHopSource: kernel conditioning alphabet must match Y");
  if (p_z_given_y_.to().name != "Z")
    throw std::invalid_argument("TwoHopSource: kernel target axis must be named Z");

  // Markov X-Y-Z holds by construction; keep the numeric check as a guard.
  if (conditional_mutual_information(p_xyz_, {"X"}, {"Z"}, {"Y"}) > 1e-12)
    throw std::invalid_argument("TwoHopSource: I(X;Z|Y) != 0");

  FinitePmf py = p_xy_.marginal1("Y");
  FinitePmf pz = p_xyz_.marginal1("Z");
  mu_ = 1.0 / py.min_positive_mass();
  alpha_ = 1.0;
  for (std::size_t y = 0; y < py.size(); ++y) {
    if (py[y] == 0.0) continue;
    for (std::size_t z = 0; z < pz.size(); ++z) {
      if (pz[z] == 0.0) continue;
      alpha_ = std::max(alpha_, p_z_given_y_.at(y, z) / pz[z]);
    }
  }
}

TwoHopSource TwoHopSource::dsbs(double p1, double p2) {
  if (p1 < 0.0 || p1 > 1.0 || p2 < 0.0 || p2 > 1.0)
    throw std::invalid_argument("dsbs: crossover probabilities must lie in [0,1]");
  Axis x{"X", {"0", "1"}}, y{"Y", {"0", "1"}}, z{"Z", {"0", "1"}};
  std::vector<double> pxy = {0.5 * (1 - p1), 0.5 * p1, 0.5 * p1, 0.5 * (1 - p1)};
  std::vector<double> zk = {1 - p2, p2, p2, 1 - p2};
  return TwoHopSource(JointPmf({x, y}, pxy), Kernel(y, z, zk));
}

TwoHopSource TwoHopSource::independent(const FinitePmf& px, const FinitePmf& py,
                                       const FinitePmf& pz) {
  JointPmf pxy = JointPmf::product(JointPmf::from_pmf("X", px), JointPmf::from_pmf("Y", py));
  std::vector<double> rows;
  for (std::size_t y = 0; y < py.size(); ++y)
    rows.insert(rows.end(), pz.mass().begin(), pz.mass().end());
  return TwoHopSource(pxy, Kernel(Axis{"Y", py.labels()}, Axis{"Z", pz.labels()}, rows));
}

TwoHopSource TwoHopSource::from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  auto labels = [&](const char* key) {
    std::vector<Label> out;
    for (const auto& v : j.at(key)) out.push_back(v.get<std::string>());
    return out;
  };
  Axis x{"X", labels("X")}, y{"Y", labels("Y")}, z{"Z", labels("Z")};

  std::vector<double> pxy;
  for (const auto& row : j.at("P_XY"))
    for (const auto& v : row) pxy.push_back(v.get<double>());
  if (pxy.size() != x.size() * y.size())
    throw std::invalid_argument("source json: P_XY shape mismatch");

  std::vector<double> zk;
  for (const auto& row : j.at("P_Z_given_Y"))
    for (const auto& v : row) zk.push_back(v.get<double>());
  if (zk.size() != y.size() * z.size())
    throw std::invalid_argument("source json: P_Z_given_Y shape mismatch");

  double total = 0.0;
  for (double v : pxy) {
    if (v < 0.0) throw std::invalid_argument("source json: negative entry in P_XY");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("source json: P_XY sums off by >1e-9");
  for (std::size_t r = 0; r < y.size(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      double v = zk[r * z.size() + c];
      if (v < 0.0) throw std::invalid_argument("source json: negative entry in P_Z_given_Y");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument("source json: P_Z_given_Y row sums off by >1e-9");
    // renormalize the tiny residual so internal invariants use the tighter tolerance
    for (std::size_t c = 0; c < z.size(); ++c) zk[r * z.size() + c] /= s;
  }
  for (double& v : pxy) v /= total;

  return TwoHopSource(JointPmf({x, y}, pxy), Kernel(y, z, zk));
}

TwoHopSource TwoHopSource::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open source file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string TwoHopSource::to_json() const {
  nlohmann::json j;
  j["X"] = x_axis().labels;
  j["Y"] = y_axis().labels;
  j["Z"] = z_axis().labels;
  std::vector<std::vector<double>> pxy(x_axis().size(), std::vector<double>(y_axis().size()));
  for (std::size_t x = 0; x < x_axis().size(); ++x)
    for (std::size_t y = 0; y < y_axis().size(); ++y)
      pxy[x][y] = p_xy_.at(p_xy_.flat_index({x, y}));
  j["P_XY"] = pxy;
  std::vector<std::vector<double>> zk(y_axis().size(), std::vector<double>(z_axis().size()));
  for (std::size_t y = 0; y < y_axis().size(); ++y)
    for (std::size_t z = 0; z < z_axis().size(); ++z) zk[y][z] = p_z_given_y_.at(y, z);
  j["P_Z_given_Y"] = zk;
  return j.dump(2);
}

SourceConstants source_constants(const TwoHopSource& s, int n, double eps1, double eps2) {
  if (n < 1) throw std::invalid_argument("source_constants: n must be >= 1");
  if (eps1 + eps2 >= 1.0)
    throw std::domain_error("source_constants: requires eps1 + eps2 < 1");
  SourceConstants c;
  c.alpha = s.alpha();
  c.mu = s.mu();
  double slack = 1.0 - eps1 - eps2;
  c.theta_n = std::sqrt(3.0 * c.mu / n *
                        std::log(8.0 * static_cast<double>(s.y_axis().size()) / slack));
  c.alpha_is_one = c.alpha <= 1.0 + 1e-12;
  c.psi = c.alpha_is_one
              ? 0.0
              : 2.0 * std::sqrt(n * (c.alpha - 1.0) * std::log((1.0 + 3.0 * eps2 - eps1) / slack));
  return c;
}

}  // namespace twohop
