#include "twohop/single_letter.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <random>
#include <stdexcept>

#include "twohop/divergence.hpp"

namespace twohop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Label> make_labels(const char* prefix, std::size_t n) {
  std::vector<Label> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// Sub-objective F(k) = a I(U;X) - b I(U;W) for k = P_{U|X} (rows |X| x |U|),
/// where (X,W) ~ p_xw given as a row-major |X| x |W| matrix.
struct SubProblem {
  std::size_t nx, nw;
  std::vector<double> p_xw;  // |X| x |W|
  std::vector<double> p_x, p_w;
  std::vector<double> w_given_x;  // |X| x |W|
  double a, b;

  SubProblem(const JointPmf& joint, double a_, double b_) : a(a_), b(b_) {
    if (joint.rank() != 2) throw std::invalid_argument("sub-problem joint must be rank 2");
    nx = joint.axis(0).size();
    nw = joint.axis(1).size();
    p_xw = joint.mass();
    p_x.assign(nx, 0.0);
    p_w.assign(nw, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t w = 0; w < nw; ++w) {
        p_x[x] += p_xw[x * nw + w];
        p_w[w] += p_xw[x * nw + w];
      }
    w_given_x.assign(nx * nw, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      if (p_x[x] > 0.0)
        for (std::size_t w = 0; w < nw; ++w) w_given_x[x * nw + w] = p_xw[x * nw + w] / p_x[x];
  }

  double eval(const std::vector<double>& k, std::size_t nu) const {
    std::vector<double> q_u(nu, 0.0), q_uw(nu * nw, 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
      if (p_x[x] == 0.0) continue;
      for (std::size_t u = 0; u < nu; ++u) {
        double kxu = k[x * nu + u];
        if (kxu == 0.0) continue;
        q_u[u] += p_x[x] * kxu;
        for (std::size_t w = 0; w < nw; ++w) q_uw[u * nw + w] += p_xw[x * nw + w] * kxu;
      }
    }
    double i_ux = 0.0, i_uw = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      if (p_x[x] == 0.0) continue;
      for (std::size_t u = 0; u < nu; ++u) {
        double kxu = k[x * nu + u];
        if (kxu > 0.0 && q_u[u] > 0.0) i_ux += p_x[x] * kxu * std::log(kxu / q_u[u]);
      }
    }
    for (std::size_t u = 0; u < nu; ++u)
      for (std::size_t w = 0; w < nw; ++w) {
        double m = q_uw[u * nw + w];
        if (m > 0.0) i_uw += m * std::log(m / (q_u[u] * p_w[w]));
      }
    return a * std::max(0.0, i_ux) - b * std::max(0.0, i_uw);
  }

  /// One self-consistent update with damping; beta = b/a.
  void fixed_point_step(std::vector<double>& k, std::size_t nu, double beta,
                        double damping) const {
    std::vector<double> q_u(nu, 0.0), q_uw(nu * nw, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t u = 0; u < nu; ++u) {
        double kxu = k[x * nu + u];
        q_u[u] += p_x[x] * kxu;
        for (std::size_t w = 0; w < nw; ++w) q_uw[u * nw + w] += p_xw[x * nw + w] * kxu;
      }
    std::vector<double> next(nx * nu, 0.0);
    for (std::size_t x = 0; x < nx; ++x) {
      double zmax = -kInf;
      std::vector<double> logit(nu, -kInf);
      for (std::size_t u = 0; u < nu; ++u) {
        if (q_u[u] <= 0.0) continue;
        double s = std::log(q_u[u]);
        bool dead = false;
        for (std::size_t w = 0; w < nw; ++w) {
          double pwx = w_given_x[x * nw + w];
          if (pwx == 0.0) continue;
          double qwu = q_uw[u * nw + w] / q_u[u];
          if (qwu <= 0.0) {
            dead = true;
            break;
          }
          s += beta * pwx * std::log(qwu / p_w[w]);
        }
        if (dead) continue;
        logit[u] = s;
        zmax = std::max(zmax, s);
      }
      double zsum = 0.0;
      for (std::size_t u = 0; u < nu; ++u)
        if (logit[u] > -kInf) zsum += std::exp(logit[u] - zmax);
      for (std::size_t u = 0; u < nu; ++u) {
        double fresh = logit[u] > -kInf ? std::exp(logit[u] - zmax) / zsum : 0.0;
        next[x * nu + u] = (1.0 - damping) * fresh + damping * k[x * nu + u];
      }
    }
    k = std::move(next);
  }
};

std::vector<double> random_kernel_rows(std::size_t nx, std::size_t nu, std::mt19937_64& rng) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> k(nx * nu);
  for (std::size_t x = 0; x < nx; ++x) {
    double s = 0.0;
    for (std::size_t u = 0; u < nu; ++u) s += (k[x * nu + u] = ex(rng));
    for (std::size_t u = 0; u < nu; ++u) k[x * nu + u] /= s;
  }
  return k;
}

/// Enumerate probability vectors of dimension `dim` on a grid with the given
/// step, calling fn on each.
void for_each_simplex_point(std::size_t dim, double step,
                            const std::function<void(const std::vector<double>&)>& fn) {
  int ticks = static_cast<int>(std::lround(1.0 / step));
  std::vector<int> counts(dim, 0);
  std::vector<double> point(dim, 0.0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == dim) {
      counts[i] = left;
      for (std::size_t j = 0; j < dim; ++j) point[j] = static_cast<double>(counts[j]) / ticks;
      fn(point);
      return;
    }
    for (int c = 0; c <= left; ++c) {
      counts[i] = c;
      rec(i + 1, left - c);
    }
  };
  rec(0, ticks);
}

struct Candidate {
  double value = kInf;
  std::vector<double> rows;
  bool converged = true;
};

Candidate run_fixed_point(const SubProblem& sp, std::size_t nu, std::vector<double> k,
                          const SolverConfig& cfg) {
  Candidate c;
  double beta = sp.b / sp.a;
  double prev = sp.eval(k, nu);
  c.converged = false;
  for (int it = 0; it < cfg.max_iters; ++it) {
    sp.fixed_point_step(k, nu, beta, cfg.damping);
    double cur = sp.eval(k, nu);
    if (std::abs(prev - cur) < cfg.tol) {
      c.converged = true;
      prev = cur;
      break;
    }
    prev = cur;
  }
  c.value = prev;
  c.rows = std::move(k);
  return c;
}

Kernel rows_to_kernel(const Axis& from, const char* to_name, const char* label_prefix,
                      std::size_t nu, std::vector<double> rows) {
  return Kernel(from, Axis{to_name, make_labels(label_prefix, nu)}, std::move(rows));
}

// -------- projected gradient machinery for solve_r_gamma --------

void project_to_simplex(std::vector<double>& v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, tau = 0.0;
  int rho = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) {
      rho = static_cast<int>(i + 1);
      tau = t;
    }
  }
  (void)rho;
  for (double& x : v) x = std::max(0.0, x - tau);
}

/// Minimizes fn over a stack of probability rows via projected gradient with
/// backtracking; per-row simplex projection, optional extra projection hook.
double project_and_descend(std::vector<double>& params, std::size_t nrows, std::size_t rowlen,
                           const std::function<double(const std::vector<double>&)>& fn,
                           const std::function<void(std::vector<double>&)>& project,
                           int iters) {
  auto project_rows = [&](std::vector<double>& p) {
    for (std::size_t r = 0; r < nrows; ++r) {
      std::vector<double> row(p.begin() + r * rowlen, p.begin() + (r + 1) * rowlen);
      project_to_simplex(row);
      std::copy(row.begin(), row.end(), p.begin() + r * rowlen);
    }
    if (project) project(p);
  };
  project_rows(params);
  double f = fn(params);
  double step = 0.25;
  const double h = 1e-7;
  for (int it = 0; it < iters; ++it) {
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      std::vector<double> p = params;
      p[i] += h;
      project_rows(p);
      double fp = fn(p);
      p = params;
      p[i] = std::max(0.0, p[i] - h);
      project_rows(p);
      double fm = fn(p);
      grad[i] = (fp - fm) / (2 * h);
    }
    bool improved = false;
    for (int bt = 0; bt < 20; ++bt) {
      std::vector<double> trial = params;
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] -= step * grad[i];
      project_rows(trial);
      double ft = fn(trial);
      if (ft < f - 1e-12) {
        params = std::move(trial);
        f = ft;
        improved = true;
        step *= 1.5;
        break;
      }
      step *= 0.5;
    }
    if (!improved && step < 1e-10) break;
  }
  return f;
}

}  // namespace

AuxCoupling AuxCoupling::constant(const TwoHopSource& s) {
  return {Kernel::constant(s.x_axis(), Axis{"U", {"u0"}}, 0),
          Kernel::constant(s.y_axis(), Axis{"V", {"v0"}}, 0)};
}

AuxCoupling AuxCoupling::copy(const TwoHopSource& s) {
  Kernel u = Kernel::identity(s.x_axis(), "U");
  Kernel v = Kernel::identity(s.y_axis(), "V");
  return {std::move(u), std::move(v)};
}

JointPmf induced_joint(const TwoHopSource& s, const AuxCoupling& aux) {
  if (!(aux.u_given_x.from().labels == s.x_axis().labels))
    throw std::invalid_argument("aux: P_{U|X} alphabet mismatch");
  if (!(aux.v_given_y.from().labels == s.y_axis().labels))
    throw std::invalid_argument("aux: P_{V|Y} alphabet mismatch");
  JointPmf j = attach(s.p_xyz(), {"X"}, aux.u_given_x, "U");
  return attach(j, {"Y"}, aux.v_given_y, "V");
}

double objective_r(const TwoHopSource& s, const AuxCoupling& aux, const TradeoffWeights& w) {
  JointPmf j = induced_joint(s, aux);
  double iuy = mutual_information(j, {"U"}, {"Y"});
  double iux = mutual_information(j, {"U"}, {"X"});
  double ivz = mutual_information(j, {"V"}, {"Z"});
  double ivy = mutual_information(j, {"V"}, {"Y"});
  return -iuy + w.b * iux - w.c * (iuy + ivz) + w.d * ivy;
}

SubSolveResult minimize_info_tradeoff(const JointPmf& p_xw, double a, double b,
                                      std::size_t u_card, const SolverConfig& cfg) {
  SubProblem sp(p_xw, a, b);
  std::size_t nx = sp.nx;
  std::size_t nu = u_card;
  if (nu == 0) throw std::invalid_argument("minimize_info_tradeoff: |U| must be >= 1");
  Axis from = p_xw.axis(0);

  Candidate best;
  auto consider = [&](Candidate c) {
    if (c.value < best.value) best = std::move(c);
  };

  // constant U attains 0
  {
    Candidate c;
    c.rows.assign(nx * nu, 0.0);
    for (std::size_t x = 0; x < nx; ++x) c.rows[x * nu] = 1.0;
    c.value = 0.0;
    consider(std::move(c));
  }
  // all deterministic maps X -> U when cheap (includes U = X)
  double maps = std::pow(static_cast<double>(nu), static_cast<double>(nx));
  if (maps <= 4096.0) {
    std::size_t total = static_cast<std::size_t>(maps);
    for (std::size_t code = 1; code < total; ++code) {
      Candidate c;
      c.rows.assign(nx * nu, 0.0);
      std::size_t rem = code;
      for (std::size_t x = 0; x < nx; ++x) {
        c.rows[x * nu + rem % nu] = 1.0;
        rem /= nu;
      }
      c.value = sp.eval(c.rows, nu);
      consider(std::move(c));
    }
  }

  if (b > 0.0 && a > 0.0) {
    auto one_restart = [&](int r) {
      std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(r) + 1);
      return run_fixed_point(sp, nu, random_kernel_rows(nx, nu, rng), cfg);
    };
    if (cfg.threads > 1) {
      std::vector<std::future<Candidate>> futs;
      for (int r = 0; r < cfg.restarts; ++r)
        futs.push_back(std::async(std::launch::async, one_restart, r));
      for (auto& f : futs) consider(f.get());  // index order: deterministic merge
    } else {
      for (int r = 0; r < cfg.restarts; ++r) consider(one_restart(r));
    }
  }

  // exhaustive grid cross-check for tiny alphabets, polished by fixed point
  if (cfg.grid_cross_check && nx <= 3 && nu <= 3 && b > 0.0) {
    std::vector<double> rows(nx * nu, 0.0);
    std::function<void(std::size_t)> rec = [&](std::size_t x) {
      if (x == nx) {
        double v = sp.eval(rows, nu);
        if (v < best.value) {
          Candidate c;
          c.value = v;
          c.rows = rows;
          best = std::move(c);
        }
        return;
      }
      for_each_simplex_point(nu, cfg.grid_step, [&](const std::vector<double>& p) {
        std::copy(p.begin(), p.end(), rows.begin() + x * nu);
        rec(x + 1);
      });
    };
    rec(0);
    if (a > 0.0) consider(run_fixed_point(sp, nu, best.rows, cfg));
  }

  SubSolveResult out{best.value, rows_to_kernel(from, "U", "u", nu, best.rows), best.converged};
  return out;
}

SolveResult solve_r(const TwoHopSource& s, const TradeoffWeights& w, const CardBounds& cards,
                    const SolverConfig& cfg) {
  if (w.b < 0 || w.c < 0 || w.d < 0)
    throw std::invalid_argument("solve_r: weights must be nonnegative");
  std::size_t u_card = s.x_axis().size() + cards.u_extra;
  std::size_t v_card = s.y_axis().size() + cards.v_extra;

  SubSolveResult u_part = minimize_info_tradeoff(s.p_xy(), w.b, 1.0 + w.c, u_card, cfg);
  JointPmf p_yz = s.p_xyz().marginal({"Y", "Z"});
  SubSolveResult v_part = minimize_info_tradeoff(p_yz, w.d, w.c, v_card, cfg);

  SolveResult out;
  out.u_part = u_part.value;
  out.v_part = v_part.value;
  out.value = u_part.value + v_part.value;
  out.converged = u_part.converged && v_part.converged;
  Kernel v_kernel(v_part.kernel.from(), Axis{"V", make_labels("v", v_card)}, v_part.kernel.rows());
  out.argmin = AuxCoupling{u_part.kernel, std::move(v_kernel)};
  return out;
}

SolveResult4 solve_r_tilde(const TwoHopSource& s, const Weights4& w, const CardBounds& cards,
                           const SolverConfig& cfg) {
  if (w.b1 < 0 || w.b2 < 0 || w.c < 0 || w.d < 0)
    throw std::invalid_argument("solve_r_tilde: weights must be nonnegative");
  std::size_t u_card = s.x_axis().size() + cards.u_extra;
  std::size_t v_card = s.y_axis().size() + cards.v_extra;
  JointPmf p_yz = s.p_xyz().marginal({"Y", "Z"});

  SubSolveResult u1 = minimize_info_tradeoff(s.p_xy(), w.b1, 1.0, u_card, cfg);
  SubSolveResult u2 = minimize_info_tradeoff(s.p_xy(), w.b2, w.c, u_card, cfg);
  SubSolveResult v = minimize_info_tradeoff(p_yz, w.d, w.c, v_card, cfg);

  SolveResult4 out{u1.value + u2.value + v.value, u1.kernel, u2.kernel,
                   Kernel(v.kernel.from(), Axis{"V", make_labels("v", v_card)}, v.kernel.rows()),
                   u1.converged && u2.converged && v.converged};
  return out;
}

std::optional<AuxCoupling> certify_in(const TwoHopSource& s, const RegionPoint& pt,
                                      const CardBounds& cards, const SolverConfig& cfg) {
  if (pt.r1 < 0 || pt.r2 < 0 || pt.e1 < 0 || pt.e2 < 0)
    throw std::invalid_argument("certify_in: point must be nonnegative");
  const double tol = 1e-9;
  auto witnesses = [&](const AuxCoupling& aux) -> bool {
    JointPmf j = induced_joint(s, aux);
    double iux = mutual_information(j, {"U"}, {"X"});
    double iuy = mutual_information(j, {"U"}, {"Y"});
    double ivy = mutual_information(j, {"V"}, {"Y"});
    double ivz = mutual_information(j, {"V"}, {"Z"});
    return pt.r1 >= iux - tol && pt.r2 >= ivy - tol && pt.e1 <= iuy + tol &&
           pt.e2 <= iuy + ivz + tol;
  };

  std::vector<AuxCoupling> candidates;
  candidates.push_back(AuxCoupling::constant(s));
  candidates.push_back(AuxCoupling::copy(s));
  {
    AuxCoupling mixed{AuxCoupling::copy(s).u_given_x, AuxCoupling::constant(s).v_given_y};
    candidates.push_back(mixed);
    AuxCoupling mixed2{AuxCoupling::constant(s).u_given_x, AuxCoupling::copy(s).v_given_y};
    candidates.push_back(mixed2);
  }
  for (const auto& c : candidates)
    if (witnesses(c)) return c;

  std::size_t u_card = s.x_axis().size() + cards.u_extra;
  std::size_t v_card = s.y_axis().size() + cards.v_extra;
  std::mt19937_64 rng(cfg.seed + 17);
  for (int r = 0; r < std::max(cfg.restarts * 32, 2048); ++r) {
    AuxCoupling aux{
        rows_to_kernel(s.x_axis(), "U", "u", u_card,
                       random_kernel_rows(s.x_axis().size(), u_card, rng)),
        rows_to_kernel(s.y_axis(), "V", "v", v_card,
                       random_kernel_rows(s.y_axis().size(), v_card, rng))};
    Kernel v_named(aux.v_given_y.from(), Axis{"V", make_labels("v", v_card)},
                   aux.v_given_y.rows());
    aux.v_given_y = v_named;
    if (witnesses(aux)) return aux;
  }
  return std::nullopt;
}

std::vector<TradeoffWeights> default_weight_grid() {
  std::vector<double> vals{0.0};
  for (int k = -3; k <= 6; ++k) vals.push_back(std::ldexp(1.0, k));
  std::vector<TradeoffWeights> grid;
  for (double b : vals)
    for (double c : vals)
      for (double d : vals) grid.push_back({b, c, d});
  return grid;
}

std::optional<TradeoffWeights> certify_out(const TwoHopSource& s, const RegionPoint& pt,
                                           const std::vector<TradeoffWeights>& weight_grid,
                                           const CardBounds& cards, const SolverConfig& cfg,
                                           double tol) {
  for (const auto& w : weight_grid) {
    double support = -pt.e1 + w.b * pt.r1 - w.c * pt.e2 + w.d * pt.r2;
    double r = solve_r(s, w, cards, cfg).value;
    if (support < r - tol) return w;
  }
  return std::nullopt;
}

bool q1_band_ok(const TwoHopSource& s, const JointPmf& q_xy, double theta,
                std::size_t* offending_y) {
  FinitePmf qy = q_xy.marginal1("Y");
  FinitePmf py = s.p_y();
  for (std::size_t y = 0; y < py.size(); ++y) {
    if (std::abs(qy[y] - py[y]) > theta * py[y] + 1e-12) {
      if (offending_y) *offending_y = y;
      return false;
    }
  }
  return true;
}

JointPmf q1_joint(const TwoHopSource& s, const Q1Coupling& q1) {
  JointPmf j = attach(q1.q_xy, {"X", "Y"}, q1.u_given_xy, "U");
  j = attach(j, {"Y"}, s.z_given_y(), "Z");
  return attach(j, {"Y"}, q1.v_given_y, "V");
}

double objective_r_gamma(const TwoHopSource& s, const Q1Coupling& q1, const TradeoffWeights& w,
                         double gamma) {
  JointPmf j = q1_joint(s, q1);
  double iuy = mutual_information(j, {"U"}, {"Y"});
  double iux = mutual_information(j, {"U"}, {"X"});
  double ivz = mutual_information(j, {"V"}, {"Z"});
  double ivy = mutual_information(j, {"V"}, {"Y"});
  double iuy_x = conditional_mutual_information(j, {"U"}, {"Y"}, {"X"});
  double d_xy = kl_divergence(q1.q_xy, s.p_xy());
  double d_y = kl_divergence(q1.q_xy.marginal1("Y"), s.p_y());
  return -iuy + w.b * iux - w.c * (iuy + ivz) + w.d * ivy + (w.b + gamma) * d_xy + w.d * d_y +
         gamma * iuy_x;
}

namespace {

/// Clamp the Y-marginal of q (|X| x |Y| row-major) into the theta-band and
/// renormalize; falls back to blending toward p_xy.
void project_band(std::vector<double>& q, const std::vector<double>& p_xy,
                  const std::vector<double>& p_y, std::size_t nx, std::size_t ny, double theta) {
  for (int pass = 0; pass < 64; ++pass) {
    double total = 0.0;
    for (double v : q) total += v;
    if (total <= 0.0) {
      q = p_xy;
      return;
    }
    for (double& v : q) v /= total;
    bool ok = true;
    for (std::size_t y = 0; y < ny; ++y) {
      double qy = 0.0;
      for (std::size_t x = 0; x < nx; ++x) qy += q[x * ny + y];
      double lo = (1.0 - theta) * p_y[y], hi = (1.0 + theta) * p_y[y];
      double target = std::clamp(qy, lo, hi);
      if (std::abs(target - qy) > 1e-15) {
        ok = false;
        if (qy > 0.0) {
          double scale = target / qy;
          for (std::size_t x = 0; x < nx; ++x) q[x * ny + y] *= scale;
        } else {
          for (std::size_t x = 0; x < nx; ++x) q[x * ny + y] = target / nx;
        }
      }
    }
    if (ok) return;
  }
  // residual violation: blend toward the feasible center p_xy
  for (double lam = 0.1; lam <= 1.0; lam += 0.1) {
    std::vector<double> blend(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) blend[i] = (1 - lam) * q[i] + lam * p_xy[i];
    std::vector<double> qy(ny, 0.0);
    bool ok = true;
    for (std::size_t y = 0; y < ny && ok; ++y) {
      for (std::size_t x = 0; x < nx; ++x) qy[y] += blend[x * ny + y];
      ok = std::abs(qy[y] - p_y[y]) <= theta * p_y[y] + 1e-13;
    }
    if (ok) {
      q = std::move(blend);
      return;
    }
  }
  q = p_xy;
}

}  // namespace

SolveGammaResult solve_r_gamma(const TwoHopSource& s, const TradeoffWeights& w, double gamma,
                               double theta, const CardBounds& cards, const SolverConfig& cfg) {
  if (gamma < 0.0) throw std::invalid_argument("solve_r_gamma: gamma must be >= 0");
  if (theta < 0.0) throw std::domain_error("solve_r_gamma: infeasible band theta < 0");

  std::size_t nx = s.x_axis().size(), ny = s.y_axis().size();
  std::size_t u_card = nx + cards.u_extra;
  std::size_t v_card = ny + cards.v_extra;
  Axis xy_axis{"XY", make_labels("xy", nx * ny)};
  const std::vector<double>& pxy = s.p_xy().mass();
  std::vector<double> py(ny, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y) py[y] += pxy[x * ny + y];

  auto make_q1 = [&](const std::vector<double>& q, const std::vector<double>& u_rows,
                     const Kernel& v) {
    return Q1Coupling{JointPmf({s.x_axis(), s.y_axis()}, q),
                      Kernel(xy_axis, Axis{"U", make_labels("u", u_card)}, u_rows), v, theta};
  };

  // exact V-part for a fixed Q_Y
  auto best_v = [&](const std::vector<double>& q) {
    std::vector<double> qy(ny, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y) qy[y] += q[x * ny + y];
    std::vector<double> yz(ny * s.z_axis().size());
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t z = 0; z < s.z_axis().size(); ++z)
        yz[y * s.z_axis().size() + z] = qy[y] * s.z_given_y().at(y, z);
    SolverConfig sub = cfg;
    sub.grid_cross_check = false;
    SubSolveResult r =
        minimize_info_tradeoff(JointPmf({s.y_axis(), s.z_axis()}, yz), w.d, w.c, v_card, sub);
    return Kernel(r.kernel.from(), Axis{"V", make_labels("v", v_card)}, r.kernel.rows());
  };

  SolveGammaResult best;
  best.value = kInf;
  bool have_best = false;

  // seed 0: the unconstrained solve_r minimizer lifted to Q1 (gives value <= R_{b,c,d})
  SolverConfig sub = cfg;
  sub.grid_cross_check = false;
  SolveResult base = solve_r(s, w, cards, sub);
  std::vector<std::pair<std::vector<double>, std::vector<double>>> starts;
  {
    std::vector<double> u_rows(nx * ny * u_card, 0.0);
    std::size_t base_u = base.argmin.u_given_x.to().size();
    for (std::size_t x = 0; x < nx; ++x)
      for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t u = 0; u < u_card; ++u)
          u_rows[(x * ny + y) * u_card + u] =
              u < base_u ? base.argmin.u_given_x.at(x, u) : 0.0;
    starts.push_back({pxy, u_rows});
  }
  std::mt19937_64 rng(cfg.seed + 41);
  for (int r = 1; r < cfg.gamma_starts; ++r) {
    std::vector<double> q = pxy;
    std::normal_distribution<double> noise(0.0, 0.2);
    for (double& v : q) v = std::max(0.0, v * (1.0 + noise(rng)));
    project_band(q, pxy, py, nx, ny, theta);
    starts.push_back({q, random_kernel_rows(nx * ny, u_card, rng)});
  }

  for (auto& [q0, u0] : starts) {
    std::vector<double> q = q0, u_rows = u0;
    Kernel v = best_v(q);
    double cur = kInf;
    for (int outer = 0; outer < cfg.gamma_outer_iters; ++outer) {
      // U-block
      auto u_obj = [&](const std::vector<double>& ur) {
        return objective_r_gamma(s, make_q1(q, ur, v), w, gamma);
      };
      project_and_descend(u_rows, nx * ny, u_card, u_obj, nullptr, 12);
      // Q-block (band-constrained)
      auto q_obj = [&](const std::vector<double>& qq) {
        return objective_r_gamma(s, make_q1(qq, u_rows, v), w, gamma);
      };
      auto q_proj = [&](std::vector<double>& qq) { project_band(qq, pxy, py, nx, ny, theta); };
      project_and_descend(q, 1, nx * ny, q_obj, q_proj, 12);
      // V-block (exact)
      v = best_v(q);
      double next = objective_r_gamma(s, make_q1(q, u_rows, v), w, gamma);
      if (cur - next < 1e-9) {
        cur = std::min(cur, next);
        break;
      }
      cur = next;
    }
    if (cur < best.value) {
      best.value = cur;
      best.argmin = make_q1(q, u_rows, v);
      have_best = true;
    }
  }
  best.converged = have_best;
  return best;
}

PerturbationReport perturb_gamma(const TwoHopSource& s, const Q1Coupling& q1,
                                 const TradeoffWeights& w, double gamma, double theta) {
  std::size_t bad_y = 0;
  if (!q1_band_ok(s, q1.q_xy, theta, &bad_y))
    throw std::domain_error("perturb_gamma: Y-band violated at symbol '" +
                            s.y_axis().labels[bad_y] + "'");
  if (gamma <= 0.0) throw std::invalid_argument("perturb_gamma: gamma must be > 0");
  if (theta <= 0.0) throw std::domain_error("perturb_gamma: theta must be > 0");

  JointPmf q = q1_joint(s, q1);
  FinitePmf q_v = q.marginal1("V");
  FinitePmf q_y = q.marginal1("Y");
  FinitePmf p_y = s.p_y();
  std::size_t nv = q_v.size(), ny = p_y.size(), nz = s.z_axis().size();

  std::vector<Label> vt_labels = q_v.labels();
  vt_labels.push_back("v*");
  Axis vt_axis{"Vt", vt_labels};

  // P_Vt: scale Q_V down by 1/(1+theta), add the v* atom
  std::vector<double> p_vt(nv + 1);
  for (std::size_t v = 0; v < nv; ++v) p_vt[v] = q_v[v] / (1.0 + theta);
  p_vt[nv] = theta / (1.0 + theta);

  // rows of P_{Y|Vt}: Q_{Y|V} rows, plus the v* row ((1+theta)P_Y - Q_Y)/theta
  JointPmf q_vy = q.marginal({"V", "Y"});
  std::vector<double> y_rows((nv + 1) * ny, 0.0);
  for (std::size_t v = 0; v < nv; ++v) {
    if (q_v[v] > 0.0) {
      for (std::size_t y = 0; y < ny; ++y)
        y_rows[v * ny + y] = q_vy.at(q_vy.flat_index({v, y})) / q_v[v];
    } else {
      for (std::size_t y = 0; y < ny; ++y) y_rows[v * ny + y] = p_y[y];  // zero-mass row
    }
  }
  double vstar_min = kInf, vstar_sum = 0.0;
  for (std::size_t y = 0; y < ny; ++y) {
    double m = ((1.0 + theta) * p_y[y] - q_y[y]) / theta;
    vstar_min = std::min(vstar_min, m);
    vstar_sum += m;
    y_rows[nv * ny + y] = std::max(0.0, m);
  }
  // renormalize away negative rounding dust so Kernel construction stays valid
  {
    double rs = 0.0;
    for (std::size_t y = 0; y < ny; ++y) rs += y_rows[nv * ny + y];
    for (std::size_t y = 0; y < ny; ++y) y_rows[nv * ny + y] /= rs;
  }

  PerturbationReport rep{
      gamma,
      theta,
      w.b * std::log(double(s.x_axis().size())) + w.d * std::log(double(ny)),
      0.0,
      p_vt[nv],
      FinitePmf(vt_labels, p_vt),
      Kernel(vt_axis, Axis{"Y", p_y.labels()}, y_rows),
      s.p_xyz(),  // placeholder, replaced below
      0.0,
      {},
  };
  rep.a = rep.a_prime + (w.c + 1.0) * std::log(double(ny)) + w.c * std::log(double(nz));
  double delta = std::sqrt(2.0 * rep.a * std::log(2.0) / gamma);
  std::size_t nu = q.marginal1("U").size();
  rep.entropy_continuity_bound =
      delta * std::log(double(nu) * double(s.x_axis().size()) / delta);

  rep.checks.add(LedgerEntry::check("vstar_row_nonneg", -vstar_min, 0.0, 1e-12));
  rep.checks.add(LedgerEntry::check("vstar_row_sums_to_one", std::abs(vstar_sum - 1.0), 0.0, 1e-12));
  rep.checks.add(
      LedgerEntry::check("vstar_mass", std::abs(rep.vstar_mass - theta / (1.0 + theta)), 0.0, 1e-15));

  // P^(g)_{XYZUVt} = P_XYZ Q_{U|X} P^(g)_{Vt|Y}
  JointPmf q_xu = q.marginal({"X", "U"});
  FinitePmf q_x_of_q = q.marginal1("X");
  std::vector<double> u_rows(s.x_axis().size() * nu, 0.0);
  for (std::size_t x = 0; x < s.x_axis().size(); ++x) {
    double px = q_x_of_q[x];
    if (px > 0.0) {
      for (std::size_t u = 0; u < nu; ++u) u_rows[x * nu + u] = q_xu.at(q_xu.flat_index({x, u})) / px;
    } else {
      u_rows[x * nu] = 1.0;
    }
  }
  Kernel u_given_x(s.x_axis(), Axis{"U", q.marginal({"U"}).axis(0).labels}, u_rows);

  // P^(g)_{Vt|Y} from Bayes on (P_Vt, P_{Y|Vt})
  std::vector<double> vt_rows(ny * (nv + 1), 0.0);
  std::vector<double> p_y_check(ny, 0.0);
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t v = 0; v <= nv; ++v) p_y_check[y] += p_vt[v] * rep.y_given_vtilde.at(v, y);
  double ymax_diff = 0.0;
  for (std::size_t y = 0; y < ny; ++y) ymax_diff = std::max(ymax_diff, std::abs(p_y_check[y] - p_y[y]));
  rep.checks.add(LedgerEntry::check("y_marginal_preserved", ymax_diff, 0.0, 1e-12));

  for (std::size_t y = 0; y < ny; ++y) {
    if (p_y[y] > 0.0) {
      for (std::size_t v = 0; v <= nv; ++v)
        vt_rows[y * (nv + 1) + v] = p_vt[v] * rep.y_given_vtilde.at(v, y) / p_y_check[y];
    } else {
      vt_rows[y * (nv + 1) + nv] = 1.0;
    }
  }
  Kernel vt_given_y(s.y_axis(), vt_axis, vt_rows);
  JointPmf pert = attach(attach(s.p_xyz(), {"X"}, u_given_x, "U"), {"Y"}, vt_given_y, "Vt");
  rep.perturbed = pert;

  // Appendix-C identity: P^(g)_{Z|Vt}(z|v) = Q_{Z|V}(z|v) for v != v*
  JointPmf pert_zv = pert.marginal({"Vt", "Z"});
  JointPmf q_vz = q.marginal({"V", "Z"});
  double zv_diff = 0.0;
  for (std::size_t v = 0; v < nv; ++v) {
    double pv = 0.0, qv = q_v[v];
    for (std::size_t z = 0; z < nz; ++z) pv += pert_zv.at(pert_zv.flat_index({v, z}));
    if (pv <= 0.0 || qv <= 0.0) continue;
    for (std::size_t z = 0; z < nz; ++z) {
      double lhs = pert_zv.at(pert_zv.flat_index({v, z})) / pv;
      double rhs = q_vz.at(q_vz.flat_index({v, z})) / qv;
      zv_diff = std::max(zv_diff, std::abs(lhs - rhs));
    }
  }
  rep.checks.add(LedgerEntry::check("z_given_vt_matches_q", zv_diff, 0.0, 1e-12));

  // continuity inequalities relating the coupling to its perturbation
  double ivy_q = mutual_information(q, {"V"}, {"Y"});
  double ivz_q = mutual_information(q, {"V"}, {"Z"});
  double ivy_p = mutual_information(pert, {"Vt"}, {"Y"});
  double ivz_p = mutual_information(pert, {"Vt"}, {"Z"});
  rep.checks.add(LedgerEntry::check("ivy_lower_bound",
                                    ivy_p - rep.a / gamma - theta * std::log(s.mu()), ivy_q, 1e-9));
  rep.checks.add(LedgerEntry::check("ivz_upper_bound", ivz_q, (1.0 + theta) * ivz_p, 1e-9));

  return rep;
}

}  // namespace twohop
