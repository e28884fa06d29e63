#include "twohop/converse_lab.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "twohop/divergence.hpp"

namespace twohop {

namespace {

/// Dense product law over (x^n, y^n), indexed xr * syn + yr.
std::vector<double> joint_seq_table(const TwoHopSource& s, int n, std::size_t sxn,
                                    std::size_t syn) {
  std::size_t sx = s.x_axis().size(), sy = s.y_axis().size();
  const std::vector<double>& pxy = s.p_xy().mass();
  std::vector<double> out(sxn * syn, 0.0);
  std::function<void(int, std::size_t, std::size_t, double)> rec =
      [&](int i, std::size_t xr, std::size_t yr, double prod) {
        if (i == n) {
          out[xr * syn + yr] = prod;
          return;
        }
        for (std::size_t x = 0; x < sx; ++x)
          for (std::size_t y = 0; y < sy; ++y)
            rec(i + 1, xr * sx + x, yr * sy + y, prod * pxy[x * sy + y]);
      };
  rec(0, 0, 0, 1.0);
  return out;
}

std::vector<double> z_law(const TwoHopSource& s, const std::vector<std::size_t>& yseq) {
  std::size_t sz = s.z_axis().size();
  std::vector<double> out{1.0};
  for (std::size_t y : yseq) {
    std::vector<double> next(out.size() * sz);
    for (std::size_t j = 0; j < out.size(); ++j)
      for (std::size_t z = 0; z < sz; ++z) next[j * sz + z] = out[j] * s.z_given_y().at(y, z);
    out = std::move(next);
  }
  return out;
}

double vec_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

/// I(row; col) for a dense joint given row-major.
double table_mi(const std::vector<double>& j, std::size_t rows, std::size_t cols) {
  std::vector<double> pr(rows, 0.0), pc(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t cIdx = 0; cIdx < cols; ++cIdx) {
      pr[r] += j[r * cols + cIdx];
      pc[cIdx] += j[r * cols + cIdx];
    }
  double mi = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t cIdx = 0; cIdx < cols; ++cIdx) {
      double m = j[r * cols + cIdx];
      if (m > 0.0) mi += m * std::log(m / (pr[r] * pc[cIdx]));
    }
  return std::max(0.0, mi);
}

double table_kl(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
      d += p[i] * std::log(p[i] / q[i]);
    }
  }
  return d;
}

struct TruncLaws {
  std::vector<double> m1y;       // N1 x syn
  std::vector<double> pm1_true;  // N1 (same under both hypotheses)
  std::vector<double> m2y;       // N2 x syn
  std::vector<double> m2z;       // N2 x szn
  std::vector<double> pbar_m2;        // H1 receiver message law
  std::vector<double> pbar_m2_tilde;  // product-of-truncated-marginals image
};

TruncLaws trunc_laws(const TwoHopCode& code, const TwoHopSource& s,
                     const TruncationArtifacts& art) {
  TruncLaws L;
  std::size_t syn = art.syn, szn = art.szn;
  L.m1y.assign(std::size_t{code.N1} * syn, 0.0);
  for (std::size_t xr = 0; xr < art.sxn; ++xr)
    for (std::size_t yr = 0; yr < syn; ++yr)
      L.m1y[std::size_t{code.f1[xr]} * syn + yr] += art.trunc_xy[xr * syn + yr];

  L.pm1_true.assign(code.N1, 0.0);
  for (std::size_t xr = 0; xr < art.sxn; ++xr) L.pm1_true[code.f1[xr]] += art.pxn[xr];

  L.m2y.assign(std::size_t{code.N2} * syn, 0.0);
  for (std::size_t m1 = 0; m1 < code.N1; ++m1)
    for (std::size_t yr = 0; yr < syn; ++yr)
      L.m2y[std::size_t{code.f2[m1 * syn + yr]} * syn + yr] += L.m1y[m1 * syn + yr];

  L.m2z.assign(std::size_t{code.N2} * szn, 0.0);
  std::size_t sy = s.y_axis().size();
  for (std::size_t yr = 0; yr < syn; ++yr) {
    bool any = false;
    for (std::size_t m2 = 0; m2 < code.N2; ++m2) any = any || L.m2y[m2 * syn + yr] > 0.0;
    if (!any) continue;
    std::vector<double> zl = z_law(s, unrank_seq(yr, sy, code.n));
    for (std::size_t m2 = 0; m2 < code.N2; ++m2) {
      double mass = L.m2y[m2 * syn + yr];
      if (mass == 0.0) continue;
      for (std::size_t zr = 0; zr < szn; ++zr) L.m2z[m2 * szn + zr] += mass * zl[zr];
    }
  }

  L.pbar_m2.assign(code.N2, 0.0);
  L.pbar_m2_tilde.assign(code.N2, 0.0);
  std::vector<double> pm1_trunc(code.N1, 0.0), py_trunc(syn, 0.0);
  for (std::size_t m1 = 0; m1 < code.N1; ++m1)
    for (std::size_t yr = 0; yr < syn; ++yr) {
      pm1_trunc[m1] += L.m1y[m1 * syn + yr];
      py_trunc[yr] += L.m1y[m1 * syn + yr];
    }
  for (std::size_t m1 = 0; m1 < code.N1; ++m1)
    for (std::size_t yr = 0; yr < syn; ++yr) {
      std::size_t m2 = code.f2[m1 * syn + yr];
      L.pbar_m2[m2] += L.pm1_true[m1] * art.pyn[yr];
      L.pbar_m2_tilde[m2] += pm1_trunc[m1] * py_trunc[yr];
    }
  return L;
}

}  // namespace

AcceptanceSets acceptance_sets(const TwoHopCode& code, const TwoHopSource& s) {
  code.validate(s);
  std::size_t sxn = pow_size(s.x_axis().size(), code.n);
  std::size_t syn = pow_size(s.y_axis().size(), code.n);
  std::size_t szn = pow_size(s.z_axis().size(), code.n);
  if (sxn * syn * szn > kExactCellBudget)
    throw BudgetError("acceptance-set extension exceeds the cell budget");
  AcceptanceSets a;
  a.relay.resize(code.g1.size());
  for (std::size_t i = 0; i < code.g1.size(); ++i) a.relay[i] = code.g1[i] ? 0 : 1;
  a.g.resize(code.g2.size());
  for (std::size_t i = 0; i < code.g2.size(); ++i) a.g[i] = code.g2[i] ? 0 : 1;
  a.d_y.resize(sxn * syn);
  a.d_z.resize(sxn * syn * szn);
  for (std::size_t xr = 0; xr < sxn; ++xr) {
    std::size_t m1 = code.f1[xr];
    for (std::size_t yr = 0; yr < syn; ++yr) {
      a.d_y[xr * syn + yr] = a.relay[m1 * syn + yr];
      std::size_t m2 = code.f2[m1 * syn + yr];
      for (std::size_t zr = 0; zr < szn; ++zr)
        a.d_z[(xr * syn + yr) * szn + zr] = a.g[m2 * szn + zr];
    }
  }
  return a;
}

TruncationArtifacts build_truncation(const TwoHopCode& code, const TwoHopSource& s, double eps1,
                                     double eps2) {
  code.validate(s);
  if (eps1 + eps2 >= 1.0)
    throw std::domain_error("truncation premise failed: eps1 + eps2 must be < 1");

  TruncationArtifacts art;
  art.n = code.n;
  art.eps1 = eps1;
  art.eps2 = eps2;
  art.consts = source_constants(s, code.n, eps1, eps2);
  art.errors = exact_errors(code, s);
  if (art.errors.beta1 > eps1 + 1e-12)
    throw std::domain_error("truncation premise failed: relay type-I error " +
                            std::to_string(art.errors.beta1) + " exceeds eps1");
  if (art.errors.eta1 > eps2 + 1e-12)
    throw std::domain_error("truncation premise failed: receiver type-I error " +
                            std::to_string(art.errors.eta1) + " exceeds eps2");

  std::size_t sx = s.x_axis().size(), sy = s.y_axis().size();
  art.sxn = pow_size(sx, code.n);
  art.syn = pow_size(sy, code.n);
  art.szn = pow_size(s.z_axis().size(), code.n);
  if (art.sxn * art.syn > kExactCellBudget || art.syn * art.szn > kExactCellBudget ||
      std::size_t{code.N2} * art.szn > kExactCellBudget)
    throw BudgetError("truncation enumeration exceeds the cell budget");
  art.pxn = seq_probs(s.p_x().mass(), code.n);
  art.pyn = seq_probs(s.p_y().mass(), code.n);
  art.pzn = seq_probs(s.p_z().mass(), code.n);
  art.pxyn = joint_seq_table(s, code.n, art.sxn, art.syn);

  double eps_gap = 1.0 - eps1 - eps2;
  double thr = eps_gap / (1.0 + 3.0 * eps2 - eps1);

  // B: cells whose conditional receiver acceptance mass clears the threshold
  art.b_set.assign(art.sxn * art.syn, 0);
  double b_mass = 0.0;
  for (std::size_t yr = 0; yr < art.syn; ++yr) {
    std::vector<double> zl = z_law(s, unrank_seq(yr, sy, code.n));
    std::map<std::size_t, double> gmass;
    for (std::size_t xr = 0; xr < art.sxn; ++xr) {
      std::size_t m2 = code.f2[std::size_t{code.f1[xr]} * art.syn + yr];
      auto it = gmass.find(m2);
      if (it == gmass.end()) {
        double acc = 0.0;
        for (std::size_t zr = 0; zr < art.szn; ++zr)
          if (!code.g2[m2 * art.szn + zr]) acc += zl[zr];
        it = gmass.emplace(m2, acc).first;
      }
      if (it->second >= thr) {
        art.b_set[xr * art.syn + yr] = 1;
        b_mass += art.pxyn[xr * art.syn + yr];
      }
    }
  }
  art.checks.add(LedgerEntry::check("truncation_b_mass_lower",
                                    (3.0 - 3.0 * eps2 + eps1) / 4.0, b_mass));

  // typical y-band on empirical types
  std::vector<double> py = s.p_y().mass();
  art.typical.assign(art.syn, 0);
  double t_mass = 0.0;
  for (std::size_t yr = 0; yr < art.syn; ++yr) {
    std::vector<std::size_t> ys = unrank_seq(yr, sy, code.n);
    std::vector<double> type(sy, 0.0);
    for (std::size_t d : ys) type[d] += 1.0 / code.n;
    bool ok = true;
    for (std::size_t y = 0; y < sy && ok; ++y)
      ok = std::abs(type[y] - py[y]) <= art.consts.theta_n * py[y] + 1e-12;
    if (ok) {
      art.typical[yr] = 1;
      t_mass += art.pyn[yr];
    }
  }
  art.typicality_premise = t_mass >= 1.0 - eps_gap / 4.0 - 1e-12;
  if (art.typicality_premise) {
    art.checks.add(LedgerEntry::check("truncation_typicality_mass", 1.0 - eps_gap / 4.0, t_mass));
  } else {
    art.checks.add(LedgerEntry::premise_failed(
        "truncation_typicality_mass", "typical-set mass " + std::to_string(t_mass) +
                                          " below the large-n premise at n=" +
                                          std::to_string(code.n)));
  }

  art.c_set.assign(art.sxn * art.syn, 0);
  art.mass = 0.0;
  for (std::size_t xr = 0; xr < art.sxn; ++xr) {
    std::size_t m1 = code.f1[xr];
    for (std::size_t yr = 0; yr < art.syn; ++yr) {
      if (art.b_set[xr * art.syn + yr] && !code.g1[m1 * art.syn + yr] && art.typical[yr]) {
        art.c_set[xr * art.syn + yr] = 1;
        art.mass += art.pxyn[xr * art.syn + yr];
      }
    }
  }
  art.mass_premise = art.mass >= eps_gap / 2.0 - 1e-12;
  if (art.typicality_premise) {
    art.checks.add(LedgerEntry::check("truncation_c_mass_lower", eps_gap / 2.0, art.mass));
  } else if (art.mass_premise) {
    art.checks.add(LedgerEntry::check("truncation_c_mass_lower", eps_gap / 2.0, art.mass));
  } else {
    art.checks.add(LedgerEntry::premise_failed(
        "truncation_c_mass_lower",
        "good-set mass " + std::to_string(art.mass) + " below bound; typicality premise failed"));
  }
  if (art.mass <= 0.0)
    throw std::domain_error("truncation premise failed: good set has zero mass");

  art.trunc_xy.assign(art.sxn * art.syn, 0.0);
  for (std::size_t i = 0; i < art.trunc_xy.size(); ++i)
    if (art.c_set[i]) art.trunc_xy[i] = art.pxyn[i] / art.mass;

  // KL identity between the truncated and true laws
  double d = table_kl(art.trunc_xy, art.pxyn);
  art.checks.add(LedgerEntry::check("truncation_kl_identity", std::abs(d + std::log(art.mass)),
                                    0.0, 1e-12));
  if (art.mass_premise) {
    art.checks.add(
        LedgerEntry::check("truncation_kl_upper", d, std::log(2.0 / eps_gap)));
    // per-sequence dominance of the truncated marginals by the true ones
    double dom = 2.0 / eps_gap;
    auto worst = [&](const std::vector<double>& trunc_marg, const std::vector<double>& base) {
      double w = -1.0;
      for (std::size_t i = 0; i < base.size(); ++i)
        w = std::max(w, trunc_marg[i] - dom * base[i]);
      return w;
    };
    std::vector<double> tx(art.sxn, 0.0), ty(art.syn, 0.0), tz(art.szn, 0.0);
    for (std::size_t xr = 0; xr < art.sxn; ++xr)
      for (std::size_t yr = 0; yr < art.syn; ++yr) {
        tx[xr] += art.trunc_xy[xr * art.syn + yr];
        ty[yr] += art.trunc_xy[xr * art.syn + yr];
      }
    for (std::size_t yr = 0; yr < art.syn; ++yr) {
      if (ty[yr] == 0.0) continue;
      std::vector<double> zl = z_law(s, unrank_seq(yr, sy, code.n));
      for (std::size_t zr = 0; zr < art.szn; ++zr) tz[zr] += ty[yr] * zl[zr];
    }
    art.checks.add(LedgerEntry::check("truncation_x_dominance", worst(tx, art.pxn), 0.0, 1e-12));
    art.checks.add(LedgerEntry::check("truncation_y_dominance", worst(ty, art.pyn), 0.0, 1e-12));
    art.checks.add(LedgerEntry::check("truncation_z_dominance", worst(tz, art.pzn), 0.0, 1e-12));
  } else {
    art.checks.add(LedgerEntry::premise_failed("truncation_kl_upper", "mass premise failed"));
    art.checks.add(LedgerEntry::premise_failed("truncation_x_dominance", "mass premise failed"));
    art.checks.add(LedgerEntry::premise_failed("truncation_y_dominance", "mass premise failed"));
    art.checks.add(LedgerEntry::premise_failed("truncation_z_dominance", "mass premise failed"));
  }
  return art;
}

ChainLedger relay_chain(const TwoHopCode& code, const TwoHopSource& s,
                        const TruncationArtifacts& art) {
  ChainLedger led;
  TruncLaws L = trunc_laws(code, s, art);
  double eps_gap = 1.0 - art.eps1 - art.eps2;

  double accept_mass = 0.0;
  for (std::size_t m1 = 0; m1 < code.N1; ++m1)
    for (std::size_t yr = 0; yr < art.syn; ++yr)
      if (!code.g1[m1 * art.syn + yr]) accept_mass += L.m1y[m1 * art.syn + yr];
  led.add(LedgerEntry::check("relay_trunc_accept_mass_one", 1.0, accept_mass, 1e-12));

  double beta2 = art.errors.beta2;
  std::vector<double> ref(L.m1y.size());
  for (std::size_t m1 = 0; m1 < code.N1; ++m1)
    for (std::size_t yr = 0; yr < art.syn; ++yr)
      ref[m1 * art.syn + yr] = L.pm1_true[m1] * art.pyn[yr];
  double dv = table_kl(L.m1y, ref);
  double i_m1y = table_mi(L.m1y, code.N1, art.syn);

  if (beta2 <= 0.0) {
    led.add(LedgerEntry::vacuous("relay_dv_bound", "beta2 = 0"));
    led.add(LedgerEntry::vacuous("relay_single_letter_bound", "beta2 = 0"));
  } else {
    led.add(LedgerEntry::check("relay_dv_bound", -std::log(beta2), dv));
    if (art.mass_premise) {
      led.add(LedgerEntry::check("relay_single_letter_bound", -std::log(beta2),
                                 i_m1y + 2.0 * std::log(2.0 / eps_gap)));
    } else {
      led.add(LedgerEntry::premise_failed("relay_single_letter_bound", "mass premise failed"));
    }
  }
  if (art.mass_premise) {
    std::vector<double> pm1_trunc(code.N1, 0.0);
    for (std::size_t m1 = 0; m1 < code.N1; ++m1)
      for (std::size_t yr = 0; yr < art.syn; ++yr) pm1_trunc[m1] += L.m1y[m1 * art.syn + yr];
    double w = -1.0;
    for (std::size_t m1 = 0; m1 < code.N1; ++m1)
      w = std::max(w, pm1_trunc[m1] - 2.0 * L.pm1_true[m1] / eps_gap);
    led.add(LedgerEntry::check("relay_m1_dominance", w, 0.0, 1e-12));
  } else {
    led.add(LedgerEntry::premise_failed("relay_m1_dominance", "mass premise failed"));
  }
  return led;
}

std::vector<double> semigroup_apply(SemigroupKind kind, const TwoHopSource& s, double t,
                                    const std::vector<std::size_t>& yseq, std::vector<double> h,
                                    int n) {
  if (t <= 0.0) throw std::domain_error("semigroup operator requires t > 0");
  std::size_t sz = s.z_axis().size();
  if (h.size() != pow_size(sz, n)) throw std::invalid_argument("semigroup: h size mismatch");
  if (kind == SemigroupKind::markov && static_cast<int>(yseq.size()) != n)
    throw std::invalid_argument("semigroup: y sequence length mismatch");
  std::vector<double> pz = s.p_z().mass();
  double et = std::exp(-t);
  for (int i = 0; i < n; ++i) {
    std::size_t stride = pow_size(sz, n - 1 - i);
    const std::vector<double>* weights;
    std::vector<double> row;
    double scale;
    if (kind == SemigroupKind::lambda) {
      weights = &pz;
      scale = s.alpha() * (1.0 - et);
    } else {
      row = s.z_given_y().row(yseq[i]).mass();
      weights = &row;
      scale = 1.0 - et;
    }
    for (std::size_t block = 0; block < h.size(); block += stride * sz) {
      for (std::size_t off = 0; off < stride; ++off) {
        double mean = 0.0;
        for (std::size_t z = 0; z < sz; ++z) mean += (*weights)[z] * h[block + z * stride + off];
        for (std::size_t z = 0; z < sz; ++z) {
          double& v = h[block + z * stride + off];
          v = et * v + scale * mean;
        }
      }
    }
  }
  return h;
}

ChainLedger receiver_chain(const TwoHopCode& code, const TwoHopSource& s,
                           const TruncationArtifacts& art) {
  ChainLedger led;
  TruncLaws L = trunc_laws(code, s, art);
  double eps_gap = 1.0 - art.eps1 - art.eps2;
  double bigL = std::log((1.0 + 3.0 * art.eps2 - art.eps1) / eps_gap);
  double alpha = s.alpha();
  int n = code.n;
  double t, slack;
  bool alpha_one = art.consts.alpha_is_one;
  if (alpha_one) {
    t = 1.0 / std::sqrt(double(n));  // footnote fallback, Theta(sqrt(n)) slack
    slack = (alpha - 1.0) * n * t + bigL / t;
  } else {
    t = std::sqrt(bigL / (n * (alpha - 1.0)));
    slack = art.consts.psi;
  }
  std::string note = alpha_one ? "alpha=1: t=1/sqrt(n) fallback replaces the sqrt-n slack" : "";
  double eta2 = art.errors.eta2;
  std::size_t sy = s.y_axis().size();

  // H1-side smoothing bound
  double lam_mass = 0.0;
  for (std::size_t m2 = 0; m2 < code.N2; ++m2) {
    if (L.pbar_m2[m2] == 0.0) continue;
    std::vector<double> h(art.szn, 0.0);
    for (std::size_t zr = 0; zr < art.szn; ++zr)
      if (!code.g2[m2 * art.szn + zr]) h[zr] = 1.0;
    std::vector<double> lam = semigroup_apply(SemigroupKind::lambda, s, t, {}, std::move(h), n);
    double acc = 0.0;
    for (std::size_t zr = 0; zr < art.szn; ++zr) acc += art.pzn[zr] * lam[zr];
    lam_mass += L.pbar_m2[m2] * acc;
  }
  {
    LedgerEntry e = LedgerEntry::check("receiver_smoothing_h1_bound", lam_mass,
                                       std::exp((alpha - 1.0) * n * t) * eta2);
    e.note = note;
    led.add(e);
  }

  // per-(y, m2) reverse-hypercontractivity step on the truncated support
  for (std::size_t yr = 0; yr < art.syn; ++yr) {
    std::vector<std::size_t> ys = unrank_seq(yr, sy, n);
    std::vector<double> zl;
    for (std::size_t m2 = 0; m2 < code.N2; ++m2) {
      if (L.m2y[m2 * art.syn + yr] <= 0.0) continue;
      if (zl.empty()) zl = z_law(s, ys);
      std::vector<double> h(art.szn, 0.0);
      double gm = 0.0;
      for (std::size_t zr = 0; zr < art.szn; ++zr)
        if (!code.g2[m2 * art.szn + zr]) gm += (h[zr] = 1.0) * zl[zr];
      std::string name = "receiver_rhc[y=" + std::to_string(yr) + ",m2=" + std::to_string(m2) + "]";
      if (gm <= 0.0) {
        led.add(LedgerEntry::vacuous(name, "empty acceptance region"));
        continue;
      }
      std::vector<double> th = semigroup_apply(SemigroupKind::markov, s, t, ys, std::move(h), n);
      double elog = 0.0;
      for (std::size_t zr = 0; zr < art.szn; ++zr)
        if (zl[zr] > 0.0) elog += zl[zr] * std::log(th[zr]);
      led.add(LedgerEntry::check(name, (1.0 + 1.0 / t) * std::log(gm), elog));
    }
  }

  // assembled bounds
  std::vector<double> ref(L.m2z.size());
  for (std::size_t m2 = 0; m2 < code.N2; ++m2)
    for (std::size_t zr = 0; zr < art.szn; ++zr)
      ref[m2 * art.szn + zr] = L.pbar_m2[m2] * art.pzn[zr];
  double d_ref_true = table_kl(L.m2z, ref);
  std::vector<double> tz(art.szn, 0.0);
  for (std::size_t m2 = 0; m2 < code.N2; ++m2)
    for (std::size_t zr = 0; zr < art.szn; ++zr) tz[zr] += L.m2z[m2 * art.szn + zr];
  for (std::size_t m2 = 0; m2 < code.N2; ++m2)
    for (std::size_t zr = 0; zr < art.szn; ++zr)
      ref[m2 * art.szn + zr] = L.pbar_m2_tilde[m2] * tz[zr];
  double d_ref_trunc = table_kl(L.m2z, ref);

  if (eta2 <= 0.0) {
    led.add(LedgerEntry::vacuous("receiver_assembled_bound", "eta2 = 0"));
    led.add(LedgerEntry::vacuous("receiver_assembled_trunc_reference", "eta2 = 0"));
  } else {
    LedgerEntry e1 =
        LedgerEntry::check("receiver_assembled_bound", -std::log(eta2), d_ref_true + slack + bigL);
    e1.note = note;
    led.add(e1);
    if (art.mass_premise) {
      LedgerEntry e2 = LedgerEntry::check(
          "receiver_assembled_trunc_reference", -std::log(eta2),
          d_ref_trunc + slack + bigL + 3.0 * std::log(2.0 / eps_gap));
      e2.note = note;
      led.add(e2);
    } else {
      led.add(LedgerEntry::premise_failed("receiver_assembled_trunc_reference",
                                          "mass premise failed"));
    }
  }
  if (art.mass_premise) {
    double w = -1.0;
    for (std::size_t m2 = 0; m2 < code.N2; ++m2)
      w = std::max(w, L.pbar_m2_tilde[m2] - 4.0 * L.pbar_m2[m2] / (eps_gap * eps_gap));
    led.add(LedgerEntry::check("receiver_m2_dominance", w, 0.0, 1e-12));
  } else {
    led.add(LedgerEntry::premise_failed("receiver_m2_dominance", "mass premise failed"));
  }
  return led;
}

MultiletterResult multiletter_r(const TwoHopCode& code, const TwoHopSource& s,
                                const TruncationArtifacts& art, const TradeoffWeights& w,
                                double gamma) {
  MultiletterResult out;
  TruncLaws L = trunc_laws(code, s, art);
  out.i_m1y = table_mi(L.m1y, code.N1, art.syn);
  out.i_m2y = table_mi(L.m2y, code.N2, art.syn);
  out.i_m2z = table_mi(L.m2z, code.N2, art.szn);
  std::vector<double> pm1(code.N1, 0.0), pm2(code.N2, 0.0), tz(art.szn, 0.0);
  for (std::size_t m1 = 0; m1 < code.N1; ++m1)
    for (std::size_t yr = 0; yr < art.syn; ++yr) pm1[m1] += L.m1y[m1 * art.syn + yr];
  for (std::size_t m2 = 0; m2 < code.N2; ++m2)
    for (std::size_t yr = 0; yr < art.syn; ++yr) pm2[m2] += L.m2y[m2 * art.syn + yr];
  for (std::size_t m2 = 0; m2 < code.N2; ++m2)
    for (std::size_t zr = 0; zr < art.szn; ++zr) tz[zr] += L.m2z[m2 * art.szn + zr];
  out.h_m1 = vec_entropy(pm1);
  out.h_m2 = vec_entropy(pm2);

  std::vector<double> ref(L.m2z.size());
  for (std::size_t m2 = 0; m2 < code.N2; ++m2)
    for (std::size_t zr = 0; zr < art.szn; ++zr)
      ref[m2 * art.szn + zr] = L.pbar_m2_tilde[m2] * tz[zr];
  out.d_zm = table_kl(L.m2z, ref);
  out.d_trunc = -std::log(art.mass);

  // relay message is a deterministic function of the x-block:
  // I(M1; Y-block | X-block) = H(M1|X) - H(M1|XY) and both conditional
  // entropies are exactly zero (point-mass rows), so the term vanishes
  double cmi = 0.0;
  out.checks.add(LedgerEntry::check("multiletter_markov_zero", std::abs(cmi), 0.0, 1e-12));

  // I(M1; X-block Y-block) = H(M1) exactly; the rate chain is checked both ways
  double i_m1xy = out.h_m1;
  out.checks.add(LedgerEntry::check("rate1_entropy_bound", out.h_m1, std::log(double(code.N1))));
  out.checks.add(LedgerEntry::check("rate1_mi_bound", i_m1xy, out.h_m1 + 1e-12));
  out.checks.add(LedgerEntry::check("rate2_entropy_bound", out.h_m2, std::log(double(code.N2))));
  out.checks.add(LedgerEntry::check("rate2_mi_bound", out.i_m2y, out.h_m2));
  out.checks.add(LedgerEntry::check("appendix_single_letter_lower", out.i_m2z, out.d_zm, 1e-10));
  out.checks.add(
      LedgerEntry::check("appendix_single_letter_upper", out.d_zm, out.i_m2z + out.i_m1y, 1e-10));

  out.r_n = -out.i_m1y + w.b * i_m1xy - w.c * out.d_zm + w.d * out.i_m2y + gamma * cmi +
            (w.b + w.d + gamma) * out.d_trunc;

  double eps_gap = 1.0 - art.eps1 - art.eps2;
  double bigL = std::log((1.0 + 3.0 * art.eps2 - art.eps1) / eps_gap);
  double beta2 = art.errors.beta2, eta2 = art.errors.eta2;
  if (beta2 <= 0.0 || eta2 <= 0.0) {
    out.checks.add(LedgerEntry::vacuous("combined_precursor", "zero type-II error"));
  } else if (!art.mass_premise) {
    out.checks.add(LedgerEntry::premise_failed("combined_precursor", "mass premise failed"));
  } else {
    double psi = art.consts.alpha_is_one
                     ? bigL * (1.0 + std::sqrt(double(code.n)))  // fallback slack at alpha = 1
                     : art.consts.psi;
    double lhs = std::log(beta2) + w.b * std::log(double(code.N1)) + w.c * std::log(eta2) +
                 w.d * std::log(double(code.N2)) + w.c * psi;
    double rhs = out.r_n - bigL + (w.b + w.d + gamma + 5.0) * std::log(eps_gap / 2.0);
    LedgerEntry e = LedgerEntry::check("combined_precursor", rhs, lhs);
    if (art.consts.alpha_is_one) e.note = "alpha=1 fallback slack";
    out.checks.add(e);
  }
  return out;
}

double lemma2_gap(const MultiletterResult& multi, int n, double r_hat) {
  return multi.r_n - n * r_hat;
}

ChainLedger verify_code(const TwoHopCode& code, const TwoHopSource& s, double eps1, double eps2,
                        const TradeoffWeights& w, double gamma) {
  TruncationArtifacts art = build_truncation(code, s, eps1, eps2);
  ChainLedger led;
  led.append(art.checks);
  led.append(relay_chain(code, s, art));
  led.append(receiver_chain(code, s, art));
  led.append(multiletter_r(code, s, art, w, gamma).checks);
  return led;
}

}  // namespace twohop
