#include "twohop/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace twohop {

namespace {

struct Cell {
  std::size_t index;
  double h0, h1;
};

/// Pareto set of deterministic likelihood-ratio tests for a binary decision
/// on cells with H0 mass h0 and H1 mass h1; type1 = rejected H0 mass,
/// type2 = accepted H1 mass.
std::vector<FrontierPoint> np_sweep(const std::vector<double>& h0, const std::vector<double>& h1,
                                    bool* cap_hit) {
  std::size_t k = h0.size();
  std::vector<Cell> finite;
  std::vector<std::size_t> always_in;
  double h0_total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    h0_total += h0[i];
    if (h0[i] > 0.0 && h1[i] <= 0.0) {
      always_in.push_back(i);  // infinite ratio: free acceptance
    } else if (h0[i] > 0.0) {
      finite.push_back({i, h0[i], h1[i]});
    }
    // h0 = 0 cells: acceptance only adds type2 mass, always dominated
  }
  std::stable_sort(finite.begin(), finite.end(),
                   [](const Cell& a, const Cell& b) { return a.h0 * b.h1 > b.h0 * a.h1; });

  // tie groups by equal ratio
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (std::size_t i = 0; i < finite.size();) {
    std::size_t j = i + 1;
    while (j < finite.size() &&
           std::abs(finite[i].h0 * finite[j].h1 - finite[j].h0 * finite[i].h1) <=
               1e-14 * std::max(1.0, std::abs(finite[i].h0 * finite[j].h1)))
      ++j;
    groups.push_back({i, j});
    i = j;
  }

  double base_h0 = 0.0, base_h1 = 0.0;
  for (std::size_t i : always_in) base_h0 += h0[i];
  std::vector<std::uint8_t> base_accept(k, 0);
  for (std::size_t i : always_in) base_accept[i] = 1;

  std::vector<FrontierPoint> pts;
  auto emit = [&](double a0, double a1, const std::vector<std::uint8_t>& accept) {
    pts.push_back({std::max(0.0, h0_total - a0), std::max(0.0, a1), accept});
  };
  emit(base_h0, base_h1, base_accept);

  for (auto [lo, hi] : groups) {
    std::size_t g = hi - lo;
    if (g <= 12) {
      for (std::size_t mask = 1; mask < (std::size_t{1} << g); ++mask) {
        double a0 = base_h0, a1 = base_h1;
        std::vector<std::uint8_t> accept = base_accept;
        for (std::size_t bit = 0; bit < g; ++bit)
          if (mask & (std::size_t{1} << bit)) {
            a0 += finite[lo + bit].h0;
            a1 += finite[lo + bit].h1;
            accept[finite[lo + bit].index] = 1;
          }
        emit(a0, a1, accept);
      }
    } else {
      if (cap_hit) *cap_hit = true;
      std::vector<std::size_t> order(g);
      std::iota(order.begin(), order.end(), lo);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return finite[a].h0 > finite[b].h0; });
      double a0 = base_h0, a1 = base_h1;
      std::vector<std::uint8_t> accept = base_accept;
      for (std::size_t idx : order) {
        a0 += finite[idx].h0;
        a1 += finite[idx].h1;
        accept[finite[idx].index] = 1;
        emit(a0, a1, accept);
      }
    }
    for (std::size_t idx = lo; idx < hi; ++idx) {
      base_h0 += finite[idx].h0;
      base_h1 += finite[idx].h1;
      base_accept[finite[idx].index] = 1;
    }
  }

  // Pareto filter: keep minimal type2 per nondecreasing type1
  std::stable_sort(pts.begin(), pts.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
    if (a.type1 != b.type1) return a.type1 < b.type1;
    return a.type2 < b.type2;
  });
  std::vector<FrontierPoint> out;
  double best2 = std::numeric_limits<double>::infinity();
  for (auto& p : pts) {
    if (p.type2 < best2 - 1e-15) {
      best2 = p.type2;
      out.push_back(std::move(p));
    }
  }
  return out;
}

struct EncoderTables {
  std::size_t sxn, syn, szn;
  std::vector<double> pxn, pyn, pzn;
  std::vector<double> relay_h0;  // N1 x syn
  std::vector<double> relay_h1;
  std::vector<double> recv_h0;  // N2 x szn
  std::vector<double> recv_h1;
};

EncoderTables encoder_tables(const std::vector<std::uint32_t>& f1,
                             const std::vector<std::uint32_t>& f2, std::uint32_t n1,
                             std::uint32_t n2, const TwoHopSource& s, int n) {
  EncoderTables t;
  std::size_t sx = s.x_axis().size(), sy = s.y_axis().size(), sz = s.z_axis().size();
  t.sxn = pow_size(sx, n);
  t.syn = pow_size(sy, n);
  t.szn = pow_size(sz, n);
  if (t.sxn * t.syn > kExactCellBudget || std::size_t{n2} * t.szn > kExactCellBudget)
    throw BudgetError("oracle enumeration exceeds the cell budget");
  t.pxn = seq_probs(s.p_x().mass(), n);
  t.pyn = seq_probs(s.p_y().mass(), n);
  t.pzn = seq_probs(s.p_z().mass(), n);

  const std::vector<double>& pxy = s.p_xy().mass();
  t.relay_h0.assign(std::size_t{n1} * t.syn, 0.0);
  for (std::size_t xr = 0; xr < t.sxn; ++xr) {
    std::vector<std::size_t> xs = unrank_seq(xr, sx, n);
    for (std::size_t yr = 0; yr < t.syn; ++yr) {
      std::vector<std::size_t> ys = unrank_seq(yr, sy, n);
      double prod = 1.0;
      for (int i = 0; i < n; ++i) prod *= pxy[xs[i] * sy + ys[i]];
      t.relay_h0[std::size_t{f1[xr]} * t.syn + yr] += prod;
    }
  }
  std::vector<double> pbar_m1(n1, 0.0);
  for (std::size_t xr = 0; xr < t.sxn; ++xr) pbar_m1[f1[xr]] += t.pxn[xr];
  t.relay_h1.assign(std::size_t{n1} * t.syn, 0.0);
  for (std::size_t m1 = 0; m1 < n1; ++m1)
    for (std::size_t yr = 0; yr < t.syn; ++yr)
      t.relay_h1[m1 * t.syn + yr] = pbar_m1[m1] * t.pyn[yr];

  t.recv_h0.assign(std::size_t{n2} * t.szn, 0.0);
  for (std::size_t yr = 0; yr < t.syn; ++yr) {
    std::vector<std::size_t> ys = unrank_seq(yr, sy, n);
    std::vector<double> zl{1.0};
    for (std::size_t y : ys) {
      std::vector<double> next(zl.size() * sz);
      for (std::size_t j = 0; j < zl.size(); ++j)
        for (std::size_t z = 0; z < sz; ++z) next[j * sz + z] = zl[j] * s.z_given_y().at(y, z);
      zl = std::move(next);
    }
    for (std::size_t m1 = 0; m1 < n1; ++m1) {
      double mass = t.relay_h0[m1 * t.syn + yr];
      if (mass == 0.0) continue;
      std::size_t m2 = f2[m1 * t.syn + yr];
      for (std::size_t zr = 0; zr < t.szn; ++zr) t.recv_h0[m2 * t.szn + zr] += mass * zl[zr];
    }
  }
  std::vector<double> pbar_m2(n2, 0.0);
  for (std::size_t m1 = 0; m1 < n1; ++m1)
    for (std::size_t yr = 0; yr < t.syn; ++yr)
      pbar_m2[f2[m1 * t.syn + yr]] += pbar_m1[m1] * t.pyn[yr];
  t.recv_h1.assign(std::size_t{n2} * t.szn, 0.0);
  for (std::size_t m2 = 0; m2 < n2; ++m2)
    for (std::size_t zr = 0; zr < t.szn; ++zr) t.recv_h1[m2 * t.szn + zr] = pbar_m2[m2] * t.pzn[zr];
  return t;
}

std::vector<std::vector<std::uint32_t>> all_permutations(std::uint32_t n) {
  std::vector<std::uint32_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<std::uint32_t>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

}  // namespace

Frontiers np_frontier(const std::vector<std::uint32_t>& f1, const std::vector<std::uint32_t>& f2,
                      std::uint32_t N1, std::uint32_t N2, const TwoHopSource& s, int n) {
  EncoderTables t = encoder_tables(f1, f2, N1, N2, s, n);
  Frontiers fr;
  fr.relay = np_sweep(t.relay_h0, t.relay_h1, &fr.tie_cap_hit);
  fr.receiver = np_sweep(t.recv_h0, t.recv_h1, &fr.tie_cap_hit);
  return fr;
}

OracleSummary exhaustive_search(
    const TwoHopSource& s, int n, std::uint32_t N1, std::uint32_t N2, double eps1, double eps2,
    const TradeoffWeights& w, double gamma, bool run_ledger,
    const std::function<void(const TwoHopCode&, const ErrorProfile&)>& on_code) {
  std::size_t sxn = pow_size(s.x_axis().size(), n);
  std::size_t syn = pow_size(s.y_axis().size(), n);
  double pair_count = std::pow(double(N1), double(sxn)) *
                      std::pow(double(N2), double(N1) * double(syn));
  if (pair_count > 1e8)
    throw BudgetError("encoder space too large for exhaustive search; sample instead");

  OracleSummary sum;
  sum.best_lhs = std::numeric_limits<double>::infinity();
  auto perms1 = all_permutations(N1);
  auto perms2 = all_permutations(N2);

  std::size_t f1_total = 1;
  for (std::size_t i = 0; i < sxn; ++i) f1_total *= N1;
  std::size_t f2_total = 1;
  for (std::size_t i = 0; i < std::size_t{N1} * syn; ++i) f2_total *= N2;

  std::vector<std::uint32_t> f1(sxn), f2(std::size_t{N1} * syn);
  for (std::size_t c1 = 0; c1 < f1_total; ++c1) {
    std::size_t rem = c1;
    for (std::size_t i = sxn; i-- > 0;) {
      f1[i] = rem % N1;
      rem /= N1;
    }
    // canonical representative under relay-message relabeling
    std::vector<const std::vector<std::uint32_t>*> stab;
    bool canonical = true;
    for (const auto& p : perms1) {
      bool less = false, equal = true;
      for (std::size_t i = 0; i < sxn && !less; ++i) {
        if (p[f1[i]] < f1[i]) less = true;
        if (p[f1[i]] != f1[i]) equal = false;
      }
      if (less) {
        canonical = false;
        break;
      }
      if (equal) stab.push_back(&p);
    }
    if (!canonical) continue;

    for (std::size_t c2 = 0; c2 < f2_total; ++c2) {
      rem = c2;
      for (std::size_t i = f2.size(); i-- > 0;) {
        f2[i] = rem % N2;
        rem /= N2;
      }
      // canonical under the f1 stabilizer and receiver-message relabeling
      bool canon2 = true;
      for (const auto* p1 : stab) {
        for (const auto& p2 : perms2) {
          for (std::size_t m1 = 0; m1 < N1 && canon2; ++m1) {
            // row m1 of the transformed table comes from row p1^{-1}(m1)
            std::size_t src = 0;
            for (std::size_t j = 0; j < N1; ++j)
              if ((*p1)[j] == m1) src = j;
            for (std::size_t yr = 0; yr < syn; ++yr) {
              std::uint32_t tv = p2[f2[src * syn + yr]];
              if (tv < f2[m1 * syn + yr]) {
                canon2 = false;
                break;
              }
              if (tv > f2[m1 * syn + yr]) {
                m1 = N1;  // transformed is lex-greater, next permutation
                break;
              }
            }
          }
          if (!canon2) break;
        }
        if (!canon2) break;
      }
      if (!canon2) continue;
      ++sum.encoder_pairs;

      Frontiers fr = np_frontier(f1, f2, N1, N2, s, n);
      sum.tie_cap_hit = sum.tie_cap_hit || fr.tie_cap_hit;

      std::vector<const FrontierPoint*> relay_ok, recv_ok;
      for (const auto& p : fr.relay)
        if (p.type1 <= eps1 + 1e-12) relay_ok.push_back(&p);
      for (const auto& p : fr.receiver)
        if (p.type1 <= eps2 + 1e-12) recv_ok.push_back(&p);
      if (relay_ok.empty() || recv_ok.empty()) continue;

      auto best_relay = *std::min_element(
          relay_ok.begin(), relay_ok.end(),
          [](const FrontierPoint* a, const FrontierPoint* b) { return a->type2 < b->type2; });
      auto best_recv = *std::min_element(
          recv_ok.begin(), recv_ok.end(),
          [](const FrontierPoint* a, const FrontierPoint* b) { return a->type2 < b->type2; });
      ErrorProfile best_prof;
      best_prof.beta1 = best_relay->type1;
      best_prof.beta2 = best_relay->type2;
      best_prof.eta1 = best_recv->type1;
      best_prof.eta2 = best_recv->type2;
      double lhs = weighted_lhs(best_prof, N1, N2, w);
      if (lhs < sum.best_lhs) {
        sum.best_lhs = lhs;
        sum.best_found = true;
        TwoHopCode code;
        code.n = n;
        code.N1 = N1;
        code.N2 = N2;
        code.f1 = f1;
        code.f2 = f2;
        code.g1.resize(f2.size());
        for (std::size_t i = 0; i < f2.size(); ++i) code.g1[i] = best_relay->accept[i] ? 0 : 1;
        code.g2.resize(best_recv->accept.size());
        for (std::size_t i = 0; i < code.g2.size(); ++i)
          code.g2[i] = best_recv->accept[i] ? 0 : 1;
        sum.best_code = code;
      }

      if (!run_ledger && !on_code) continue;
      for (const auto* rp : relay_ok) {
        for (const auto* gp : recv_ok) {
          TwoHopCode code;
          code.n = n;
          code.N1 = N1;
          code.N2 = N2;
          code.f1 = f1;
          code.f2 = f2;
          code.g1.resize(f2.size());
          for (std::size_t i = 0; i < f2.size(); ++i) code.g1[i] = rp->accept[i] ? 0 : 1;
          code.g2.resize(gp->accept.size());
          for (std::size_t i = 0; i < code.g2.size(); ++i) code.g2[i] = gp->accept[i] ? 0 : 1;
          ++sum.codes_checked;
          ErrorProfile prof;
          prof.beta1 = rp->type1;
          prof.beta2 = rp->type2;
          prof.eta1 = gp->type1;
          prof.eta2 = gp->type2;
          if (on_code) on_code(code, prof);
          if (run_ledger) {
            try {
              ChainLedger led = verify_code(code, s, eps1, eps2, w, gamma);
              sum.ledger_entries += led.entries.size();
              sum.passes += led.count(LedgerEntry::Status::pass);
              sum.fails += led.count(LedgerEntry::Status::fail);
              sum.vacuous += led.count(LedgerEntry::Status::vacuous);
              sum.premise_failed += led.count(LedgerEntry::Status::premise_failed);
            } catch (const std::domain_error&) {
              ++sum.premise_failed;
            }
          }
        }
      }
    }
  }
  return sum;
}

}  // namespace twohop
