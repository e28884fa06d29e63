#include "twohop/code_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <future>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"

namespace twohop {

std::size_t pow_size(std::size_t base, int n) {
  std::size_t r = 1;
  for (int i = 0; i < n; ++i) {
    if (r > kExactCellBudget * 64) throw BudgetError("sequence space overflow");
    r *= base;
  }
  return r;
}

std::vector<std::size_t> unrank_seq(std::size_t index, std::size_t base, int n) {
  std::vector<std::size_t> seq(n);
  for (int i = n - 1; i >= 0; --i) {
    seq[i] = index % base;
    index /= base;
  }
  return seq;
}

std::size_t rank_seq(const std::vector<std::size_t>& seq, std::size_t base) {
  std::size_t r = 0;
  for (std::size_t d : seq) r = r * base + d;
  return r;
}

std::vector<double> seq_probs(const std::vector<double>& single, int n) {
  std::vector<double> out{1.0};
  for (int i = 0; i < n; ++i) {
    std::vector<double> next(out.size() * single.size());
    for (std::size_t j = 0; j < out.size(); ++j)
      for (std::size_t s = 0; s < single.size(); ++s)
        next[j * single.size() + s] = out[j] * single[s];
    out = std::move(next);
  }
  return out;
}

void TwoHopCode::validate(const TwoHopSource& s) const {
  std::size_t sxn = pow_size(s.x_axis().size(), n);
  std::size_t syn = pow_size(s.y_axis().size(), n);
  std::size_t szn = pow_size(s.z_axis().size(), n);
  if (n < 1) throw std::invalid_argument("code: n must be >= 1");
  if (N1 < 1 || N2 < 1) throw std::invalid_argument("code: N1, N2 must be >= 1");
  if (f1.size() != sxn) throw std::invalid_argument("code: f1 table size mismatch");
  if (f2.size() != std::size_t{N1} * syn) throw std::invalid_argument("code: f2 table size mismatch");
  if (g1.size() != std::size_t{N1} * syn) throw std::invalid_argument("code: g1 table size mismatch");
  if (g2.size() != std::size_t{N2} * szn) throw std::invalid_argument("code: g2 table size mismatch");
  for (auto v : f1)
    if (v >= N1) throw std::invalid_argument("code: f1 value out of range");
  for (auto v : f2)
    if (v >= N2) throw std::invalid_argument("code: f2 value out of range");
  for (auto v : g1)
    if (v > 1) throw std::invalid_argument("code: g1 value not a decision");
  for (auto v : g2)
    if (v > 1) throw std::invalid_argument("code: g2 value not a decision");
}

namespace {

std::vector<Label> index_labels(const char* prefix, std::size_t count) {
  std::vector<Label> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// P^n_XY(f1^{-1}(m1), y^n) for every (m1, y^n), by depth-first product over
/// coordinates (fixed accumulation order, so the sum is reproducible).
std::vector<double> relay_h0_table(const TwoHopCode& code, const TwoHopSource& s) {
  std::size_t sx = s.x_axis().size(), sy = s.y_axis().size();
  std::size_t syn = pow_size(sy, code.n);
  const std::vector<double>& pxy = s.p_xy().mass();
  std::vector<double> w(std::size_t{code.N1} * syn, 0.0);
  std::function<void(int, std::size_t, std::size_t, double)> rec =
      [&](int i, std::size_t xr, std::size_t yr, double prod) {
        if (prod == 0.0) return;
        if (i == code.n) {
          w[std::size_t{code.f1[xr]} * syn + yr] += prod;
          return;
        }
        for (std::size_t x = 0; x < sx; ++x)
          for (std::size_t y = 0; y < sy; ++y)
            rec(i + 1, xr * sx + x, yr * sy + y, prod * pxy[x * sy + y]);
      };
  rec(0, 0, 0, 1.0);
  return w;
}

/// Conditional sequence law P^n_{Z|Y}(. | y^n), dense over z^n.
std::vector<double> z_law_given_y(const TwoHopSource& s, const std::vector<std::size_t>& yseq) {
  const Kernel& zy = s.z_given_y();
  std::size_t sz = s.z_axis().size();
  std::vector<double> out{1.0};
  for (std::size_t y : yseq) {
    std::vector<double> next(out.size() * sz);
    for (std::size_t j = 0; j < out.size(); ++j)
      for (std::size_t z = 0; z < sz; ++z) next[j * sz + z] = out[j] * zy.at(y, z);
    out = std::move(next);
  }
  return out;
}

struct LawTables {
  std::size_t sxn, syn, szn;
  std::vector<double> pxn, pyn, pzn;
  std::vector<double> w;        // N1 x syn, H0 law of (M1, Y^n)
  std::vector<double> pbar_m1;  // H1 M1 marginal
  std::vector<double> pbar_m2;  // H1 M2 marginal
};

LawTables base_tables(const TwoHopCode& code, const TwoHopSource& s) {
  code.validate(s);
  LawTables t;
  t.sxn = pow_size(s.x_axis().size(), code.n);
  t.syn = pow_size(s.y_axis().size(), code.n);
  t.szn = pow_size(s.z_axis().size(), code.n);
  if (t.sxn * t.syn > kExactCellBudget || std::size_t{code.N1} * t.syn > kExactCellBudget ||
      std::size_t{code.N2} * t.szn > kExactCellBudget)
    throw BudgetError("exact enumeration exceeds the 2^26 cell budget; use Monte Carlo mode");
  t.pxn = seq_probs(s.p_x().mass(), code.n);
  t.pyn = seq_probs(s.p_y().mass(), code.n);
  t.pzn = seq_probs(s.p_z().mass(), code.n);
  t.w = relay_h0_table(code, s);
  t.pbar_m1.assign(code.N1, 0.0);
  for (std::size_t xi = 0; xi < t.sxn; ++xi) t.pbar_m1[code.f1[xi]] += t.pxn[xi];
  t.pbar_m2.assign(code.N2, 0.0);
  for (std::size_t m1 = 0; m1 < code.N1; ++m1)
    for (std::size_t yi = 0; yi < t.syn; ++yi)
      t.pbar_m2[code.f2[m1 * t.syn + yi]] += t.pbar_m1[m1] * t.pyn[yi];
  return t;
}

constexpr std::size_t kYBlock = 1024;  // fixed reduction blocks, thread-count independent

double parallel_block_sum(std::size_t count, int threads,
                          const std::function<double(std::size_t, std::size_t)>& block_fn) {
  std::size_t nblocks = (count + kYBlock - 1) / kYBlock;
  std::vector<double> sums(nblocks, 0.0);
  auto run = [&](std::size_t b) {
    std::size_t lo = b * kYBlock, hi = std::min(count, lo + kYBlock);
    sums[b] = block_fn(lo, hi);
  };
  if (threads <= 1 || nblocks <= 1) {
    for (std::size_t b = 0; b < nblocks; ++b) run(b);
  } else {
    std::vector<std::future<void>> futs;
    std::size_t per = (nblocks + threads - 1) / static_cast<std::size_t>(threads);
    for (int tIdx = 0; tIdx < threads; ++tIdx) {
      std::size_t lo = tIdx * per, hi = std::min(nblocks, lo + per);
      if (lo >= hi) break;
      futs.push_back(std::async(std::launch::async, [&, lo, hi] {
        for (std::size_t b = lo; b < hi; ++b) run(b);
      }));
    }
    for (auto& f : futs) f.get();
  }
  double total = 0.0;
  for (double v : sums) total += v;  // index order
  return total;
}

}  // namespace

InducedLaw induced_laws(const TwoHopCode& code, const TwoHopSource& s) {
  LawTables t = base_tables(code, s);
  if (t.syn * t.szn > kExactCellBudget)
    throw BudgetError("exact enumeration exceeds the 2^26 cell budget; use Monte Carlo mode");

  Axis m1_axis{"M1", index_labels("m", code.N1)};
  Axis m2_axis{"M2", index_labels("m", code.N2)};
  Axis yn_axis{"Yn", index_labels("i", t.syn)};
  Axis zn_axis{"Zn", index_labels("i", t.szn)};

  std::vector<double> h1_m1y(std::size_t{code.N1} * t.syn);
  for (std::size_t m1 = 0; m1 < code.N1; ++m1)
    for (std::size_t yi = 0; yi < t.syn; ++yi)
      h1_m1y[m1 * t.syn + yi] = t.pbar_m1[m1] * t.pyn[yi];

  std::vector<double> h0_m2z(std::size_t{code.N2} * t.szn, 0.0);
  std::size_t sy = s.y_axis().size();
  for (std::size_t yi = 0; yi < t.syn; ++yi) {
    std::vector<double> zl = z_law_given_y(s, unrank_seq(yi, sy, code.n));
    for (std::size_t m1 = 0; m1 < code.N1; ++m1) {
      double mass = t.w[m1 * t.syn + yi];
      if (mass == 0.0) continue;
      std::size_t m2 = code.f2[m1 * t.syn + yi];
      for (std::size_t zi = 0; zi < t.szn; ++zi) h0_m2z[m2 * t.szn + zi] += mass * zl[zi];
    }
  }
  std::vector<double> h1_m2z(std::size_t{code.N2} * t.szn);
  for (std::size_t m2 = 0; m2 < code.N2; ++m2)
    for (std::size_t zi = 0; zi < t.szn; ++zi)
      h1_m2z[m2 * t.szn + zi] = t.pbar_m2[m2] * t.pzn[zi];

  return InducedLaw{JointPmf({m1_axis, yn_axis}, t.w), JointPmf({m1_axis, yn_axis}, h1_m1y),
                    JointPmf({m2_axis, zn_axis}, h0_m2z), JointPmf({m2_axis, zn_axis}, h1_m2z)};
}

ErrorProfile exact_errors(const TwoHopCode& code, const TwoHopSource& s, int threads) {
  LawTables t = base_tables(code, s);
  std::size_t sy = s.y_axis().size();

  double relay_reject_h0 = 0.0, relay_accept_h1 = 0.0;
  for (std::size_t m1 = 0; m1 < code.N1; ++m1)
    for (std::size_t yi = 0; yi < t.syn; ++yi) {
      if (code.g1[m1 * t.syn + yi]) {
        relay_reject_h0 += t.w[m1 * t.syn + yi];
      } else {
        relay_accept_h1 += t.pbar_m1[m1] * t.pyn[yi];
      }
    }

  // receiver, H0: stream over y^n, grouping messages that share f2(m1, y^n)
  double recv_accept_h0 = parallel_block_sum(t.syn, threads, [&](std::size_t lo, std::size_t hi) {
    double acc = 0.0;
    std::vector<std::pair<std::size_t, double>> groups;
    for (std::size_t yi = lo; yi < hi; ++yi) {
      groups.clear();
      for (std::size_t m1 = 0; m1 < code.N1; ++m1) {
        double mass = t.w[m1 * t.syn + yi];
        if (mass == 0.0) continue;
        std::size_t m2 = code.f2[m1 * t.syn + yi];
        bool merged = false;
        for (auto& g : groups)
          if (g.first == m2) {
            g.second += mass;
            merged = true;
            break;
          }
        if (!merged) groups.push_back({m2, mass});
      }
      if (groups.empty()) continue;
      std::vector<double> zl = z_law_given_y(s, unrank_seq(yi, sy, code.n));
      for (const auto& [m2, mass] : groups) {
        double acc_z = 0.0;
        for (std::size_t zi = 0; zi < t.szn; ++zi)
          if (!code.g2[m2 * t.szn + zi]) acc_z += zl[zi];
        acc += mass * acc_z;
      }
    }
    return acc;
  });

  double recv_accept_h1 = 0.0;
  for (std::size_t m2 = 0; m2 < code.N2; ++m2) {
    if (t.pbar_m2[m2] == 0.0) continue;
    double acc_z = 0.0;
    for (std::size_t zi = 0; zi < t.szn; ++zi)
      if (!code.g2[m2 * t.szn + zi]) acc_z += t.pzn[zi];
    recv_accept_h1 += t.pbar_m2[m2] * acc_z;
  }

  ErrorProfile p;
  p.mode = ErrorProfile::Mode::exact;
  p.beta1 = std::clamp(relay_reject_h0, 0.0, 1.0);
  p.beta2 = std::clamp(relay_accept_h1, 0.0, 1.0);
  p.eta1 = std::clamp(1.0 - recv_accept_h0, 0.0, 1.0);
  p.eta2 = std::clamp(recv_accept_h1, 0.0, 1.0);
  return p;
}

namespace {

struct Cdf {
  std::vector<double> cum;
  explicit Cdf(const std::vector<double>& p) : cum(p.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) cum[i] = (s += p[i]);
    cum.back() = 1.0;
  }
  std::size_t sample(double u) const {
    return std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
  }
};

ErrorProfile::Ci wilson(std::uint64_t hits, std::uint64_t m) {
  const double z = 1.959964;
  double phat = static_cast<double>(hits) / m;
  double z2m = z * z / m;
  double denom = 1.0 + z2m;
  double center = (phat + z2m / 2.0) / denom;
  double hw = z * std::sqrt(phat * (1.0 - phat) / m + z2m / (4.0 * m)) / denom;
  return {std::max(0.0, center - hw), std::min(1.0, center + hw)};
}

}  // namespace

ErrorProfile mc_errors(const TwoHopCode& code, const TwoHopSource& s, std::uint64_t n_samples,
                       std::uint64_t seed, int threads) {
  code.validate(s);
  if (n_samples < 1) throw std::invalid_argument("mc_errors: n_samples must be >= 1");
  std::size_t sy = s.y_axis().size();
  std::size_t syn = pow_size(sy, code.n);
  std::size_t szn = pow_size(s.z_axis().size(), code.n);

  Cdf cdf_xy(s.p_xy().mass());
  Cdf cdf_x(s.p_x().mass());
  Cdf cdf_y(s.p_y().mass());
  Cdf cdf_z(s.p_z().mass());
  std::vector<Cdf> cdf_z_given_y;
  for (std::size_t y = 0; y < sy; ++y) cdf_z_given_y.emplace_back(s.z_given_y().row(y).mass());

  struct Counts {
    std::uint64_t b1 = 0, b2 = 0, e1 = 0, e2 = 0;
  };
  constexpr int kStreams = 64;  // fixed sub-stream count, independent of thread count
  std::vector<Counts> per_stream(kStreams);

  auto run_stream = [&](int si) {
    std::uint64_t m = n_samples / kStreams + (static_cast<std::uint64_t>(si) < n_samples % kStreams);
    if (m == 0) return;
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(si) + 1);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Counts c;
    for (std::uint64_t k = 0; k < m; ++k) {
      // H0 sample
      std::size_t xr = 0, yr = 0, zr = 0;
      std::vector<std::size_t> ydig(code.n);
      for (int i = 0; i < code.n; ++i) {
        std::size_t xy = cdf_xy.sample(uni(rng));
        std::size_t x = xy / sy, y = xy % sy;
        xr = xr * s.x_axis().size() + x;
        yr = yr * sy + y;
        ydig[i] = y;
      }
      for (int i = 0; i < code.n; ++i)
        zr = zr * s.z_axis().size() + cdf_z_given_y[ydig[i]].sample(uni(rng));
      std::uint32_t m1 = code.f1[xr];
      if (code.g1[std::size_t{m1} * syn + yr]) ++c.b1;
      std::uint32_t m2 = code.f2[std::size_t{m1} * syn + yr];
      if (code.g2[std::size_t{m2} * szn + zr]) ++c.e1;
      // H1 sample
      xr = yr = zr = 0;
      for (int i = 0; i < code.n; ++i) {
        xr = xr * s.x_axis().size() + cdf_x.sample(uni(rng));
        yr = yr * sy + cdf_y.sample(uni(rng));
        zr = zr * s.z_axis().size() + cdf_z.sample(uni(rng));
      }
      m1 = code.f1[xr];
      if (!code.g1[std::size_t{m1} * syn + yr]) ++c.b2;
      m2 = code.f2[std::size_t{m1} * syn + yr];
      if (!code.g2[std::size_t{m2} * szn + zr]) ++c.e2;
    }
    per_stream[si] = c;
  };

  if (threads <= 1) {
    for (int si = 0; si < kStreams; ++si) run_stream(si);
  } else {
    std::vector<std::future<void>> futs;
    int per = (kStreams + threads - 1) / threads;
    for (int tIdx = 0; tIdx < threads; ++tIdx) {
      int lo = tIdx * per, hi = std::min(kStreams, lo + per);
      if (lo >= hi) break;
      futs.push_back(std::async(std::launch::async, [&, lo, hi] {
        for (int si = lo; si < hi; ++si) run_stream(si);
      }));
    }
    for (auto& f : futs) f.get();
  }

  Counts total;
  for (const Counts& c : per_stream) {
    total.b1 += c.b1;
    total.b2 += c.b2;
    total.e1 += c.e1;
    total.e2 += c.e2;
  }
  ErrorProfile p;
  p.mode = ErrorProfile::Mode::monte_carlo;
  p.samples = n_samples;
  p.beta1 = static_cast<double>(total.b1) / n_samples;
  p.beta2 = static_cast<double>(total.b2) / n_samples;
  p.eta1 = static_cast<double>(total.e1) / n_samples;
  p.eta2 = static_cast<double>(total.e2) / n_samples;
  p.ci = std::vector<ErrorProfile::Ci>{wilson(total.b1, n_samples), wilson(total.b2, n_samples),
                                       wilson(total.e1, n_samples), wilson(total.e2, n_samples)};
  return p;
}

double weighted_lhs(const ErrorProfile& p, std::uint32_t N1, std::uint32_t N2,
                    const TradeoffWeights& w) {
  if (p.beta2 <= 0.0 || p.eta2 <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(p.beta2) + w.b * std::log(double(N1)) + w.c * std::log(p.eta2) +
         w.d * std::log(double(N2));
}

TwoHopCode TwoHopCode::from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  TwoHopCode c;
  c.n = j.at("n").get<int>();
  c.N1 = j.at("N1").get<std::uint32_t>();
  c.N2 = j.at("N2").get<std::uint32_t>();
  c.f1 = j.at("f1").get<std::vector<std::uint32_t>>();
  auto nested32 = [](const nlohmann::json& arr, std::vector<std::uint32_t>& out) {
    for (const auto& row : arr)
      for (const auto& v : row) out.push_back(v.get<std::uint32_t>());
  };
  std::vector<std::uint32_t> tmp;
  nested32(j.at("f2"), c.f2);
  nested32(j.at("g1"), tmp);
  for (auto v : tmp) c.g1.push_back(static_cast<std::uint8_t>(v));
  tmp.clear();
  nested32(j.at("g2"), tmp);
  for (auto v : tmp) c.g2.push_back(static_cast<std::uint8_t>(v));
  return c;
}

TwoHopCode TwoHopCode::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open code file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string TwoHopCode::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["N1"] = N1;
  j["N2"] = N2;
  j["f1"] = f1;
  auto nest = [](const auto& flat, std::size_t rows) {
    nlohmann::json arr = nlohmann::json::array();
    std::size_t cols = flat.size() / rows;
    for (std::size_t r = 0; r < rows; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t cIdx = 0; cIdx < cols; ++cIdx) row.push_back(flat[r * cols + cIdx]);
      arr.push_back(row);
    }
    return arr;
  };
  j["f2"] = nest(f2, N1);
  j["g1"] = nest(g1, N1);
  j["g2"] = nest(g2, N2);
  return j.dump();
}

}  // namespace twohop
