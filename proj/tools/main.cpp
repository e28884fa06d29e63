// Command-line surface: region computation, proof-chain verification,
// scheme simulation and exhaustive oracle runs.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "twohop/code_model.hpp"
#include "twohop/converse_lab.hpp"
#include "twohop/oracle.hpp"
#include "twohop/schemes.hpp"
#include "twohop/single_letter.hpp"
#include "twohop/source.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitVerification = 3;
constexpr int kExitBudget = 4;

std::string fmt(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(12);
  os << v;
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << text;
}

twohop::TradeoffWeights parse_weights(const std::string& spec) {
  twohop::TradeoffWeights w;
  char comma1 = 0, comma2 = 0;
  std::istringstream in(spec);
  in.imbue(std::locale::classic());
  if (!(in >> w.b >> comma1 >> w.c >> comma2 >> w.d) || comma1 != ',' || comma2 != ',')
    throw std::invalid_argument("expected weights as \"b,c,d\": " + spec);
  if (w.b < 0 || w.c < 0 || w.d < 0) throw std::invalid_argument("weights must be nonnegative");
  return w;
}

std::vector<int> parse_n_list(const std::string& spec) {
  std::vector<int> out;
  std::istringstream in(spec);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    std::size_t dash = tok.find('-');
    if (dash != std::string::npos && dash > 0) {
      int lo = std::stoi(tok.substr(0, dash));
      int hi = std::stoi(tok.substr(dash + 1));
      for (int n = lo; n <= hi; ++n) out.push_back(n);
    } else {
      out.push_back(std::stoi(tok));
    }
  }
  if (out.empty()) throw std::invalid_argument("empty n-list");
  for (int n : out)
    if (n < 1) throw std::invalid_argument("blocklengths must be >= 1");
  return out;
}

int default_threads() {
  if (const char* env = std::getenv("TWOHOP_THREADS")) {
    int t = std::atoi(env);
    if (t > 0) return t;
  }
  return 1;
}

struct RegionOpts {
  std::string source_path, out_path, witness_dir;
  std::vector<std::string> weights;
  std::size_t u_extra = 1, v_extra = 1;
  twohop::SolverConfig cfg;
};

int run_region(const RegionOpts& o) {
  twohop::TwoHopSource s = twohop::TwoHopSource::load(o.source_path);
  std::vector<twohop::TradeoffWeights> grid;
  if (o.weights.empty()) {
    grid = twohop::default_weight_grid();
  } else {
    for (const auto& spec : o.weights) grid.push_back(parse_weights(spec));
  }
  twohop::CardBounds cards{o.u_extra, o.v_extra};

  std::string csv = "b,c,d,R_value,converged\n";
  std::size_t idx = 0;
  for (const auto& w : grid) {
    twohop::SolveResult r = twohop::solve_r(s, w, cards, o.cfg);
    csv += fmt(w.b) + "," + fmt(w.c) + "," + fmt(w.d) + "," + fmt(r.value) + "," +
           (r.converged ? "1" : "0") + "\n";
    if (!r.converged)
      std::cerr << "warning: solver did not converge at (" << fmt(w.b) << "," << fmt(w.c) << ","
                << fmt(w.d) << ")\n";
    if (!o.witness_dir.empty()) {
      nlohmann::json j;
      j["b"] = w.b;
      j["c"] = w.c;
      j["d"] = w.d;
      j["value"] = r.value;
      j["u_given_x"] = r.argmin.u_given_x.rows();
      j["v_given_y"] = r.argmin.v_given_y.rows();
      std::ofstream out(o.witness_dir + "/witness_" + std::to_string(idx) + ".json");
      out << j.dump(2) << "\n";
    }
    ++idx;
  }
  write_text(o.out_path, csv);
  return kExitOk;
}

struct VerifyOpts {
  std::string source_path, code_path, out_path;
  bool enumerate = false;
  int n = 1;
  std::uint32_t N1 = 2, N2 = 2;
  double eps1 = 0.2, eps2 = 0.2;
  std::string weights = "1,1,1";
  double gamma = 1.0;
};

int run_verify(const VerifyOpts& o) {
  twohop::TwoHopSource s = twohop::TwoHopSource::load(o.source_path);
  if (std::abs(o.eps1 + o.eps2 - 1.0) < 1e-12)
    throw std::domain_error("eps1 + eps2 = 1 is excluded");
  twohop::TradeoffWeights w = parse_weights(o.weights);

  if (o.enumerate) {
    twohop::OracleSummary sum =
        twohop::exhaustive_search(s, o.n, o.N1, o.N2, o.eps1, o.eps2, w, o.gamma, true);
    nlohmann::json j;
    j["encoder_pairs"] = sum.encoder_pairs;
    j["codes_checked"] = sum.codes_checked;
    j["ledger_entries"] = sum.ledger_entries;
    j["passes"] = sum.passes;
    j["fails"] = sum.fails;
    j["vacuous"] = sum.vacuous;
    j["premise_failed"] = sum.premise_failed;
    j["best_lhs"] = sum.best_lhs;
    j["tie_cap_hit"] = sum.tie_cap_hit;
    write_text(o.out_path, j.dump(2) + "\n");
    return sum.fails == 0 ? kExitOk : kExitVerification;
  }

  twohop::TwoHopCode code = twohop::TwoHopCode::load(o.code_path);
  twohop::ChainLedger led = twohop::verify_code(code, s, o.eps1, o.eps2, w, o.gamma);
  write_text(o.out_path, led.to_json() + "\n");
  if (o.out_path.empty() || o.out_path == "-") {
    // table goes to stderr so the JSON stream stays machine-readable
    std::cerr << led.to_table();
  }
  return led.any_fail() ? kExitVerification : kExitOk;
}

struct SimulateOpts {
  std::string source_path, out_path, scheme = "quantize", n_list = "4-8";
  double eps1 = 0.6, eps2 = 0.6;
  double margin = 0.1;
  std::uint64_t seed = 0;
  int threads = 1;
};

int run_simulate(const SimulateOpts& o) {
  twohop::TwoHopSource s = twohop::TwoHopSource::load(o.source_path);
  std::vector<int> n_list = parse_n_list(o.n_list);
  twohop::RateMargins margins{o.margin, o.margin};
  twohop::AuxCoupling aux = twohop::AuxCoupling::copy(s);

  std::function<twohop::TwoHopCode(int)> builder;
  if (o.scheme == "quantize") {
    builder = [&](int n) { return twohop::build_quantize_bin(s, aux, n, margins, o.seed); };
  } else if (o.scheme == "timeshare") {
    if (o.eps1 + o.eps2 <= 1.0)
      throw std::domain_error("timeshare requires eps1 + eps2 > 1");
    builder = [&](int n) {
      twohop::TwoHopCode part = twohop::build_quantize_bin(s, aux, n, margins, o.seed);
      auto split = twohop::default_x_partition(s, n, o.eps1, o.eps2);
      return twohop::build_timeshare(part, part, split, s, o.eps1, o.eps2);
    };
  } else {
    throw std::invalid_argument("unknown scheme: " + o.scheme);
  }

  std::vector<twohop::ScanRow> rows = twohop::exponent_scan(builder, s, n_list, o.threads);
  std::string csv = "n,relay_exponent,receiver_exponent,beta1,eta1,degenerate\n";
  for (const auto& r : rows)
    csv += std::to_string(r.n) + "," + fmt(r.relay_exponent) + "," + fmt(r.receiver_exponent) +
           "," + fmt(r.beta1) + "," + fmt(r.eta1) + "," + (r.degenerate ? "1" : "0") + "\n";
  write_text(o.out_path, csv);
  return kExitOk;
}

struct OracleOpts {
  std::string source_path, out_code, out_summary;
  int n = 1;
  std::uint32_t N1 = 2, N2 = 2;
  double eps1 = 0.2, eps2 = 0.2;
  std::string weights = "1,1,1";
  double gamma = 1.0;
  bool ledger = false;
};

int run_oracle(const OracleOpts& o) {
  twohop::TwoHopSource s = twohop::TwoHopSource::load(o.source_path);
  if (std::abs(o.eps1 + o.eps2 - 1.0) < 1e-12)
    throw std::domain_error("eps1 + eps2 = 1 is excluded");
  twohop::TradeoffWeights w = parse_weights(o.weights);
  twohop::OracleSummary sum =
      twohop::exhaustive_search(s, o.n, o.N1, o.N2, o.eps1, o.eps2, w, o.gamma, o.ledger);

  nlohmann::json j;
  j["encoder_pairs"] = sum.encoder_pairs;
  j["codes_checked"] = sum.codes_checked;
  j["ledger_entries"] = sum.ledger_entries;
  j["passes"] = sum.passes;
  j["fails"] = sum.fails;
  j["vacuous"] = sum.vacuous;
  j["premise_failed"] = sum.premise_failed;
  j["best_lhs"] = sum.best_lhs;
  j["best_found"] = sum.best_found;
  j["tie_cap_hit"] = sum.tie_cap_hit;
  write_text(o.out_summary, j.dump(2) + "\n");
  if (sum.best_found && !o.out_code.empty()) write_text(o.out_code, sum.best_code.to_json() + "\n");
  if (o.ledger && sum.fails > 0) return kExitVerification;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-hop hypothesis testing: region solver, code auditor, simulator, oracle"};
  app.require_subcommand(1);

  RegionOpts ro;
  ro.cfg.threads = default_threads();
  auto* region = app.add_subcommand("region", "single-letter region values over a weight grid");
  region->add_option("source", ro.source_path, "source JSON file")->required();
  region->add_option("--weights", ro.weights, "weight triple \"b,c,d\" (repeatable; default grid)");
  region->add_option("--out", ro.out_path, "output CSV path (default stdout)");
  region->add_option("--witness-dir", ro.witness_dir, "directory for argmin kernel JSONs");
  region->add_option("--u-extra", ro.u_extra, "aux cardinality slack for U");
  region->add_option("--v-extra", ro.v_extra, "aux cardinality slack for V");
  region->add_option("--restarts", ro.cfg.restarts, "solver restarts");
  region->add_option("--seed", ro.cfg.seed, "solver seed");
  region->add_option("--threads", ro.cfg.threads, "worker threads");
  region->add_flag("--grid-check", ro.cfg.grid_cross_check, "simplex-grid cross-check");

  VerifyOpts vo;
  auto* verify = app.add_subcommand("verify", "audit a code against the converse inequality chain");
  verify->add_option("source", vo.source_path, "source JSON file")->required();
  verify->add_option("--code", vo.code_path, "code JSON file");
  verify->add_flag("--enumerate", vo.enumerate, "audit every feasible code exhaustively");
  verify->add_option("--n", vo.n, "blocklength (enumerate mode)");
  verify->add_option("--N1", vo.N1, "relay message count (enumerate mode)");
  verify->add_option("--N2", vo.N2, "receiver message count (enumerate mode)");
  verify->add_option("--eps1", vo.eps1, "relay type-I budget");
  verify->add_option("--eps2", vo.eps2, "receiver type-I budget");
  verify->add_option("--weights", vo.weights, "weight triple \"b,c,d\"");
  verify->add_option("--gamma", vo.gamma, "multi-letter slack weight");
  verify->add_option("--out", vo.out_path, "ledger JSON path (default stdout)");

  SimulateOpts so;
  so.threads = default_threads();
  auto* simulate = app.add_subcommand("simulate", "exact exponent scan of a coding scheme");
  simulate->add_option("source", so.source_path, "source JSON file")->required();
  simulate->add_option("--scheme", so.scheme, "quantize | timeshare");
  simulate->add_option("--n-list", so.n_list, "blocklengths, e.g. \"4-12\" or \"4,6,8\"");
  simulate->add_option("--eps1", so.eps1, "relay type-I budget (timeshare)");
  simulate->add_option("--eps2", so.eps2, "receiver type-I budget (timeshare)");
  simulate->add_option("--margin", so.margin, "rate margin in nats");
  simulate->add_option("--seed", so.seed, "codebook seed");
  simulate->add_option("--threads", so.threads, "worker threads");
  simulate->add_option("--out", so.out_path, "output CSV path (default stdout)");

  OracleOpts oo;
  auto* oracle = app.add_subcommand("oracle", "exhaustive code search with frontier decoders");
  oracle->add_option("source", oo.source_path, "source JSON file")->required();
  oracle->add_option("--n", oo.n, "blocklength");
  oracle->add_option("--N1", oo.N1, "relay message count");
  oracle->add_option("--N2", oo.N2, "receiver message count");
  oracle->add_option("--eps1", oo.eps1, "relay type-I budget");
  oracle->add_option("--eps2", oo.eps2, "receiver type-I budget");
  oracle->add_option("--weights", oo.weights, "weight triple \"b,c,d\"");
  oracle->add_option("--gamma", oo.gamma, "multi-letter slack weight");
  oracle->add_flag("--ledger", oo.ledger, "audit every feasible code");
  oracle->add_option("--out-code", oo.out_code, "best-code JSON path");
  oracle->add_option("--out-summary", oo.out_summary, "summary JSON path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*region) return run_region(ro);
    if (*verify) return run_verify(vo);
    if (*simulate) return run_simulate(so);
    if (*oracle) return run_oracle(oo);
  } catch (const twohop::BudgetError& e) {
    std::cerr << "resource guard: " << e.what() << "\n";
    return kExitBudget;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::domain_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
