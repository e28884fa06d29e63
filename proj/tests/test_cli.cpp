#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
// End-to-end tests that drive the installed CLI binary through std::system.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "twohop/code_model.hpp"
#include "twohop/source.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = TWOHOP_CLI_PATH;
const std::string kGolden = TWOHOP_GOLDEN_DIR;

fs::path work_dir() {
  fs::path d = fs::temp_directory_path() / "twohop_cli_test";
  fs::create_directories(d);
  return d;
}

int run(const std::string& args) {
  std::string cmd = "\"" + kCli + "\" " + args + " 2>/dev/null";
  int rc = std::system(cmd.c_str());
#ifdef _WIN32
  return rc;
#else
  return WEXITSTATUS(rc);
#endif
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string source_file() {
  fs::path p = work_dir() / "dsbs.json";
  std::ofstream out(p);
  out << twohop::TwoHopSource::dsbs(0.1, 0.1).to_json() << "\n";
  return p.string();
}

}  // namespace

TEST_CASE("region subcommand reproduces the closed-form corner") {
  std::string src = source_file();
  fs::path out = work_dir() / "region.csv";
  int rc = run("region " + src + " --weights 0,1,0 --restarts 8 --out " + out.string());
  CHECK(rc == 0);
  std::string csv = slurp(out);
  std::istringstream in(csv);
  std::string header, row;
  REQUIRE(std::getline(in, header));
  CHECK(header == "b,c,d,R_value,converged");
  REQUIRE(std::getline(in, row));
  // b,c,d,value,converged
  double b, c, d, v;
  char comma;
  std::istringstream rin(row);
  rin >> b >> comma >> c >> comma >> d >> comma >> v;
  // -(1+c) I(X;Y) - c I(Y;Z) at c = 1 for the symmetric binary source
  CHECK(v == doctest::Approx(-1.104193).epsilon(1e-3));
}

TEST_CASE("missing input files exit with the input code") {
  CHECK(run("region /nonexistent/source.json") == 2);
  std::string src = source_file();
  CHECK(run("verify " + src + " --code /nonexistent/code.json") == 2);
}

TEST_CASE("degenerate epsilon budget is refused") {
  std::string src = source_file();
  CHECK(run("verify " + src + " --enumerate --n 1 --eps1 0.5 --eps2 0.5") == 2);
  CHECK(run("simulate " + src + " --scheme unknown") == 2);
}

TEST_CASE("exhaustive verify audit is clean at n = 1") {
  std::string src = source_file();
  fs::path out = work_dir() / "audit.json";
  int rc = run("verify " + src + " --enumerate --n 1 --N1 2 --N2 2 --eps1 0.2 --eps2 0.2 --out " +
               out.string());
  CHECK(rc == 0);
  std::string j = slurp(out);
  CHECK(j.find("\"fails\": 0") != std::string::npos);
  CHECK(j.find("\"premise_failed\": 0") != std::string::npos);
}

TEST_CASE("single code verify writes a ledger") {
  std::string src = source_file();
  fs::path code = work_dir() / "code.json";
  {
    twohop::TwoHopCode c;
    c.n = 1;
    c.N1 = 2;
    c.N2 = 2;
    c.f1 = {0, 1};
    c.f2 = {0, 0, 1, 1};
    c.g1 = {0, 1, 1, 0};
    c.g2 = {0, 1, 1, 0};
    std::ofstream out(code);
    out << c.to_json() << "\n";
  }
  fs::path out = work_dir() / "ledger.json";
  int rc = run("verify " + src + " --code " + code.string() + " --eps1 0.2 --eps2 0.2 --out " +
               out.string());
  CHECK(rc == 0);
  std::string j = slurp(out);
  CHECK(j.find("\"name\"") != std::string::npos);
  CHECK(j.find("\"fail\"") == std::string::npos);
}

TEST_CASE("simulate output is deterministic and matches the golden file") {
  std::string src = source_file();
  fs::path a = work_dir() / "scan_a.csv", b = work_dir() / "scan_b.csv";
  CHECK(run("simulate " + src + " --scheme quantize --n-list 4-6 --seed 0 --out " + a.string()) ==
        0);
  CHECK(run("simulate " + src + " --scheme quantize --n-list 4-6 --seed 0 --out " + b.string()) ==
        0);
  std::string sa = slurp(a);
  CHECK(sa == slurp(b));
  CHECK(sa.substr(0, sa.find('\n')) == "n,relay_exponent,receiver_exponent,beta1,eta1,degenerate");
  // byte-identical to the checked-in reference run
  CHECK(sa == slurp(fs::path(kGolden) / "simulate_quantize_n4_6_seed0.csv"));
}

TEST_CASE("oversized runs exit with the resource code") {
  std::string src = source_file();
  CHECK(run("simulate " + src + " --scheme quantize --n-list 14") == 4);
  CHECK(run("oracle " + src + " --n 3 --N1 4 --N2 4") == 4);
}

TEST_CASE("oracle emits the best code") {
  std::string src = source_file();
  fs::path sum = work_dir() / "oracle.json", code = work_dir() / "best.json";
  int rc = run("oracle " + src + " --n 1 --N1 2 --N2 2 --out-summary " + sum.string() +
               " --out-code " + code.string());
  CHECK(rc == 0);
  CHECK(slurp(sum).find("\"best_found\": true") != std::string::npos);
  twohop::TwoHopCode best = twohop::TwoHopCode::load(code.string());
  best.validate(twohop::TwoHopSource::dsbs(0.1, 0.1));
}
