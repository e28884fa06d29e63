#include "twohop/ledger.hpp"

#include <sstream>

#include "json.hpp"

namespace twohop {

LedgerEntry LedgerEntry::check(std::string name, double lhs, double rhs, double tol) {
  LedgerEntry e;
  e.name = std::move(name);
  e.lhs = lhs;
  e.rhs = rhs;
  e.margin = rhs - lhs;
  e.status = e.margin >= -tol ? Status::pass : Status::fail;
  return e;
}

LedgerEntry LedgerEntry::vacuous(std::string name, std::string note) {
  LedgerEntry e;
  e.name = std::move(name);
  e.status = Status::vacuous;
  e.note = std::move(note);
  return e;
}

LedgerEntry LedgerEntry::premise_failed(std::string name, std::string note) {
  LedgerEntry e;
  e.name = std::move(name);
  e.status = Status::premise_failed;
  e.note = std::move(note);
  return e;
}

const char* to_string(LedgerEntry::Status s) {
  switch (s) {
    case LedgerEntry::Status::pass: return "pass";
    case LedgerEntry::Status::fail: return "fail";
    case LedgerEntry::Status::vacuous: return "vacuous";
    case LedgerEntry::Status::premise_failed: return "premise-failed";
  }
  return "?";
}

std::size_t ChainLedger::count(LedgerEntry::Status s) const {
  std::size_t n = 0;
  for (const auto& e : entries)
    if (e.status == s) ++n;
  return n;
}

std::string ChainLedger::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json je;
    je["name"] = e.name;
    je["lhs"] = e.lhs;
    je["rhs"] = e.rhs;
    je["margin"] = e.margin;
    je["status"] = to_string(e.status);
    if (!e.note.empty()) je["note"] = e.note;
    arr.push_back(je);
  }
  return arr.dump(2);
}

std::string ChainLedger::to_table() const {
  std::ostringstream os;
  os << "name\tlhs\trhs\tmargin\tstatus\n";
  os.precision(12);
  for (const auto& e : entries) {
    os << e.name << '\t' << e.lhs << '\t' << e.rhs << '\t' << e.margin << '\t'
       << to_string(e.status);
    if (!e.note.empty()) os << '\t' << e.note;
    os << '\n';
  }
  return os.str();
}

}  // namespace twohop
