#pragma once

#include <string>
#include <vector>

namespace twohop {

/// One verified inequality: lhs <= rhs with margin = rhs - lhs.
struct LedgerEntry {
  enum class Status { pass, fail, vacuous, premise_failed };

  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  Status status = Status::pass;
  std::string note;

  static LedgerEntry check(std::string name, double lhs, double rhs, double tol = 1e-9);
  static LedgerEntry vacuous(std::string name, std::string note = "");
  static LedgerEntry premise_failed(std::string name, std::string note = "");
};

const char* to_string(LedgerEntry::Status s);

struct ChainLedger {
  std::vector<LedgerEntry> entries;

  void add(LedgerEntry e) { entries.push_back(std::move(e)); }
  void append(const ChainLedger& other) {
    entries.insert(entries.end(), other.entries.begin(), other.entries.end());
  }
  std::size_t count(LedgerEntry::Status s) const;
  bool any_fail() const { return count(LedgerEntry::Status::fail) > 0; }

  std::string to_json() const;
  std::string to_table() const;
};

}  // namespace twohop
