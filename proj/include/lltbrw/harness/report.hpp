#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lltbrw/harness/config.hpp"
#include "lltbrw/numeric.hpp"

namespace lltbrw::harness {

inline constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

/// One CSV row. Numeric cells that do not apply are NaN and print empty.
struct ResultRow {
  std::string kind;
  int replicate = -1;
  int n = -1;
  std::string z;
  std::string quantity;
  double observed = kNotApplicable;
  double predicted = kNotApplicable;
  double scaled_residual = kNotApplicable;
  std::string status;
};

struct ResultTable {
  std::string experiment;
  std::uint64_t config_hash = 0;
  std::uint64_t base_seed = 0;
  std::string config_text;
  std::vector<ResultRow> rows;
  bool passed = true;

  void add(ResultRow row) { rows.push_back(std::move(row)); }

  /// Pass/fail row: `statistic` compared against `threshold`.
  bool check(const std::string& name, double statistic, double threshold, bool ok, const std::string& z = "",
             int n = -1) {
    ResultRow row;
    row.kind = "assert";
    row.n = n;
    row.z = z;
    row.quantity = name;
    row.observed = statistic;
    row.predicted = threshold;
    row.status = ok ? "pass" : "fail";
    rows.push_back(row);
    passed = passed && ok;
    return ok;
  }

  std::size_t failures() const {
    std::size_t k = 0;
    for (const auto& r : rows)
      if (r.status == "fail") ++k;
    return k;
  }
};

namespace detail {

inline std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

inline std::string cell(int v) { return v < 0 ? std::string() : std::to_string(v); }

}  // namespace detail

/// `#` header block, column line, then one line per row. Nothing in the output
/// depends on the thread count or wall clock.
inline void write_csv(std::ostream& os, const ResultTable& table) {
  const std::string hash = hash_hex(table.config_hash);
  os << "# tool: lltbrw " << kToolVersion << '\n';
  os << "# experiment: " << table.experiment << '\n';
  os << "# config_hash: " << hash << '\n';
  os << "# base_seed: " << table.base_seed << '\n';
  os << "# config: " << table.config_text << '\n';
  os << "experiment,kind,replicate,n,z,quantity,observed,predicted,scaled_residual,status,config_hash,seed\n";
  for (const auto& r : table.rows) {
    os << table.experiment << ',' << r.kind << ',' << detail::cell(r.replicate) << ',' << detail::cell(r.n) << ','
       << r.z << ',' << r.quantity << ',' << detail::cell(r.observed) << ',' << detail::cell(r.predicted) << ','
       << detail::cell(r.scaled_residual) << ',' << r.status << ',' << hash << ',' << table.base_seed << '\n';
  }
}

inline std::string to_csv(const ResultTable& table) {
  std::ostringstream os;
  write_csv(os, table);
  return os.str();
}

}  // namespace lltbrw::harness
