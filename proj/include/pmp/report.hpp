#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace pmp {

using Cell = std::variant<double, std::string>;

/// Plot-ready table. Column order is part of the output contract.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

/// One line of a run summary: named metrics that assertions can refer to.
struct SummaryRow {
  std::string row;
  std::map<std::string, double> metrics;
  std::string verdict;  // free text, e.g. "pass", "dependent", "error: ..."
};

/// Floats as %.16e (17 significant digits, lowercase exponent); integers
/// that are exactly representable print the same way so columns stay
/// uniform.
std::string format_double(double v);

struct ReportHeader {
  std::string config_hash;
  std::string version;
};

/// CSV: a leading `# pmp <version> config_hash=<hash>` comment line, the
/// header row, then one line per row. Strings containing a comma, quote or
/// newline are quoted.
std::string table_csv(const Table& t, const ReportHeader& h);
/// JSON: {"version", "config_hash", "table", "columns", "rows"}.
std::string table_json(const Table& t, const ReportHeader& h);

Table summary_table(const std::vector<SummaryRow>& rows);

}  // namespace pmp
