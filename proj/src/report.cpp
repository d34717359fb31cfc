#include "pmp/report.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pmp {

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw std::logic_error("table " + name + ": row has " + std::to_string(row.size()) + " cells, expected " +
                           std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string cell_text(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return format_double(*d);
  return std::get<std::string>(c);
}

}  // namespace

std::string table_csv(const Table& t, const ReportHeader& h) {
  std::string out = "# pmp " + h.version + " config_hash=" + h.config_hash + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + csv_field(t.columns[i]);
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_field(cell_text(row[i]));
    out += "\n";
  }
  return out;
}

std::string table_json(const Table& t, const ReportHeader& h) {
  // Numbers are written as their %.16e text inside the JSON number syntax
  // so JSON and CSV agree digit for digit.
  std::string out = "{\n  \"version\": " + nlohmann::json(h.version).dump() +
                    ",\n  \"config_hash\": " + nlohmann::json(h.config_hash).dump() +
                    ",\n  \"table\": " + nlohmann::json(t.name).dump() + ",\n  \"columns\": " +
                    nlohmann::json(t.columns).dump() + ",\n  \"rows\": [";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out += r ? ",\n    [" : "\n    [";
    for (std::size_t i = 0; i < t.rows[r].size(); ++i) {
      if (i) out += ", ";
      const Cell& c = t.rows[r][i];
      if (const double* d = std::get_if<double>(&c)) {
        out += std::isfinite(*d) ? format_double(*d) : nlohmann::json(format_double(*d)).dump();
      } else {
        out += nlohmann::json(std::get<std::string>(c)).dump();
      }
    }
    out += "]";
  }
  out += t.rows.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

Table summary_table(const std::vector<SummaryRow>& rows) {
  std::set<std::string> metric_names;
  for (const SummaryRow& r : rows)
    for (const auto& [k, _] : r.metrics) metric_names.insert(k);
  Table t;
  t.name = "summary";
  t.columns.push_back("row");
  t.columns.insert(t.columns.end(), metric_names.begin(), metric_names.end());
  t.columns.push_back("verdict");
  for (const SummaryRow& r : rows) {
    std::vector<Cell> cells{r.row};
    for (const std::string& m : metric_names) {
      const auto it = r.metrics.find(m);
      cells.emplace_back(it == r.metrics.end() ? Cell{std::string()} : Cell{it->second});
    }
    cells.emplace_back(r.verdict);
    t.add_row(std::move(cells));
  }
  return t;
}

}  // namespace pmp
