#include "muonpp/experiment_report.hpp"

#include <sstream>

#include "muonpp/errors.hpp"
#include "muonpp/matrix_io.hpp"

namespace muonpp {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

void ExperimentReport::add_parameter(std::string key, std::string value) {
  parameters.emplace_back(std::move(key), std::move(value));
}

void ExperimentReport::add_summary(std::string key, std::string value) {
  summary.emplace_back(std::move(key), std::move(value));
}

void ExperimentReport::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw InvalidInput("ExperimentReport: row width does not match the columns");
  rows.push_back(std::move(row));
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream os;
  os << "# experiment: " << name << '\n';
  for (const auto& [k, v] : parameters) os << "# param " << k << " = " << v << '\n';
  for (const auto& [k, v] : summary) os << "# summary " << k << " = " << v << '\n';
  if (!note.empty()) os << "# note: " << note << '\n';
  os << "# verdict: " << verdict_line() << '\n';
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  return os.str();
}

std::string ExperimentReport::verdict_line() const {
  return to_string(verdict) + " tolerance=" + io::format_double(tolerance_used);
}

}  // namespace muonpp
