#pragma once

#include <string>
#include <utility>
#include <vector>

namespace muonpp {

enum class Verdict { pass, fail, inconclusive };

std::string to_string(Verdict v);

/// Result of a seeded experiment. Rows are stored pre-formatted so that the CSV
/// is a byte-exact function of the inputs; wall_time is kept out of it.
struct ExperimentReport {
  std::string name;
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  /// Derived statistics (medians, counts, per-check outcomes).
  std::vector<std::pair<std::string, std::string>> summary;
  Verdict verdict = Verdict::inconclusive;
  double tolerance_used = 0.0;
  double wall_time = 0.0;
  std::string note;

  void add_parameter(std::string key, std::string value);
  void add_summary(std::string key, std::string value);
  /// Appends a row; throws if its width differs from `columns`.
  void add_row(std::vector<std::string> row);

  /// `#`-prefixed header lines (name, parameters, summary, verdict), then the
  /// column header and rows.
  std::string to_csv() const;
  /// "<verdict> tolerance=<tol>", the content of <name>.verdict.txt.
  std::string verdict_line() const;
};

}  // namespace muonpp
