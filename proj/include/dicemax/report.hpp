#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dicemax/core.hpp"
#include "dicemax/multiplicity_model.hpp"

namespace dicemax {

/// One of the fifteen problems: "n{N}-a{avg}" or "large-a{avg}".
struct ProblemId {
  std::optional<int> n;  // empty for the large-N problems
  Average average;

  std::string id() const;
  Regime regime() const;
  static std::optional<ProblemId> parse(std::string_view id);
};

/// The fifteen problems in table order.
std::vector<ProblemId> standard_problems();

enum class CellKind { Values, Uniform, Undefined };

/// Row identity inside a table. `row` is "me", "fair", "johnson" or "multiplicity";
/// `parameter` is "", "1", "5", "50" or "large"; `limit` is "", "n_over_param_small"
/// or "n_over_param_large".
struct RowKey {
  std::string row;
  std::string parameter;
  std::string limit;

  auto operator<=>(const RowKey&) const = default;
  std::string label() const;
};

struct ReferenceCell {
  std::string problem;
  RowKey key;
  std::string throw_kind;  // "old", "new" or "both"
  CellKind kind = CellKind::Values;
  Probs percent{};
  double entropy = 0.0;
  int entropy_decimals = 3;
  std::string annotation;
};

class ReferenceTable {
 public:
  static ReferenceTable parse_csv(std::string_view text);
  /// Values embedded at build time from data/reference_tables.csv.
  static const ReferenceTable& embedded();

  /// Looks up one cell. "both" cells answer for either throw. A table whose
  /// exchangeable rows are all undefined answers for every parameter.
  const ReferenceCell* find(const std::string& problem, const RowKey& key, Throw throw_kind) const;
  const std::vector<ReferenceCell>& cells() const { return cells_; }

 private:
  std::vector<ReferenceCell> cells_;
};

struct ComputedCell {
  CellKind kind = CellKind::Values;
  std::optional<PosteriorResult> result;  // set unless Undefined
};

struct ComputedRow {
  RowKey key;
  bool shared = false;  // one value for both throws (maxent row)
  ComputedCell old_cell;
  ComputedCell new_cell;
  std::string annotation;
  bool integral = false;  // came from a numerical integration
};

struct ProblemTable {
  ProblemId problem;
  std::vector<ComputedRow> rows;
};

struct RunConfig {
  std::vector<ProblemId> problems = standard_problems();
  std::vector<double> parameters{1, 5, 50};
  EvalOptions options{};
  bool fast = false;
  unsigned workers = 0;  // 0 = hardware concurrency
  /// Row names to compute ("me", "fair", ...); empty computes every row.
  std::vector<std::string> rows;
};

/// Computes every table; output order does not depend on worker scheduling.
std::vector<ProblemTable> compute_tables(const RunConfig& config);
ProblemTable compute_table(const ProblemId& problem, const RunConfig& config);

struct Tolerances {
  double closed_pp = 0.05;
  double integral_pp = 0.3;
  double entropy_nat = 0.002;
  /// Integral cells may round to the other side of a 0.05 boundary, which moves
  /// the entropy of the printed row by about 0.001 nat per face.
  double integral_entropy_nat = 0.005;
  double uniform_entropy_nat = 0.005;

  static Tolerances standard() { return {}; }
  static Tolerances fast() { return {0.05, 0.5, 0.002, 0.005, 0.005}; }
};

struct CellDiff {
  std::string problem;
  RowKey key;
  Throw throw_kind = Throw::Old;
  bool integral = false;
  double deviation_pp = 0.0;
  std::optional<double> entropy_deviation;
  double tolerance_pp = 0.0;
  double tolerance_nat = 0.0;
  bool ok = true;
  std::string message;
};

struct DiffReport {
  std::vector<CellDiff> cells;
  std::size_t failures() const;
};

DiffReport diff_tables(const std::vector<ProblemTable>& tables, const ReferenceTable& reference,
                       const Tolerances& tolerances);

/// Shannon entropy of a percent row as printed (rounded, not renormalized).
double rounded_row_entropy(const Distribution& d);

std::string render_markdown(const ProblemTable& table);
std::string render_csv(const std::vector<ProblemTable>& tables);
nlohmann::json table_to_json(const ProblemTable& table);
std::string render_diff(const DiffReport& report, bool failures_only);

}  // namespace dicemax
