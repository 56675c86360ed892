#include "dicemax/report.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "dicemax/exact_models.hpp"
#include "dicemax/maxent.hpp"
#include "dicemax/numeric.hpp"

namespace dicemax {

namespace detail {
extern const std::string_view kReferenceTablesCsv;
}

// ---------------------------------------------------------------------------
// Problems

std::string ProblemId::id() const {
  return (n ? fmt::format("n{}", *n) : std::string("large")) + "-a" + average.label();
}

Regime ProblemId::regime() const {
  if (n) return Exact{*n};
  return LargeN{};
}

std::optional<ProblemId> ProblemId::parse(std::string_view id) {
  const auto dash = id.find("-a");
  if (dash == std::string_view::npos) return std::nullopt;
  const std::string_view head = id.substr(0, dash);
  const std::string avg(id.substr(dash + 2));
  std::optional<int> n;
  if (head != "large") {
    if (head.size() < 2 || head[0] != 'n') return std::nullopt;
    int value = 0;
    for (char c : head.substr(1)) {
      if (c < '0' || c > '9') return std::nullopt;
      value = value * 10 + (c - '0');
      if (value > 1000000) return std::nullopt;
    }
    if (value < 1) return std::nullopt;
    n = value;
  }
  try {
    return ProblemId{n, Average::parse(avg)};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::vector<ProblemId> standard_problems() {
  std::vector<ProblemId> out;
  const Average avgs[] = {Average(6), Average(5), Average(7, 2)};
  for (std::optional<int> n : {std::optional<int>(1), std::optional<int>(2), std::optional<int>(6),
                               std::optional<int>(12), std::optional<int>()}) {
    for (const auto& a : avgs) out.push_back({n, a});
  }
  return out;
}

std::string RowKey::label() const {
  if (row == "me") return "ME";
  if (row == "fair") return "fair-throw";
  const std::string name = row == "johnson" ? "Johnson" : "multiplicity";
  const std::string sym = row == "johnson" ? "K" : "L";
  if (parameter.empty()) return name;
  if (parameter != "large") return fmt::format("{} {}={}", name, sym, parameter);
  if (limit == "n_over_param_small") return fmt::format("{} {} large, N/{} small", name, sym, sym);
  if (limit == "n_over_param_large") return fmt::format("{} {} large, N/{} large", name, sym, sym);
  return fmt::format("{} {} large", name, sym);
}

// ---------------------------------------------------------------------------
// Reference data

namespace {

// One CSV record; double quotes delimit fields that contain commas, "" is a literal quote.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c != '"') {
        fields.back() += c;
      } else if (i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else {
        quoted = false;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

const char* throw_name(Throw t) { return t == Throw::Old ? "old" : "new"; }

}  // namespace

ReferenceTable ReferenceTable::parse_csv(std::string_view text) {
  ReferenceTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 15) throw std::runtime_error(fmt::format("reference table line {}: expected 15 fields", line_no));
    ReferenceCell cell;
    cell.problem = f[0];
    cell.key = {f[1], f[2], f[3]};
    cell.throw_kind = f[4];
    if (f[5] == "values") {
      cell.kind = CellKind::Values;
      for (int i = 0; i < kFaces; ++i) cell.percent[i] = std::stod(f[6 + i]);
      cell.entropy = std::stod(f[12]);
      cell.entropy_decimals = std::stoi(f[13]);
    } else if (f[5] == "uniform") {
      cell.kind = CellKind::Uniform;
    } else if (f[5] == "undefined") {
      cell.kind = CellKind::Undefined;
    } else {
      throw std::runtime_error(fmt::format("reference table line {}: unknown kind '{}'", line_no, f[5]));
    }
    cell.annotation = f[14];
    table.cells_.push_back(std::move(cell));
  }
  return table;
}

const ReferenceTable& ReferenceTable::embedded() {
  static const ReferenceTable table = parse_csv(detail::kReferenceTablesCsv);
  return table;
}

const ReferenceCell* ReferenceTable::find(const std::string& problem, const RowKey& key, Throw t) const {
  const ReferenceCell* fallback = nullptr;
  for (const auto& c : cells_) {
    if (c.problem != problem || c.key.row != key.row) continue;
    if (c.throw_kind != "both" && c.throw_kind != throw_name(t)) continue;
    if (c.key == key) return &c;
    if (c.key.parameter.empty() && c.kind == CellKind::Undefined) fallback = &c;
  }
  return fallback;
}

// ---------------------------------------------------------------------------
// Table computation

namespace {

std::vector<RowKey> row_layout(const ProblemId& p, const std::vector<double>& parameters) {
  std::vector<RowKey> rows{{"me", "", ""}, {"fair", "", ""}};
  for (const char* model : {"johnson", "multiplicity"}) {
    for (double v : parameters) rows.push_back({model, fmt::format("{:g}", v), ""});
    if (p.n) {
      rows.push_back({model, "large", ""});
    } else {
      rows.push_back({model, "large", "n_over_param_small"});
      rows.push_back({model, "large", "n_over_param_large"});
    }
  }
  return rows;
}

ComputedCell values(PosteriorResult r) { return {CellKind::Values, std::move(r)}; }
ComputedCell uniform_cell() {
  return {CellKind::Uniform, PosteriorResult::make(Distribution::uniform(), Method::AnalyticLimit)};
}
ComputedCell undefined_cell() { return {CellKind::Undefined, std::nullopt}; }

ModelSpec model_for(const RowKey& key) {
  const double param = key.parameter == "large" || key.parameter.empty() ? 1.0 : std::stod(key.parameter);
  if (key.row == "johnson") return make_johnson(param);
  if (key.row == "multiplicity") return make_multiplicity(param);
  return make_fair_throw();
}

ComputedRow compute_row(const ProblemId& p, const RowKey& key, const EvalOptions& options) {
  ComputedRow row;
  row.key = key;
  const Average& a = p.average;

  if (key.row == "me") {
    row.shared = true;
    row.old_cell = values(PosteriorResult::make(maxent_shannon(a).distribution, Method::AnalyticLimit));
    row.new_cell = row.old_cell;
    return row;
  }

  Query q{p.regime(), a, Throw::Old, model_for(key), std::nullopt};
  if (key.parameter == "large") {
    q.large_parameter = key.limit == "n_over_param_large" ? ParameterLimit::DataMoreThanParameter
                                                          : ParameterLimit::DataFewerThanParameter;
  }
  const bool fair_like = key.row == "fair" || (key.parameter == "large" && key.limit != "n_over_param_large");
  if (fair_like) {
    row.annotation = key.row == "fair" ? (p.n ? "" : "ME distribution") : "like fair-throw model";
  } else if (key.limit == "n_over_param_large") {
    row.annotation = key.row == "johnson" ? "ME distribution for Burg entropy" : "ME distribution";
  }

  try {
    if (fair_like) {
      row.old_cell = values(asymptotic_dispatch(q, options));
      q.throw_kind = Throw::New;
      asymptotic_dispatch(q, options);  // contradictory data check
      row.new_cell = uniform_cell();
      return row;
    }
    if (key.row == "multiplicity" && p.n && key.parameter != "large") {
      row.integral = true;
      auto pair = multiplicity_posterior_pair(*p.n, a, std::stod(key.parameter), std::nullopt, options);
      row.old_cell = values(std::move(pair.old_throw));
      row.new_cell = values(std::move(pair.new_throw));
      return row;
    }
    if (!p.n && key.parameter != "large") {
      // Large-N limits: one computation serves both throws.
      row.integral = true;
      row.old_cell = values(asymptotic_dispatch(q, options));
      row.new_cell = row.old_cell;
      return row;
    }
    row.old_cell = values(asymptotic_dispatch(q, options));
    q.throw_kind = Throw::New;
    row.new_cell = values(asymptotic_dispatch(q, options));
  } catch (const ContradictoryData&) {
    row.old_cell = undefined_cell();
    row.new_cell = undefined_cell();
  }
  return row;
}

EvalOptions tuned_options(const RunConfig& config, unsigned workers) {
  EvalOptions o = config.options;
  if (workers > 1) o.budget.threads = 1;
  return o;
}

unsigned worker_count(const RunConfig& config) {
  unsigned w = config.workers ? config.workers : std::thread::hardware_concurrency();
  return std::max(1u, w);
}

std::vector<RowKey> selected_rows(const ProblemId& problem, const RunConfig& config) {
  std::vector<RowKey> keys = row_layout(problem, config.parameters);
  if (config.rows.empty()) return keys;
  std::erase_if(keys, [&](const RowKey& k) {
    return std::find(config.rows.begin(), config.rows.end(), k.row) == config.rows.end();
  });
  return keys;
}

}  // namespace

ProblemTable compute_table(const ProblemId& problem, const RunConfig& config) {
  ProblemTable table{problem, {}};
  const EvalOptions options = tuned_options(config, 1);
  for (const auto& key : selected_rows(problem, config)) table.rows.push_back(compute_row(problem, key, options));
  return table;
}

std::vector<ProblemTable> compute_tables(const RunConfig& config) {
  std::vector<ProblemTable> tables;
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (const auto& p : config.problems) {
    ProblemTable t{p, {}};
    for (const auto& key : selected_rows(p, config)) {
      slots.emplace_back(tables.size(), t.rows.size());
      ComputedRow placeholder;
      placeholder.key = key;
      t.rows.push_back(std::move(placeholder));
    }
    tables.push_back(std::move(t));
  }

  const unsigned workers = std::min<unsigned>(worker_count(config), static_cast<unsigned>(std::max<std::size_t>(1, slots.size())));
  const EvalOptions options = tuned_options(config, workers);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < slots.size();) {
      auto& table = tables[slots[i].first];
      auto& row = table.rows[slots[i].second];
      try {
        row = compute_row(table.problem, row.key, options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return tables;
}

// ---------------------------------------------------------------------------
// Diff

double rounded_row_entropy(const Distribution& d) {
  double h = 0.0;
  for (int i = 0; i < kFaces; ++i) {
    const double r = round_percent(d[i]) / 100.0;
    if (r > 0.0) h -= r * std::log(r);
  }
  return h;
}

std::size_t DiffReport::failures() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const CellDiff& c) { return !c.ok; }));
}

namespace {

bool is_uniform(const Distribution& d) {
  for (int i = 0; i < kFaces; ++i)
    if (std::abs(d[i] - 1.0 / kFaces) > 1e-9) return false;
  return true;
}

CellDiff diff_cell(const ProblemTable& table, const ComputedRow& row, Throw t, const ReferenceTable& ref,
                   const Tolerances& tol) {
  const std::string pid = table.problem.id();
  CellDiff d;
  d.problem = pid;
  d.key = row.key;
  d.throw_kind = t;
  d.integral = row.integral;
  d.tolerance_pp = row.integral ? tol.integral_pp : tol.closed_pp;
  const ComputedCell& cell = t == Throw::Old ? row.old_cell : row.new_cell;
  const ReferenceCell* r = ref.find(pid, row.key, t);
  if (!r) {
    d.ok = false;
    d.message = "no reference value";
    return d;
  }
  switch (r->kind) {
    case CellKind::Undefined:
      d.ok = cell.kind == CellKind::Undefined;
      if (!d.ok) d.message = "expected undefined";
      return d;
    case CellKind::Uniform:
      d.ok = cell.result && is_uniform(cell.result->distribution);
      if (!d.ok) d.message = "expected uniform distribution";
      return d;
    case CellKind::Values:
      break;
  }
  if (!cell.result) {
    d.ok = false;
    d.message = "undefined, expected values";
    return d;
  }
  const Distribution& dist = cell.result->distribution;
  for (int i = 0; i < kFaces; ++i)
    d.deviation_pp = std::max(d.deviation_pp, std::abs(round_percent(dist[i]) - r->percent[i]));

  const bool uniform_row = std::all_of(r->percent.begin(), r->percent.end(), [](double v) { return v == 16.7; });
  double half_unit = 0.0;
  if (r->entropy_decimals > 0 && r->entropy_decimals < 3) half_unit = 0.5 * std::pow(10.0, -r->entropy_decimals);
  d.tolerance_nat =
      (uniform_row ? tol.uniform_entropy_nat : row.integral ? tol.integral_entropy_nat : tol.entropy_nat) + half_unit;
  d.entropy_deviation = std::abs(rounded_row_entropy(dist) - r->entropy);

  // Small slack so values printed exactly at the tolerance are not rejected by rounding noise.
  const double eps = 1e-9;
  d.ok = d.deviation_pp <= d.tolerance_pp + eps && *d.entropy_deviation <= d.tolerance_nat + eps;
  if (!d.ok) {
    d.message = fmt::format("expected ({}) [{:.{}f}]", fmt::join(r->percent, ", "), r->entropy, r->entropy_decimals);
  }
  return d;
}

}  // namespace

DiffReport diff_tables(const std::vector<ProblemTable>& tables, const ReferenceTable& reference,
                       const Tolerances& tolerances) {
  DiffReport report;
  for (const auto& table : tables) {
    for (const auto& row : table.rows) {
      report.cells.push_back(diff_cell(table, row, Throw::Old, reference, tolerances));
      if (!row.shared) report.cells.push_back(diff_cell(table, row, Throw::New, reference, tolerances));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string percent_row(const Distribution& d) {
  std::vector<std::string> parts;
  for (int i = 0; i < kFaces; ++i) parts.push_back(fmt::format("{:.1f}", round_percent(d[i])));
  return "(" + fmt::format("{}", fmt::join(parts, ", ")) + ")";
}

std::string render_cell(const ComputedCell& c) {
  switch (c.kind) {
    case CellKind::Undefined:
      return "undefined";
    case CellKind::Uniform:
      return "uniform distribution irrespective of a";
    case CellKind::Values:
      break;
  }
  return fmt::format("{} [{:.3f}]", percent_row(c.result->distribution), rounded_row_entropy(c.result->distribution));
}

bool all_exchangeable_undefined(const ProblemTable& t) {
  bool any = false;
  for (const auto& r : t.rows) {
    if (r.key.row == "me") continue;
    any = true;
    if (r.old_cell.kind != CellKind::Undefined || r.new_cell.kind != CellKind::Undefined) return false;
  }
  return any;
}

std::string heading(const ProblemId& p) {
  return fmt::format("{}, a={} ({})", p.n ? fmt::format("N={}", *p.n) : std::string("N large"), p.average.label(),
                     p.id());
}

std::optional<double> max_stderr(const ComputedCell& c) {
  if (!c.result || !c.result->mc_stderr) return std::nullopt;
  const auto& e = *c.result->mc_stderr;
  return *std::max_element(e.begin(), e.end());
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

nlohmann::json cell_json(const ComputedCell& c) {
  nlohmann::json j;
  switch (c.kind) {
    case CellKind::Undefined:
      j["status"] = "undefined";
      j["probs"] = nullptr;
      j["entropy"] = nullptr;
      return j;
    case CellKind::Uniform:
      j["status"] = "uniform";
      break;
    case CellKind::Values:
      j["status"] = "ok";
      break;
  }
  std::vector<double> probs(c.result->distribution.probs().begin(), c.result->distribution.probs().end());
  j["probs"] = probs;
  j["entropy"] = c.result->entropy_nats;
  return j;
}

}  // namespace

std::string render_markdown(const ProblemTable& t) {
  std::string out = fmt::format("### {}\n\n", heading(t.problem));
  out += "| model | old throw, % [H/nat] | new throw, % [H/nat] | method | note |\n";
  out += "|---|---|---|---|---|\n";
  const bool collapse = all_exchangeable_undefined(t);
  for (const auto& r : t.rows) {
    if (collapse && r.key.row != "me") continue;
    std::string method = r.old_cell.result ? std::string(method_name(r.old_cell.result->method)) : std::string();
    std::string note = r.annotation;
    if (auto e = max_stderr(r.old_cell); e && r.integral) {
      auto e2 = max_stderr(r.new_cell);
      note += fmt::format("{}stderr {:.2g} pp", note.empty() ? "" : "; ", 100.0 * std::max(*e, e2.value_or(0.0)));
    }
    const std::string old_text = render_cell(r.old_cell);
    const std::string new_text = r.shared ? "same" : render_cell(r.new_cell);
    out += fmt::format("| {} | {} | {} | {} | {} |\n", r.key.label(), old_text, new_text, method, note);
  }
  if (collapse) out += "| all exchangeable models | undefined | undefined | | contradictory data |\n";
  return out;
}

std::string render_csv(const std::vector<ProblemTable>& tables) {
  std::string out = "problem,row,parameter,limit,throw,kind,p1,p2,p3,p4,p5,p6,entropy,method,max_stderr,annotation\r\n";
  for (const auto& t : tables) {
    for (const auto& r : t.rows) {
      for (Throw th : {Throw::Old, Throw::New}) {
        if (r.shared && th == Throw::New) continue;
        const ComputedCell& c = th == Throw::Old ? r.old_cell : r.new_cell;
        const char* kind = c.kind == CellKind::Values ? "values" : c.kind == CellKind::Uniform ? "uniform" : "undefined";
        std::string line = fmt::format("{},{},{},{},{},{}", t.problem.id(), r.key.row, r.key.parameter, r.key.limit,
                                       r.shared ? "both" : throw_name(th), kind);
        if (c.result) {
          for (int i = 0; i < kFaces; ++i) line += fmt::format(",{:.17g}", c.result->distribution[i]);
          line += fmt::format(",{:.17g},{}", c.result->entropy_nats, method_name(c.result->method));
        } else {
          line += ",,,,,,,,";
        }
        const auto e = max_stderr(c);
        line += e ? fmt::format(",{:.6g}", *e) : std::string(",");
        line += "," + csv_quote(r.annotation) + "\r\n";
        out += line;
      }
    }
  }
  return out;
}

nlohmann::json table_to_json(const ProblemTable& t) {
  nlohmann::json j;
  j["problem"] = {{"id", t.problem.id()},
                  {"regime", t.problem.n ? nlohmann::json(*t.problem.n) : nlohmann::json("large")},
                  {"avg", t.problem.average.label()}};
  j["rows"] = nlohmann::json::array();
  for (const auto& r : t.rows) {
    nlohmann::json row;
    row["model"] = r.key.row;
    row["param"] = r.key.parameter.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.key.parameter);
    if (!r.key.limit.empty()) row["limit"] = r.key.limit;
    row["old"] = cell_json(r.old_cell);
    row["new"] = cell_json(r.new_cell);
    row["method"] = r.old_cell.result ? nlohmann::json(method_name(r.old_cell.result->method)) : nlohmann::json(nullptr);
    if (r.integral && r.old_cell.result && r.old_cell.result->mc_stderr) {
      const auto& eo = *r.old_cell.result->mc_stderr;
      const auto& en = r.new_cell.result->mc_stderr ? *r.new_cell.result->mc_stderr : eo;
      row["stderr"] = {{"old", std::vector<double>(eo.begin(), eo.end())},
                       {"new", std::vector<double>(en.begin(), en.end())}};
    }
    if (!r.annotation.empty()) row["annotation"] = r.annotation;
    j["rows"].push_back(std::move(row));
  }
  return j;
}

std::string render_diff(const DiffReport& report, bool failures_only) {
  std::string out;
  for (const auto& c : report.cells) {
    if (failures_only && c.ok) continue;
    out += fmt::format("{:<5} {:<11} {:<36} {:<3}  dev {:.2f} pp (tol {:.2f})", c.ok ? "ok" : "FAIL", c.problem,
                       c.key.label(), throw_name(c.throw_kind), c.deviation_pp, c.tolerance_pp);
    if (c.entropy_deviation) out += fmt::format("  dH {:.4f} nat (tol {:.4f})", *c.entropy_deviation, c.tolerance_nat);
    if (!c.message.empty()) out += "  " + c.message;
    out += "\n";
  }
  out += fmt::format("{} cells compared, {} beyond tolerance\n", report.cells.size(), report.failures());
  return out;
}

}  // namespace dicemax
