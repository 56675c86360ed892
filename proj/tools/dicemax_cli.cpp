#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "dicemax/core.hpp"
#include "dicemax/exact_models.hpp"
#include "dicemax/maxent.hpp"
#include "dicemax/multiplicity_model.hpp"
#include "dicemax/numeric.hpp"
#include "dicemax/report.hpp"

using namespace dicemax;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiff = 1;
constexpr int kExitContradictory = 2;
constexpr int kExitUsage = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericFlags {
  std::uint64_t seed = IntegrationBudget{}.seed;
  std::int64_t budget = IntegrationBudget{}.max_evaluations;
  std::string integrator = "quad";
  int threads = 0;

  EvalOptions options() const {
    EvalOptions o;
    o.integrator = integrator == "mc" ? Integrator::MonteCarlo : Integrator::Deterministic;
    o.budget.seed = seed;
    o.budget.max_evaluations = budget;
    o.budget.threads = threads;
    return o;
  }
};

void add_numeric_flags(CLI::App* cmd, NumericFlags& f) {
  cmd->add_option("--seed", f.seed, "Monte Carlo seed")->envname("DICEMAX_SEED");
  cmd->add_option("--budget", f.budget, "Maximum integrand evaluations per integral")->check(CLI::PositiveNumber);
  cmd->add_option("--integrator", f.integrator, "Integrator for non-closed-form cells")
      ->check(CLI::IsMember({"quad", "mc"}));
  cmd->add_option("--threads", f.threads, "Integration threads (0: all cores)")->check(CLI::NonNegativeNumber);
}

Distribution parse_m(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      values.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw UsageError("--m: cannot parse '" + part + "'");
    }
  }
  if (values.size() != kFaces) throw UsageError("--m needs six comma-separated values");
  Probs p;
  std::copy(values.begin(), values.end(), p.begin());
  try {
    return Distribution::from_probs(p, 1e-6);
  } catch (const std::exception& e) {
    throw UsageError(std::string("--m: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

struct EvalFlags {
  std::optional<int> n;
  bool large_n = false;
  std::string avg;
  std::string model;
  std::string param;
  std::string limit;
  std::string throw_kind = "old";
  std::string m;
  std::string format = "text";
  NumericFlags numeric;
};

PosteriorResult evaluate(const EvalFlags& f) {
  Average a(1);
  try {
    a = Average::parse(f.avg);
  } catch (const std::exception& e) {
    throw UsageError(std::string("--avg: ") + e.what());
  }
  std::optional<Distribution> m;
  if (!f.m.empty()) m = parse_m(f.m);

  if (f.model == "maxent-shannon") return PosteriorResult::make(maxent_shannon(a).distribution, Method::AnalyticLimit);
  if (f.model == "maxent-burg") return PosteriorResult::make(maxent_burg(a).distribution, Method::AnalyticLimit);
  if (f.model == "min-kl") {
    if (!m) throw UsageError("min-kl needs --m");
    return PosteriorResult::make(min_kl(a, *m).distribution, Method::AnalyticLimit);
  }

  if (!f.n && !f.large_n) throw UsageError("give --n or --large-n");
  Query q{f.large_n ? Regime(LargeN{}) : Regime(Exact{*f.n}), a, f.throw_kind == "new" ? Throw::New : Throw::Old,
          make_fair_throw(), std::nullopt};
  const bool large_param = f.param == "large";
  double value = 1.0;
  if (f.model != "fair") {
    if (f.param.empty()) throw UsageError("--param is required for " + f.model);
    if (!large_param) {
      try {
        std::size_t used = 0;
        value = std::stod(f.param, &used);
        if (used != f.param.size()) throw std::invalid_argument(f.param);
      } catch (const std::exception&) {
        throw UsageError("--param must be a number or 'large'");
      }
    }
  }
  try {
    if (f.model == "johnson") q.model = make_johnson(value, m);
    if (f.model == "multiplicity") q.model = make_multiplicity(value, m);
  } catch (const std::domain_error& e) {
    throw UsageError(e.what());
  }
  if (large_param) {
    if (f.limit.empty()) {
      q.large_parameter = ParameterLimit::Unspecified;
    } else {
      q.large_parameter = f.limit == "n-over-param-large" ? ParameterLimit::DataMoreThanParameter
                                                          : ParameterLimit::DataFewerThanParameter;
    }
  }
  try {
    return asymptotic_dispatch(q, f.numeric.options());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

int run_eval(const EvalFlags& f) {
  const PosteriorResult r = evaluate(f);
  const auto& p = r.distribution.probs();
  if (f.format == "json") {
    nlohmann::json j{{"probs", std::vector<double>(p.begin(), p.end())},
                     {"entropy", r.entropy_nats},
                     {"method", method_name(r.method)},
                     {"evaluations", r.evaluations}};
    if (r.mc_stderr) j["stderr"] = std::vector<double>(r.mc_stderr->begin(), r.mc_stderr->end());
    std::cout << j.dump(2) << "\n";
  } else if (f.format == "csv") {
    std::cout << "p1,p2,p3,p4,p5,p6,entropy,method\r\n";
    std::cout << fmt::format("{:.17g},{:.17g},{}\r\n", fmt::join(p, ","), r.entropy_nats, method_name(r.method));
  } else {
    std::vector<std::string> parts;
    for (double x : p) parts.push_back(fmt::format("{:.1f}", round_percent(x)));
    // The entropy shown belongs to the printed (rounded) row.
    std::cout << fmt::format("({}) % [H={:.3f} nat]\n", fmt::join(parts, ", "), rounded_row_entropy(r.distribution));
    std::cout << "method: " << method_name(r.method) << "\n";
    if (r.mc_stderr) {
      std::vector<std::string> errs;
      for (double x : *r.mc_stderr) errs.push_back(fmt::format("{:.3f}", 100.0 * x));
      std::cout << fmt::format("stderr: ({}) pp\n", fmt::join(errs, ", "));
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ReproduceFlags {
  std::vector<std::string> only;
  std::string format = "markdown";
  bool diff = false;
  bool fast = false;
  bool failures_only = false;
  unsigned workers = 0;
  NumericFlags numeric;
};

int run_reproduce(const ReproduceFlags& f) {
  RunConfig config;
  if (!f.only.empty()) {
    config.problems.clear();
    for (const auto& id : f.only) {
      auto p = ProblemId::parse(id);
      if (!p) throw UsageError("unknown problem id '" + id + "'");
      config.problems.push_back(*p);
    }
  }
  config.options = f.numeric.options();
  config.fast = f.fast;
  if (f.fast) config.options.budget.max_evaluations = std::min<std::int64_t>(config.options.budget.max_evaluations, 200'000);
  config.workers = f.workers;

  const auto tables = compute_tables(config);
  std::ostream& diff_out = f.format == "markdown" ? std::cout : std::cerr;
  if (f.format == "json") {
    for (const auto& t : tables) std::cout << table_to_json(t).dump() << "\n";
  } else if (f.format == "csv") {
    std::cout << render_csv(tables);
  } else {
    for (std::size_t i = 0; i < tables.size(); ++i) std::cout << (i ? "\n" : "") << render_markdown(tables[i]);
  }
  if (!f.diff) return kExitOk;
  const DiffReport report =
      diff_tables(tables, ReferenceTable::embedded(), f.fast ? Tolerances::fast() : Tolerances::standard());
  if (f.format == "markdown") diff_out << "\n```\n";
  diff_out << render_diff(report, f.failures_only);
  if (f.format == "markdown") diff_out << "```\n";
  return report.failures() == 0 ? kExitOk : kExitDiff;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Die-throw posteriors under exchangeable models and maximum-entropy distributions"};
  app.set_config("--config", "", "TOML/INI file mirroring the command-line flags");
  app.require_subcommand(1);

  EvalFlags ev;
  auto* eval = app.add_subcommand("eval", "Evaluate one posterior or maxent distribution");
  auto* n_opt = eval->add_option("--n", ev.n, "Number of averaged throws")->check(CLI::PositiveNumber);
  auto* large_opt = eval->add_flag("--large-n", ev.large_n, "Use the large-N limit");
  n_opt->excludes(large_opt);
  eval->add_option("--avg", ev.avg, "Observed average, e.g. 5, 3.5 or 7/2")->required();
  eval->add_option("--model", ev.model, "Model")
      ->required()
      ->check(CLI::IsMember({"fair", "johnson", "multiplicity", "maxent-shannon", "maxent-burg", "min-kl"}));
  eval->add_option("--param", ev.param, "K or L (a number, or 'large')");
  eval->add_option("--limit", ev.limit, "With --param large: ratio of N to the parameter")
      ->check(CLI::IsMember({"n-over-param-small", "n-over-param-large"}));
  eval->add_option("--throw", ev.throw_kind, "old or new throw")->check(CLI::IsMember({"old", "new"}));
  eval->add_option("--m", ev.m, "Prior mean m as p1,...,p6");
  eval->add_option("--format", ev.format, "Output format")->check(CLI::IsMember({"text", "json", "csv"}));
  add_numeric_flags(eval, ev.numeric);

  ReproduceFlags rp;
  auto* repro = app.add_subcommand("reproduce", "Compute the fifteen problem tables");
  repro->add_option("--only", rp.only, "Problem ids, e.g. n2-a5,large-a3.5")->delimiter(',');
  repro->add_option("--format", rp.format, "Output format")->check(CLI::IsMember({"markdown", "csv", "json"}));
  repro->add_flag("--diff", rp.diff, "Compare against the embedded reference values");
  repro->add_flag("--fast", rp.fast, "Smaller budget and 0.5 pp tolerance for integral cells");
  repro->add_flag("--failures-only", rp.failures_only, "Only list cells beyond tolerance in the diff");
  repro->add_option("--workers", rp.workers, "Worker threads for table cells (0: all cores)");
  add_numeric_flags(repro, rp.numeric);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*eval) return run_eval(ev);
    return run_reproduce(rp);
  } catch (const ContradictoryData& e) {
    std::cerr << e.what() << "\n";
    return kExitContradictory;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
