#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "dicemax/report.hpp"

using namespace dicemax;

namespace {

RunConfig quick(std::vector<std::string> ids) {
  RunConfig c;
  c.problems.clear();
  for (const auto& id : ids) c.problems.push_back(*ProblemId::parse(id));
  c.options.budget.max_evaluations = 100'000;
  c.workers = 1;
  return c;
}

}  // namespace

TEST_CASE("problem ids") {
  const auto all = standard_problems();
  CHECK(all.size() == 15);
  std::set<std::string> ids;
  for (const auto& p : all) {
    ids.insert(p.id());
    const auto back = ProblemId::parse(p.id());
    REQUIRE(back);
    CHECK(back->id() == p.id());
  }
  CHECK(ids.size() == 15);
  CHECK(ids.count("n2-a5"));
  CHECK(ids.count("large-a3.5"));
  CHECK(ProblemId::parse("n1-a7/2")->id() == "n1-a3.5");
  CHECK_FALSE(ProblemId::parse("n2"));
  CHECK_FALSE(ProblemId::parse("m2-a5"));
  CHECK_FALSE(ProblemId::parse("n2-a9"));
  CHECK_FALSE(ProblemId::parse("n0-a5"));
}

TEST_CASE("embedded reference values") {
  const auto& ref = ReferenceTable::embedded();
  CHECK(ref.cells().size() == 285);
  const auto* j = ref.find("n2-a5", RowKey{"johnson", "1", ""}, Throw::Old);
  REQUIRE(j);
  CHECK(j->percent == Probs{0, 0, 0, 25.0, 50.0, 25.0});
  CHECK(j->entropy == doctest::Approx(1.040));
  const auto* me = ref.find("n6-a5", RowKey{"me", "", ""}, Throw::New);
  REQUIRE(me);
  CHECK(me->throw_kind == "both");
  const auto* undefined = ref.find("n1-a3.5", RowKey{"multiplicity", "50", ""}, Throw::Old);
  REQUIRE(undefined);
  CHECK(undefined->kind == CellKind::Undefined);
  CHECK(ref.find("n2-a5", RowKey{"johnson", "7", ""}, Throw::Old) == nullptr);
}

TEST_CASE("reference csv parsing") {
  const auto t = ReferenceTable::parse_csv(
      "problem,row,parameter,limit,throw,kind,f1,f2,f3,f4,f5,f6,entropy,entropy_decimals,annotation\r\n"
      "n2-a5,fair,,,new,uniform,,,,,,,,,\"uniform, irrespective\"\r\n"
      "n2-a5,johnson,5,,old,values,0,0,0,31.2,37.5,31.2,1.09,2,\n");
  REQUIRE(t.cells().size() == 2);
  CHECK(t.cells()[0].kind == CellKind::Uniform);
  CHECK(t.cells()[0].annotation == "uniform, irrespective");
  CHECK(t.cells()[1].entropy_decimals == 2);
  CHECK(t.cells()[1].percent[4] == 37.5);
  CHECK_THROWS(ReferenceTable::parse_csv("problem,row\nn2-a5\n"));
}

TEST_CASE("rounded row entropy follows the printed rows") {
  CHECK(rounded_row_entropy(Distribution::uniform()) == doctest::Approx(1.7932).epsilon(1e-4));
  CHECK(rounded_row_entropy(Distribution::vertex(3)) == 0.0);
}

TEST_CASE("closed-form table matches the reference") {
  const auto tables = compute_tables(quick({"n6-a6", "n12-a3.5"}));
  const auto report = diff_tables(tables, ReferenceTable::embedded(), Tolerances::standard());
  CHECK(report.cells.size() > 20);
  CHECK(report.failures() == 0);
}

TEST_CASE("n2-a5: one cell off, the L=1 old throw") {
  // The reference prints 25.4/49.1; integration of the stated density gives 25.19/49.62.
  RunConfig c = quick({"n2-a5"});
  c.options.budget.max_evaluations = 1'000'000;
  const auto report = diff_tables(compute_tables(c), ReferenceTable::embedded(), Tolerances::standard());
  REQUIRE(report.failures() == 1);
  for (const auto& cell : report.cells) {
    if (cell.ok) continue;
    CHECK(cell.key.row == "multiplicity");
    CHECK(cell.key.parameter == "1");
    CHECK(cell.throw_kind == Throw::Old);
    CHECK(cell.deviation_pp < 0.6);
  }
}

TEST_CASE("contradictory table renders as undefined") {
  const auto tables = compute_tables(quick({"n1-a3.5"}));
  const auto md = render_markdown(tables[0]);
  CHECK(md.find("undefined") != std::string::npos);
  CHECK(md.find("16.7") != std::string::npos);
  const auto j = table_to_json(tables[0]);
  for (const auto& row : j["rows"]) {
    if (row["model"] == "me") continue;
    CHECK(row["old"]["status"] == "undefined");
    CHECK(row["new"]["status"] == "undefined");
  }
  CHECK(diff_tables(tables, ReferenceTable::embedded(), Tolerances::standard()).failures() == 0);
}

TEST_CASE("json schema") {
  const auto tables = compute_tables(quick({"large-a5"}));
  const auto j = table_to_json(tables[0]);
  CHECK(j["problem"]["id"] == "large-a5");
  CHECK(j["problem"]["regime"] == "large");
  CHECK(j["problem"]["avg"] == "5");
  bool saw_stderr = false, saw_limit = false;
  for (const auto& row : j["rows"]) {
    CHECK(row.contains("model"));
    CHECK(row.contains("param"));
    CHECK(row.contains("method"));
    for (const char* t : {"old", "new"}) {
      if (row[t]["status"] == "undefined") continue;
      CHECK(row[t]["probs"].size() == 6);
      double s = 0;
      for (double p : row[t]["probs"]) s += p;
      CHECK(s == doctest::Approx(1.0));
    }
    saw_stderr |= row.contains("stderr");
    saw_limit |= row.contains("limit");
  }
  CHECK(saw_stderr);
  CHECK(saw_limit);
  CHECK(nlohmann::json::parse(j.dump()) == j);
}

TEST_CASE("csv output") {
  const auto csv = render_csv(compute_tables(quick({"n2-a5"})));
  CHECK(csv.rfind("problem,row,parameter,limit,throw,kind,p1", 0) == 0);
  CHECK(csv.find("\r\n") != std::string::npos);
}

TEST_CASE("output does not depend on worker count") {
  RunConfig one = quick({"n2-a5", "n6-a6", "large-a3.5"});
  RunConfig many = one;
  many.workers = 3;
  const auto a = compute_tables(one), b = compute_tables(many);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(render_markdown(a[i]) == render_markdown(b[i]));
  CHECK(render_csv(a) == render_csv(b));
  one.options.integrator = many.options.integrator = Integrator::MonteCarlo;
  CHECK(render_csv(compute_tables(one)) == render_csv(compute_tables(many)));
}
