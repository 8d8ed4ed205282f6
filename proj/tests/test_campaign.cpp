#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "log_check.hpp"
#include "mrdebug/campaign.hpp"
#include "mrdebug/errors.hpp"
#include "mrdebug/refcalc.hpp"
#include "support.hpp"

using namespace mrdebug;
using namespace mrdebug::campaign;
using testing::usd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mrdebug-test-" + std::to_string(::getpid()) + "-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

CampaignConfig small_config(const std::string& relation, const std::string& mutants) {
  CampaignConfig c;
  c.builtin_year = 2020;
  c.relations = {relation};
  c.sut.mutants = mutants;
  c.search.budget = 3000;
  c.sources_per_relation = 5;
  c.parallelism = 1;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(ordered_json::parse(R"({"builtin_year": 2020, "sut": {"kind": "refcalc", "mutants": "M1"},
      "search": {"seed": 9, "budget": 100}, "jeffreys": {"theta": 0.99}})"),
                              "/tmp");
  CHECK(c.builtin_year == 2020);
  CHECK(c.search.seed == 9);
  CHECK(c.search.budget == 100);
  CHECK(c.jeffreys.theta == 0.99);
  CHECK(c.sut.mutants == "M1");
  CHECK_NOTHROW(c.validate());

  CHECK_THROWS_AS(parse_config(ordered_json::parse(R"({"builtin_year": 2020, "sut": {}, "colour": 1})"), "/tmp"), SpecError);
  CHECK_THROWS_AS(parse_config(ordered_json::parse(R"({"builtin_year": 2020})"), "/tmp"), SpecError);
  CHECK_THROWS_AS(parse_config(ordered_json::parse(R"({"builtin_year": 2020, "sut": {"kind": "oracle"}})"), "/tmp"),
                  SpecError);
  CHECK_THROWS_AS(parse_config(ordered_json::parse(R"({"builtin_year": 2020, "sut": {"mutants": "M7"}})"), "/tmp"),
                  SpecError);

  auto both = parse_config(ordered_json::parse(R"({"builtin_year": 2020, "specs": ["a.mr"], "sut": {}})"), "/tmp");
  CHECK_THROWS_AS(both.validate(), SpecError);
  auto missing = parse_config(ordered_json::parse(R"({"specs": ["does-not-exist.mr"], "sut": {}})"), "/tmp");
  CHECK_THROWS_AS(missing.validate(), SpecError);
}

TEST_CASE("bundled configs load") {
  for (const auto& entry : fs::directory_iterator(MRDEBUG_SOURCE_DIR "/configs")) {
    const auto name = entry.path().filename().string();
    if (name.rfind("diff_", 0) == 0) continue;
    CAPTURE(name);
    CHECK_NOTHROW(load_config(entry.path()).validate());
  }
}

TEST_CASE("relation loading") {
  CampaignConfig c;
  c.builtin_year = 2020;
  const auto schema = us1040_schema();
  CHECK(load_relations(c, schema).size() == 7);
  c.relations = {"P4"};
  CHECK(load_relations(c, schema).size() == 3);
  c.relations = {"A1"};
  auto a1 = load_relations(c, schema);
  REQUIRE(a1.size() == 1);
  CHECK_FALSE(a1[0].engine_supported);
  c.relations = {"P9"};
  CHECK_THROWS_AS(load_relations(c, schema), SpecError);

  CampaignConfig files;
  files.base_dir = MRDEBUG_SOURCE_DIR;
  files.specs = {"specs/builtin_2021.mr", "specs/annuity_sample.mr"};
  CHECK(load_relations(files, schema).size() == 7);
}

TEST_CASE("check specs") {
  const auto schema = us1040_schema();
  const auto ok = check_specs({MRDEBUG_SOURCE_DIR "/specs/builtin_2020.mr"}, schema);
  CHECK(ok.ok);
  CHECK(ok.summary() == "5 relations + 2 disjunct expansions OK");

  const fs::path dir = scratch("check");
  std::ofstream(dir / "bad.mr") << "relation \"B\" {\n  forall x;\n  forall y;\n  where x.blind > 3;\n"
                                   "  metamorphose y from x except {};\n  assert F(x) == F(y);\n}\n";
  const auto bad = check_specs({dir / "bad.mr"}, schema);
  CHECK_FALSE(bad.ok);
  REQUIRE(bad.diagnostics.size() == 1);
  CHECK(bad.diagnostics[0].find("bad.mr:4:") != std::string::npos);
  CHECK(bad.diagnostics[0].find("comparison on boolean label") != std::string::npos);

  const auto missing = check_specs({dir / "missing.mr"}, schema);
  CHECK_FALSE(missing.ok);
  CHECK(missing.diagnostics[0].find("cannot read") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("clean campaign report") {
  CampaignConfig c;
  c.builtin_year = 2020;
  c.sources_per_relation = 3;
  c.parallelism = 2;
  const auto report = run_campaign(c);
  CHECK(report.k == 44);
  CHECK(report.exit_code() == 0);
  REQUIRE(report.relations.size() == 7);
  for (const auto& rr : report.relations) {
    CHECK(rr.result.fail_count() == 0);
    CHECK(rr.status() == "certified");
    CHECK(rr.result.cases.size() == 3 * 44);
  }
  const auto md = report_markdown(report);
  CHECK(md.find("| Property | #test cases | #fail | #pass | T_F(s) |") != std::string::npos);
  CHECK(md.find("| P1 | 132 | 0 | 132 | N/A | certified |") != std::string::npos);
}

TEST_CASE("mutant campaign falsifies and exits 2") {
  const auto report = run_campaign(small_config("P2", "M1"));
  REQUIRE(report.relations.size() == 1);
  const auto& rr = report.relations[0];
  CHECK(rr.falsified());
  CHECK(rr.result.first_failure.has_value());
  CHECK(rr.result.time_to_first_failure.has_value());
  CHECK(report.exit_code() == 2);
  const auto j = report_to_json(report);
  const auto& rel = j["relations"][0];
  CHECK(rel["fail"].get<int>() + rel["pass"].get<int>() == rel["tests"].get<int>());
  CHECK(!rel["exemplars"].empty());
  CHECK(rel["explanation"]["internal"]["root"] == "branch@eitc_mfs:taken");
}

TEST_CASE("tiny budget is inconclusive, not a failure") {
  CampaignConfig c = small_config("P2", "");
  c.search.budget = 10;
  c.jeffreys.theta = 0.99;
  const auto report = run_campaign(c);
  CHECK(report.k == 459);
  CHECK(report.any_inconclusive());
  CHECK(report.exit_code() == 0);
  CHECK(report_to_json(report)["summary"]["inconclusive"].size() == 1);
}

TEST_CASE("unsatisfiable relations are reported, not fatal") {
  const fs::path dir = scratch("unsat");
  std::ofstream(dir / "u.mr") << "relation \"U\" {\n  forall x;\n  forall y;\n  where x.AGI > 199999;\n"
                                 "  metamorphose y from x except {};\n  assert F(x) == F(y);\n}\n";
  CampaignConfig c;
  c.base_dir = dir;
  c.specs = {"u.mr"};
  const auto report = run_campaign(c);
  REQUIRE(report.relations.size() == 1);
  CHECK(report.relations[0].status() == "skipped");
  CHECK(report.exit_code() == 0);
  fs::remove_all(dir);
}

TEST_CASE("reports are deterministic and logs validate") {
  const CampaignConfig c = small_config("P5", "M3");
  const fs::path a = scratch("det-a"), b = scratch("det-b");
  for (const auto& dir : {a, b}) {
    const auto report = run_campaign(c);
    write_report(report, load_relations(c, us1040_schema()), dir);
  }
  CHECK(slurp(a / "cases.jsonl") == slurp(b / "cases.jsonl"));
  auto ja = ordered_json::parse(slurp(a / "report.json"));
  auto jb = ordered_json::parse(slurp(b / "report.json"));
  ja.erase("metadata");
  jb.erase("metadata");
  CHECK(ja.dump() == jb.dump());
  CHECK(fs::exists(a / "report.md"));
  CHECK(fs::exists(a / "P5_input.dot"));

  std::ifstream log(a / "cases.jsonl");
  const auto summary = logcheck::check_log(log);
  CHECK(summary.cases > 0);
  CHECK(summary.constraints == 2 * summary.cases);
  CHECK(summary.violations.empty());

  std::ifstream again(a / "cases.jsonl");
  const auto cases = read_cases(again, us1040_schema());
  CHECK(cases.size() == summary.cases);
  CHECK(case_to_json(cases[0]).dump().size() > 0);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("log round trip") {
  const auto report = run_campaign(small_config("P2", "M1"));
  const auto rels = load_relations(small_config("P2", "M1"), us1040_schema());
  for (const auto& tc : report.relations[0].result.cases) {
    const auto j = case_to_json(tc, &rels[0].rel);
    const auto back = case_from_json(j, us1040_schema());
    CHECK(case_to_json(back, &rels[0].rel) == j);
  }
}

TEST_CASE("diff of identical SUTs") {
  const refcalc::RefcalcSut sut(refcalc::RuleTable::for_year(2020));
  DiffConfig cfg;
  cfg.samples = 500;
  const auto r = run_diff(sut, sut, us1040_schema(), cfg);
  CHECK(r.samples == 500);
  CHECK(r.discrepancies == 0);
  CHECK(r.rate() == 0.0);
}

TEST_CASE("diff recovers a planted region") {
  const auto schema = us1040_schema();
  const auto& agi = schema->field("AGI").numeric();
  REQUIRE(agi.grid_size() == 200000);
  const Decimal t = usd("56844");
  const refcalc::ScreenSut ground(t);
  for (const auto& [p, points] : std::vector<std::pair<double, std::int64_t>>{{0.01, 2000}, {0.046, 9200}, {0.10, 20000}}) {
    const Decimal shifted = t - Decimal::from_units(points);
    // Region (shifted, t] holds exactly `points` grid values.
    CHECK((t - shifted).cents() / agi.step.cents() == points);
    CHECK(static_cast<double>(points) / static_cast<double>(agi.grid_size()) == doctest::Approx(p));
    const refcalc::ScreenSut target(shifted);
    DiffConfig cfg;
    cfg.seed = 1;
    const auto r = run_diff(ground, target, schema, cfg);
    CAPTURE(p);
    CHECK(std::abs(r.rate() - p) <= 0.02);
    CHECK(r.exemplars.size() == 20);
    for (const auto& e : r.exemplars) {
      CHECK(e.record.decimal("AGI") > shifted);
      CHECK(e.record.decimal("AGI") <= t);
    }
  }
}

TEST_CASE("diff counts crashes") {
  class CrashOnce final : public Sut {
   public:
    explicit CrashOnce(Record bad) : bad_(std::move(bad)) {}
    Output evaluate(const Record& r) const override {
      if (r == bad_) throw SutFailure(SutFailure::Kind::exit_code, "crashed");
      return Output{};
    }
    std::string name() const override { return "crash-once"; }

   private:
    Record bad_;
  };
  generator::Rng rng(0);
  const Record first = generator::sample_uniform(us1040_schema(), rng);
  class Zero final : public Sut {
   public:
    Output evaluate(const Record&) const override { return Output{}; }
    std::string name() const override { return "zero"; }
  };
  DiffConfig cfg;
  cfg.samples = 50;
  const auto r = run_diff(Zero{}, CrashOnce{first}, us1040_schema(), cfg);
  CHECK(r.discrepancies == 1);
  CHECK(r.crashes == 1);
  CHECK(diff_to_json(r)["exemplars"][0]["kind"] == "crash");
}
