#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "mrdebug/errors.hpp"
#include "mrdebug/explain.hpp"
#include "mrdebug/generator.hpp"
#include "mrdebug/mrspec/builtin.hpp"
#include "mrdebug/refcalc.hpp"
#include "support.hpp"

using namespace mrdebug;
using namespace mrdebug::explain;
using testing::household;
using testing::usd;

namespace {

FeatureMatrix one_feature(const std::vector<double>& values, const std::vector<bool>& fail) {
  FeatureMatrix m;
  m.names = {"v"};
  for (std::size_t i = 0; i < values.size(); ++i) {
    m.rows.push_back({values[i]});
    m.case_ids.push_back(static_cast<std::int64_t>(i));
  }
  m.fail = fail;
  return m;
}

// Leaf impurity weighted by row count (unnormalised).
double leaf_cost(const std::vector<std::size_t>& rows, const std::vector<bool>& fail) {
  if (rows.empty()) return 0.0;
  std::int64_t f = 0;
  for (auto r : rows) f += fail[r];
  return gini(f, static_cast<std::int64_t>(rows.size()) - f) * static_cast<double>(rows.size());
}

// Exhaustive search over every split sequence up to `depth` levels.
double brute_force(const std::vector<std::size_t>& rows, const std::vector<double>& v, const std::vector<bool>& fail,
                   int depth) {
  double best = leaf_cost(rows, fail);
  if (depth == 0) return best;
  std::set<double> distinct;
  for (auto r : rows) distinct.insert(v[r]);
  for (auto it = distinct.begin(); std::next(it) != distinct.end(); ++it) {
    const double t = (*it + *std::next(it)) / 2.0;
    std::vector<std::size_t> left, right;
    for (auto r : rows) (v[r] <= t ? left : right).push_back(r);
    best = std::min(best, brute_force(left, v, fail, depth - 1) + brute_force(right, v, fail, depth - 1));
  }
  return best;
}

generator::TestCase make_case(std::int64_t id, const Record& x, const Record& y, bool pass,
                              std::vector<TraceFeature> trace = {}) {
  generator::TestCase tc;
  tc.relation = "P2";
  tc.id = id;
  tc.variables = {"x", "y"};
  tc.source_count = 1;
  tc.bindings = {x, y};
  Output o;
  o.trace = std::move(trace);
  tc.outputs = {o, o};
  tc.pass = pass;
  tc.deviation = pass ? Decimal{} : usd("10");
  return tc;
}

}  // namespace

TEST_CASE("gini") {
  CHECK(gini(2, 2) == doctest::Approx(0.5));
  CHECK(gini(4, 0) == 0.0);
  CHECK(gini(1, 3) == doctest::Approx(0.375));
  CHECK_THROWS_AS(gini(0, 0), ParameterError);
}

TEST_CASE("best split") {
  const std::vector<bool> ffpp{true, true, false, false};
  const std::vector<double> v{10, 20, 100, 110};
  const auto s = best_split(v, ffpp);
  REQUIRE(s.has_value());
  CHECK(s->threshold == 60.0);
  CHECK(s->decrease == doctest::Approx(0.5));

  const std::vector<double> flat{5, 5, 5, 5};
  CHECK_FALSE(best_split(flat, ffpp).has_value());

  const std::vector<double> two{1, 2};
  const auto pure = best_split(two, std::vector<bool>{false, false});
  REQUIRE(pure.has_value());
  CHECK(pure->decrease == 0.0);
}

TEST_CASE("four-row example") {
  const auto tree = fit_cart(one_feature({10, 20, 100, 110}, {true, true, false, false}), TreeParams{5, 1});
  REQUIRE_FALSE(tree.nodes[0].leaf);
  CHECK(tree.nodes[0].threshold == 60.0);
  CHECK(tree.root_feature() == "v");
  CHECK(tree.training_impurity() == 0.0);
  CHECK(tree.depth() == 1);
}

TEST_CASE("oracle equivalence on small datasets") {
  generator::Rng rng(2024);
  const TreeParams params{2, 1};
  for (int suite = 0; suite < 200; ++suite) {
    const auto n = static_cast<std::size_t>(rng.between(1, 8));
    std::vector<double> v(n);
    std::vector<bool> fail(n);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = static_cast<double>(rng.between(0, 5));
      fail[i] = rng.chance(0.5);
    }
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    const double optimum = brute_force(all, v, fail, 2) / static_cast<double>(n);
    const auto tree = fit_cart(one_feature(v, fail), params);
    CAPTURE(suite);
    CHECK(tree.training_impurity() == doctest::Approx(optimum).epsilon(1e-12));
  }
}

TEST_CASE("lookahead solves a parity pattern") {
  // Greedy splits gain nothing at the root; two levels separate perfectly.
  const auto tree = fit_cart(one_feature({1, 2, 3, 4}, {true, false, false, true}), TreeParams{2, 1});
  CHECK(tree.training_impurity() == 0.0);
  CHECK(tree.depth() == 2);
}

TEST_CASE("property: training rows land in leaves that count them") {
  generator::Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    FeatureMatrix m;
    m.names = {"a", "b", "c"};
    const auto n = rng.between(2, 60);
    for (std::int64_t i = 0; i < n; ++i) {
      m.rows.push_back({static_cast<double>(rng.between(0, 9)), static_cast<double>(rng.between(0, 1)),
                        static_cast<double>(rng.between(-5, 5))});
      m.fail.push_back(rng.chance(0.4));
      m.case_ids.push_back(i);
    }
    const TreeParams params{4, static_cast<int>(rng.between(1, 3))};
    const auto tree = fit_cart(m, params);
    std::map<int, std::pair<std::int64_t, std::int64_t>> seen;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
      const int leaf = tree.leaf_for(m.rows[i]);
      REQUIRE(tree.nodes[leaf].leaf);
      (m.fail[i] ? seen[leaf].first : seen[leaf].second)++;
      if (tree.nodes[leaf].depth > 0) CHECK(tree.nodes[leaf].fails + tree.nodes[leaf].passes >= params.min_samples_leaf);
    }
    for (const auto& [leaf, counts] : seen) {
      CHECK(tree.nodes[leaf].fails == counts.first);
      CHECK(tree.nodes[leaf].passes == counts.second);
    }
    CHECK(tree.depth() <= params.max_depth);
    CHECK(render_tree(fit_cart(m, params), Format::dot) == render_tree(tree, Format::dot));
  }
}

TEST_CASE("input-space dataset") {
  const Record x = household({{"sts", EnumTag{"MFS"}}, {"L27", usd("100")}, {"AGI", usd("20000")}});
  std::vector<generator::TestCase> cases;
  for (int i = 0; i < 4; ++i) {
    const Record xi = x.with("AGI", Decimal::from_units(10000 * (i + 1)));
    cases.push_back(make_case(i, xi, xi.with("L27", Decimal{}), i >= 2));
  }
  const auto m = build_dataset(cases, Space::input);
  for (const std::string name : {"sts_MFS", "sts_MFJ", "L27", "AGI", "blind"}) {
    CHECK(std::find(m.names.begin(), m.names.end(), name) != m.names.end());
  }
  CHECK(m.size() == 4);
  CHECK(m.fail_count() == 2);
  const auto agi = std::find(m.names.begin(), m.names.end(), "AGI") - m.names.begin();
  CHECK(m.rows[3][static_cast<std::size_t>(agi)] == 40000.0);
}

TEST_CASE("internal-space dataset") {
  const Record x = household({{"sts", EnumTag{"MFS"}}});
  std::vector<generator::TestCase> cases;
  cases.push_back(make_case(0, x, x, false, {{"branch@eitc_mfs:taken", usd("0")}, {"loop@qc:count", usd("2")}}));
  cases.push_back(make_case(1, x, x, true, {{"loop@qc:count", usd("1")}}));
  const auto m = build_dataset(cases, Space::internal);
  CHECK(m.names ==
        std::vector<std::string>{"branch@eitc_mfs:taken", "branch@eitc_mfs:taken:present", "loop@qc:count"});
  CHECK(m.rows[1][0] == kMissing);
  CHECK(m.rows[1][1] == 0.0);
  CHECK(m.rows[0][1] == 1.0);

  std::vector<generator::TestCase> bare{make_case(0, x, x, false), make_case(1, x, x, true)};
  CHECK_THROWS_AS(build_dataset(bare, Space::internal), Skipped);
}

TEST_CASE("single class and empty logs are skipped") {
  const Record x = household();
  std::vector<generator::TestCase> passes{make_case(0, x, x, true), make_case(1, x, x, true)};
  CHECK_THROWS_WITH_AS(build_dataset(passes, Space::input), doctest::Contains("single class"), Skipped);
  CHECK_THROWS_AS(build_dataset(std::vector<generator::TestCase>{}, Space::input), Skipped);
}

TEST_CASE("rendering") {
  const auto tree = fit_cart(one_feature({10, 20, 100, 110}, {true, true, false, false}), TreeParams{5, 1});
  CHECK(render_tree(tree, Format::text) ==
        "v ≤ 60\n"
        "  ├─ yes: fail (fail=2, pass=0)\n"
        "  └─ no: pass (fail=0, pass=2)\n");
  const auto dot = render_tree(tree, Format::dot);
  CHECK(dot.rfind("digraph tree {", 0) == 0);
  CHECK(dot.find("v ≤ 60") != std::string::npos);
  CHECK(format_number(56844.5) == "56844.5");
  CHECK(format_number(-0.5) == "-0.5");
}

TEST_CASE("space names") {
  CHECK(parse_space("input") == Space::input);
  CHECK(parse_space("internal") == Space::internal);
  CHECK_THROWS_AS(parse_space("output"), ParameterError);
}
