// Acceptance report: one PASS/FAIL line per criterion.
//   acceptance [--criterion N] [--part m1|m4]
#include <CLI11.hpp>
#include <mpfr.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "log_check.hpp"
#include "mrdebug/campaign.hpp"
#include "mrdebug/explain.hpp"
#include "mrdebug/mrspec/builtin.hpp"
#include "mrdebug/refcalc.hpp"
#include "mrdebug/schema_io.hpp"
#include "mrdebug/stats.hpp"

using namespace mrdebug;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Result {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Logs produced by the campaigns below, re-checked by criterion 9.
std::vector<std::string>& collected_logs() {
  static std::vector<std::string> logs;
  return logs;
}

std::string log_text(const campaign::CampaignReport& report, const campaign::CampaignConfig& config) {
  const auto rels = campaign::load_relations(config, campaign::load_campaign_schema(config));
  std::string out;
  for (const auto& rr : report.relations) {
    const mrspec::ExecutableRelation* rel = nullptr;
    for (const auto& r : rels) {
      if (r.rel.name == rr.result.name) rel = &r.rel;
    }
    for (const auto& tc : rr.result.cases) out += campaign::case_to_json(tc, rel).dump() + "\n";
  }
  return out;
}

campaign::CampaignReport run_logged(const campaign::CampaignConfig& config) {
  auto report = campaign::run_campaign(config);
  collected_logs().push_back(log_text(report, config));
  return report;
}

campaign::CampaignConfig mutant_config(const std::string& relation, const std::string& mutant, std::uint64_t seed) {
  campaign::CampaignConfig c;
  c.builtin_year = 2020;
  c.relations = {relation};
  c.sut.mutants = mutant;
  c.search.seed = seed;
  c.parallelism = 1;
  return c;
}

std::int64_t k_oracle(const char* theta, const char* bayes) {
  mpfr_t t, b, q, d;
  mpfr_inits2(256, t, b, q, d, static_cast<mpfr_ptr>(nullptr));
  mpfr_set_str(t, theta, 10, MPFR_RNDN);
  mpfr_set_str(b, bayes, 10, MPFR_RNDN);
  mpfr_log2(q, b, MPFR_RNDN);
  mpfr_log2(d, t, MPFR_RNDN);
  mpfr_div(q, q, d, MPFR_RNDN);
  mpfr_neg(q, q, MPFR_RNDN);
  mpfr_ceil(q, q);
  const auto k = static_cast<std::int64_t>(mpfr_get_si(q, MPFR_RNDN));
  mpfr_clears(t, b, q, d, static_cast<mpfr_ptr>(nullptr));
  return k;
}

Result criterion1() {
  Result r;
  const std::vector<std::tuple<double, const char*, std::int64_t>> cases{{0.5, "0.5", 7}, {0.9, "0.9", 44}, {0.99, "0.99", 459}};
  for (const auto& [theta, text, expected] : cases) {
    const auto start = Clock::now();
    const auto k = stats::jeffreys_k({theta, 100});
    const double elapsed = seconds_since(start);
    const auto oracle = k_oracle(text, "100");
    r.detail << " K(" << text << ",100)=" << k << " oracle=" << oracle << " t=" << elapsed * 1e6 << "us";
    r.require(k == expected && oracle == expected, "value");
    r.require(elapsed < 1e-3, "runtime");
  }
  return r;
}

Result criterion2() {
  Result r;
  campaign::CampaignConfig c;
  c.builtin_year = 2020;
  const auto start = Clock::now();
  const auto report = run_logged(c);
  const double elapsed = seconds_since(start);
  std::size_t certified = 0, sources = 0;
  for (const auto& rr : report.relations) {
    r.require(rr.result.fail_count() == 0, rr.result.name + " has failures");
    for (const auto& v : rr.result.verdicts) {
      ++sources;
      if (v.outcome == stats::Outcome::certified_pass) {
        ++certified;
        r.require(v.consecutive_passes == 44, rr.result.name + " source passes != 44");
      } else {
        r.require(false, rr.result.name + " source not certified");
      }
    }
    r.require(rr.result.verdicts.size() == 20, rr.result.name + " != 20 sources");
  }
  r.require(report.k == 44, "K");
  r.require(elapsed < 60, "runtime");
  r.detail << " " << report.relations.size() << " relations, " << certified << "/" << sources
           << " sources certified at K=" << report.k << ", " << elapsed << "s";
  return r;
}

Result criterion3() {
  Result r;
  const auto start = Clock::now();
  const std::vector<std::pair<std::string, std::string>> matrix{{"M1", "P2"}, {"M2", "P3"}, {"M3", "P5"}, {"M4", "P1"}};
  for (const auto& [mutant, relation] : matrix) {
    std::int64_t worst = 0;
    double worst_tf = 0;
    bool all = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto report = run_logged(mutant_config(relation, mutant, seed));
      const auto& res = report.relations.at(0).result;
      if (!res.first_failure || *res.first_failure >= 5000 || !res.time_to_first_failure) {
        all = false;
        r.require(false, mutant + "/" + relation + " seed " + std::to_string(seed));
        continue;
      }
      worst = std::max(worst, *res.first_failure + 1);
      worst_tf = std::max(worst_tf, *res.time_to_first_failure);
    }
    r.detail << " " << mutant << "/" << relation << ": " << (all ? "20/20" : "missed") << " seeds, worst first failure at test "
             << worst << ", T_F<=" << worst_tf << "s;";
  }
  const double elapsed = seconds_since(start);
  r.require(elapsed < 120, "runtime");
  r.detail << " total " << elapsed << "s";
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result criterion4() {
  Result r;
  const std::map<int, std::string> expected{{2018, "54884"}, {2019, "55952"}, {2020, "56844"}, {2021, "57414"}};
  for (const auto& [year, threshold] : expected) {
    const std::string golden = slurp(fs::path(MRDEBUG_SOURCE_DIR) / "specs" / ("builtin_" + std::to_string(year) + ".mr"));
    const std::string emitted = mrspec::builtin_library_text(year);
    r.require(!golden.empty() && golden == emitted, std::to_string(year) + " golden mismatch");
    r.require(emitted.find("x.AGI > " + threshold + ";") != std::string::npos, std::to_string(year) + " P3 threshold");
    r.require(emitted.find("x.AGI <= " + threshold + " && y.AGI > " + threshold) != std::string::npos,
              std::to_string(year) + " P4 threshold");
    r.detail << " " << year << "=" << threshold;
  }
  return r;
}

double leaf_cost(const std::vector<std::size_t>& rows, const std::vector<bool>& fail) {
  if (rows.empty()) return 0;
  double f = 0;
  for (auto i : rows) f += fail[i];
  const double n = static_cast<double>(rows.size());
  return n * (1 - (f / n) * (f / n) - ((n - f) / n) * ((n - f) / n));
}

double brute(const std::vector<std::size_t>& rows, const std::vector<double>& v, const std::vector<bool>& fail, int depth) {
  double best = leaf_cost(rows, fail);
  if (depth == 0) return best;
  std::vector<double> values;
  for (auto i : rows) values.push_back(v[i]);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  for (std::size_t k = 0; k + 1 < values.size(); ++k) {
    const double t = (values[k] + values[k + 1]) / 2;
    std::vector<std::size_t> l, h;
    for (auto i : rows) (v[i] <= t ? l : h).push_back(i);
    best = std::min(best, brute(l, v, fail, depth - 1) + brute(h, v, fail, depth - 1));
  }
  return best;
}

Result criterion5() {
  Result r;
  generator::Rng rng(5);
  int agree = 0;
  for (int s = 0; s < 200; ++s) {
    const auto n = static_cast<std::size_t>(rng.between(1, 8));
    explain::FeatureMatrix m;
    m.names = {"f"};
    std::vector<double> v;
    std::vector<std::size_t> all;
    for (std::size_t i = 0; i < n; ++i) {
      v.push_back(static_cast<double>(rng.between(0, 6)));
      m.rows.push_back({v.back()});
      m.fail.push_back(rng.chance(0.5));
      m.case_ids.push_back(static_cast<std::int64_t>(i));
      all.push_back(i);
    }
    const double optimum = brute(all, v, m.fail, 2) / static_cast<double>(n);
    const auto tree = explain::fit_cart(m, {2, 1});
    if (std::abs(tree.training_impurity() - optimum) <= 1e-12) ++agree;
  }
  r.require(agree == 200, "brute-force optimum");
  explain::FeatureMatrix four;
  four.names = {"AGI"};
  four.rows = {{10}, {20}, {100}, {110}};
  four.fail = {true, true, false, false};
  four.case_ids = {0, 1, 2, 3};
  const auto tree = explain::fit_cart(four, {5, 1});
  const bool root60 = !tree.nodes[0].leaf && tree.nodes[0].threshold == 60.0;
  r.require(root60 && tree.training_impurity() == 0.0, "4-row example");
  r.detail << " " << agree << "/200 datasets at the optimum; 4-row root "
           << (tree.nodes[0].leaf ? std::string("leaf") : explain::format_number(tree.nodes[0].threshold))
           << ", impurity " << tree.training_impurity();
  return r;
}

Result criterion6(const std::string& part) {
  Result r;
  struct Half {
    std::string name, mutant, relation, root;
    explain::Space space;
  };
  const std::vector<Half> halves{{"m1", "M1", "P2", "branch@eitc_mfs:taken", explain::Space::internal},
                                 {"m4", "M4", "P1", "s_blind", explain::Space::input}};
  for (const auto& h : halves) {
    if (!part.empty() && part != h.name) continue;
    int hits = 0;
    std::map<std::string, int> roots;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto c = mutant_config(h.relation, h.mutant, seed);
      c.search.budget = 5000;
      const auto report = run_logged(c);
      const auto& rr = report.relations.at(0);
      const auto& e = h.space == explain::Space::internal ? rr.internal : rr.input;
      const std::string root = e.tree && e.tree->root_feature() ? *e.tree->root_feature() : "(" + e.skipped + ")";
      ++roots[root];
      hits += root == h.root;
    }
    r.detail << " " << h.mutant << "/" << h.relation << " " << explain::to_string(h.space) << " root = " << h.root
             << " in " << hits << "/10 (roots seen:";
    for (const auto& [name, n] : roots) r.detail << " " << name << " x" << n;
    r.detail << ");";
    r.require(hits == 10, h.mutant + "/" + h.relation + " root");
  }
  return r;
}

Result criterion7() {
  Result r;
  const auto schema = us1040_schema();
  const auto& agi = schema->field("AGI").numeric();
  const Decimal t = Decimal::from_units(56844);
  const refcalc::ScreenSut ground(t);
  for (double p : {0.01, 0.046, 0.10}) {
    const auto points = static_cast<std::int64_t>(std::llround(p * static_cast<double>(agi.grid_size())));
    const Decimal shifted = t - Decimal::from_cents(points * agi.step.cents());
    const double exact = static_cast<double>(points) / static_cast<double>(agi.grid_size());
    const refcalc::ScreenSut target(shifted);
    campaign::DiffConfig cfg;
    cfg.samples = 10000;
    cfg.seed = 7;
    const auto d = campaign::run_diff(ground, target, schema, cfg);
    r.require(std::abs(exact - p) < 1e-12, "planted measure");
    r.require(std::abs(d.rate() - p) <= 0.02, "rate for p=" + explain::format_number(p));
    r.detail << " p=" << p << " rate=" << d.rate() << ";";
  }
  return r;
}

Result criterion8() {
  Result r;
  const fs::path base = fs::temp_directory_path() / ("mrdebug-accept-" + std::to_string(::getpid()));
  std::vector<std::pair<std::string, std::string>> outputs;
  for (const char* run : {"a", "b"}) {
    campaign::CampaignConfig c;
    c.builtin_year = 2020;
    c.sut.mutants = "M1,M3";
    c.search.seed = 3;
    c.search.budget = 5000;
    const auto report = run_logged(c);
    const fs::path dir = base / run;
    campaign::write_report(report, campaign::load_relations(c, us1040_schema()), dir);
    auto j = campaign::ordered_json::parse(slurp(dir / "report.json"));
    j.erase("metadata");
    outputs.emplace_back(slurp(dir / "cases.jsonl"), j.dump(2));
  }
  fs::remove_all(base);
  r.require(!outputs[0].first.empty() && outputs[0].first == outputs[1].first, "cases.jsonl differs");
  r.require(outputs[0].second == outputs[1].second, "report.json differs");
  r.detail << " cases.jsonl " << outputs[0].first.size() << " bytes, report.json " << outputs[0].second.size()
           << " bytes, identical across runs";
  return r;
}

Result criterion9() {
  Result r;
  if (collected_logs().empty()) {
    for (const auto& [mutant, relation] : std::vector<std::pair<std::string, std::string>>{
             {"", "P1"}, {"M1", "P2"}, {"M2", "P3"}, {"M3", "P5"}, {"M4", "P1"}, {"", "P4"}}) {
      (void)run_logged(mutant_config(relation, mutant, 0));
    }
  }
  std::size_t cases = 0, constraints = 0, bad = 0;
  for (const auto& text : collected_logs()) {
    std::istringstream in(text);
    const auto s = logcheck::check_log(in);
    cases += s.cases;
    constraints += s.constraints;
    bad += s.violations.size();
  }
  r.require(bad == 0 && cases > 0, "violations");
  r.detail << " " << collected_logs().size() << " logs, " << cases << " cases, " << constraints << " constraints, " << bad
           << " violations";
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  std::string part;
  app.add_option("--criterion", only, "Run a single criterion (1-9)")->check(CLI::Range(1, 9));
  app.add_option("--part", part, "Criterion 6 half: m1 or m4")->check(CLI::IsMember({"m1", "m4"}));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Result()>> criteria{
      criterion1, criterion2, criterion3, criterion4, criterion5, [&] { return criterion6(part); },
      criterion7, criterion8, criterion9};
  bool all = true;
  for (int i = 1; i <= 9; ++i) {
    if (only != 0 && only != i) continue;
    Result res;
    try {
      res = criteria[static_cast<std::size_t>(i - 1)]();
    } catch (const std::exception& e) {
      res.pass = false;
      res.detail << " [error: " << e.what() << "]";
    }
    std::cout << "criterion " << i << ": " << (res.pass ? "PASS" : "FAIL") << res.detail.str() << std::endl;
    all = all && res.pass;
  }
  return all ? 0 : 1;
}
