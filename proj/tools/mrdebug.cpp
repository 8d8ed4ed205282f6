// mrdebug: metamorphic testing campaigns for tax-preparation software.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "mrdebug/campaign.hpp"
#include "mrdebug/errors.hpp"
#include "mrdebug/mrspec/builtin.hpp"
#include "mrdebug/refcalc.hpp"
#include "mrdebug/schema_io.hpp"

namespace fs = std::filesystem;
using namespace mrdebug;
using campaign::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kFound = 2;
constexpr int kSingleClass = 3;

ordered_json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError(path.string() + ": cannot read file");
  try {
    return ordered_json::parse(in);
  } catch (const ordered_json::parse_error& e) {
    throw SpecError(path.string() + ": " + e.what());
  }
}

// A diff side is either a bare SUT object or {"sut": {...}}.
campaign::SutSpec read_sut_file(const fs::path& path) {
  ordered_json j = read_json(path);
  if (j.is_object() && j.contains("sut")) j = j["sut"];
  return campaign::parse_sut(j, path.parent_path());
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SpecError(path.string() + ": cannot write file");
  out << text;
}

SchemaPtr schema_or_default(const std::string& path) {
  return path.empty() ? us1040_schema() : load_schema(path);
}

struct TestOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> budget;
  std::optional<double> theta;
  std::optional<std::string> mutants;
  std::optional<std::string> report_dir;
  std::optional<unsigned> parallelism;
  std::vector<std::string> relations;
  bool no_explain = false;
};

int cmd_check(const std::vector<std::string>& files, const std::string& schema_path) {
  const SchemaPtr schema = schema_or_default(schema_path);
  std::vector<fs::path> paths(files.begin(), files.end());
  const auto result = campaign::check_specs(paths, schema);
  for (const auto& d : result.diagnostics) std::cerr << d << "\n";
  std::cout << result.summary() << "\n";
  return result.ok ? kOk : kError;
}

int cmd_test(const TestOptions& opt) {
  const fs::path config_path = opt.config;
  auto config = campaign::load_config(config_path);
  if (opt.seed) config.search.seed = *opt.seed;
  if (opt.budget) config.search.budget = *opt.budget;
  if (opt.theta) config.jeffreys.theta = *opt.theta;
  if (opt.mutants) {
    if (config.sut.kind != "refcalc") throw SpecError("--mutants needs a refcalc SUT");
    config.sut.mutants = *opt.mutants;
    (void)refcalc::MutantSet::parse(config.sut.mutants);
  }
  if (opt.report_dir) config.report_dir = fs::current_path() / *opt.report_dir;
  if (opt.parallelism) config.parallelism = *opt.parallelism;
  if (!opt.relations.empty()) config.relations = opt.relations;
  if (opt.no_explain) config.explain = false;

  const auto report = campaign::run_campaign(config);
  const auto relations = campaign::load_relations(config, campaign::load_campaign_schema(config));
  const fs::path dir = config.resolve(config.report_dir);
  campaign::write_report(report, relations, dir);

  for (const auto& rr : report.relations) {
    const auto& r = rr.result;
    std::cout << r.name << ": " << rr.status() << " (" << r.cases.size() << " tests, " << r.fail_count()
              << " fail)";
    if (r.skipped) std::cout << " " << *r.skipped;
    std::cout << "\n";
  }
  if (report.any_inconclusive()) std::cout << "inconclusive verdicts present\n";
  std::cout << "report written to " << dir.string() << "\n";
  return report.exit_code();
}

int cmd_diff(const std::string& ground_path, const std::string& target_path, const std::string& schema_path,
             const campaign::DiffConfig& config, const std::string& out) {
  const auto ground = campaign::make_sut(read_sut_file(ground_path));
  const auto target = campaign::make_sut(read_sut_file(target_path));
  const auto report = campaign::run_diff(*ground, *target, schema_or_default(schema_path), config);
  const std::string json = campaign::diff_to_json(report).dump(2) + "\n";
  if (out.empty()) {
    std::cout << json;
  } else {
    write_file(out, json);
    std::cout << report.discrepancies << " discrepancies in " << report.samples << " samples (rate "
              << report.rate() << ")\n";
  }
  return report.discrepancies == 0 ? kOk : kFound;
}

struct ExplainOptions {
  std::string log;
  std::string space = "internal";
  std::string relation;
  std::string schema;
  std::string out;
  explain::TreeParams tree;
};

int cmd_explain(const ExplainOptions& opt) {
  const auto space = explain::parse_space(opt.space);
  std::ifstream in(opt.log);
  if (!in) throw SpecError(opt.log + ": cannot read file");
  auto cases = campaign::read_cases(in, schema_or_default(opt.schema));

  std::string relation = opt.relation;
  if (relation.empty()) {
    std::set<std::string> names;
    for (const auto& tc : cases) names.insert(tc.relation);
    if (names.size() > 1) throw SpecError("log holds several relations; pick one with --relation");
    if (!names.empty()) relation = *names.begin();
  }
  std::erase_if(cases, [&](const auto& tc) { return tc.relation != relation; });

  explain::DecisionTree tree;
  try {
    tree = explain::fit_cart(explain::build_dataset(cases, space), opt.tree);
  } catch (const explain::Skipped& e) {
    std::cerr << "cannot explain " << (relation.empty() ? "log" : relation) << ": " << e.what() << "\n";
    return kSingleClass;
  }
  const std::string text = explain::render_tree(tree, explain::Format::text);
  std::cout << text;
  if (!opt.out.empty()) {
    const fs::path dir = opt.out;
    const std::string stem = relation + "_" + std::string(explain::to_string(space));
    write_file(dir / (stem + ".dot"), explain::render_tree(tree, explain::Format::dot));
    write_file(dir / (stem + ".txt"), text);
  }
  return kOk;
}

int cmd_emit(std::optional<int> year, bool annuity, bool schema) {
  if (schema) {
    std::cout << dump_schema(*us1040_schema());
  } else if (annuity) {
    std::cout << mrspec::annuity_sample_text();
  } else {
    std::cout << mrspec::builtin_library_text(year.value_or(2020));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metamorphic testing and data-driven debugging for tax software"};
  app.set_version_flag("--version", std::string(campaign::kToolVersion));
  app.require_subcommand(1);

  std::vector<std::string> check_files;
  std::string check_schema;
  auto* check = app.add_subcommand("check", "Parse and compile relation specs");
  check->add_option("files", check_files, "Spec files")->required();
  check->add_option("--schema", check_schema, "Schema JSON (default: bundled us1040)");

  TestOptions test_opt;
  auto* test = app.add_subcommand("test", "Run a metamorphic testing campaign");
  test->add_option("config", test_opt.config, "Campaign JSON")->required();
  test->add_option("--seed", test_opt.seed, "Override search seed");
  test->add_option("--budget", test_opt.budget, "Override per-relation evaluation budget");
  test->add_option("--theta", test_opt.theta, "Override Jeffreys theta");
  test->add_option("--mutants", test_opt.mutants, "Override refcalc mutants, e.g. M1,M3");
  test->add_option("--report-dir", test_opt.report_dir, "Override report directory");
  test->add_option("--parallelism", test_opt.parallelism, "Worker threads (0: all cores)");
  test->add_option("--relation", test_opt.relations, "Restrict to these relations");
  test->add_flag("--no-explain", test_opt.no_explain, "Skip decision trees");

  std::string ground, target, diff_schema, diff_out;
  campaign::DiffConfig diff_cfg;
  std::string diff_eps = "0.01";
  auto* diff = app.add_subcommand("diff", "Differential testing of two SUTs");
  diff->add_option("--ground", ground, "Ground SUT JSON")->required();
  diff->add_option("--target", target, "Target SUT JSON")->required();
  diff->add_option("--samples", diff_cfg.samples, "Number of uniform records")->capture_default_str();
  diff->add_option("--seed", diff_cfg.seed, "Sampling seed")->capture_default_str();
  diff->add_option("--epsilon", diff_eps, "Tolerance")->capture_default_str();
  diff->add_option("--schema", diff_schema, "Schema JSON");
  diff->add_option("--out", diff_out, "Write the JSON report here instead of stdout");

  ExplainOptions ex_opt;
  auto* expl = app.add_subcommand("explain", "Fit a decision tree to a campaign log");
  expl->add_option("--log", ex_opt.log, "cases.jsonl")->required();
  expl->add_option("--space", ex_opt.space, "input | internal")->capture_default_str();
  expl->add_option("--relation", ex_opt.relation, "Relation to explain");
  expl->add_option("--schema", ex_opt.schema, "Schema JSON");
  expl->add_option("--max-depth", ex_opt.tree.max_depth)->capture_default_str();
  expl->add_option("--min-leaf", ex_opt.tree.min_samples_leaf)->capture_default_str();
  expl->add_option("--out", ex_opt.out, "Directory for .dot and .txt output");

  std::optional<int> emit_year;
  bool emit_annuity = false, emit_schema = false;
  auto* emit = app.add_subcommand("emit-builtin", "Print the builtin relation library or schema");
  emit->add_option("--year", emit_year, "Tax year");
  emit->add_flag("--annuity", emit_annuity, "Print the annuity sample relations");
  emit->add_flag("--schema", emit_schema, "Print the bundled schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kError;
  }

  try {
    if (*check) return cmd_check(check_files, check_schema);
    if (*test) return cmd_test(test_opt);
    if (*diff) {
      diff_cfg.epsilon = Decimal::parse(diff_eps);
      return cmd_diff(ground, target, diff_schema, diff_cfg, diff_out);
    }
    if (*expl) {
      ex_opt.tree.validate();
      return cmd_explain(ex_opt);
    }
    if (*emit) return cmd_emit(emit_year, emit_annuity, emit_schema);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
