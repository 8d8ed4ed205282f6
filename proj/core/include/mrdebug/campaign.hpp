#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrdebug/explain.hpp"
#include "mrdebug/generator.hpp"
#include "mrdebug/mrspec/compile.hpp"
#include "mrdebug/stats.hpp"
#include "mrdebug/sut.hpp"

namespace mrdebug::campaign {

inline constexpr std::string_view kToolVersion = "0.1.0";

using nlohmann::ordered_json;

/// One of: refcalc (year, mutants), external (process adapter), screen
/// (eligibility threshold, boolean output).
struct SutSpec {
  std::string kind = "refcalc";
  std::optional<int> year;  // refcalc; defaults to the campaign's builtin year or 2020
  std::string mutants;      // refcalc, e.g. "M1,M3"
  ExternalSutConfig external;
  Decimal threshold;  // screen
  bool require_non_mfs = false;
};

/// Relative external commands containing a '/' resolve against `base_dir`.
SutSpec parse_sut(const ordered_json& j, const std::filesystem::path& base_dir);
ordered_json sut_to_json(const SutSpec& spec);
SutPtr make_sut(const SutSpec& spec, int default_year = 2020);

struct CampaignConfig {
  std::filesystem::path base_dir;  // relative paths resolve against it
  std::optional<std::filesystem::path> schema;  // absent: the bundled us1040 schema
  std::optional<int> builtin_year;
  std::vector<std::filesystem::path> specs;
  std::vector<std::string> relations;  // empty: every engine-supported relation
  SutSpec sut;
  Decimal epsilon = Decimal::from_cents(1);
  stats::JeffreysParams jeffreys;
  generator::SearchConfig search;
  std::size_t sources_per_relation = 20;
  std::filesystem::path report_dir = "report";
  unsigned parallelism = 0;  // 0: available cores
  bool explain = true;
  explain::TreeParams tree;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  /// Throws SpecError or ParameterError; checks that referenced files exist.
  void validate() const;
};

CampaignConfig parse_config(const ordered_json& doc, const std::filesystem::path& base_dir);
CampaignConfig load_config(const std::filesystem::path& path);
ordered_json config_to_json(const CampaignConfig& config);

SchemaPtr load_campaign_schema(const CampaignConfig& config);

struct LoadedRelation {
  mrspec::ExecutableRelation rel;
  bool engine_supported = true;
};

/// Builtin library or spec files, filtered by `config.relations`. Throws
/// SpecError with "file:line:col: message" diagnostics.
std::vector<LoadedRelation> load_relations(const CampaignConfig& config, const SchemaPtr& schema);

struct Explanation {
  std::optional<explain::DecisionTree> tree;
  std::string skipped;  // reason when there is no tree
};

struct RelationReport {
  generator::RelationResult result;
  std::string family;
  Explanation input;
  Explanation internal;

  bool falsified() const;
  bool inconclusive() const;
  std::string status() const;  // certified | falsified | inconclusive | skipped
};

struct CampaignReport {
  CampaignConfig config;
  std::string sut_name;
  std::int64_t k = 0;
  std::vector<RelationReport> relations;
  std::string started_at;
  std::string finished_at;
  double wall_time = 0.0;

  bool any_falsified() const;
  bool any_inconclusive() const;
  /// 0 when nothing was falsified, 2 otherwise.
  int exit_code() const;
};

CampaignReport run_campaign(const CampaignConfig& config);

/// Everything but the "metadata" member is a deterministic function of the
/// configuration.
ordered_json report_to_json(const CampaignReport& report);
std::string report_markdown(const CampaignReport& report);

/// One campaign-log line. bindings/outputs are keyed by variable, and each
/// metamorphose constraint is repeated so the log can be checked on its own.
ordered_json case_to_json(const generator::TestCase& tc, const mrspec::ExecutableRelation* rel = nullptr);
generator::TestCase case_from_json(const ordered_json& j, const SchemaPtr& schema);
std::vector<generator::TestCase> read_cases(std::istream& in, const SchemaPtr& schema);

/// report.json, report.md, cases.jsonl and <relation>_<space>.dot.
void write_report(const CampaignReport& report, const std::vector<LoadedRelation>& relations,
                  const std::filesystem::path& dir);

struct CheckResult {
  bool ok = true;
  std::vector<std::string> diagnostics;
  std::size_t relations = 0;
  std::size_t families = 0;
  std::string summary() const;  // "5 relations + 2 disjunct expansions OK"
};

CheckResult check_specs(const std::vector<std::filesystem::path>& paths, const SchemaPtr& schema);

struct DiffConfig {
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  Decimal epsilon = Decimal::from_cents(1);
  std::size_t max_exemplars = 20;
};

struct DiffExemplar {
  std::size_t index = 0;
  Record record;
  Discrepancy discrepancy;
};

struct DiffReport {
  std::string ground;
  std::string target;
  std::size_t samples = 0;
  std::size_t discrepancies = 0;
  std::size_t crashes = 0;
  std::vector<DiffExemplar> exemplars;

  double rate() const { return samples == 0 ? 0.0 : static_cast<double>(discrepancies) / static_cast<double>(samples); }
};

/// Uniform records on the schema grid, compared pointwise.
DiffReport run_diff(const Sut& ground, const Sut& target, const SchemaPtr& schema, const DiffConfig& config);
ordered_json diff_to_json(const DiffReport& report);

}  // namespace mrdebug::campaign
