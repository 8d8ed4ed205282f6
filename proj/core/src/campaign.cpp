#include "mrdebug/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "mrdebug/errors.hpp"
#include "mrdebug/mrspec/builtin.hpp"
#include "mrdebug/mrspec/parser.hpp"
#include "mrdebug/refcalc.hpp"
#include "mrdebug/schema_io.hpp"

namespace mrdebug::campaign {

namespace fs = std::filesystem;
using generator::TestCase;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError(path.string() + ": cannot read file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SpecError(path.string() + ": cannot write file");
  out << text;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void reject_unknown(const ordered_json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw SpecError(where + ": unknown key \"" + key + "\"");
    }
  }
}

bool marked_unsupported(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# engine-unsupported", 0) == 0) return true;
  }
  return false;
}

std::vector<mrspec::RelationAst> parse_file(const fs::path& path, const Schema& schema, bool& unsupported) {
  const std::string text = read_text(path);
  unsupported = marked_unsupported(text);
  try {
    return mrspec::parse_spec(text, &schema);
  } catch (const mrspec::ParseError& e) {
    throw SpecError(path.string() + ":" + e.what());
  }
}

mrspec::ExecutableRelation compile_at(const mrspec::RelationAst& ast, const SchemaPtr& schema,
                                      const std::string& origin) {
  try {
    return mrspec::compile(ast, schema);
  } catch (const mrspec::CompileError& e) {
    throw SpecError(origin + ":" + e.what());
  }
}

ordered_json verdict_to_json(const stats::SourceVerdict& v) {
  ordered_json j;
  j["id"] = v.source_id;
  j["outcome"] = stats::to_string(v.outcome);
  j["consecutive_passes"] = v.consecutive_passes;
  j["observed"] = v.observed;
  j["failure_index"] = v.failure_index ? ordered_json(*v.failure_index) : ordered_json(nullptr);
  return j;
}

ordered_json explanation_to_json(const Explanation& e) {
  ordered_json j;
  if (e.tree) {
    j["root"] = e.tree->root_feature() ? ordered_json(*e.tree->root_feature()) : ordered_json(nullptr);
    j["depth"] = e.tree->depth();
    j["training_impurity"] = e.tree->training_impurity();
    j["text"] = explain::render_tree(*e.tree, explain::Format::text);
  } else {
    j["skipped"] = e.skipped;
  }
  return j;
}

Explanation explain_space(const generator::RelationResult& r, explain::Space space, const explain::TreeParams& p) {
  Explanation e;
  try {
    const auto matrix = explain::build_dataset(r.cases, space);
    e.tree = explain::fit_cart(matrix, p);
  } catch (const explain::Skipped& s) {
    e.skipped = s.what();
  }
  return e;
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

}  // namespace

SutSpec parse_sut(const ordered_json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw SpecError("sut: expected an object");
  SutSpec s;
  s.kind = j.value("kind", std::string("refcalc"));
  if (s.kind == "refcalc") {
    reject_unknown(j, {"kind", "year", "mutants"}, "sut");
    if (j.contains("year")) s.year = j["year"].get<int>();
    s.mutants = j.value("mutants", std::string());
    (void)refcalc::MutantSet::parse(s.mutants);
  } else if (s.kind == "external") {
    reject_unknown(j, {"kind", "command", "args", "extract_pattern", "timeout", "boolean_output"}, "sut");
    s.external.command = j.at("command").get<std::string>();
    if (s.external.command.find('/') != std::string::npos && fs::path(s.external.command).is_relative()) {
      s.external.command = (base_dir / s.external.command).lexically_normal().string();
    }
    s.external.args = j.value("args", std::vector<std::string>{});
    s.external.extract_pattern = j.value("extract_pattern", std::string("RETURN = (-?[0-9.]+)"));
    s.external.timeout = j.value("timeout", 10.0);
    s.external.boolean_output = j.value("boolean_output", false);
    s.external.validate();
  } else if (s.kind == "screen") {
    reject_unknown(j, {"kind", "threshold", "require_non_mfs"}, "sut");
    s.threshold = decimal_from_json(j.at("threshold"), "sut.threshold");
    s.require_non_mfs = j.value("require_non_mfs", false);
  } else {
    throw SpecError("sut: unknown kind \"" + s.kind + "\"");
  }
  return s;
}

ordered_json sut_to_json(const SutSpec& s) {
  ordered_json j;
  j["kind"] = s.kind;
  if (s.kind == "refcalc") {
    j["year"] = s.year ? ordered_json(*s.year) : ordered_json(nullptr);
    j["mutants"] = s.mutants;
  } else if (s.kind == "external") {
    j["command"] = s.external.command;
    j["args"] = s.external.args;
    j["extract_pattern"] = s.external.extract_pattern;
    j["timeout"] = s.external.timeout;
    j["boolean_output"] = s.external.boolean_output;
  } else {
    j["threshold"] = decimal_to_json(s.threshold);
    j["require_non_mfs"] = s.require_non_mfs;
  }
  return j;
}

SutPtr make_sut(const SutSpec& s, int default_year) {
  if (s.kind == "refcalc") {
    return std::make_shared<refcalc::RefcalcSut>(refcalc::RuleTable::for_year(s.year.value_or(default_year)),
                                                 refcalc::MutantSet::parse(s.mutants));
  }
  if (s.kind == "external") return std::make_shared<ExternalSut>(s.external);
  return std::make_shared<refcalc::ScreenSut>(s.threshold, s.require_non_mfs);
}

fs::path CampaignConfig::resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }

void CampaignConfig::validate() const {
  if (builtin_year.has_value() == !specs.empty()) {
    throw SpecError("config: give exactly one of \"builtin_year\" and \"specs\"");
  }
  if (builtin_year) (void)mrspec::builtin_eitc_threshold(*builtin_year);
  if (schema && !fs::exists(resolve(*schema))) throw SpecError("config: schema file " + resolve(*schema).string() + " does not exist");
  for (const auto& s : specs) {
    if (!fs::exists(resolve(s))) throw SpecError("config: spec file " + resolve(s).string() + " does not exist");
  }
  if (epsilon < Decimal{}) throw ParameterError("config: epsilon must be non-negative");
  if (sources_per_relation < 1) throw ParameterError("config: sources_per_relation must be at least 1");
  jeffreys.validate();
  search.validate();
  tree.validate();
}

CampaignConfig parse_config(const ordered_json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw SpecError("config: expected a JSON object");
  reject_unknown(doc,
                 {"schema", "builtin_year", "specs", "relations", "sut", "epsilon", "jeffreys", "search",
                  "sources_per_relation", "report_dir", "parallelism", "explain"},
                 "config");
  CampaignConfig c;
  c.base_dir = base_dir;
  if (doc.contains("schema")) c.schema = doc["schema"].get<std::string>();
  if (doc.contains("builtin_year")) c.builtin_year = doc["builtin_year"].get<int>();
  for (const auto& s : doc.value("specs", std::vector<std::string>{})) c.specs.emplace_back(s);
  c.relations = doc.value("relations", std::vector<std::string>{});
  if (!doc.contains("sut")) throw SpecError("config: missing \"sut\"");
  c.sut = parse_sut(doc["sut"], base_dir);
  if (doc.contains("epsilon")) c.epsilon = decimal_from_json(doc["epsilon"], "epsilon");
  if (doc.contains("jeffreys")) {
    const auto& j = doc["jeffreys"];
    reject_unknown(j, {"theta", "bayes_factor"}, "jeffreys");
    c.jeffreys.theta = j.value("theta", c.jeffreys.theta);
    c.jeffreys.bayes_factor = j.value("bayes_factor", c.jeffreys.bayes_factor);
  }
  if (doc.contains("search")) {
    const auto& j = doc["search"];
    reject_unknown(j,
                   {"seed", "budget", "population", "restart_probability", "step_multiplier", "boundary_bias",
                    "boundary_band"},
                   "search");
    auto& s = c.search;
    s.seed = j.value("seed", s.seed);
    s.budget = j.value("budget", s.budget);
    s.population = j.value("population", s.population);
    s.restart_probability = j.value("restart_probability", s.restart_probability);
    s.step_multiplier = j.value("step_multiplier", s.step_multiplier);
    s.boundary_bias = j.value("boundary_bias", s.boundary_bias);
    s.boundary_band = j.value("boundary_band", s.boundary_band);
  }
  c.sources_per_relation = doc.value("sources_per_relation", c.sources_per_relation);
  if (doc.contains("report_dir")) c.report_dir = doc["report_dir"].get<std::string>();
  c.parallelism = doc.value("parallelism", c.parallelism);
  if (doc.contains("explain")) {
    const auto& j = doc["explain"];
    if (j.is_boolean()) {
      c.explain = j.get<bool>();
    } else {
      reject_unknown(j, {"enabled", "max_depth", "min_samples_leaf"}, "explain");
      c.explain = j.value("enabled", true);
      c.tree.max_depth = j.value("max_depth", c.tree.max_depth);
      c.tree.min_samples_leaf = j.value("min_samples_leaf", c.tree.min_samples_leaf);
    }
  }
  return c;
}

CampaignConfig load_config(const fs::path& path) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_text(path));
  } catch (const ordered_json::parse_error& e) {
    throw SpecError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

ordered_json config_to_json(const CampaignConfig& c) {
  ordered_json j;
  j["schema"] = c.schema ? ordered_json(c.schema->string()) : ordered_json(nullptr);
  j["builtin_year"] = c.builtin_year ? ordered_json(*c.builtin_year) : ordered_json(nullptr);
  ordered_json specs = ordered_json::array();
  for (const auto& s : c.specs) specs.push_back(s.string());
  j["specs"] = specs;
  j["relations"] = c.relations;
  j["sut"] = sut_to_json(c.sut);
  j["epsilon"] = decimal_to_json(c.epsilon);
  j["jeffreys"] = {{"theta", c.jeffreys.theta}, {"bayes_factor", c.jeffreys.bayes_factor}};
  ordered_json s;
  s["seed"] = c.search.seed;
  s["budget"] = c.search.budget;
  s["population"] = c.search.population;
  s["restart_probability"] = c.search.restart_probability;
  s["step_multiplier"] = c.search.step_multiplier;
  s["boundary_bias"] = c.search.boundary_bias;
  s["boundary_band"] = c.search.boundary_band;
  j["search"] = s;
  j["sources_per_relation"] = c.sources_per_relation;
  j["explain"] = {{"enabled", c.explain}, {"max_depth", c.tree.max_depth}, {"min_samples_leaf", c.tree.min_samples_leaf}};
  return j;
}

SchemaPtr load_campaign_schema(const CampaignConfig& config) {
  return config.schema ? load_schema(config.resolve(*config.schema)) : us1040_schema();
}

std::vector<LoadedRelation> load_relations(const CampaignConfig& config, const SchemaPtr& schema) {
  std::vector<LoadedRelation> all;
  if (config.builtin_year) {
    for (const auto& b : mrspec::builtin_relations(*config.builtin_year)) {
      all.push_back({compile_at(b.ast, schema, "builtin_" + std::to_string(*config.builtin_year)), b.engine_supported});
    }
  } else {
    for (const auto& path : config.specs) {
      bool unsupported = false;
      const fs::path full = config.resolve(path);
      for (const auto& ast : parse_file(full, *schema, unsupported)) {
        all.push_back({compile_at(ast, schema, full.string()), !unsupported});
      }
    }
  }
  std::set<std::string> seen;
  for (const auto& r : all) {
    if (!seen.insert(r.rel.name).second) throw SpecError("relation " + r.rel.name + " is defined twice");
  }
  std::vector<LoadedRelation> out;
  if (config.relations.empty()) {
    for (auto& r : all) {
      if (r.engine_supported) out.push_back(std::move(r));
    }
    return out;
  }
  for (const auto& name : config.relations) {
    bool found = false;
    for (const auto& r : all) {
      // A family name ("P4") selects each of its disjunct expansions.
      if (r.rel.name == name || mrspec::relation_family(r.rel.name) == name) {
        out.push_back(r);
        found = true;
      }
    }
    if (!found) throw SpecError("config: no relation named " + name);
  }
  return out;
}

bool RelationReport::falsified() const {
  if (result.polarity == mrspec::Polarity::witness) {
    return std::any_of(result.verdicts.begin(), result.verdicts.end(),
                       [](const auto& v) { return v.outcome == stats::Outcome::falsified; });
  }
  return result.fail_count() > 0;
}

bool RelationReport::inconclusive() const {
  return std::any_of(result.verdicts.begin(), result.verdicts.end(),
                     [](const auto& v) { return v.outcome == stats::Outcome::inconclusive; });
}

std::string RelationReport::status() const {
  if (result.skipped) return "skipped";
  if (falsified()) return "falsified";
  if (inconclusive()) return "inconclusive";
  return "certified";
}

bool CampaignReport::any_falsified() const {
  return std::any_of(relations.begin(), relations.end(), [](const auto& r) { return r.falsified(); });
}

bool CampaignReport::any_inconclusive() const {
  return std::any_of(relations.begin(), relations.end(), [](const auto& r) { return r.inconclusive(); });
}

int CampaignReport::exit_code() const { return any_falsified() ? 2 : 0; }

CampaignReport run_campaign(const CampaignConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  CampaignReport report;
  report.config = config;
  report.started_at = utc_now();
  report.k = stats::jeffreys_k(config.jeffreys);

  const SchemaPtr schema = load_campaign_schema(config);
  const auto relations = load_relations(config, schema);
  const SutPtr sut = make_sut(config.sut, config.builtin_year.value_or(2020));
  report.sut_name = sut->name();

  generator::RunConfig run;
  run.search = config.search;
  run.epsilon = config.epsilon;
  run.k = report.k;
  run.sources = config.sources_per_relation;

  report.relations.resize(relations.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < relations.size(); i = next++) {
      RelationReport& rr = report.relations[i];
      rr.result = generator::run_relation(relations[i].rel, *sut, run);
      rr.family = mrspec::relation_family(rr.result.name);
      if (config.explain && !rr.result.skipped) {
        rr.input = explain_space(rr.result, explain::Space::input, config.tree);
        rr.internal = explain_space(rr.result, explain::Space::internal, config.tree);
      }
    }
  };
  unsigned threads = config.parallelism ? config.parallelism : std::max(1U, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(relations.size(), 1)));
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        worker();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  report.finished_at = utc_now();
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

ordered_json report_to_json(const CampaignReport& report) {
  ordered_json j;
  j["tool"] = {{"name", "mrdebug"}, {"version", kToolVersion}};
  j["config"] = config_to_json(report.config);
  j["sut"] = report.sut_name;
  j["k"] = report.k;
  ordered_json rels = ordered_json::array();
  ordered_json timing = ordered_json::object();
  std::vector<std::string> falsified, inconclusive, skipped;
  for (const auto& rr : report.relations) {
    const auto& r = rr.result;
    ordered_json e;
    e["name"] = r.name;
    e["family"] = rr.family;
    e["polarity"] = r.polarity == mrspec::Polarity::witness ? "witness" : "falsify";
    e["status"] = rr.status();
    e["seed"] = r.seed;
    e["tests"] = r.cases.size();
    e["fail"] = r.fail_count();
    e["pass"] = r.pass_count();
    e["evaluations"] = r.evaluations;
    e["discarded"] = r.discarded;
    e["first_failure_case"] = r.first_failure ? ordered_json(*r.first_failure) : ordered_json(nullptr);
    e["skip_reason"] = r.skipped ? ordered_json(*r.skipped) : ordered_json(nullptr);
    ordered_json sources = ordered_json::array();
    for (const auto& v : r.verdicts) sources.push_back(verdict_to_json(v));
    e["sources"] = sources;
    ordered_json exemplars = ordered_json::array();
    for (const auto& tc : r.cases) {
      if (!tc.pass && exemplars.size() < 5) exemplars.push_back(tc.id);
    }
    e["exemplars"] = exemplars;
    if (report.config.explain && !r.skipped) {
      e["explanation"] = {{"input", explanation_to_json(rr.input)}, {"internal", explanation_to_json(rr.internal)}};
    }
    rels.push_back(e);
    if (rr.status() == "falsified") falsified.push_back(r.name);
    if (rr.inconclusive()) inconclusive.push_back(r.name);
    if (r.skipped) skipped.push_back(r.name);
    timing[r.name] = {{"wall_time_s", r.wall_time},
                      {"time_to_first_failure_s",
                       r.time_to_first_failure ? ordered_json(*r.time_to_first_failure) : ordered_json(nullptr)}};
  }
  j["relations"] = rels;
  j["summary"] = {{"relations", report.relations.size()},
                  {"falsified", falsified},
                  {"inconclusive", inconclusive},
                  {"skipped", skipped},
                  {"exit_code", report.exit_code()}};
  j["metadata"] = {{"started_at", report.started_at},
                   {"finished_at", report.finished_at},
                   {"wall_time_s", report.wall_time},
                   {"relations", timing}};
  return j;
}

std::string report_markdown(const CampaignReport& report) {
  std::ostringstream md;
  md << "# Metamorphic testing report\n\n";
  md << "- SUT: " << report.sut_name << "\n";
  md << "- seed " << report.config.search.seed << ", budget " << report.config.search.budget
     << " evaluations per relation, " << report.config.sources_per_relation << " sources per relation\n";
  md << "- Jeffreys bound: theta " << report.config.jeffreys.theta << ", B " << report.config.jeffreys.bayes_factor
     << ", K = " << report.k << "\n";
  md << "- epsilon " << report.config.epsilon.to_string() << "\n\n";
  md << "| Property | #test cases | #fail | #pass | T_F(s) | status | certified / falsified / inconclusive |\n";
  md << "|---|---:|---:|---:|---:|---|---|\n";
  for (const auto& rr : report.relations) {
    const auto& r = rr.result;
    std::size_t cert = 0, fals = 0, inc = 0;
    for (const auto& v : r.verdicts) {
      if (v.outcome == stats::Outcome::certified_pass) ++cert;
      if (v.outcome == stats::Outcome::falsified) ++fals;
      if (v.outcome == stats::Outcome::inconclusive) ++inc;
    }
    md << "| " << r.name << " | " << r.cases.size() << " | " << r.fail_count() << " | " << r.pass_count() << " | "
       << (r.time_to_first_failure ? fixed(*r.time_to_first_failure, 4) : "N/A") << " | " << rr.status() << " | "
       << cert << " / " << fals << " / " << inc << " |\n";
  }
  for (const auto& rr : report.relations) {
    if (rr.result.skipped) md << "\n" << rr.result.name << " skipped: " << *rr.result.skipped << "\n";
  }
  if (report.config.explain) {
    for (const auto& rr : report.relations) {
      if (rr.result.skipped) continue;
      md << "\n## " << rr.result.name << "\n";
      for (const auto& [label, e] : {std::pair{"Input space", &rr.input}, std::pair{"Internal space", &rr.internal}}) {
        md << "\n" << label << ":";
        if (e->tree) {
          md << "\n\n```\n" << explain::render_tree(*e->tree, explain::Format::text) << "```\n";
        } else {
          md << " no tree (" << e->skipped << ")\n";
        }
      }
    }
  }
  return md.str();
}

ordered_json case_to_json(const TestCase& tc, const mrspec::ExecutableRelation* rel) {
  ordered_json j;
  j["relation"] = tc.relation;
  j["id"] = tc.id;
  j["source"] = tc.source_id;
  j["step"] = tc.step;
  j["parent"] = tc.parent ? ordered_json(*tc.parent) : ordered_json(nullptr);
  j["seed"] = tc.seed;
  j["variables"] = tc.variables;
  j["source_count"] = tc.source_count;
  ordered_json constraints = ordered_json::array();
  if (rel) {
    for (const auto& f : rel->followups) {
      constraints.push_back({{"target", f.var}, {"source", f.source}, {"except", f.exceptions}});
    }
  }
  j["constraints"] = constraints;
  ordered_json bindings;
  for (std::size_t v = 0; v < tc.variables.size(); ++v) bindings[tc.variables[v]] = record_to_json(tc.bindings[v]);
  j["bindings"] = bindings;
  ordered_json outputs = ordered_json::object();
  for (std::size_t v = 0; v < tc.variables.size() && v < tc.outputs.size(); ++v) {
    if (!tc.outputs[v]) continue;
    ordered_json trace = ordered_json::object();
    for (const auto& f : tc.outputs[v]->trace) trace[f.name] = decimal_to_json(f.value);
    outputs[tc.variables[v]] = {{"value", decimal_to_json(tc.outputs[v]->value)}, {"trace", trace}};
  }
  j["outputs"] = outputs;
  j["verdict"] = tc.pass ? "pass" : "fail";
  j["deviation"] = tc.deviation ? decimal_to_json(*tc.deviation) : ordered_json(nullptr);
  j["error"] = tc.error.empty() ? ordered_json(nullptr) : ordered_json(tc.error);
  return j;
}

TestCase case_from_json(const ordered_json& j, const SchemaPtr& schema) {
  TestCase tc;
  tc.relation = j.at("relation").get<std::string>();
  tc.id = j.at("id").get<std::int64_t>();
  tc.source_id = j.at("source").get<std::int64_t>();
  tc.step = j.at("step").get<std::int64_t>();
  if (!j.at("parent").is_null()) tc.parent = j["parent"].get<std::int64_t>();
  tc.seed = j.at("seed").get<std::uint64_t>();
  tc.variables = j.at("variables").get<std::vector<std::string>>();
  tc.source_count = j.at("source_count").get<std::size_t>();
  for (const auto& v : tc.variables) tc.bindings.push_back(record_from_json(schema, j.at("bindings").at(v)));
  tc.outputs.resize(tc.variables.size());
  const auto& outputs = j.at("outputs");
  for (std::size_t v = 0; v < tc.variables.size(); ++v) {
    if (!outputs.contains(tc.variables[v])) continue;
    const auto& o = outputs[tc.variables[v]];
    Output out;
    out.value = decimal_from_json(o.at("value"), "value");
    for (const auto& [name, value] : o.at("trace").items()) out.trace.push_back({name, decimal_from_json(value, name)});
    tc.outputs[v] = std::move(out);
  }
  tc.pass = j.at("verdict").get<std::string>() == "pass";
  if (!j.at("deviation").is_null()) tc.deviation = decimal_from_json(j["deviation"], "deviation");
  if (!j.at("error").is_null()) tc.error = j["error"].get<std::string>();
  return tc;
}

std::vector<TestCase> read_cases(std::istream& in, const SchemaPtr& schema) {
  std::vector<TestCase> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      out.push_back(case_from_json(ordered_json::parse(line), schema));
    } catch (const std::exception& e) {
      throw SpecError("campaign log line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

void write_report(const CampaignReport& report, const std::vector<LoadedRelation>& relations, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_text(dir / "report.md", report_markdown(report));
  std::string log;
  for (const auto& rr : report.relations) {
    const mrspec::ExecutableRelation* rel = nullptr;
    for (const auto& r : relations) {
      if (r.rel.name == rr.result.name) rel = &r.rel;
    }
    for (const auto& tc : rr.result.cases) log += case_to_json(tc, rel).dump() + "\n";
  }
  write_text(dir / "cases.jsonl", log);
  for (const auto& rr : report.relations) {
    if (rr.input.tree) write_text(dir / (rr.result.name + "_input.dot"), explain::render_tree(*rr.input.tree, explain::Format::dot));
    if (rr.internal.tree) {
      write_text(dir / (rr.result.name + "_internal.dot"), explain::render_tree(*rr.internal.tree, explain::Format::dot));
    }
  }
}

std::string CheckResult::summary() const {
  if (!ok) return std::to_string(diagnostics.size()) + " error(s)";
  return std::to_string(families) + " relations + " + std::to_string(relations - families) + " disjunct expansions OK";
}

CheckResult check_specs(const std::vector<fs::path>& paths, const SchemaPtr& schema) {
  CheckResult result;
  std::set<std::string> families;
  for (const auto& path : paths) {
    std::string text;
    try {
      text = read_text(path);
    } catch (const SpecError& e) {
      result.ok = false;
      result.diagnostics.push_back(e.what());
      continue;
    }
    std::vector<mrspec::RelationAst> asts;
    try {
      asts = mrspec::parse_spec(text, schema.get());
    } catch (const mrspec::ParseError& e) {
      result.ok = false;
      result.diagnostics.push_back(path.string() + ":" + e.what());
      continue;
    }
    for (const auto& ast : asts) {
      try {
        (void)mrspec::compile(ast, schema);
        ++result.relations;
        families.insert(mrspec::relation_family(ast.name));
      } catch (const mrspec::CompileError& e) {
        result.ok = false;
        result.diagnostics.push_back(path.string() + ":" + e.what());
      }
    }
  }
  result.families = families.size();
  return result;
}

DiffReport run_diff(const Sut& ground, const Sut& target, const SchemaPtr& schema, const DiffConfig& config) {
  DiffReport report;
  report.ground = ground.name();
  report.target = target.name();
  generator::Rng rng(config.seed);
  for (std::size_t i = 0; i < config.samples; ++i) {
    const Record record = generator::sample_uniform(schema, rng);
    ++report.samples;
    auto d = differential_check(ground, target, record, config.epsilon);
    if (!d) continue;
    ++report.discrepancies;
    if (d->kind == Discrepancy::Kind::crash) ++report.crashes;
    if (report.exemplars.size() < config.max_exemplars) report.exemplars.push_back({i, record, std::move(*d)});
  }
  return report;
}

ordered_json diff_to_json(const DiffReport& report) {
  ordered_json j;
  j["ground"] = report.ground;
  j["target"] = report.target;
  j["samples"] = report.samples;
  j["discrepancies"] = report.discrepancies;
  j["crashes"] = report.crashes;
  j["rate"] = report.rate();
  ordered_json ex = ordered_json::array();
  for (const auto& e : report.exemplars) {
    ordered_json x;
    x["sample"] = e.index;
    x["kind"] = e.discrepancy.kind == Discrepancy::Kind::crash ? "crash" : "value";
    x["record"] = record_to_json(e.record);
    x["ground"] = e.discrepancy.ground ? decimal_to_json(e.discrepancy.ground->value) : ordered_json(nullptr);
    x["target"] = e.discrepancy.target ? decimal_to_json(e.discrepancy.target->value) : ordered_json(nullptr);
    x["difference"] = decimal_to_json(e.discrepancy.difference);
    x["message"] = e.discrepancy.message.empty() ? ordered_json(nullptr) : ordered_json(e.discrepancy.message);
    ex.push_back(x);
  }
  j["exemplars"] = ex;
  return j;
}

}  // namespace mrdebug::campaign
