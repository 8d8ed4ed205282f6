#include <benchmark/benchmark.h>

#include "mrdebug/explain.hpp"
#include "mrdebug/generator.hpp"
#include "mrdebug/mrspec/builtin.hpp"
#include "mrdebug/mrspec/parser.hpp"
#include "mrdebug/refcalc.hpp"
#include "mrdebug/schema_io.hpp"
#include "mrdebug/stats.hpp"

using namespace mrdebug;

namespace {

mrspec::ExecutableRelation builtin(const std::string& name) {
  for (const auto& b : mrspec::builtin_relations(2020)) {
    if (b.ast.name == name) return mrspec::compile(b.ast, us1040_schema());
  }
  throw std::runtime_error(name);
}

void BM_JeffreysK(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(stats::jeffreys_k({0.99, 100}));
}
BENCHMARK(BM_JeffreysK);

void BM_ParseBuiltinLibrary(benchmark::State& state) {
  const std::string text = mrspec::builtin_library_text(2020);
  for (auto _ : state) benchmark::DoNotOptimize(mrspec::parse_spec(text));
}
BENCHMARK(BM_ParseBuiltinLibrary);

void BM_ComputeReturn(benchmark::State& state) {
  const auto schema = us1040_schema();
  const auto table = refcalc::RuleTable::for_year(2020);
  generator::Rng rng(1);
  std::vector<Record> records;
  for (int i = 0; i < 256; ++i) records.push_back(generator::sample_uniform(schema, rng));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(refcalc::compute_return(records[i++ % records.size()], table));
}
BENCHMARK(BM_ComputeReturn);

void BM_SampleCase(benchmark::State& state) {
  const auto rel = builtin(state.range(0) == 0 ? "P2" : "P5");
  generator::Rng rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(generator::derive_followups(rel, generator::sample_source(rel, rng), rng));
  }
}
BENCHMARK(BM_SampleCase)->Arg(0)->Arg(1);

void BM_RunRelationMutant(benchmark::State& state) {
  const auto rel = builtin("P2");
  const refcalc::RefcalcSut sut(refcalc::RuleTable::for_year(2020), refcalc::MutantSet::parse("M1"));
  generator::RunConfig cfg;
  cfg.search.budget = 5000;
  for (auto _ : state) benchmark::DoNotOptimize(generator::run_relation(rel, sut, cfg));
}
BENCHMARK(BM_RunRelationMutant)->Unit(benchmark::kMillisecond);

void BM_FitCart(benchmark::State& state) {
  generator::Rng rng(3);
  explain::FeatureMatrix m;
  for (int f = 0; f < 12; ++f) m.names.push_back("f" + std::to_string(f));
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    std::vector<double> row;
    for (int f = 0; f < 12; ++f) row.push_back(static_cast<double>(rng.between(0, 1000)));
    m.fail.push_back(row[0] < 300 && row[3] > 500);
    m.rows.push_back(std::move(row));
    m.case_ids.push_back(i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(explain::fit_cart(m));
}
BENCHMARK(BM_FitCart)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
