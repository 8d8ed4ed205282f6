#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>

#include "mrdebug/errors.hpp"
#include "mrdebug/refcalc.hpp"
#include "mrdebug/sut.hpp"
#include "support.hpp"

using namespace mrdebug;
using testing::household;
using testing::usd;

namespace {

ExternalSutConfig shell(const std::string& script) {
  ExternalSutConfig c;
  c.command = "/bin/sh";
  c.args = {"-c", script, "sut", "{infile}", "{outfile}"};
  c.timeout = 5.0;
  return c;
}

SutFailure::Kind failure_kind(const ExternalSutConfig& c, const Record& r) {
  try {
    (void)spawn_external(c, r);
  } catch (const SutFailure& e) {
    return e.kind();
  }
  FAIL("expected a SUT failure");
  throw;
}

// Fails on records with L27 above 9000, otherwise agrees with refcalc.
class FlakySut final : public Sut {
 public:
  Output evaluate(const Record& r) const override {
    if (r.decimal("L27") > usd("9000")) throw SutFailure(SutFailure::Kind::exit_code, "boom");
    return refcalc::compute_return(r, refcalc::RuleTable::for_year(2020));
  }
  std::string name() const override { return "flaky"; }
};

}  // namespace

TEST_CASE("exchange format") {
  const Record r = household({{"sts", EnumTag{"MFJ"}}, {"AGI", usd("50000")}});
  const std::string text = write_exchange(r);
  CHECK(text.find("sts = MFJ\n") != std::string::npos);
  CHECK(text.find("AGI = 50000.00\n") != std::string::npos);
  CHECK(text.find("blind = false\n") != std::string::npos);
  CHECK(read_exchange(us1040_schema(), text) == r);
  CHECK_THROWS_AS(read_exchange(us1040_schema(), "bogus = 1\n"), ValidationError);
  CHECK_THROWS_AS(read_exchange(us1040_schema(), "AGI = lots\n"), ValidationError);
}

TEST_CASE("trace format") {
  const std::vector<TraceFeature> t{{"branch@eitc_mfs:taken", usd("1")}, {"val@taxable", usd("-2.5")}};
  CHECK(read_trace(write_trace(t)) == t);
}

TEST_CASE("extract value") {
  CHECK(extract_value("RETURN = 0.00\n", "RETURN = (−?[0-9.]+)") == Decimal{});
  CHECK(extract_value("noise\nRETURN = -12.50\nRETURN = 7\n", "RETURN = (-?[0-9.]+)") == usd("-12.5"));
  CHECK(extract_value("RETURN = −3.25\n", "RETURN = (−?[0-9.]+)") == usd("-3.25"));
  try {
    (void)extract_value("nothing here\n", "RETURN = (-?[0-9.]+)");
    FAIL("expected no_match");
  } catch (const SutFailure& e) {
    CHECK(e.kind() == SutFailure::Kind::no_match);
  }
  try {
    (void)extract_value("RETURN = 1.2.3\n", "RETURN = (-?[0-9.]+)");
    FAIL("expected parse_error");
  } catch (const SutFailure& e) {
    CHECK(e.kind() == SutFailure::Kind::parse_error);
  }
}

TEST_CASE("external config validation") {
  ExternalSutConfig c = shell("true");
  CHECK_NOTHROW(c.validate());
  c.extract_pattern = "no group";
  CHECK_THROWS_AS(c.validate(), SpecError);
  c.extract_pattern = "(a)(b)";
  CHECK_THROWS_AS(c.validate(), SpecError);
  c.extract_pattern = "(unclosed";
  CHECK_THROWS_AS(c.validate(), SpecError);
  c = shell("true");
  c.timeout = 0;
  CHECK_THROWS_AS(c.validate(), SpecError);
}

TEST_CASE("external echo, first match, failures") {
  const Record r = household();
  CHECK(spawn_external(shell("echo 'RETURN = 0.00' > \"$2\""), r).value == Decimal{});
  CHECK(spawn_external(shell("printf 'RETURN = 4.00\\nRETURN = 5.00\\n' > \"$2\""), r).value == usd("4"));
  CHECK(spawn_external(shell("grep -c . \"$1\" | sed 's/^/RETURN = /' > \"$2\""), r).value ==
        Decimal::from_units(static_cast<std::int64_t>(us1040_schema()->size())));
  CHECK(failure_kind(shell("echo nothing > \"$2\""), r) == SutFailure::Kind::no_match);
  CHECK(failure_kind(shell("exit 3"), r) == SutFailure::Kind::exit_code);

  ExternalSutConfig missing;
  missing.command = "/nonexistent/sut";
  missing.args = {"{infile}", "{outfile}"};
  CHECK(failure_kind(missing, r) == SutFailure::Kind::spawn_error);
}

TEST_CASE("external timeout kills the process group") {
  ExternalSutConfig c = shell("sleep 5 & sleep 5");
  c.timeout = 0.2;
  const auto start = std::chrono::steady_clock::now();
  CHECK(failure_kind(c, household()) == SutFailure::Kind::timeout);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(3));
}

TEST_CASE("stdout capture without an outfile placeholder") {
  ExternalSutConfig c;
  c.command = "/bin/sh";
  c.args = {"-c", "echo 'RETURN = 2.50'", "sut", "{infile}"};
  CHECK(spawn_external(c, household()).value == usd("2.5"));
}

TEST_CASE("external refcalc matches in-process refcalc") {
  ExternalSutConfig c;
  c.command = MRDEBUG_REFCALC_SUT;
  c.args = {"--year", "2020", "--mutants=M1", "--trace={tracefile}", "{infile}", "{outfile}"};
  ExternalSut ext(c);
  refcalc::RefcalcSut local(refcalc::RuleTable::for_year(2020), refcalc::MutantSet::parse("M1"));
  const Record r1 = household({{"sts", EnumTag{"MFJ"}}, {"AGI", usd("50000")}, {"QC", usd("1")}, {"L27", usd("4000")}});
  const Record r2 = household({{"sts", EnumTag{"MFS"}}, {"AGI", usd("20000")}, {"QC", usd("2")}, {"L27", usd("900")}});
  for (const Record& r : {r1, r2}) {
    const Output a = ext.evaluate(r);
    const Output b = local.evaluate(r);
    CHECK(a == b);
  }
  CHECK(ext.evaluate(r1).value == usd("-88.49"));
}

TEST_CASE("differential check") {
  const refcalc::RefcalcSut clean(refcalc::RuleTable::for_year(2020));
  const Decimal eps = Decimal::from_cents(1);
  const Record r = household({{"sts", EnumTag{"MFJ"}}, {"AGI", usd("50000")}, {"QC", usd("1")}, {"L27", usd("4000")}});
  CHECK_FALSE(differential_check(clean, clean, r, eps).has_value());

  const refcalc::ScreenSut ground(usd("56844"));
  const refcalc::ScreenSut broken(usd("-1"));
  const auto d = differential_check(ground, broken, r, eps);
  REQUIRE(d.has_value());
  CHECK(d->kind == Discrepancy::Kind::value);
  CHECK(d->difference == usd("1"));

  const FlakySut flaky;
  const auto crash = differential_check(clean, flaky, r.with("L27", usd("9500")), eps);
  REQUIRE(crash.has_value());
  CHECK(crash->kind == Discrepancy::Kind::crash);
  CHECK(crash->message.find("target") != std::string::npos);
  CHECK_FALSE(differential_check(clean, flaky, r, eps).has_value());
}
