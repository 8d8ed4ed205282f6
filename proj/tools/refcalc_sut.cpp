// Reference calculator speaking the file exchange format:
//   refcalc_sut [--year Y] [--mutants=M1,M3] [--trace=FILE] INFILE OUTFILE
// Writes "RETURN = <value>" to OUTFILE.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "mrdebug/refcalc.hpp"
#include "mrdebug/schema_io.hpp"

using namespace mrdebug;

int main(int argc, char** argv) {
  CLI::App app{"Reference tax calculator"};
  int year = 2020;
  std::string mutants, trace_path, infile, outfile;
  app.add_option("--year", year)->capture_default_str();
  app.add_option("--mutants", mutants, "Comma-separated mutants");
  app.add_option("--trace", trace_path, "Write internal features here");
  app.add_option("infile", infile)->required();
  app.add_option("outfile", outfile)->required();
  CLI11_PARSE(app, argc, argv);

  try {
    std::ifstream in(infile);
    if (!in) throw std::runtime_error(infile + ": cannot read file");
    std::stringstream text;
    text << in.rdbuf();
    const Record record = read_exchange(us1040_schema(), text.str());
    const refcalc::RefcalcSut sut(refcalc::RuleTable::for_year(year), refcalc::MutantSet::parse(mutants));
    const Output result = sut.evaluate(record);

    std::ofstream out(outfile, std::ios::trunc);
    out << "RETURN = " << result.value.to_string() << "\n";
    if (!out) throw std::runtime_error(outfile + ": cannot write file");
    if (!trace_path.empty()) {
      std::ofstream trace(trace_path, std::ios::trunc);
      trace << write_trace(result.trace);
    }
  } catch (const std::exception& e) {
    std::cerr << "refcalc_sut: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
