#include "salab/csv.hpp"

namespace salab {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& config_digest,
                     std::uint64_t seed, const std::string& command) {
  out_.open(path);
  if (!out_) throw InputError("cannot open output file '" + path + "'");
  out_ << "# tool: salab 1.0.0\n";
  out_ << "# command: " << command << "\n";
  out_ << "# config_digest: " << config_digest << "\n";
  out_ << "# seed: " << seed << "\n";
}

void CsvWriter::comment(const std::string& line) { out_ << "# " << line << "\n"; }

void CsvWriter::header(const std::vector<std::string>& columns) {
  for (size_t i = 0; i < columns.size(); ++i)
    out_ << (i ? "," : "") << columns[i];
  out_ << "\n";
}

void CsvWriter::sep() {
  if (!first_in_row_) out_ << ",";
  first_in_row_ = false;
}

void CsvWriter::field(double v) {
  sep();
  out_ << format_g17(v);
}

void CsvWriter::field(long v) {
  sep();
  out_ << v;
}

void CsvWriter::field(const std::string& v) {
  sep();
  out_ << v;
}

void CsvWriter::row(const std::vector<double>& values) {
  begin_row();
  for (double v : values) field(v);
  end_row();
}

}  // namespace salab
