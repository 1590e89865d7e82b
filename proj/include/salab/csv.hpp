#ifndef SALAB_CSV_HPP_
#define SALAB_CSV_HPP_

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "salab/types.hpp"

namespace salab {

// CSV writer with a '#'-prefixed manifest comment block.  All numbers are
// written with %.17g so identical runs produce byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& config_digest,
            std::uint64_t seed, const std::string& command);

  void header(const std::vector<std::string>& columns);
  void comment(const std::string& line);

  void begin_row() { first_in_row_ = true; }
  void field(double v);
  void field(long v);
  void field(const std::string& v);
  void end_row() { out_ << "\n"; }

  void row(const std::vector<double>& values);

 private:
  std::ofstream out_;
  bool first_in_row_ = true;
  void sep();
};

std::string format_g17(double v);

}  // namespace salab

#endif  // SALAB_CSV_HPP_
