#ifndef SALAB_ACCEPTANCE_HPP_
#define SALAB_ACCEPTANCE_HPP_

#include <functional>
#include <string>
#include <vector>

#include "salab/config.hpp"

namespace salab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;
};

// Runs the full verification suite (criteria 1..11).  `salab_binary` is the
// path to the CLI executable used by the determinism criterion; when empty
// that criterion is reported as failed with an explanatory detail.
// `report` is called after each criterion completes.
std::vector<CriterionResult> run_verification(
    const RunConfig& cfg, const std::string& out_dir,
    const std::string& salab_binary,
    const std::function<void(const CriterionResult&)>& report = {});

}  // namespace salab

#endif  // SALAB_ACCEPTANCE_HPP_
