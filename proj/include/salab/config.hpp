#ifndef SALAB_CONFIG_HPP_
#define SALAB_CONFIG_HPP_

#include <map>
#include <string>
#include <vector>

#include "salab/perturbation.hpp"
#include "salab/types.hpp"

namespace salab {

// Validated run configuration, parsed from a plain-text sectioned key-value
// file.  Unknown sections or keys are rejected; a digest of the normalized
// content is embedded in every output file.
struct RunConfig {
  // [system]
  std::string system_name = "lorenz";
  std::map<std::string, double> parameter_overrides;

  // [flow]
  double tau = 1.5;
  double integration_tolerance = 1e-8;
  double chain_tolerance = 1e-6;  // looser tolerance inside Markov kernels
  double base_time_step = 0.25;   // trajectory sampling interval

  // [grid]
  int grid_resolution = 64;

  // [run]
  std::uint64_t seed = 1;
  int workers = 0;  // 0 = hardware concurrency
  double t_transient = 50.0;
  double t_average = 2000.0;
  double qr_interval = 0.5;
  long n_steps = 4000;  // simulate: number of sampled points

  // [shadow]
  double c_est = 10.0;
  double shadow_delta = 1e-6;
  int shadow_n = 20;
  int shadow_orbits = 30;

  // [perturbation]
  std::vector<double> eps_list = {0.5, 0.2, 0.1, 0.05};
  long burn_in = 2000;
  long n_samples = 1000000;
  int n_chains = 8;
  std::string boundary_policy = "resample";
  double gamma = 0.5;
  long avoidance_n_mc = 100000;

  // [rectangle]
  double rect_eta = 1.0;
  double rect_stable_radius = 0.3;
  double rect_thickness = 0.3;
  double rect_eps = 0.1;
  int rect_count = 10;

  std::string digest_hex;  // filled by parse/normalize

  void validate() const;
  std::string normalized() const;  // canonical text form used for the digest
  void compute_digest();
};

RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig default_config();

}  // namespace salab

#endif  // SALAB_CONFIG_HPP_
