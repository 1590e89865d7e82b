#ifndef SALAB_PERTURBATION_HPP_
#define SALAB_PERTURBATION_HPP_

#include <optional>
#include <vector>

#include "salab/flow.hpp"
#include "salab/measures.hpp"
#include "salab/systems.hpp"
#include "salab/types.hpp"

namespace salab {

enum class BoundaryPolicy { reflect, resample, clamp };

BoundaryPolicy boundary_policy_from_string(const std::string& s);

// One-step random perturbation x -> F(x) + eps * xi, xi standard Gaussian,
// confined to the trapping region by the boundary policy.
struct MarkovKernel {
  TimeTauMap map;
  double epsilon;
  BoundaryPolicy policy = BoundaryPolicy::resample;

  MarkovKernel(TimeTauMap F, double eps,
               BoundaryPolicy p = BoundaryPolicy::resample)
      : map(std::move(F)), epsilon(eps), policy(p) {
    if (eps <= 0.0) throw InputError("MarkovKernel: epsilon must be > 0");
  }
};

Vec kernel_step(const MarkovKernel& k, const Vec& x, Rng& rng);

struct ChainSample {
  Vec x0;
  std::uint64_t seed = 0;
  std::vector<Vec> states;  // x_1 ... x_n (x0 kept separately)
};

// Bit-exact reproducible from (kernel parameters, x0, seed).
ChainSample run_chain(const MarkovKernel& k, const Vec& x0, int n,
                      std::uint64_t seed);

// Histogram of post-burn-in states over `n_chains` independent chains run in
// parallel; each chain contributes one noise-floor block.  Deterministic for
// fixed (seed, n_chains) regardless of thread count.
EmpiricalMeasure estimate_stationary(const MarkovKernel& k, const Vec& x0,
                                     long burn_in, long n_samples,
                                     std::shared_ptr<const GridPartition> grid,
                                     std::uint64_t seed, int n_chains = 8,
                                     int n_workers = 0);

// Same machinery but returning the raw states (for rectangle studies).
std::vector<Vec> stationary_states(const MarkovKernel& k, const Vec& x0,
                                   long burn_in, long n_samples,
                                   std::uint64_t seed, int n_chains = 8,
                                   int n_workers = 0);

struct DefectReport {
  double defect = std::numeric_limits<double>::quiet_NaN();
  double floor = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
  bool insufficient_data = false;
};

// One-step stationarity defect: push n_test resampled points through the
// kernel, re-bin, compare with the original measure.
DefectReport check_stationarity(const MarkovKernel& k, const EmpiricalMeasure& mu,
                                long n_test, std::uint64_t seed);

// Law of x_k from direct simulation vs the (k-l, l) two-stage composition.
DefectReport chapman_kolmogorov_check(const MarkovKernel& k, const Vec& x,
                                      int l, int k_total, long n_mc,
                                      std::shared_ptr<const GridPartition> grid,
                                      std::uint64_t seed, int n_workers = 0);

struct AvoidanceEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  double radius = 0.0;  // eps^(1-gamma)
  long hits = 0;
  long n_mc = 0;
};

// Monte Carlo estimate of P^eps(k, x, B_{eps^{1-gamma}}(Sing(X))).
AvoidanceEstimate singularity_avoidance(const MarkovKernel& k, const Vec& x,
                                        double gamma, int k_steps, long n_mc,
                                        std::uint64_t seed, int n_workers = 0);

// -- stochastic-stability study ----------------------------------------------

struct StabilityRow {
  double eps = 0.0;
  double distance = 0.0;
  double floor = 0.0;
};

struct StabilityTable {
  std::vector<StabilityRow> rows;
  bool monotone = false;       // distances nonincreasing up to floor overlap
  bool converged = false;      // smallest-eps distance <= 2x its floor
};

struct StabilityConfig {
  double tau = 1.5;
  double tol = 1e-6;
  BoundaryPolicy policy = BoundaryPolicy::resample;
  long burn_in = 2000;
  long n_samples = 1000000;
  int n_chains = 8;
  int n_workers = 0;
  std::uint64_t seed = 1;
};

// For each eps (strictly descending) estimates the stationary measure and its
// weak distance to the reference SRB estimate.
StabilityTable stability_study(const VectorField& f,
                               const std::vector<double>& eps_list,
                               const Vec& x0, const EmpiricalMeasure& srb,
                               const StabilityConfig& cfg);

// Chain length window n(eps) in [(log eps)^2, (log eps)^4].
std::pair<long, long> chain_length_window(double eps);

}  // namespace salab

#endif  // SALAB_PERTURBATION_HPP_
