#ifndef SALAB_MEASURES_HPP_
#define SALAB_MEASURES_HPP_

#include <memory>
#include <vector>

#include "salab/flow.hpp"
#include "salab/hyperbolicity.hpp"
#include "salab/systems.hpp"
#include "salab/types.hpp"

namespace salab {

// Uniform grid partition of an axis-aligned box.
struct GridPartition {
  Box box;
  Eigen::VectorXi resolution;  // cells per axis, >= 2 each

  GridPartition(const Box& b, const Eigen::VectorXi& res);
  GridPartition(const Box& b, int res_per_axis);

  int dim() const { return box.dim(); }
  long n_cells() const { return n_cells_; }
  long cell_index(const Vec& x) const;  // x clamped into the box
  Vec cell_center(long idx) const;
  double cell_width(int axis) const {
    return (box.hi[axis] - box.lo[axis]) / resolution[axis];
  }
  bool operator==(const GridPartition& o) const;

 private:
  long n_cells_ = 0;
  std::vector<long> strides_;
};

// Normalized mass histogram; optionally carries per-block sub-histograms
// (contiguous sample blocks) used for noise-floor estimation.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(std::shared_ptr<const GridPartition> partition, int n_blocks = 0);

  const GridPartition& partition() const { return *partition_; }
  std::shared_ptr<const GridPartition> partition_ptr() const { return partition_; }
  const Vec& masses() const { return masses_; }
  long sample_count() const { return sample_count_; }
  int n_blocks() const { return static_cast<int>(block_counts_.size()); }

  void add_sample(const Vec& x, int block = 0);
  void add_counts(const EmpiricalMeasure& other);  // pooled accumulation
  // pooled accumulation of another raw measure into one noise-floor block
  void add_block(const EmpiricalMeasure& other, int block);
  void finalize();  // normalize masses to total 1
  bool finalized() const { return finalized_; }

  // Resample one point from the measure: cell by mass, uniform inside.
  Vec sample(Rng& rng) const;

  const std::vector<Vec>& block_counts() const { return block_counts_; }

 private:
  std::shared_ptr<const GridPartition> partition_;
  Vec masses_;  // counts until finalize(), then probabilities
  long sample_count_ = 0;
  bool finalized_ = false;
  std::vector<Vec> block_counts_;
  mutable std::vector<double> cdf_;  // built lazily for sample()
  mutable std::vector<long> cdf_cells_;
};

// Bounded-Lipschitz-style lower-bound distance: max over a fixed seeded
// dictionary of 256 Lipschitz-1 test functions plus the exact W1 of each
// coordinate marginal.
double weak_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// Block-bootstrap Monte Carlo noise floor: median over `replicates` of
// d(mu, mu*) where mu* resamples the measure's sample blocks (or cells, when
// no blocks were recorded) with replacement.
double noise_floor(const EmpiricalMeasure& mu, int replicates = 16,
                   std::uint64_t seed = 0x5a1abf100fULL);

inline double combined_floor(double fa, double fb) {
  return std::sqrt(fa * fa + fb * fb);
}

// Physical-measure estimate: histogram of the deterministic orbit sampled
// every sample_dt after discarding the transient.
EmpiricalMeasure srb_estimate(const VectorField& f, const Vec& x0,
                              double t_transient, double t_average,
                              double sample_dt,
                              std::shared_ptr<const GridPartition> grid,
                              double tol, int n_blocks = 8);

// -- rectangles (unstable arcs) ---------------------------------------------

struct Rectangle {
  Vec center;                    // point z on the attractor
  std::vector<Vec> unstable_arc; // ordered polyline through z
  double stable_radius = 0.0;
  double thickness = 0.0;        // flow-direction slack
  double mes_u = 0.0;            // arclength of the arc
};

// Approximates the local unstable arc through z = F^push_steps(orbit point
// after warmup from z_seed): a segment aligned with the leading covariant
// direction is pushed forward and re-truncated to arclength radius eta.
Rectangle build_rectangle(const TimeTauMap& F, const Vec& z_seed, int warmup,
                          int push_steps, double eta, double stable_radius,
                          double thickness, int arc_points = 65);

struct RectangleMass {
  double mass = 0.0;
  double std_error = 0.0;
  double mes_u = 0.0;
  double ratio = 0.0;  // mass / mes_u
  long hits = 0;
  bool starved = false;
};

// Fraction of states inside the fattened rectangle neighborhood: within
// stable_radius of the arc transversally and thickness along the flow.
RectangleMass rectangle_mass_bound(const std::vector<Vec>& states,
                                   const Rectangle& rect, const VectorField& f);

// -- coverage ----------------------------------------------------------------

std::vector<char> visited_cells(const VectorField& f, const Vec& x0, double t,
                                double sample_dt, const GridPartition& grid,
                                double tol);

// |A ^ B| / |A u B| for two visited-cell sets.
double coverage_symmetric_difference(const std::vector<char>& a,
                                     const std::vector<char>& b);

}  // namespace salab

#endif  // SALAB_MEASURES_HPP_
