#ifndef SALAB_HYPERBOLICITY_HPP_
#define SALAB_HYPERBOLICITY_HPP_

#include <utility>
#include <vector>

#include "salab/flow.hpp"
#include "salab/systems.hpp"
#include "salab/types.hpp"

namespace salab {

struct LyapunovReport {
  Vec exponents;  // sorted descending, units 1/time
  double transient_time = 0.0;
  double averaging_time = 0.0;
  double divergence_average = 0.0;  // orbit average of trace(J)
  std::vector<std::pair<double, Vec>> convergence_history;
};

// Benettin QR-reorthonormalization along the tangent flow.
LyapunovReport lyapunov_spectrum(const VectorField& f, const Vec& x0,
                                 double t_transient, double t_average,
                                 double qr_interval, double tol);

struct SplittingEstimate {
  const Trajectory* base_orbit = nullptr;
  int stable_dim = 0;
  // per-point orthonormal frames; valid (converged) only on
  // indices [valid_start, valid_end]
  std::vector<Mat> stable_frames;   // m x s
  std::vector<Mat> central_frames;  // m x (m-s)
  std::vector<Mat> step_jacobians;  // DF at point i (one map step)
  int valid_start = 0;
  int valid_end = 0;
  double min_angle = 0.0;  // radians, over the valid range
};

// E^s by backward power iteration of the inverse one-step cocycle, E^c by
// forward power iteration, both along the stored orbit (step = orbit.dt).
SplittingEstimate estimate_splitting(const VectorField& f, const Trajectory& orbit,
                                     int stable_dim, double tol);

// Principal-angle defect of DF E^s_x vs E^s_{F x}, max over the valid range.
double splitting_invariance_defect(const SplittingEstimate& split);

struct DiagnosticsReport {
  double contraction_rate = 0.0;  // slope of log||DX_t|E^s||, expected < 0
  double domination_rate = 0.0;   // slope of log(||DX_t|E^s|| / m(DX_t|E^c)), < 0
  double sectional_rate = 0.0;    // slope of min 2-plane log|det(DX_t|L)|, > 0
  double unstable_rate = std::numeric_limits<double>::quiet_NaN();
  double flow_exponent = std::numeric_limits<double>::quiet_NaN();
  Vec fit_residuals;  // normalized rms residual per fitted rate
  int sample_size = 0;
  bool conclusive = true;
};

// Fits the three sectional-hyperbolicity rates over t up to `horizon` (time
// units) at base points sampled from the valid range of the splitting.
// Base points within `sing_exclusion` of a singularity are skipped.
DiagnosticsReport check_sectional_conditions(const VectorField& f,
                                             const SplittingEstimate& split,
                                             double horizon,
                                             int max_base_points = 64,
                                             double sing_exclusion = 0.5);

// Singularity-free refinement E^c = E^X + E^u: verifies conorm growth on the
// unstable complement and neutrality of the flow direction.
DiagnosticsReport hyperbolic_check(const VectorField& f,
                                   const SplittingEstimate& split, double horizon,
                                   int max_base_points = 64);

// DX_t(x) X(x) vs X(X_t(x)), relative, max over sampled points of the orbit.
double flow_direction_invariance_defect(const VectorField& f,
                                        const Trajectory& orbit, double tol);

// min over 2-planes L of the subspace spanned by the columns of C of
// |det(A|L)|: equals the product of the two smallest singular values of A*C
// (with orthonormal C columns).
double min_two_plane_determinant(const Mat& A, const Mat& C);

// Per-step norm growth factors of the leading covariant direction along the
// orbit of x0; factors[i] multiplies over step warmup+i.  Also returns the
// orbit points past warmup.
struct LeadingStretch {
  std::vector<Vec> points;       // orbit points x_warmup ... x_{warmup+n}
  std::vector<double> factors;   // n per-step expansion factors
  std::vector<Vec> directions;   // unit leading direction at each point
};
LeadingStretch leading_stretch_factors(const TimeTauMap& F, const Vec& x0,
                                       int n_steps, int warmup);

// Least-squares slope of y vs t, plus rms residual.
std::pair<double, double> fit_slope(const std::vector<double>& t,
                                    const std::vector<double>& y);

}  // namespace salab

#endif  // SALAB_HYPERBOLICITY_HPP_
