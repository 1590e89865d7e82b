#ifndef SALAB_FLOW_HPP_
#define SALAB_FLOW_HPP_

#include <utility>
#include <vector>

#include "salab/systems.hpp"
#include "salab/types.hpp"

namespace salab {

// Adaptive embedded Runge-Kutta 5(4) (Dormand-Prince) with mixed
// absolute/relative error control.  One instance owns its stage buffers and
// may be reused across integrations; instances are cheap to construct.
class Dopri5 {
 public:
  // rhs writes dy/dt into the second argument
  using Rhs = std::function<void(const Vec&, Vec&)>;

  // Integrates y from t=0 to t=t_end (t_end may be negative).  Throws
  // NumericalError on step-size underflow.  max_norm bounds ||y||_inf; when
  // exceeded the integration aborts with NumericalError (escape guard).
  static Vec integrate(const Rhs& rhs, Vec y, double t_end, double tol,
                       double max_norm = 1e12);
};

// -- continuous flow ---------------------------------------------------------

// X_t(x) with local error control at tolerance tol.  Negative t is allowed
// only for linear systems.  Throws InvariantError if the result leaves the
// trapping region (t >= 0 case).
Vec flow_map(const VectorField& f, const Vec& x, double t, double tol);

// (X_t(x), DX_t(x)) by co-integrating the variational equation
// M' = J(X_s(x)) M, M(0) = I.
std::pair<Vec, Mat> tangent_flow(const VectorField& f, const Vec& x, double t,
                                 double tol);

// Time-indexed orbit sample of the flow.
struct Trajectory {
  const VectorField* system = nullptr;
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Vec> points;

  int size() const { return static_cast<int>(points.size()); }
};

// points[k] = X_{t0 + k dt}(x0), n+1 points.
Trajectory sample_orbit(const VectorField& f, const Vec& x0, double t0,
                        double dt, int n, double tol);

// -- time-tau map ------------------------------------------------------------

// Reusable evaluator of F = X_tau and DF.
class TimeTauMap {
 public:
  TimeTauMap(const VectorField& f, double tau, double tol);

  const VectorField& field() const { return *f_; }
  double tau() const { return tau_; }
  double tol() const { return tol_; }
  bool small_tau_flag() const { return small_tau_; }  // tau <= 1 accepted with flag

  Vec operator()(const Vec& x) const { return flow_map(*f_, x, tau_, tol_); }
  std::pair<Vec, Mat> with_jacobian(const Vec& x) const {
    return tangent_flow(*f_, x, tau_, tol_);
  }
  Vec iterate(const Vec& x, int n) const;

 private:
  const VectorField* f_;
  double tau_;
  double tol_;
  bool small_tau_;
};

// -- pseudo-orbits and shadowing --------------------------------------------

struct PseudoOrbit {
  const VectorField* system = nullptr;
  double tau = 0.0;
  double delta = 0.0;
  std::vector<Vec> points;  // x_0 ... x_n

  int n_steps() const { return static_cast<int>(points.size()) - 1; }
};

// x_{i+1} = F(x_i) + eta_i, eta_i uniform in the delta-ball, clamped back
// into the trapping region.  The defining gaps dist(F(x_i), x_{i+1}) <= delta
// hold by construction.
PseudoOrbit generate_pseudo_orbit(const TimeTauMap& F, const Vec& x0,
                                  double delta, int n, Rng& rng);

// Recomputed gaps dist(F(x_i), x_{i+1}); max over i must be <= delta.
double pseudo_orbit_max_gap(const TimeTauMap& F, const PseudoOrbit& po);

struct ShadowingResult {
  Vec shadow_point;                // y = shadow_orbit[0]
  std::vector<Vec> shadow_orbit;   // y_0 ... y_n with per-step defect <= defect
  double max_deviation = 0.0;      // max_i dist(x_i, y_i)
  double max_defect = 0.0;         // max_i dist(F(y_i), y_{i+1})
  bool converged = false;
  int iterations = 0;
};

// Damped Gauss-Newton multiple shooting: minimizes the stacked residuals
// w*(F(y_i) - y_{i+1}) (dynamics) and (y_i - x_i) (proximity) over the full
// sequence.  converged = true iff the dynamics defect is at the integration
// tolerance and max_deviation <= c_est * n * delta.
ShadowingResult shadow_search(const TimeTauMap& F, const PseudoOrbit& po,
                              int max_iter, double tol, double c_est = 10.0);

// |det DF^n(x)| accumulated in log space.
double orbit_jacobian(const TimeTauMap& F, const Vec& x, int n);
double orbit_log_jacobian(const TimeTauMap& F, const Vec& x, int n);

// -- Bowen balls -------------------------------------------------------------

struct BowenVolume {
  double volume = 0.0;
  double std_error = 0.0;
  long hits = 0;
  bool starved = false;  // zero hits: request more samples
};

// Monte Carlo estimate of m(K_rho(x,n)) for every n in 0..n_max, in a single
// pass: samples uniformly in B_rho(x) and tracks forward-iterate survival.
std::vector<BowenVolume> bowen_ball_profile(const TimeTauMap& F, const Vec& x,
                                            int n_max, double rho, long samples,
                                            Rng& rng);

BowenVolume bowen_ball_volume(const TimeTauMap& F, const Vec& x, int n,
                              double rho, long samples, Rng& rng);

}  // namespace salab

#endif  // SALAB_FLOW_HPP_
