#include "salab/flow.hpp"

#include <algorithm>
#include <cmath>

namespace salab {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

Vec Dopri5::integrate(const Rhs& rhs, Vec y, double t_end, double tol,
                      double max_norm) {
  if (t_end == 0.0) return y;
  const double dir = t_end > 0 ? 1.0 : -1.0;
  const long m = y.size();
  Vec k1(m), k2(m), k3(m), k4(m), k5(m), k6(m), k7(m), ytmp(m), ynew(m), err(m);

  rhs(y, k1);
  double t = 0.0;
  // initial step from the rhs magnitude
  double h = dir * std::min(std::abs(t_end),
                            0.01 * (1.0 + y.norm()) / (1e-8 + k1.norm()));
  const double hmin = std::abs(t_end) * 1e-14 + 1e-300;
  double errold = 1.0;

  while (dir * (t_end - t) > 0.0) {
    if (dir * (t + h) > dir * t_end) h = t_end - t;
    if (std::abs(h) < hmin)
      throw NumericalError("Dopri5: step-size underflow at t=" + std::to_string(t));

    ytmp = y + h * a21 * k1;
    rhs(ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    rhs(ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(ytmp, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(ynew, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double sum = 0.0;
    for (long i = 0; i < m; ++i) {
      const double sc = tol + tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      const double q = err[i] / sc;
      sum += q * q;
    }
    const double en = std::sqrt(sum / m);

    if (en <= 1.0) {
      t += h;
      y.swap(ynew);
      k1.swap(k7);  // FSAL
      if (y.cwiseAbs().maxCoeff() > max_norm)
        throw NumericalError("Dopri5: solution escaped (|y| > max_norm) at t=" +
                             std::to_string(t));
      const double fac =
          0.9 * std::pow(en + 1e-30, -0.7 / 5.0) * std::pow(errold + 1e-30, 0.4 / 5.0);
      h *= std::clamp(fac, 0.2, 5.0);
      errold = std::max(en, 1e-4);
    } else {
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
    }
  }
  return y;
}

Vec flow_map(const VectorField& f, const Vec& x, double t, double tol) {
  f.check_dim(x);
  if (tol <= 0.0) throw InputError("flow_map: tolerance must be positive");
  if (t < 0.0 && !f.linear)
    throw InputError("flow_map: negative time only supported for linear systems");
  if (t == 0.0) return x;
  Vec y = Dopri5::integrate([&f](const Vec& v, Vec& out) { f.field_into(v, out); },
                            x, t, tol);
  if (t > 0.0 && f.dissipative && !f.trapping_region.contains(y)) {
    // tolerate roundoff-level wall grazing
    const Vec yc = f.trapping_region.clamp(y);
    if ((y - yc).norm() > 1e-9 * (1.0 + y.norm()))
      throw InvariantError("flow_map: trajectory left the trapping region");
    y = yc;
  }
  return y;
}

std::pair<Vec, Mat> tangent_flow(const VectorField& f, const Vec& x, double t,
                                 double tol) {
  f.check_dim(x);
  if (t < 0.0 && !f.linear)
    throw InputError("tangent_flow: negative time only supported for linear systems");
  const int m = f.dimension;
  if (t == 0.0) return {x, Mat::Identity(m, m)};

  Vec y0(m + m * m);
  y0.head(m) = x;
  Eigen::Map<Mat>(y0.data() + m, m, m) = Mat::Identity(m, m);

  Mat J(m, m);
  auto rhs = [&f, m, &J](const Vec& y, Vec& out) {
    const Vec xs = y.head(m);
    f.field_into(xs, out);  // writes out[0..m)
    f.jac_into(xs, J);
    Eigen::Map<const Mat> M(y.data() + m, m, m);
    Eigen::Map<Mat> dM(out.data() + m, m, m);
    dM.noalias() = J * M;
  };
  const Vec yend = Dopri5::integrate(rhs, y0, t, tol);
  return {yend.head(m), Eigen::Map<const Mat>(yend.data() + m, m, m)};
}

Trajectory sample_orbit(const VectorField& f, const Vec& x0, double t0,
                        double dt, int n, double tol) {
  if (dt <= 0.0) throw InputError("sample_orbit: dt must be positive");
  Trajectory tr;
  tr.system = &f;
  tr.t0 = t0;
  tr.dt = dt;
  tr.points.reserve(n + 1);
  Vec x = t0 != 0.0 ? flow_map(f, x0, t0, tol) : x0;
  tr.points.push_back(x);
  for (int i = 0; i < n; ++i) {
    x = flow_map(f, x, dt, tol);
    tr.points.push_back(x);
  }
  return tr;
}

TimeTauMap::TimeTauMap(const VectorField& f, double tau, double tol)
    : f_(&f), tau_(tau), tol_(tol), small_tau_(tau <= 1.0) {
  if (tau <= 0.0) throw InputError("time_tau_map: tau must be positive");
  if (tol <= 0.0) throw InputError("time_tau_map: tolerance must be positive");
}

Vec TimeTauMap::iterate(const Vec& x, int n) const {
  Vec y = x;
  for (int i = 0; i < n; ++i) y = (*this)(y);
  return y;
}

PseudoOrbit generate_pseudo_orbit(const TimeTauMap& F, const Vec& x0,
                                  double delta, int n, Rng& rng) {
  if (n < 1) throw InputError("generate_pseudo_orbit: n must be >= 1");
  if (delta < 0.0) throw InputError("generate_pseudo_orbit: delta must be >= 0");
  const Box& box = F.field().trapping_region;
  PseudoOrbit po;
  po.system = &F.field();
  po.tau = F.tau();
  po.delta = delta;
  po.points.reserve(n + 1);
  po.points.push_back(x0);
  Vec x = x0;
  for (int i = 0; i < n; ++i) {
    x = F(x);
    if (delta > 0.0) {
      Vec cand = x + rng.uniform_in_ball(x.size(), delta);
      // re-project: keep drawing if the clamped point would break the gap
      for (int tries = 0; !box.contains(cand) && tries < 64; ++tries)
        cand = x + rng.uniform_in_ball(x.size(), delta);
      x = box.contains(cand) ? cand : box.clamp(x);
    }
    po.points.push_back(x);
  }
  return po;
}

double pseudo_orbit_max_gap(const TimeTauMap& F, const PseudoOrbit& po) {
  double worst = 0.0;
  for (int i = 0; i + 1 < static_cast<int>(po.points.size()); ++i)
    worst = std::max(worst, (F(po.points[i]) - po.points[i + 1]).norm());
  return worst;
}

ShadowingResult shadow_search(const TimeTauMap& F, const PseudoOrbit& po,
                              int max_iter, double tol, double c_est) {
  const int n = po.n_steps();
  if (n < 1) throw InputError("shadow_search: pseudo-orbit too short");
  const int m = po.points[0].size();
  const double w = 1e6;  // dynamics weight vs unit proximity weight

  // standing hypothesis of the shadowing statement; a hyperbolic linear
  // fixed point poses no obstruction, so linear fields are exempt
  if (!F.field().linear)
    for (const Vec& p : po.points)
      for (const Vec& s : F.field().singularities)
        if ((p - s).norm() <= c_est * po.delta)
          throw InputError("shadow_search: pseudo-orbit too close to Sing(X)");

  std::vector<Vec> Y = po.points;
  std::vector<Vec> FY(n);
  std::vector<Mat> DF(n);

  auto eval_dynamics = [&](const std::vector<Vec>& Z, std::vector<Vec>& FZ,
                           std::vector<Mat>* DZ) {
    for (int i = 0; i < n; ++i) {
      // residual values always come from the plain flow map so that model
      // and line-search costs are consistent; the co-integrated system is
      // used only for the Jacobian (its state part differs at the error
      // level of the larger augmented system)
      FZ[i] = F(Z[i]);
      if (DZ) (*DZ)[i] = F.with_jacobian(Z[i]).second;
    }
  };

  auto cost_of = [&](const std::vector<Vec>& Z, const std::vector<Vec>& FZ) {
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += w * w * (FZ[i] - Z[i + 1]).squaredNorm();
    for (int i = 0; i <= n; ++i) c += (Z[i] - po.points[i]).squaredNorm();
    return c;
  };

  eval_dynamics(Y, FY, &DF);
  double cost = cost_of(Y, FY);

  const int nvar = m * (n + 1);
  const int nres = m * n + nvar;
  Mat J(nres + nvar, nvar);  // extra nvar rows reserved for LM damping
  Vec r(nres + nvar);
  double lm = 0.0;
  int iters = 0;
  // the dynamics residual cannot drop below the integrator's accumulated
  // error, which scales with the orbit magnitude
  double orbit_scale = 1.0;
  for (const Vec& p : po.points)
    orbit_scale = std::max(orbit_scale, p.lpNorm<Eigen::Infinity>());
  const double defect_goal = std::max(10.0 * tol * orbit_scale, 1e-13);

  for (; iters < max_iter; ++iters) {
    double defect = 0.0;
    for (int i = 0; i < n; ++i)
      defect = std::max(defect, (FY[i] - Y[i + 1]).norm());
    if (defect <= defect_goal) break;

    J.setZero();
    r.setZero();
    for (int i = 0; i < n; ++i) {
      J.block(m * i, m * i, m, m) = w * DF[i];
      J.block(m * i, m * (i + 1), m, m) = -w * Mat::Identity(m, m);
      r.segment(m * i, m) = w * (FY[i] - Y[i + 1]);
    }
    for (int i = 0; i <= n; ++i) {
      J.block(m * n + m * i, m * i, m, m) = Mat::Identity(m, m);
      r.segment(m * n + m * i, m) = Y[i] - po.points[i];
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 8 && !accepted; ++attempt) {
      int rows = nres;
      if (lm > 0.0) {
        J.block(nres, 0, nvar, nvar) = std::sqrt(lm) * Mat::Identity(nvar, nvar);
        rows = nres + nvar;
      }
      const Vec step =
          J.topRows(rows).colPivHouseholderQr().solve(-r.topRows(rows));
      std::vector<Vec> Ytrial(n + 1);
      for (int i = 0; i <= n; ++i) Ytrial[i] = Y[i] + step.segment(m * i, m);
      std::vector<Vec> FTrial(n);
      try {
        eval_dynamics(Ytrial, FTrial, nullptr);
      } catch (const std::exception&) {
        lm = std::max(1.0, lm * 10.0);
        continue;
      }
      const double trial_cost = cost_of(Ytrial, FTrial);
      if (trial_cost < cost) {
        Y = std::move(Ytrial);
        FY = std::move(FTrial);
        cost = trial_cost;
        lm = lm > 1e-8 ? lm / 3.0 : 0.0;
        accepted = true;
      } else {
        lm = std::max(1.0, lm * 10.0);
      }
    }
    if (!accepted) break;
    eval_dynamics(Y, FY, &DF);  // refresh Jacobians at the accepted iterate
    cost = cost_of(Y, FY);
  }

  ShadowingResult res;
  res.shadow_point = Y[0];
  res.shadow_orbit = Y;
  res.iterations = iters;
  eval_dynamics(Y, FY, nullptr);
  for (int i = 0; i < n; ++i)
    res.max_defect = std::max(res.max_defect, (FY[i] - Y[i + 1]).norm());
  for (int i = 0; i <= n; ++i)
    res.max_deviation = std::max(res.max_deviation, (Y[i] - po.points[i]).norm());
  res.converged = res.max_defect <= defect_goal &&
                  res.max_deviation <= c_est * n * std::max(po.delta, tol);
  return res;
}

double orbit_log_jacobian(const TimeTauMap& F, const Vec& x, int n) {
  if (n < 0) throw InputError("orbit_jacobian: n must be >= 0");
  double acc = 0.0;
  Vec y = x;
  for (int i = 0; i < n; ++i) {
    auto [ynext, D] = F.with_jacobian(y);
    acc += std::log(std::abs(D.determinant()));
    y = ynext;
  }
  return acc;
}

double orbit_jacobian(const TimeTauMap& F, const Vec& x, int n) {
  return std::exp(orbit_log_jacobian(F, x, n));
}

std::vector<BowenVolume> bowen_ball_profile(const TimeTauMap& F, const Vec& x,
                                            int n_max, double rho, long samples,
                                            Rng& rng) {
  if (n_max < 0 || rho <= 0.0 || samples < 1)
    throw InputError("bowen_ball_profile: invalid arguments");
  const int m = x.size();

  std::vector<Vec> ref(n_max + 1);
  ref[0] = x;
  for (int k = 1; k <= n_max; ++k) ref[k] = F(ref[k - 1]);

  std::vector<long> counts(n_max + 1, 0);
  for (long s = 0; s < samples; ++s) {
    Vec y = x + rng.uniform_in_ball(m, rho);
    counts[0]++;
    for (int k = 1; k <= n_max; ++k) {
      y = F(y);
      if ((y - ref[k]).norm() > rho) break;
      counts[k]++;
    }
  }

  const double bv = ball_volume(m, rho);
  std::vector<BowenVolume> out(n_max + 1);
  for (int k = 0; k <= n_max; ++k) {
    const double p = static_cast<double>(counts[k]) / samples;
    out[k].hits = counts[k];
    out[k].volume = bv * p;
    out[k].std_error = bv * std::sqrt(std::max(p * (1.0 - p), 0.0) / samples);
    out[k].starved = counts[k] == 0;
  }
  return out;
}

BowenVolume bowen_ball_volume(const TimeTauMap& F, const Vec& x, int n,
                              double rho, long samples, Rng& rng) {
  return bowen_ball_profile(F, x, n, rho, samples, rng).back();
}

}  // namespace salab
