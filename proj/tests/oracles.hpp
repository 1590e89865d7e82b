// Independent reference implementations used only by tests: fixed-step RK4,
// a classical Benettin top-exponent estimator, and a direct 2-plane
// determinant minimizer.  These must not share code with the library paths
// they check.
#ifndef SALAB_TESTS_ORACLES_HPP_
#define SALAB_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "salab/systems.hpp"
#include "salab/types.hpp"

namespace salab::oracle {

// Fixed-step classical RK4.
inline Vec rk4(const VectorField& f, Vec x, double t, double dt) {
  const int n = static_cast<int>(std::round(std::abs(t) / dt));
  const double h = t / n;
  Vec k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size()), tmp(x.size());
  for (int i = 0; i < n; ++i) {
    f.field_into(x, k1);
    tmp = x + 0.5 * h * k1;
    f.field_into(tmp, k2);
    tmp = x + 0.5 * h * k2;
    f.field_into(tmp, k3);
    tmp = x + h * k3;
    f.field_into(tmp, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

// Top Lyapunov exponent by the classical Benettin single-vector method with
// fixed-step RK4 on the joint (state, tangent) system.
inline double benettin_top_exponent(const VectorField& f, Vec x,
                                    double t_transient, double t_average,
                                    double dt, double renorm_interval) {
  const int m = f.dimension;
  x = rk4(f, x, t_transient, dt);
  Vec v = Vec::Ones(m).normalized();

  const int steps_per_renorm = static_cast<int>(std::round(renorm_interval / dt));
  const long renorms = static_cast<long>(t_average / renorm_interval);
  Mat J(m, m);
  Vec k1(m), k2(m), k3(m), k4(m), xtmp(m);
  Vec vk1(m), vk2(m), vk3(m), vk4(m), vtmp(m);
  double logsum = 0.0;
  for (long r = 0; r < renorms; ++r) {
    for (int s = 0; s < steps_per_renorm; ++s) {
      f.field_into(x, k1);
      f.jac_into(x, J);
      vk1 = J * v;
      xtmp = x + 0.5 * dt * k1;
      vtmp = v + 0.5 * dt * vk1;
      f.field_into(xtmp, k2);
      f.jac_into(xtmp, J);
      vk2 = J * vtmp;
      xtmp = x + 0.5 * dt * k2;
      vtmp = v + 0.5 * dt * vk2;
      f.field_into(xtmp, k3);
      f.jac_into(xtmp, J);
      vk3 = J * vtmp;
      xtmp = x + dt * k3;
      vtmp = v + dt * vk3;
      f.field_into(xtmp, k4);
      f.jac_into(xtmp, J);
      vk4 = J * vtmp;
      x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      v += (dt / 6.0) * (vk1 + 2.0 * vk2 + 2.0 * vk3 + vk4);
    }
    const double nv = v.norm();
    logsum += std::log(nv);
    v /= nv;
  }
  return logsum / (renorms * renorm_interval);
}

// Area-expansion factor of A on the 2-plane spanned by the (orthonormalized)
// columns of the m x 2 matrix V.
inline double plane_area_factor(const Mat& A, Mat V) {
  Eigen::HouseholderQR<Mat> qr(V);
  const Mat Q = qr.householderQ() * Mat::Identity(V.rows(), 2);
  const Mat B = A * Q;
  return std::sqrt(std::abs((B.transpose() * B).determinant()));
}

// Direct minimization of |det(A|L)| over 2-planes L in the span of C:
// random multistart followed by Nelder-Mead in the plane parameters.
inline double brute_force_min_two_plane(const Mat& A, const Mat& C, int n_random,
                                        Rng& rng) {
  const int k = static_cast<int>(C.cols());
  auto objective = [&](const Vec& p) {
    Mat V(C.rows(), 2);
    V.col(0) = C * p.head(k);
    V.col(1) = C * p.tail(k);
    if (V.colwise().norm().minCoeff() < 1e-12) return 1e100;
    return plane_area_factor(A, V);
  };

  Vec best_p(2 * k);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_random; ++i) {
    const Vec p = rng.normal_vec(2 * k);
    const double v = objective(p);
    if (v < best) {
      best = v;
      best_p = p;
    }
  }

  // Nelder-Mead polish from the best random start
  const int d = 2 * k;
  std::vector<Vec> simplex(d + 1);
  std::vector<double> fv(d + 1);
  simplex[0] = best_p;
  for (int i = 1; i <= d; ++i) {
    simplex[i] = best_p;
    simplex[i][i - 1] += 0.1;
  }
  for (int i = 0; i <= d; ++i) fv[i] = objective(simplex[i]);
  for (int iter = 0; iter < 4000; ++iter) {
    std::vector<int> ord(d + 1);
    for (int i = 0; i <= d; ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    std::vector<Vec> sx(d + 1);
    std::vector<double> sf(d + 1);
    for (int i = 0; i <= d; ++i) sx[i] = simplex[ord[i]], sf[i] = fv[ord[i]];
    simplex = sx;
    fv = sf;
    if (fv[d] - fv[0] < 1e-14 * (1.0 + std::abs(fv[0]))) break;
    Vec centroid = Vec::Zero(d);
    for (int i = 0; i < d; ++i) centroid += simplex[i];
    centroid /= d;
    const Vec refl = centroid + (centroid - simplex[d]);
    const double fr = objective(refl);
    if (fr < fv[0]) {
      const Vec exp_ = centroid + 2.0 * (centroid - simplex[d]);
      const double fe = objective(exp_);
      if (fe < fr) simplex[d] = exp_, fv[d] = fe;
      else simplex[d] = refl, fv[d] = fr;
    } else if (fr < fv[d - 1]) {
      simplex[d] = refl;
      fv[d] = fr;
    } else {
      const Vec con = centroid + 0.5 * (simplex[d] - centroid);
      const double fc = objective(con);
      if (fc < fv[d]) simplex[d] = con, fv[d] = fc;
      else
        for (int i = 1; i <= d; ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          fv[i] = objective(simplex[i]);
        }
    }
  }
  return *std::min_element(fv.begin(), fv.end());
}

// Stationary standard deviation of the OU chain x_{n+1} = e^{-a tau} x_n + eps xi.
inline double ou_stationary_std(double a, double tau, double eps) {
  const double r = std::exp(-a * tau);
  return eps / std::sqrt(1.0 - r * r);
}

}  // namespace salab::oracle

#endif  // SALAB_TESTS_ORACLES_HPP_
