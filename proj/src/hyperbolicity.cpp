#include "salab/hyperbolicity.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace salab {

namespace {

// Orthonormalize columns; R diagonal made positive so frames vary continuously.
void qr_frame(const Mat& Z, Mat& Q, Mat& R) {
  Eigen::HouseholderQR<Mat> qr(Z);
  Q = qr.householderQ() * Mat::Identity(Z.rows(), Z.cols());
  R = qr.matrixQR().topRows(Z.cols()).triangularView<Eigen::Upper>();
  for (int j = 0; j < R.rows(); ++j)
    if (R(j, j) < 0) {
      R.row(j) = -R.row(j);
      Q.col(j) = -Q.col(j);
    }
}

Mat orth(const Mat& Z) {
  Mat Q, R;
  qr_frame(Z, Q, R);
  return Q;
}

Mat deterministic_frame(int m, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Mat Z(m, cols);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < cols; ++j) Z(i, j) = rng.normal();
  return orth(Z);
}

// smallest principal angle between the column spans of two orthonormal frames
double min_principal_angle(const Mat& A, const Mat& B) {
  const Mat G = A.transpose() * B;
  const double smax = G.jacobiSvd().singularValues()(0);
  return std::acos(std::clamp(smax, -1.0, 1.0));
}

// largest principal angle (sin) of span(W) out of span(Q)
double frame_defect(const Mat& Q, const Mat& W) {
  const Mat P = W - Q * (Q.transpose() * W);
  return P.jacobiSvd().singularValues()(0);
}

// Upper-triangular cocycle accumulator with log rescaling; exposes the log
// singular values of the accumulated restriction.
struct RestrictionProduct {
  Mat T;
  double log_scale = 0.0;

  explicit RestrictionProduct(int k) : T(Mat::Identity(k, k)) {}

  void push(const Mat& R) {
    T = R * T;
    const double s = T.cwiseAbs().maxCoeff();
    if (s > 0) {
      T /= s;
      log_scale += std::log(s);
    }
  }

  Vec log_singular_values() const {
    Vec sv = T.jacobiSvd().singularValues();
    Vec out(sv.size());
    for (int i = 0; i < sv.size(); ++i)
      out[i] = std::log(std::max(sv[i], 1e-300)) + log_scale;
    return out;
  }
};

}  // namespace

std::pair<double, double> fit_slope(const std::vector<double>& t,
                                    const std::vector<double>& y) {
  const int n = static_cast<int>(t.size());
  if (n < 2) throw InputError("fit_slope: need at least two points");
  double tm = 0, ym = 0;
  for (int i = 0; i < n; ++i) tm += t[i], ym += y[i];
  tm /= n;
  ym /= n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (t[i] - tm) * (t[i] - tm);
    sxy += (t[i] - tm) * (y[i] - ym);
  }
  const double slope = sxy / sxx;
  const double icept = ym - slope * tm;
  double ss = 0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - slope * t[i] - icept;
    ss += r * r;
  }
  return {slope, std::sqrt(ss / n)};
}

LyapunovReport lyapunov_spectrum(const VectorField& f, const Vec& x0,
                                 double t_transient, double t_average,
                                 double qr_interval, double tol) {
  if (qr_interval <= 0.0) throw InputError("lyapunov_spectrum: qr_interval <= 0");
  if (t_average < 100.0 * qr_interval)
    throw InputError("lyapunov_spectrum: t_average must be >= 100 * qr_interval");
  const int m = f.dimension;

  Vec x = t_transient > 0 ? flow_map(f, x0, t_transient, tol) : x0;
  Mat Q = Mat::Identity(m, m), R(m, m);
  Vec logsum = Vec::Zero(m);
  double div_sum = 0.0;
  const int n_int = static_cast<int>(std::round(t_average / qr_interval));
  const int hist_stride = std::max(1, n_int / 50);

  LyapunovReport rep;
  rep.transient_time = t_transient;
  rep.averaging_time = n_int * qr_interval;

  for (int k = 1; k <= n_int; ++k) {
    div_sum += f.divergence(x) * qr_interval;  // trapezoid not needed at this accuracy
    auto [xn, M] = tangent_flow(f, x, qr_interval, tol);
    x = xn;
    qr_frame(M * Q, Q, R);
    for (int j = 0; j < m; ++j) logsum[j] += std::log(std::max(R(j, j), 1e-300));
    if (R.diagonal().minCoeff() <= 1e-300)
      throw NumericalError("lyapunov_spectrum: frame degeneration (R underflow)");
    if (k % hist_stride == 0)
      rep.convergence_history.emplace_back(k * qr_interval,
                                           logsum / (k * qr_interval));
  }

  rep.exponents = logsum / rep.averaging_time;
  std::sort(rep.exponents.data(), rep.exponents.data() + m, std::greater<>());
  rep.divergence_average = div_sum / rep.averaging_time;
  return rep;
}

SplittingEstimate estimate_splitting(const VectorField& f, const Trajectory& orbit,
                                     int stable_dim, double tol) {
  const int L = orbit.size() - 1;
  if (L < 200) throw InputError("estimate_splitting: orbit must have >= 200 map steps");
  const int m = f.dimension;
  const int s = stable_dim;
  if (s < 1 || s >= m) throw InputError("estimate_splitting: bad stable_dim");

  SplittingEstimate sp;
  sp.base_orbit = &orbit;
  sp.stable_dim = s;
  sp.step_jacobians.resize(L);
  sp.central_frames.resize(L + 1);
  sp.stable_frames.resize(L + 1);

  for (int i = 0; i < L; ++i) {
    auto [xn, D] = tangent_flow(f, orbit.points[i], orbit.dt, tol);
    sp.step_jacobians[i] = D;
  }

  // forward power iteration -> leading (m-s)-dim covariant subspace (E^c)
  Mat Qc = deterministic_frame(m, m - s, 0xC0FFEEULL), R;
  sp.central_frames[0] = Qc;
  for (int i = 0; i < L; ++i) {
    qr_frame(sp.step_jacobians[i] * Qc, Qc, R);
    sp.central_frames[i + 1] = Qc;
  }

  // backward power iteration of the inverse cocycle -> E^s
  Mat Qs = deterministic_frame(m, s, 0x5EEDULL);
  sp.stable_frames[L] = Qs;
  for (int i = L - 1; i >= 0; --i) {
    const Mat Z = sp.step_jacobians[i].partialPivLu().solve(Qs);
    qr_frame(Z, Qs, R);
    sp.stable_frames[i] = Qs;
  }

  sp.valid_start = L / 5;
  sp.valid_end = L - L / 5;
  double amin = M_PI;
  for (int i = sp.valid_start; i <= sp.valid_end; ++i)
    amin = std::min(amin,
                    min_principal_angle(sp.stable_frames[i], sp.central_frames[i]));
  sp.min_angle = amin;
  if (amin < 1e-3)
    throw NumericalError("estimate_splitting: degenerate splitting (angle < 1e-3)");
  return sp;
}

double splitting_invariance_defect(const SplittingEstimate& split) {
  double worst = 0.0;
  for (int i = split.valid_start; i < split.valid_end; ++i) {
    const Mat W = orth(split.step_jacobians[i] * split.stable_frames[i]);
    worst = std::max(worst, frame_defect(split.stable_frames[i + 1], W));
  }
  return worst;
}

namespace {

std::vector<int> select_base_points(const VectorField& f,
                                    const SplittingEstimate& split, int k_steps,
                                    int max_base_points, double sing_exclusion) {
  const auto& pts = split.base_orbit->points;
  std::vector<int> idx;
  const int lo = split.valid_start;
  const int hi = split.valid_end - k_steps;
  if (hi < lo) throw InputError("horizon too long for the stored orbit");
  const int stride = std::max(1, (hi - lo + 1) / max_base_points);
  for (int i = lo; i <= hi && static_cast<int>(idx.size()) < max_base_points;
       i += stride) {
    bool ok = true;
    for (const Vec& sg : f.singularities)
      if ((pts[i] - sg).norm() < sing_exclusion) ok = false;
    if (ok) idx.push_back(i);
  }
  if (idx.empty()) throw InputError("no admissible base points");
  return idx;
}

}  // namespace

DiagnosticsReport check_sectional_conditions(const VectorField& f,
                                             const SplittingEstimate& split,
                                             double horizon, int max_base_points,
                                             double sing_exclusion) {
  const double dt = split.base_orbit->dt;
  const int K = std::max(3, static_cast<int>(std::round(horizon / dt)));
  const auto idx =
      select_base_points(f, split, K, max_base_points, sing_exclusion);

  std::vector<double> ts(K);
  std::vector<double> c1(K, 0.0), c2(K, 0.0), c3(K, 0.0);
  for (int k = 0; k < K; ++k) ts[k] = (k + 1) * dt;

  for (int i : idx) {
    RestrictionProduct Ts(split.stable_dim);
    RestrictionProduct Tc(f.dimension - split.stable_dim);
    Mat Qs = split.stable_frames[i];
    Mat Qc = split.central_frames[i];
    Mat R;
    for (int k = 0; k < K; ++k) {
      const Mat& A = split.step_jacobians[i + k];
      qr_frame(A * Qs, Qs, R);
      Ts.push(R);
      qr_frame(A * Qc, Qc, R);
      Tc.push(R);
      const Vec ls = Ts.log_singular_values();
      const Vec lc = Tc.log_singular_values();
      const double log_norm_s = ls(0);
      const double log_conorm_c = lc(lc.size() - 1);
      const double log_min_2plane = lc(lc.size() - 1) + lc(lc.size() - 2);
      c1[k] += log_norm_s;
      c2[k] += log_norm_s - log_conorm_c;
      c3[k] += log_min_2plane;
    }
  }
  const double ninv = 1.0 / idx.size();
  for (int k = 0; k < K; ++k) c1[k] *= ninv, c2[k] *= ninv, c3[k] *= ninv;

  DiagnosticsReport rep;
  rep.sample_size = static_cast<int>(idx.size());

  // decaying curves are trustworthy only until the estimated subspace error
  // (amplified at the domination gap rate) overtakes the true contraction:
  // past the curve minimum the data measures noise, so fit up to the argmin
  auto fit_decaying = [&](const std::vector<double>& c) {
    const int k_min =
        static_cast<int>(std::min_element(c.begin(), c.end()) - c.begin());
    const int K_fit = std::max(3, k_min + 1);
    const std::vector<double> t_fit(ts.begin(), ts.begin() + K_fit);
    const std::vector<double> c_fit(c.begin(), c.begin() + K_fit);
    auto [s, r] = fit_slope(t_fit, c_fit);
    return std::tuple<double, double, double>(s, r, t_fit.back() - t_fit.front());
  };
  const auto [s1, r1, span1] = fit_decaying(c1);
  const auto [s2, r2, span2] = fit_decaying(c2);
  auto [s3, r3] = fit_slope(ts, c3);
  const double span3 = ts.back() - ts.front();
  rep.contraction_rate = s1;
  rep.domination_rate = s2;
  rep.sectional_rate = s3;
  rep.fit_residuals = Vec(3);
  rep.fit_residuals << r1 / (std::abs(s1) * span1 + 1e-300),
      r2 / (std::abs(s2) * span2 + 1e-300), r3 / (std::abs(s3) * span3 + 1e-300);
  rep.conclusive = rep.fit_residuals.maxCoeff() < 0.10;
  return rep;
}

DiagnosticsReport hyperbolic_check(const VectorField& f,
                                   const SplittingEstimate& split, double horizon,
                                   int max_base_points) {
  const double dt = split.base_orbit->dt;
  const int K = std::max(3, static_cast<int>(std::round(horizon / dt)));
  const auto idx = select_base_points(f, split, K, max_base_points, 1e-8);
  const int m = f.dimension;
  const int cu = m - split.stable_dim - 1;  // dim of E^u = E^c minus flow line
  if (cu < 1)
    throw InputError("hyperbolic_check: E^c has no unstable complement");

  std::vector<double> ts(K);
  for (int k = 0; k < K; ++k) ts[k] = (k + 1) * dt;
  std::vector<double> cu_curve(K, 0.0), cf_curve(K, 0.0);
  int used = 0;

  for (int i : idx) {
    const Vec Xx = f.eval(split.base_orbit->points[i]);
    if (Xx.norm() < 1e-10) continue;
    const Vec w = Xx.normalized();
    const Mat& C = split.central_frames[i];
    // unstable complement of the flow direction inside E^c
    Mat P = C - w * (w.transpose() * C);
    Eigen::JacobiSVD<Mat> svd(P, Eigen::ComputeThinU);
    Mat Qu = svd.matrixU().leftCols(cu);
    RestrictionProduct Tu(cu);
    Mat R;
    for (int k = 0; k < K; ++k) {
      const Mat& A = split.step_jacobians[i + k];
      qr_frame(A * Qu, Qu, R);
      Tu.push(R);
      const Vec lu = Tu.log_singular_values();
      cu_curve[k] += lu(lu.size() - 1);  // log conorm
      const Vec Xk = f.eval(split.base_orbit->points[i + k + 1]);
      cf_curve[k] += std::log(std::max(Xk.norm(), 1e-300) / Xx.norm());
    }
    ++used;
  }
  if (used == 0) throw InputError("hyperbolic_check: no base points with X(x) != 0");
  for (int k = 0; k < K; ++k) cu_curve[k] /= used, cf_curve[k] /= used;

  DiagnosticsReport rep;
  rep.sample_size = used;
  const double span = ts.back() - ts.front();
  auto [su, ru] = fit_slope(ts, cu_curve);
  auto [sf, rf] = fit_slope(ts, cf_curve);
  rep.unstable_rate = su;
  rep.flow_exponent = sf;
  rep.fit_residuals = Vec(2);
  rep.fit_residuals << ru / (std::abs(su) * span + 1e-300), rf;
  rep.conclusive = true;
  return rep;
}

double flow_direction_invariance_defect(const VectorField& f,
                                        const Trajectory& orbit, double tol) {
  const int L = orbit.size() - 1;
  const int stride = std::max(1, L / 20);
  double worst = 0.0;
  for (int i = 0; i < L; i += stride) {
    auto [xn, M] = tangent_flow(f, orbit.points[i], orbit.dt, tol);
    const Vec lhs = M * f.eval(orbit.points[i]);
    const Vec rhs = f.eval(xn);
    worst = std::max(worst, (lhs - rhs).norm() / std::max(rhs.norm(), 1e-300));
  }
  return worst;
}

double min_two_plane_determinant(const Mat& A, const Mat& C) {
  if (C.cols() < 2) throw InputError("min_two_plane_determinant: dim E^c < 2");
  const Mat B = A * orth(C);
  const Vec sv = B.jacobiSvd().singularValues();
  return sv(sv.size() - 1) * sv(sv.size() - 2);
}

LeadingStretch leading_stretch_factors(const TimeTauMap& F, const Vec& x0,
                                       int n_steps, int warmup) {
  const int m = x0.size();
  Vec v = deterministic_frame(m, 1, 0xFACADEULL).col(0);
  Vec x = x0;
  for (int i = 0; i < warmup; ++i) {
    auto [xn, D] = F.with_jacobian(x);
    v = (D * v).normalized();
    x = xn;
  }
  LeadingStretch out;
  out.points.push_back(x);
  for (int i = 0; i < n_steps; ++i) {
    out.directions.push_back(v);
    auto [xn, D] = F.with_jacobian(x);
    const Vec dv = D * v;
    out.factors.push_back(dv.norm());
    v = dv.normalized();
    x = xn;
    out.points.push_back(x);
  }
  out.directions.push_back(v);
  return out;
}

}  // namespace salab
