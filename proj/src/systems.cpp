#include "salab/systems.hpp"

#include <cmath>

namespace salab {
namespace {

double param(const std::map<std::string, double>& p, const std::string& k) {
  return p.at(k);
}

std::map<std::string, double> merge_params(
    const std::vector<ParameterSpec>& spec,
    const std::map<std::string, double>& overrides,
    const std::string& system_name) {
  std::map<std::string, double> out;
  for (const auto& ps : spec) out[ps.name] = ps.default_value;
  for (const auto& [k, v] : overrides) {
    auto it = out.find(k);
    if (it == out.end())
      throw InputError("system '" + system_name + "': unknown parameter '" + k + "'");
    it->second = v;
  }
  return out;
}

Box make_box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  Box b;
  b.lo = Eigen::Map<const Vec>(lo.begin(), static_cast<long>(lo.size()));
  b.hi = Eigen::Map<const Vec>(hi.begin(), static_cast<long>(hi.size()));
  return b;
}

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

VectorField make_lorenz(const std::map<std::string, double>& overrides) {
  VectorField f;
  f.name = "lorenz";
  f.dimension = 3;
  f.parameters = merge_params({{"sigma", 10.0}, {"rho", 28.0}, {"beta", 8.0 / 3.0}},
                              overrides, f.name);
  const double s = param(f.parameters, "sigma");
  const double r = param(f.parameters, "rho");
  const double b = param(f.parameters, "beta");
  f.trapping_region = make_box({-30, -30, -5}, {30, 30, 60});
  f.singularities.push_back(vec3(0, 0, 0));
  if (r > 1.0) {
    const double q = std::sqrt(b * (r - 1.0));
    f.singularities.push_back(vec3(q, q, r - 1.0));
    f.singularities.push_back(vec3(-q, -q, r - 1.0));
  }
  f.field_into = [s, r, b](const Vec& x, Vec& out) {
    out[0] = s * (x[1] - x[0]);
    out[1] = x[0] * (r - x[2]) - x[1];
    out[2] = x[0] * x[1] - b * x[2];
  };
  f.jac_into = [s, r, b](const Vec& x, Mat& J) {
    J(0, 0) = -s;   J(0, 1) = s;    J(0, 2) = 0.0;
    J(1, 0) = r - x[2]; J(1, 1) = -1.0; J(1, 2) = -x[0];
    J(2, 0) = x[1]; J(2, 1) = x[0]; J(2, 2) = -b;
  };
  return f;
}

VectorField make_linear3d(const std::map<std::string, double>& overrides) {
  VectorField f;
  f.name = "linear3d";
  f.dimension = 3;
  f.parameters = merge_params({{"a", -1.0}, {"b", -2.0}, {"c", -3.0}}, overrides, f.name);
  const double a = param(f.parameters, "a");
  const double b = param(f.parameters, "b");
  const double c = param(f.parameters, "c");
  f.trapping_region = make_box({-1e3, -1e3, -1e3}, {1e3, 1e3, 1e3});
  f.singularities.push_back(Vec::Zero(3));
  f.linear = true;
  f.dissipative = a < 0 && b < 0 && c < 0;
  f.field_into = [a, b, c](const Vec& x, Vec& out) {
    out[0] = a * x[0];
    out[1] = b * x[1];
    out[2] = c * x[2];
  };
  f.jac_into = [a, b, c](const Vec&, Mat& J) {
    J.setZero();
    J(0, 0) = a;
    J(1, 1) = b;
    J(2, 2) = c;
  };
  return f;
}

VectorField make_ou1d(const std::map<std::string, double>& overrides) {
  VectorField f;
  f.name = "ou1d";
  f.dimension = 1;
  f.parameters = merge_params({{"a", 1.0}}, overrides, f.name);
  const double a = param(f.parameters, "a");
  Box b;
  b.lo = Vec::Constant(1, -50.0);
  b.hi = Vec::Constant(1, 50.0);
  f.trapping_region = b;
  f.singularities.push_back(Vec::Zero(1));
  f.linear = true;
  f.dissipative = a > 0;
  f.field_into = [a](const Vec& x, Vec& out) { out[0] = -a * x[0]; };
  f.jac_into = [a](const Vec&, Mat& J) { J(0, 0) = -a; };
  return f;
}

// One real contracting eigenvalue and one expanding complex pair:
// eigenvalues lambda_s, mu +- i*omega.
VectorField make_saddle_focus3d(const std::map<std::string, double>& overrides) {
  VectorField f;
  f.name = "saddle_focus3d";
  f.dimension = 3;
  f.parameters = merge_params({{"lambda_s", -2.0}, {"mu", 0.3}, {"omega", 1.0}},
                              overrides, f.name);
  const double ls = param(f.parameters, "lambda_s");
  const double mu = param(f.parameters, "mu");
  const double om = param(f.parameters, "omega");
  f.trapping_region = make_box({-1e3, -1e3, -1e3}, {1e3, 1e3, 1e3});
  f.singularities.push_back(Vec::Zero(3));
  f.linear = true;
  f.dissipative = false;  // expanding spiral, no absorbing box exists
  f.field_into = [ls, mu, om](const Vec& x, Vec& out) {
    out[0] = ls * x[0];
    out[1] = mu * x[1] - om * x[2];
    out[2] = om * x[1] + mu * x[2];
  };
  f.jac_into = [ls, mu, om](const Vec&, Mat& J) {
    J.setZero();
    J(0, 0) = ls;
    J(1, 1) = mu;  J(1, 2) = -om;
    J(2, 1) = om;  J(2, 2) = mu;
  };
  return f;
}

}  // namespace

std::vector<SystemDescriptor> list_systems() {
  return {
      {"lorenz", 3, {{"sigma", 10.0}, {"rho", 28.0}, {"beta", 8.0 / 3.0}}, 3},
      {"linear3d", 3, {{"a", -1.0}, {"b", -2.0}, {"c", -3.0}}, 1},
      {"ou1d", 1, {{"a", 1.0}}, 1},
      {"saddle_focus3d", 3, {{"lambda_s", -2.0}, {"mu", 0.3}, {"omega", 1.0}}, 1},
  };
}

VectorField make_system(const std::string& name,
                        const std::map<std::string, double>& overrides) {
  if (name == "lorenz") return make_lorenz(overrides);
  if (name == "linear3d") return make_linear3d(overrides);
  if (name == "ou1d") return make_ou1d(overrides);
  if (name == "saddle_focus3d") return make_saddle_focus3d(overrides);
  throw InputError("unknown system '" + name + "'");
}

double inward_fraction(const VectorField& f, int n_samples, Rng& rng) {
  const Box& b = f.trapping_region;
  const int m = f.dimension;
  // face areas for proportional sampling
  std::vector<double> area(2 * m, 1.0);
  double total = 0.0;
  for (int face = 0; face < 2 * m; ++face) {
    const int axis = face / 2;
    for (int i = 0; i < m; ++i)
      if (i != axis) area[face] *= b.hi[i] - b.lo[i];
    total += area[face];
  }
  int inward = 0;
  Vec x(m), v(m);
  for (int k = 0; k < n_samples; ++k) {
    double u = rng.uniform() * total;
    int face = 0;
    while (face < 2 * m - 1 && u > area[face]) u -= area[face], ++face;
    const int axis = face / 2;
    const bool upper = face % 2;
    for (int i = 0; i < m; ++i) x[i] = rng.uniform(b.lo[i], b.hi[i]);
    x[axis] = upper ? b.hi[axis] : b.lo[axis];
    f.field_into(x, v);
    // inward normal is -e_axis on the upper face, +e_axis on the lower one
    const double inner = upper ? -v[axis] : v[axis];
    if (inner > 0.0) ++inward;
  }
  return static_cast<double>(inward) / n_samples;
}

double jacobian_fd_defect(const VectorField& f, int n_points, double h, Rng& rng) {
  const int m = f.dimension;
  double worst = 0.0;
  // sample in the middle half of the trapping box to stay away from walls
  const Box& b = f.trapping_region;
  for (int k = 0; k < n_points; ++k) {
    Vec x(m);
    for (int i = 0; i < m; ++i) {
      const double c = 0.5 * (b.lo[i] + b.hi[i]), w = 0.25 * (b.hi[i] - b.lo[i]);
      x[i] = c + w * (2.0 * rng.uniform() - 1.0);
    }
    const Mat J = f.jacobian(x);
    for (int i = 0; i < m; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const Vec fd = (f.eval(xp) - f.eval(xm)) / (2.0 * h);
      // scale-relative: the difference quotient carries round-off of order
      // eps * |f| / h which would otherwise dominate at trapping-box scale
      const double scale = 1.0 + f.eval(x).lpNorm<Eigen::Infinity>();
      worst = std::max(worst, (fd - J.col(i)).cwiseAbs().maxCoeff() / scale);
    }
  }
  return worst;
}

}  // namespace salab
