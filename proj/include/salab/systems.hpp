#ifndef SALAB_SYSTEMS_HPP_
#define SALAB_SYSTEMS_HPP_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "salab/types.hpp"

namespace salab {

// Smooth autonomous field on R^m with an exact closed-form Jacobian, a finite
// singularity list and an axis-aligned trapping box standing in for the
// compact state space.
struct VectorField {
  std::string name;
  int dimension = 0;
  std::map<std::string, double> parameters;
  Box trapping_region;
  std::vector<Vec> singularities;
  bool linear = false;       // flow globally defined, negative times allowed
  bool dissipative = true;   // trapping box genuinely absorbing

  std::function<void(const Vec&, Vec&)> field_into;
  std::function<void(const Vec&, Mat&)> jac_into;

  Vec eval(const Vec& x) const {
    check_dim(x);
    Vec out(dimension);
    field_into(x, out);
    return out;
  }

  Mat jacobian(const Vec& x) const {
    check_dim(x);
    Mat out(dimension, dimension);
    jac_into(x, out);
    return out;
  }

  double divergence(const Vec& x) const { return jacobian(x).trace(); }

  void check_dim(const Vec& x) const {
    if (x.size() != dimension)
      throw InputError("vector field '" + name + "': point has dimension " +
                       std::to_string(x.size()) + ", expected " +
                       std::to_string(dimension));
  }
};

struct ParameterSpec {
  std::string name;
  double default_value;
};

struct SystemDescriptor {
  std::string name;
  int dimension;
  std::vector<ParameterSpec> parameters;
  int n_singularities;
};

// Catalog: lorenz, linear3d, ou1d, saddle_focus3d.
std::vector<SystemDescriptor> list_systems();

// Build a catalog system by name.  Unknown names and unknown parameter keys
// are rejected.
VectorField make_system(const std::string& name,
                        const std::map<std::string, double>& overrides = {});

// Fraction of uniformly sampled boundary points at which the field points
// strictly inward.  Diagnostic; equals ~1 only for genuinely absorbing boxes.
double inward_fraction(const VectorField& f, int n_samples, Rng& rng);

// Max over n random interior points of the central finite-difference defect
// ||(X(x+hE_i)-X(x-hE_i))/2h - J e_i||_inf, relative to the local field
// magnitude 1 + ||X(x)||_inf.
double jacobian_fd_defect(const VectorField& f, int n_points, double h, Rng& rng);

}  // namespace salab

#endif  // SALAB_SYSTEMS_HPP_
