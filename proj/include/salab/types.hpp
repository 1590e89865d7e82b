#ifndef SALAB_TYPES_HPP_
#define SALAB_TYPES_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace salab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error taxonomy used across the library.  InputError maps to exit code 2
// in the CLI, NumericalError to exit code 3.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Axis-aligned box in R^m.
struct Box {
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const Vec& x) const {
    for (int i = 0; i < x.size(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }

  Vec clamp(const Vec& x) const {
    return x.cwiseMax(lo).cwiseMin(hi);
  }

  // Fold a point back into the box by reflection across the walls.
  Vec reflect(const Vec& x) const {
    Vec y = x;
    for (int i = 0; i < y.size(); ++i) {
      const double w = hi[i] - lo[i];
      double t = std::fmod(y[i] - lo[i], 2.0 * w);
      if (t < 0) t += 2.0 * w;
      y[i] = (t <= w) ? lo[i] + t : hi[i] - (t - w);
    }
    return y;
  }

  double volume() const {
    double v = 1.0;
    for (int i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
    return v;
  }

  Vec center() const { return 0.5 * (lo + hi); }
};

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic random stream.  Gaussians come from Box-Muller on top of the
// raw mt19937_64 output so sequences do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }
  Rng spawn(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0,1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * M_PI * u2;
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
  }

  Vec normal_vec(int m) {
    Vec v(m);
    for (int i = 0; i < m; ++i) v[i] = normal();
    return v;
  }

  // uniform in the closed Euclidean ball of radius r
  Vec uniform_in_ball(int m, double r) {
    Vec v = normal_vec(m);
    const double n = v.norm();
    if (n == 0.0) return Vec::Zero(m);
    const double u = std::pow(uniform(), 1.0 / m);
    return v * (r * u / n);
  }

  Vec uniform_in_box(const Box& b) {
    Vec v(b.dim());
    for (int i = 0; i < b.dim(); ++i) v[i] = uniform(b.lo[i], b.hi[i]);
    return v;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Volume of the Euclidean r-ball in R^m.
inline double ball_volume(int m, double r) {
  return std::pow(M_PI, 0.5 * m) / std::tgamma(0.5 * m + 1.0) * std::pow(r, m);
}

}  // namespace salab

#endif  // SALAB_TYPES_HPP_
