#include "salab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace salab {

GridPartition::GridPartition(const Box& b, const Eigen::VectorXi& res)
    : box(b), resolution(res) {
  if (res.size() != b.dim()) throw InputError("GridPartition: resolution rank mismatch");
  n_cells_ = 1;
  strides_.resize(res.size());
  for (int i = 0; i < res.size(); ++i) {
    if (res[i] < 2) throw InputError("GridPartition: resolution must be >= 2 per axis");
    strides_[i] = n_cells_;
    n_cells_ *= res[i];
  }
}

GridPartition::GridPartition(const Box& b, int res_per_axis)
    : GridPartition(b, Eigen::VectorXi::Constant(b.dim(), res_per_axis)) {}

long GridPartition::cell_index(const Vec& x) const {
  long idx = 0;
  for (int i = 0; i < resolution.size(); ++i) {
    const double w = cell_width(i);
    long k = static_cast<long>(std::floor((x[i] - box.lo[i]) / w));
    k = std::clamp<long>(k, 0, resolution[i] - 1);
    idx += k * strides_[i];
  }
  return idx;
}

Vec GridPartition::cell_center(long idx) const {
  Vec c(dim());
  for (int i = 0; i < dim(); ++i) {
    const long k = (idx / strides_[i]) % resolution[i];
    c[i] = box.lo[i] + (k + 0.5) * cell_width(i);
  }
  return c;
}

bool GridPartition::operator==(const GridPartition& o) const {
  return resolution == o.resolution && box.lo == o.box.lo && box.hi == o.box.hi;
}

EmpiricalMeasure::EmpiricalMeasure(std::shared_ptr<const GridPartition> partition,
                                   int n_blocks)
    : partition_(std::move(partition)),
      masses_(Vec::Zero(partition_->n_cells())),
      block_counts_(n_blocks, Vec::Zero(partition_->n_cells())) {}

void EmpiricalMeasure::add_sample(const Vec& x, int block) {
  if (finalized_) throw InvariantError("EmpiricalMeasure: add_sample after finalize");
  const long idx = partition_->cell_index(x);
  masses_[idx] += 1.0;
  ++sample_count_;
  if (!block_counts_.empty())
    block_counts_[block % block_counts_.size()][idx] += 1.0;
}

void EmpiricalMeasure::add_counts(const EmpiricalMeasure& other) {
  if (finalized_ || other.finalized_)
    throw InvariantError("EmpiricalMeasure: add_counts requires raw counts");
  if (!(*partition_ == *other.partition_))
    throw InputError("EmpiricalMeasure: partition mismatch");
  masses_ += other.masses_;
  sample_count_ += other.sample_count_;
  for (size_t b = 0; b < block_counts_.size() && b < other.block_counts_.size(); ++b)
    block_counts_[b] += other.block_counts_[b];
}

void EmpiricalMeasure::add_block(const EmpiricalMeasure& other, int block) {
  if (finalized_ || other.finalized_)
    throw InvariantError("EmpiricalMeasure: add_block requires raw counts");
  if (!(*partition_ == *other.partition_))
    throw InputError("EmpiricalMeasure: partition mismatch");
  masses_ += other.masses_;
  sample_count_ += other.sample_count_;
  if (!block_counts_.empty())
    block_counts_[block % block_counts_.size()] += other.masses_;
}

void EmpiricalMeasure::finalize() {
  if (finalized_) return;
  if (sample_count_ == 0) throw InputError("EmpiricalMeasure: no samples");
  masses_ /= static_cast<double>(sample_count_);
  finalized_ = true;
}

Vec EmpiricalMeasure::sample(Rng& rng) const {
  if (!finalized_) throw InvariantError("EmpiricalMeasure: sample before finalize");
  if (cdf_.empty()) {
    double acc = 0.0;
    for (long i = 0; i < masses_.size(); ++i) {
      if (masses_[i] > 0.0) {
        acc += masses_[i];
        cdf_.push_back(acc);
        cdf_cells_.push_back(i);
      }
    }
  }
  const double u = rng.uniform() * cdf_.back();
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  const long cell = cdf_cells_[it - cdf_.begin()];
  Vec c = partition_->cell_center(cell);
  for (int i = 0; i < partition_->dim(); ++i)
    c[i] += (rng.uniform() - 0.5) * partition_->cell_width(i);
  return c;
}

namespace {

struct TestFunction {
  int kind;     // 0 ramp, 1 half-space, 2 ball
  int axis;     // ramp
  Vec normal;   // half-space
  double offset;
  Vec center;   // ball
  double radius;

  double operator()(const Vec& x) const {
    double v = 0.0;
    switch (kind) {
      case 0: v = x[axis] - offset; break;
      case 1: v = normal.dot(x) - offset; break;
      default: v = radius - (x - center).norm(); break;
    }
    return std::clamp(v, -1.0, 1.0);
  }
};

std::vector<TestFunction> make_dictionary(const GridPartition& g, int count) {
  Rng rng(0x5a1ab00cULL);  // fixed: dictionary is part of the metric definition
  const int m = g.dim();
  const double half_diag = 0.5 * (g.box.hi - g.box.lo).norm();
  std::vector<TestFunction> fs;
  fs.reserve(count);
  for (int j = 0; j < count; ++j) {
    TestFunction f;
    f.kind = j % 3;
    if (f.kind == 0) {
      f.axis = static_cast<int>(rng.next_u64() % m);
      f.offset = rng.uniform(g.box.lo[f.axis], g.box.hi[f.axis]);
    } else if (f.kind == 1) {
      f.normal = rng.normal_vec(m).normalized();
      f.offset = f.normal.dot(rng.uniform_in_box(g.box));
    } else {
      f.center = rng.uniform_in_box(g.box);
      f.radius = rng.uniform(0.0, half_diag);
    }
    fs.push_back(std::move(f));
  }
  return fs;
}

double weak_distance_masses(const GridPartition& g, const Vec& pa, const Vec& pb) {
  std::vector<long> support;
  for (long i = 0; i < pa.size(); ++i)
    if (pa[i] != pb[i]) support.push_back(i);
  if (support.empty()) return 0.0;

  const auto dict = make_dictionary(g, 256);
  double best = 0.0;
  std::vector<Vec> centers;
  centers.reserve(support.size());
  std::vector<double> diffs;
  diffs.reserve(support.size());
  for (long i : support) {
    centers.push_back(g.cell_center(i));
    diffs.push_back(pa[i] - pb[i]);
  }
  for (const auto& f : dict) {
    double v = 0.0;
    for (size_t k = 0; k < support.size(); ++k) v += diffs[k] * f(centers[k]);
    best = std::max(best, std::abs(v));
  }

  // exact W1 of each coordinate marginal
  for (int a = 0; a < g.dim(); ++a) {
    std::vector<double> marg(g.resolution[a], 0.0);
    for (size_t k = 0; k < support.size(); ++k) {
      const double w = g.cell_width(a);
      const long bin = std::clamp<long>(
          static_cast<long>(std::floor((centers[k][a] - g.box.lo[a]) / w)), 0,
          g.resolution[a] - 1);
      marg[bin] += diffs[k];
    }
    double cum = 0.0, w1 = 0.0;
    for (int i = 0; i < g.resolution[a]; ++i) {
      cum += marg[i];
      w1 += std::abs(cum) * g.cell_width(a);
    }
    best = std::max(best, w1);
  }
  return best;
}

}  // namespace

double weak_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (!(mu.partition() == nu.partition()))
    throw InputError("weak_distance: partition mismatch");
  if (!mu.finalized() || !nu.finalized())
    throw InputError("weak_distance: measures must be finalized");
  return weak_distance_masses(mu.partition(), mu.masses(), nu.masses());
}

double noise_floor(const EmpiricalMeasure& mu, int replicates, std::uint64_t seed) {
  if (!mu.finalized()) throw InputError("noise_floor: measure must be finalized");
  const GridPartition& g = mu.partition();
  Rng rng(seed);
  std::vector<double> ds;
  ds.reserve(replicates);

  const int nb = mu.n_blocks();
  if (nb >= 2) {
    for (int r = 0; r < replicates; ++r) {
      Vec counts = Vec::Zero(g.n_cells());
      for (int b = 0; b < nb; ++b)
        counts += mu.block_counts()[rng.next_u64() % nb];
      const double tot = counts.sum();
      if (tot <= 0.0) continue;
      ds.push_back(weak_distance_masses(g, mu.masses(), counts / tot));
    }
  } else {
    // multinomial bootstrap at the recorded sample count
    const long n = mu.sample_count();
    std::vector<double> cdf;
    std::vector<long> cells;
    double acc = 0.0;
    for (long i = 0; i < mu.masses().size(); ++i)
      if (mu.masses()[i] > 0.0) {
        acc += mu.masses()[i];
        cdf.push_back(acc);
        cells.push_back(i);
      }
    for (int r = 0; r < replicates; ++r) {
      Vec counts = Vec::Zero(g.n_cells());
      for (long s = 0; s < n; ++s) {
        const double u = rng.uniform() * acc;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        counts[cells[it - cdf.begin()]] += 1.0;
      }
      ds.push_back(weak_distance_masses(g, mu.masses(), counts / n));
    }
  }
  if (ds.empty()) throw NumericalError("noise_floor: no usable replicates");
  std::sort(ds.begin(), ds.end());
  return ds[ds.size() / 2];
}

EmpiricalMeasure srb_estimate(const VectorField& f, const Vec& x0,
                              double t_transient, double t_average,
                              double sample_dt,
                              std::shared_ptr<const GridPartition> grid,
                              double tol, int n_blocks) {
  if (sample_dt <= 0.0) throw InputError("srb_estimate: sample_dt must be > 0");
  const long n_samples = static_cast<long>(t_average / sample_dt);
  if (n_samples < 1) throw InputError("srb_estimate: t_average too short");
  EmpiricalMeasure mu(std::move(grid), n_blocks);
  Vec x = t_transient > 0 ? flow_map(f, x0, t_transient, tol) : x0;
  const long per_block = std::max<long>(1, n_samples / std::max(1, n_blocks));
  for (long k = 0; k < n_samples; ++k) {
    x = flow_map(f, x, sample_dt, tol);
    mu.add_sample(x, static_cast<int>(k / per_block));
  }
  mu.finalize();
  return mu;
}

Rectangle build_rectangle(const TimeTauMap& F, const Vec& z_seed, int warmup,
                          int push_steps, double eta, double stable_radius,
                          double thickness, int arc_points) {
  if (eta <= 0.0) throw InputError("build_rectangle: eta must be > 0");
  if (stable_radius <= 0.0)
    throw InputError("build_rectangle: stable_radius must be > 0");
  if (thickness < 0.0)
    throw InputError("build_rectangle: thickness must be >= 0");
  if (arc_points < 5) throw InputError("build_rectangle: too few arc points");

  const auto ls = leading_stretch_factors(F, z_seed, push_steps, warmup);
  const Vec anchor = ls.points.front();
  const Vec u = ls.directions.front();
  if (!std::isfinite(u.norm()) || u.norm() < 0.5)
    throw NumericalError("build_rectangle: degenerate leading direction");

  // seed segment at the pre-image, pushed forward and re-truncated
  std::vector<Vec> arc(arc_points);
  for (int i = 0; i < arc_points; ++i) {
    const double s = eta * (2.0 * i / (arc_points - 1) - 1.0);
    arc[i] = anchor + s * u;
  }

  auto retruncate = [&](std::vector<Vec>& a, const Vec& center) {
    // arclength parametrization, clipped to radius eta around the center image
    const int n = static_cast<int>(a.size());
    std::vector<double> s(n, 0.0);
    for (int i = 1; i < n; ++i) s[i] = s[i - 1] + (a[i] - a[i - 1]).norm();
    int ic = 0;
    double best = (a[0] - center).norm();
    for (int i = 1; i < n; ++i) {
      const double d = (a[i] - center).norm();
      if (d < best) best = d, ic = i;
    }
    const double s_lo = std::max(0.0, s[ic] - eta);
    const double s_hi = std::min(s.back(), s[ic] + eta);
    std::vector<Vec> out(n);
    for (int i = 0; i < n; ++i) {
      const double target = s_lo + (s_hi - s_lo) * i / (n - 1);
      const auto it = std::lower_bound(s.begin(), s.end(), target);
      const int j = std::clamp<int>(static_cast<int>(it - s.begin()), 1, n - 1);
      const double seg = s[j] - s[j - 1];
      const double t = seg > 0 ? (target - s[j - 1]) / seg : 0.0;
      out[i] = (1.0 - t) * a[j - 1] + t * a[j];
    }
    a = std::move(out);
  };

  for (int k = 1; k <= push_steps; ++k) {
    for (auto& p : arc) p = F(p);
    retruncate(arc, ls.points[k]);
  }

  Rectangle rect;
  rect.center = ls.points.back();
  rect.unstable_arc = std::move(arc);
  rect.stable_radius = stable_radius;
  rect.thickness = thickness;
  for (size_t i = 1; i < rect.unstable_arc.size(); ++i)
    rect.mes_u += (rect.unstable_arc[i] - rect.unstable_arc[i - 1]).norm();

  // singular attractors only: a linear field's fixed point carries a genuine
  // expanding direction, so its neighborhood is admissible
  if (!F.field().linear)
    for (const Vec& sg : F.field().singularities)
      if ((rect.center - sg).norm() <= 10.0 * stable_radius)
        throw InputError("build_rectangle: center too close to Sing(X)");
  return rect;
}

RectangleMass rectangle_mass_bound(const std::vector<Vec>& states,
                                   const Rectangle& rect, const VectorField& f) {
  if (states.empty()) throw InputError("rectangle_mass_bound: no states");
  const auto& arc = rect.unstable_arc;
  const int n = static_cast<int>(arc.size());

  // precompute flow directions at arc points
  std::vector<Vec> xdir(n);
  for (int i = 0; i < n; ++i) {
    const Vec v = f.eval(arc[i]);
    xdir[i] = v.norm() > 1e-12 ? Vec(v.normalized()) : Vec(Vec::Zero(v.size()));
  }
  double arc_extent = 0.0;
  for (const auto& p : arc) arc_extent = std::max(arc_extent, (p - rect.center).norm());
  const double reject_radius =
      arc_extent + rect.stable_radius + rect.thickness + 1e-9;

  long hits = 0;
  for (const Vec& p : states) {
    if ((p - rect.center).norm() > reject_radius) continue;
    bool member = false;
    for (int i = 0; i < n - 1 && !member; ++i) {
      const Vec seg = arc[i + 1] - arc[i];
      const double L2 = seg.squaredNorm();
      double t = L2 > 0 ? (p - arc[i]).dot(seg) / L2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const Vec q = arc[i] + t * seg;
      const Vec w = p - q;
      const double wf = w.dot(xdir[i]);
      const double trans2 = w.squaredNorm() - wf * wf;
      if (std::abs(wf) <= rect.thickness &&
          trans2 <= rect.stable_radius * rect.stable_radius)
        member = true;
    }
    if (member) ++hits;
  }

  RectangleMass rm;
  const double N = static_cast<double>(states.size());
  rm.hits = hits;
  rm.mass = hits / N;
  rm.std_error = std::sqrt(std::max(rm.mass * (1.0 - rm.mass), 0.0) / N);
  rm.mes_u = rect.mes_u;
  rm.ratio = rm.mass / rect.mes_u;
  rm.starved = hits == 0;
  return rm;
}

std::vector<char> visited_cells(const VectorField& f, const Vec& x0, double t,
                                double sample_dt, const GridPartition& grid,
                                double tol) {
  std::vector<char> visited(grid.n_cells(), 0);
  Vec x = x0;
  visited[grid.cell_index(x)] = 1;
  const long n = static_cast<long>(t / sample_dt);
  for (long k = 0; k < n; ++k) {
    x = flow_map(f, x, sample_dt, tol);
    visited[grid.cell_index(x)] = 1;
  }
  return visited;
}

double coverage_symmetric_difference(const std::vector<char>& a,
                                     const std::vector<char>& b) {
  if (a.size() != b.size()) throw InputError("coverage: grid size mismatch");
  long sym = 0, uni = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] || b[i]) ++uni;
    if (a[i] != b[i]) ++sym;
  }
  return uni > 0 ? static_cast<double>(sym) / uni : 0.0;
}

}  // namespace salab
