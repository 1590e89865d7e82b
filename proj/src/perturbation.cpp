#include "salab/perturbation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace salab {

BoundaryPolicy boundary_policy_from_string(const std::string& s) {
  if (s == "reflect") return BoundaryPolicy::reflect;
  if (s == "resample") return BoundaryPolicy::resample;
  if (s == "clamp") return BoundaryPolicy::clamp;
  throw InputError("unknown boundary policy '" + s + "'");
}

Vec kernel_step(const MarkovKernel& k, const Vec& x, Rng& rng) {
  const Box& box = k.map.field().trapping_region;
  const Vec fx = k.map(x);
  switch (k.policy) {
    case BoundaryPolicy::clamp:
      return box.clamp(fx + k.epsilon * rng.normal_vec(fx.size()));
    case BoundaryPolicy::reflect:
      return box.reflect(fx + k.epsilon * rng.normal_vec(fx.size()));
    case BoundaryPolicy::resample: {
      for (int tries = 0; tries < 1024; ++tries) {
        const Vec y = fx + k.epsilon * rng.normal_vec(fx.size());
        if (box.contains(y)) return y;
      }
      return box.clamp(fx);  // pathological corner; keep the chain alive
    }
  }
  throw InputError("kernel_step: bad policy");
}

ChainSample run_chain(const MarkovKernel& k, const Vec& x0, int n,
                      std::uint64_t seed) {
  if (n < 1) throw InputError("run_chain: n must be >= 1");
  Rng rng(seed);
  ChainSample cs;
  cs.x0 = x0;
  cs.seed = seed;
  cs.states.reserve(n);
  Vec x = x0;
  for (int i = 0; i < n; ++i) {
    x = kernel_step(k, x, rng);
    cs.states.push_back(x);
  }
  return cs;
}

namespace {

int resolve_workers(int n_workers, int jobs) {
  if (n_workers <= 0)
    n_workers = static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(n_workers, 1, std::max(1, jobs));
}

// Run `jobs` indexed tasks on a fixed worker pool; results must be written to
// per-index slots by the task so the merge order is deterministic.
void parallel_for(int jobs, int n_workers, const std::function<void(int)>& task) {
  n_workers = resolve_workers(n_workers, jobs);
  if (n_workers == 1) {
    for (int j = 0; j < jobs; ++j) task(j);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int w = 0; w < n_workers; ++w)
    pool.emplace_back([&] {
      for (int j = next.fetch_add(1); j < jobs; j = next.fetch_add(1)) {
        try {
          task(j);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace

std::vector<Vec> stationary_states(const MarkovKernel& k, const Vec& x0,
                                   long burn_in, long n_samples,
                                   std::uint64_t seed, int n_chains,
                                   int n_workers) {
  if (burn_in < 0 || n_samples < 1)
    throw InputError("stationary_states: bad burn_in / n_samples");
  const long per_chain = (n_samples + n_chains - 1) / n_chains;
  std::vector<std::vector<Vec>> parts(n_chains);
  parallel_for(n_chains, n_workers, [&](int c) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
    Vec x = x0;
    for (long i = 0; i < burn_in; ++i) x = kernel_step(k, x, rng);
    parts[c].reserve(per_chain);
    for (long i = 0; i < per_chain; ++i) {
      x = kernel_step(k, x, rng);
      parts[c].push_back(x);
    }
  });
  std::vector<Vec> out;
  out.reserve(n_chains * per_chain);
  for (auto& p : parts)
    for (auto& v : p) out.push_back(std::move(v));
  return out;
}

EmpiricalMeasure estimate_stationary(const MarkovKernel& k, const Vec& x0,
                                     long burn_in, long n_samples,
                                     std::shared_ptr<const GridPartition> grid,
                                     std::uint64_t seed, int n_chains,
                                     int n_workers) {
  const long per_chain = (n_samples + n_chains - 1) / n_chains;
  std::vector<std::unique_ptr<EmpiricalMeasure>> parts(n_chains);
  parallel_for(n_chains, n_workers, [&](int c) {
    auto mu = std::make_unique<EmpiricalMeasure>(grid, 1);
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
    Vec x = x0;
    for (long i = 0; i < burn_in; ++i) x = kernel_step(k, x, rng);
    for (long i = 0; i < per_chain; ++i) {
      x = kernel_step(k, x, rng);
      mu->add_sample(x);
    }
    parts[c] = std::move(mu);
  });
  EmpiricalMeasure acc(grid, n_chains);
  for (int c = 0; c < n_chains; ++c) acc.add_block(*parts[c], c);
  acc.finalize();
  return acc;
}

DefectReport check_stationarity(const MarkovKernel& k, const EmpiricalMeasure& mu,
                                long n_test, std::uint64_t seed) {
  DefectReport rep;
  if (n_test < 1) {
    rep.insufficient_data = true;
    return rep;
  }
  Rng rng(seed);
  auto grid = mu.partition_ptr();
  const int nb = 8;
  EmpiricalMeasure pushed(grid, nb);
  for (long i = 0; i < n_test; ++i) {
    const Vec x = mu.sample(rng);
    pushed.add_sample(kernel_step(k, x, rng), static_cast<int>(i * nb / n_test));
  }
  pushed.finalize();
  rep.defect = weak_distance(mu, pushed);
  rep.floor = combined_floor(noise_floor(pushed), noise_floor(mu));
  rep.pass = rep.defect <= 3.0 * rep.floor;
  return rep;
}

DefectReport chapman_kolmogorov_check(const MarkovKernel& k, const Vec& x,
                                      int l, int k_total, long n_mc,
                                      std::shared_ptr<const GridPartition> grid,
                                      std::uint64_t seed, int n_workers) {
  if (l <= 0 || l >= k_total)
    throw InputError("chapman_kolmogorov_check: need 0 < l < k_total");
  const int nb = 8;
  const int n_jobs = 16;
  const long per_job = (n_mc + n_jobs - 1) / n_jobs;

  std::vector<std::unique_ptr<EmpiricalMeasure>> one(n_jobs), two(n_jobs);
  parallel_for(n_jobs, n_workers, [&](int j) {
    auto a = std::make_unique<EmpiricalMeasure>(grid, 1);
    auto b = std::make_unique<EmpiricalMeasure>(grid, 1);
    Rng r1(mix_seed(seed, 2 * j));
    Rng r2(mix_seed(seed, 2 * j + 1));
    for (long i = 0; i < per_job; ++i) {
      // direct k_total-step law
      Vec y = x;
      for (int s = 0; s < k_total; ++s) y = kernel_step(k, y, r1);
      a->add_sample(y);
      // two-stage composition with an independent stream
      Vec z = x;
      for (int s = 0; s < k_total - l; ++s) z = kernel_step(k, z, r2);
      for (int s = 0; s < l; ++s) z = kernel_step(k, z, r2);
      b->add_sample(z);
    }
    one[j] = std::move(a);
    two[j] = std::move(b);
  });

  EmpiricalMeasure direct(grid, nb), composed(grid, nb);
  for (int j = 0; j < n_jobs; ++j) {
    direct.add_block(*one[j], j % nb);
    composed.add_block(*two[j], j % nb);
  }
  direct.finalize();
  composed.finalize();

  DefectReport rep;
  rep.defect = weak_distance(direct, composed);
  rep.floor = combined_floor(noise_floor(direct), noise_floor(composed));
  rep.pass = rep.defect <= 3.0 * rep.floor;
  return rep;
}

AvoidanceEstimate singularity_avoidance(const MarkovKernel& k, const Vec& x,
                                        double gamma, int k_steps, long n_mc,
                                        std::uint64_t seed, int n_workers) {
  if (gamma <= 0.0 || gamma >= 1.0)
    throw InputError("singularity_avoidance: gamma must be in (0,1)");
  const auto& sing = k.map.field().singularities;
  AvoidanceEstimate est;
  est.radius = std::pow(k.epsilon, 1.0 - gamma);
  est.n_mc = n_mc;
  if (sing.empty()) return est;  // probability exactly 0

  const int m = x.size();
  const long k_min = static_cast<long>(std::ceil(m * std::log(1.0 / k.epsilon)));
  if (k_steps < k_min)
    throw InputError("singularity_avoidance: k_steps below log(eps^-m) = " +
                     std::to_string(k_min));

  const int n_jobs = 32;
  const long per_job = (n_mc + n_jobs - 1) / n_jobs;
  std::vector<long> hits(n_jobs, 0);
  parallel_for(n_jobs, n_workers, [&](int j) {
    Rng rng(mix_seed(seed, j));
    long h = 0;
    for (long i = 0; i < per_job; ++i) {
      Vec y = x;
      for (int s = 0; s < k_steps; ++s) y = kernel_step(k, y, rng);
      for (const Vec& sg : sing)
        if ((y - sg).norm() <= est.radius) {
          ++h;
          break;
        }
    }
    hits[j] = h;
  });
  est.n_mc = static_cast<long>(n_jobs) * per_job;
  for (long h : hits) est.hits += h;
  est.probability = static_cast<double>(est.hits) / est.n_mc;
  est.std_error =
      std::sqrt(std::max(est.probability * (1.0 - est.probability), 0.0) / est.n_mc);
  return est;
}

std::pair<long, long> chain_length_window(double eps) {
  if (eps <= 0.0 || eps >= 1.0) throw InputError("chain_length_window: eps in (0,1)");
  const double le = std::log(eps);
  return {static_cast<long>(std::ceil(le * le)),
          static_cast<long>(std::ceil(le * le * le * le))};
}

StabilityTable stability_study(const VectorField& f,
                               const std::vector<double>& eps_list,
                               const Vec& x0, const EmpiricalMeasure& srb,
                               const StabilityConfig& cfg) {
  if (eps_list.size() < 4)
    throw InputError("stability_study: need at least 4 epsilon values");
  for (size_t i = 0; i + 1 < eps_list.size(); ++i)
    if (eps_list[i] <= eps_list[i + 1])
      throw InputError("stability_study: eps_list must be strictly descending");

  StabilityTable table;
  const double srb_floor = noise_floor(srb);
  auto grid = srb.partition_ptr();
  for (size_t i = 0; i < eps_list.size(); ++i) {
    MarkovKernel kern(TimeTauMap(f, cfg.tau, cfg.tol), eps_list[i], cfg.policy);
    const EmpiricalMeasure mu =
        estimate_stationary(kern, x0, cfg.burn_in, cfg.n_samples, grid,
                            mix_seed(cfg.seed, i), cfg.n_chains, cfg.n_workers);
    StabilityRow row;
    row.eps = eps_list[i];
    row.distance = weak_distance(mu, srb);
    row.floor = combined_floor(noise_floor(mu), srb_floor);
    table.rows.push_back(row);
  }
  table.monotone = true;
  for (size_t i = 0; i + 1 < table.rows.size(); ++i) {
    const auto& a = table.rows[i];
    const auto& b = table.rows[i + 1];
    if (b.distance > a.distance + a.floor + b.floor) table.monotone = false;
  }
  const auto& last = table.rows.back();
  table.converged = last.distance <= 2.0 * last.floor;
  return table;
}

}  // namespace salab
