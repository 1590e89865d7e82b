// Command-line front end: batch experiments over the systems catalog with
// CSV outputs carrying a config-digest manifest.  Exit codes: 0 success,
// 1 acceptance failure, 2 usage/config error, 3 numerical failure.
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "salab/acceptance.hpp"
#include "salab/config.hpp"
#include "salab/csv.hpp"
#include "salab/flow.hpp"
#include "salab/hyperbolicity.hpp"
#include "salab/measures.hpp"
#include "salab/perturbation.hpp"
#include "salab/systems.hpp"
#include "salab/types.hpp"

namespace fs = std::filesystem;
using namespace salab;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  std::optional<int> workers_override;
};

RunConfig load_config(const CliOptions& opt) {
  RunConfig cfg =
      opt.config_path.empty() ? default_config() : parse_config_file(opt.config_path);
  if (opt.seed_override) cfg.seed = *opt.seed_override;
  if (opt.workers_override) cfg.workers = *opt.workers_override;
  cfg.validate();
  cfg.compute_digest();
  return cfg;
}

std::string out_path(const CliOptions& opt, const std::string& name) {
  fs::create_directories(opt.out_dir);
  return (fs::path(opt.out_dir) / name).string();
}

// Generic off-axis starting point inside the trapping region.  The offset
// avoids invariant axes (the z-axis for the lorenz family) and singularities
// that sit at the box center.
Vec initial_point(const VectorField& f) {
  const Box& b = f.trapping_region;
  return b.center() + 0.1 * (b.hi - b.lo);
}

GridPartition make_grid(const VectorField& f, int resolution) {
  return GridPartition(f.trapping_region, resolution);
}

int cmd_simulate(const CliOptions& opt) {
  const RunConfig cfg = load_config(opt);
  const auto f = make_system(cfg.system_name, cfg.parameter_overrides);
  const Vec x0 = flow_map(f, initial_point(f), cfg.t_transient,
                          cfg.integration_tolerance);
  const Trajectory tr =
      sample_orbit(f, x0, cfg.t_transient, cfg.base_time_step,
                   static_cast<int>(cfg.n_steps), cfg.integration_tolerance);

  CsvWriter csv(out_path(opt, "trajectory.csv"), cfg.digest_hex, cfg.seed,
                "simulate");
  std::vector<std::string> cols = {"t"};
  for (int i = 0; i < f.dimension; ++i) cols.push_back("x" + std::to_string(i));
  csv.header(cols);
  for (int k = 0; k < tr.size(); ++k) {
    csv.begin_row();
    csv.field(tr.t0 + k * tr.dt);
    for (int i = 0; i < f.dimension; ++i) csv.field(tr.points[k][i]);
    csv.end_row();
  }
  std::cout << "simulate: wrote " << tr.size() << " samples of " << f.name
            << " to trajectory.csv\n";
  return 0;
}

int cmd_lyapunov(const CliOptions& opt) {
  const RunConfig cfg = load_config(opt);
  const auto f = make_system(cfg.system_name, cfg.parameter_overrides);
  const auto rep =
      lyapunov_spectrum(f, initial_point(f), cfg.t_transient, cfg.t_average,
                        cfg.qr_interval, cfg.integration_tolerance);
  const double sum = rep.exponents.sum();
  const double liouville_residual = sum - rep.divergence_average;

  CsvWriter csv(out_path(opt, "lyapunov.csv"), cfg.digest_hex, cfg.seed,
                "lyapunov");
  csv.header({"index", "exponent"});
  for (int i = 0; i < rep.exponents.size(); ++i) {
    csv.begin_row();
    csv.field(static_cast<long>(i));
    csv.field(rep.exponents[i]);
    csv.end_row();
  }
  csv.comment("exponent_sum = " + format_g17(sum));
  csv.comment("divergence_average = " + format_g17(rep.divergence_average));
  csv.comment("liouville_residual = " + format_g17(liouville_residual));

  std::cout << "lyapunov: exponents of " << f.name << ":";
  for (int i = 0; i < rep.exponents.size(); ++i)
    std::cout << " " << rep.exponents[i];
  std::cout << "\nlyapunov: sum " << sum << ", orbit-averaged divergence "
            << rep.divergence_average << " (residual " << liouville_residual
            << ")\n";
  return 0;
}

int cmd_diagnose(const CliOptions& opt) {
  const RunConfig cfg = load_config(opt);
  const auto f = make_system(cfg.system_name, cfg.parameter_overrides);
  const Vec x0 = flow_map(f, initial_point(f), cfg.t_transient,
                          cfg.integration_tolerance);
  const int n_steps = std::max<long>(400, cfg.n_steps);
  const Trajectory orbit =
      sample_orbit(f, x0, 0.0, cfg.base_time_step, static_cast<int>(n_steps),
                   cfg.integration_tolerance);
  const auto split =
      estimate_splitting(f, orbit, 1, cfg.integration_tolerance);
  const auto diag = check_sectional_conditions(f, split, 6.0, 64, 0.5);

  CsvWriter csv(out_path(opt, "diagnostics.csv"), cfg.digest_hex, cfg.seed,
                "diagnose");
  csv.header({"quantity", "value"});
  auto put = [&](const std::string& k, double v) {
    csv.begin_row();
    csv.field(k);
    csv.field(v);
    csv.end_row();
  };
  put("contraction_rate", diag.contraction_rate);
  put("domination_rate", diag.domination_rate);
  put("sectional_rate", diag.sectional_rate);
  put("min_splitting_angle", split.min_angle);
  put("splitting_invariance_defect", splitting_invariance_defect(split));
  put("sample_size", diag.sample_size);
  put("conclusive", diag.conclusive ? 1.0 : 0.0);
  for (int i = 0; i < diag.fit_residuals.size(); ++i)
    put("fit_residual_" + std::to_string(i), diag.fit_residuals[i]);

  std::cout << "diagnose: contraction " << diag.contraction_rate
            << ", domination " << diag.domination_rate << ", sectional "
            << diag.sectional_rate << " over " << diag.sample_size
            << " base points"
            << (diag.conclusive ? "" : " (fits inconclusive)") << "\n";
  return 0;
}

int cmd_shadow(const CliOptions& opt) {
  const RunConfig cfg = load_config(opt);
  const auto f = make_system(cfg.system_name, cfg.parameter_overrides);
  const TimeTauMap F(f, cfg.tau, cfg.integration_tolerance);
  Rng rng(cfg.seed);
  Vec x = flow_map(f, initial_point(f), cfg.t_transient,
                   cfg.integration_tolerance);

  CsvWriter csv(out_path(opt, "shadowing.csv"), cfg.digest_hex, cfg.seed,
                "shadow");
  csv.header({"orbit", "n", "delta", "max_deviation", "max_defect",
              "iterations", "converged"});
  int failures = 0;
  for (int i = 0; i < cfg.shadow_orbits; ++i) {
    x = F.iterate(x, 3);  // decorrelate the anchors
    Rng orbit_rng = rng.spawn(i);
    const auto po =
        generate_pseudo_orbit(F, x, cfg.shadow_delta, cfg.shadow_n, orbit_rng);
    const auto res = shadow_search(F, po, 40, cfg.integration_tolerance, cfg.c_est);
    csv.begin_row();
    csv.field(static_cast<long>(i));
    csv.field(static_cast<long>(cfg.shadow_n));
    csv.field(cfg.shadow_delta);
    csv.field(res.max_deviation);
    csv.field(res.max_defect);
    csv.field(static_cast<long>(res.iterations));
    csv.field(static_cast<long>(res.converged ? 1 : 0));
    csv.end_row();
    if (!res.converged) ++failures;
  }
  std::cout << "shadow: " << (cfg.shadow_orbits - failures) << "/"
            << cfg.shadow_orbits << " pseudo-orbits shadowed within "
            << cfg.c_est << "*n*delta\n";
  return failures == 0 ? 0 : 1;
}

int cmd_stationary(const CliOptions& opt) {
  const RunConfig cfg = load_config(opt);
  const auto f = make_system(cfg.system_name, cfg.parameter_overrides);
  const auto grid =
      std::make_shared<GridPartition>(make_grid(f, cfg.grid_resolution));
  const Vec x0 = initial_point(f);
  const auto policy = boundary_policy_from_string(cfg.boundary_policy);

  CsvWriter csv(out_path(opt, "stationary.csv"), cfg.digest_hex, cfg.seed,
                "stationary");
  csv.header({"eps", "n_samples", "defect", "floor", "pass"});
  bool all_pass = true;
  for (double eps : cfg.eps_list) {
    const MarkovKernel k(TimeTauMap(f, cfg.tau, cfg.chain_tolerance), eps,
                         policy);
    const auto mu = estimate_stationary(k, x0, cfg.burn_in, cfg.n_samples, grid,
                                        cfg.seed, cfg.n_chains, cfg.workers);
    const long n_test = std::min<long>(cfg.n_samples, 200000);
    const auto rep = check_stationarity(k, mu, n_test, mix_seed(cfg.seed, 77));
    csv.begin_row();
    csv.field(eps);
    csv.field(cfg.n_samples);
    csv.field(rep.defect);
    csv.field(rep.floor);
    csv.field(static_cast<long>(rep.pass ? 1 : 0));
    csv.end_row();
    all_pass = all_pass && rep.pass;
    std::cout << "stationary: eps " << eps << " defect " << rep.defect
              << " floor " << rep.floor << (rep.pass ? " ok" : " FAIL") << "\n";
  }
  return all_pass ? 0 : 1;
}

int cmd_avoidance(const CliOptions& opt) {
  const RunConfig cfg = load_config(opt);
  const auto f = make_system(cfg.system_name, cfg.parameter_overrides);
  const auto policy = boundary_policy_from_string(cfg.boundary_policy);
  const Vec base = TimeTauMap(f, cfg.tau, cfg.chain_tolerance)
                       .iterate(initial_point(f), 20);

  CsvWriter csv(out_path(opt, "avoidance.csv"), cfg.digest_hex, cfg.seed,
                "avoidance");
  csv.header({"eps", "radius", "k_steps", "probability", "std_error", "hits"});
  for (double eps : cfg.eps_list) {
    const int k_steps =
        static_cast<int>(std::ceil(3.0 * std::log(1.0 / eps)));
    const MarkovKernel k(TimeTauMap(f, cfg.tau, cfg.chain_tolerance), eps,
                         policy);
    const auto est =
        singularity_avoidance(k, base, cfg.gamma, k_steps, cfg.avoidance_n_mc,
                              mix_seed(cfg.seed, 101), cfg.workers);
    csv.begin_row();
    csv.field(eps);
    csv.field(est.radius);
    csv.field(static_cast<long>(k_steps));
    csv.field(est.probability);
    csv.field(est.std_error);
    csv.field(est.hits);
    csv.end_row();
    std::cout << "avoidance: eps " << eps << " radius " << est.radius
              << " hit probability " << est.probability << " (se "
              << est.std_error << ")\n";
  }
  return 0;
}

int cmd_rectangle(const CliOptions& opt) {
  const RunConfig cfg = load_config(opt);
  const auto f = make_system(cfg.system_name, cfg.parameter_overrides);
  const auto policy = boundary_policy_from_string(cfg.boundary_policy);
  const TimeTauMap F(f, cfg.tau, cfg.chain_tolerance);
  const MarkovKernel k(F, cfg.rect_eps, policy);
  const auto states =
      stationary_states(k, initial_point(f), cfg.burn_in, cfg.n_samples,
                        cfg.seed, cfg.n_chains, cfg.workers);

  CsvWriter csv(out_path(opt, "rectangles.csv"), cfg.digest_hex, cfg.seed,
                "rectangle");
  csv.header({"rect", "eta", "mass", "std_error", "mes_u", "ratio", "hits"});
  Rng rng(mix_seed(cfg.seed, 131));
  for (int r = 0; r < cfg.rect_count; ++r) {
    const Vec seed_pt = f.trapping_region.clamp(
        states[static_cast<size_t>(rng.uniform() * states.size())]);
    for (double eta : {cfg.rect_eta, cfg.rect_eta / 2, cfg.rect_eta / 4}) {
      const auto rect =
          build_rectangle(F, seed_pt, 5, 3, eta, cfg.rect_stable_radius,
                          cfg.rect_thickness);
      const auto rm = rectangle_mass_bound(states, rect, f);
      csv.begin_row();
      csv.field(static_cast<long>(r));
      csv.field(eta);
      csv.field(rm.mass);
      csv.field(rm.std_error);
      csv.field(rm.mes_u);
      csv.field(rm.ratio);
      csv.field(rm.hits);
      csv.end_row();
    }
  }
  std::cout << "rectangle: wrote mass/arclength table for " << cfg.rect_count
            << " rectangles at 3 dyadic widths\n";
  return 0;
}

int cmd_stability(const CliOptions& opt) {
  const RunConfig cfg = load_config(opt);
  const auto f = make_system(cfg.system_name, cfg.parameter_overrides);
  const auto grid =
      std::make_shared<GridPartition>(make_grid(f, cfg.grid_resolution));
  const auto srb =
      srb_estimate(f, initial_point(f), cfg.t_transient, cfg.t_average,
                   cfg.base_time_step, grid, cfg.integration_tolerance);
  StabilityConfig scfg;
  scfg.tau = cfg.tau;
  scfg.tol = cfg.chain_tolerance;
  scfg.policy = boundary_policy_from_string(cfg.boundary_policy);
  scfg.burn_in = cfg.burn_in;
  scfg.n_samples = cfg.n_samples;
  scfg.n_chains = cfg.n_chains;
  scfg.n_workers = cfg.workers;
  scfg.seed = cfg.seed;
  const auto table =
      stability_study(f, cfg.eps_list, initial_point(f), srb, scfg);

  CsvWriter csv(out_path(opt, "stability.csv"), cfg.digest_hex, cfg.seed,
                "stability");
  csv.header({"eps", "distance", "floor"});
  for (const auto& row : table.rows) {
    csv.begin_row();
    csv.field(row.eps);
    csv.field(row.distance);
    csv.field(row.floor);
    csv.end_row();
  }
  csv.comment(std::string("monotone = ") + (table.monotone ? "1" : "0"));
  csv.comment(std::string("converged = ") + (table.converged ? "1" : "0"));
  for (const auto& row : table.rows)
    std::cout << "stability: eps " << row.eps << " distance " << row.distance
              << " floor " << row.floor << "\n";
  std::cout << "stability: monotone " << (table.monotone ? "yes" : "no")
            << ", converged " << (table.converged ? "yes" : "no") << "\n";
  return 0;
}

int cmd_verify(const CliOptions& opt, const std::string& self_path) {
  const RunConfig cfg = load_config(opt);
  fs::create_directories(opt.out_dir);
  bool all_pass = true;
  const auto results = run_verification(
      cfg, opt.out_dir, self_path, [&](const CriterionResult& r) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  criterion " << r.id
                  << "  " << r.name << "  (" << r.seconds << " s)";
        if (!r.detail.empty()) std::cout << "  [" << r.detail << "]";
        std::cout << "\n" << std::flush;
      });
  for (const auto& r : results) all_pass = all_pass && r.pass;
  std::cout << (all_pass ? "verify: all criteria passed"
                         : "verify: some criteria FAILED")
            << "\n";
  return all_pass ? 0 : 1;
}

std::string self_executable_path(const char* argv0) {
  std::error_code ec;
  const auto p = fs::read_symlink("/proc/self/exe", ec);
  if (!ec) return p.string();
  return argv0 ? argv0 : "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical experiments on singular-hyperbolic flows and their "
               "random perturbations"};
  app.require_subcommand(1);

  CliOptions opt;
  app.add_option("--config", opt.config_path, "configuration file");
  app.add_option("--out", opt.out_dir, "output directory");
  std::uint64_t seed_val = 0;
  int workers_val = 0;
  auto* seed_opt = app.add_option("--seed", seed_val, "seed override");
  auto* workers_opt = app.add_option("--workers", workers_val, "worker threads");

  auto* simulate = app.add_subcommand("simulate", "sample a trajectory");
  auto* lyapunov = app.add_subcommand("lyapunov", "Lyapunov spectrum");
  auto* diagnose = app.add_subcommand("diagnose", "sectional-hyperbolicity rates");
  auto* shadow = app.add_subcommand("shadow", "pseudo-orbit shadowing study");
  auto* stationary = app.add_subcommand("stationary", "stationary measures of the perturbed chain");
  auto* avoidance = app.add_subcommand("avoidance", "singularity-neighborhood hitting probabilities");
  auto* rectangle = app.add_subcommand("rectangle", "rectangle mass vs unstable arclength");
  auto* stability = app.add_subcommand("stability", "weak convergence of stationary measures");
  auto* verify = app.add_subcommand("verify", "run the full acceptance suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (seed_opt->count()) opt.seed_override = seed_val;
  if (workers_opt->count()) opt.workers_override = workers_val;

  try {
    if (simulate->parsed()) return cmd_simulate(opt);
    if (lyapunov->parsed()) return cmd_lyapunov(opt);
    if (diagnose->parsed()) return cmd_diagnose(opt);
    if (shadow->parsed()) return cmd_shadow(opt);
    if (stationary->parsed()) return cmd_stationary(opt);
    if (avoidance->parsed()) return cmd_avoidance(opt);
    if (rectangle->parsed()) return cmd_rectangle(opt);
    if (stability->parsed()) return cmd_stability(opt);
    if (verify->parsed()) return cmd_verify(opt, self_executable_path(argv[0]));
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const InvariantError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
