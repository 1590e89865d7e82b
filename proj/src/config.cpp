#include "salab/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace salab {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("config: bad number '" + s + "' for " + where);
  }
}

long parse_long(const std::string& s, const std::string& where) {
  try {
    size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("config: bad integer '" + s + "' for " + where);
  }
}

std::vector<double> parse_list(const std::string& s, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto b = tok.find_first_not_of(" \t");
    const auto e = tok.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(parse_double(tok.substr(b, e - b + 1), where));
  }
  if (out.empty()) throw InputError("config: empty list for " + where);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::validate() const {
  if (integration_tolerance <= 0 || chain_tolerance <= 0)
    throw InputError("config: tolerances must be strictly positive");
  if (base_time_step <= 0) throw InputError("config: base_time_step must be > 0");
  if (tau <= 0) throw InputError("config: tau must be > 0");
  if (grid_resolution < 2) throw InputError("config: grid_resolution must be >= 2");
  if (n_samples < 1 || burn_in < 0) throw InputError("config: bad sample counts");
  if (eps_list.empty()) throw InputError("config: eps_list must be nonempty");
  for (size_t i = 0; i + 1 < eps_list.size(); ++i)
    if (eps_list[i] <= eps_list[i + 1])
      throw InputError("config: eps_list must be strictly descending");
  if (gamma <= 0 || gamma >= 1) throw InputError("config: gamma must be in (0,1)");
  if (c_est <= 0) throw InputError("config: c_est must be > 0");
  boundary_policy_from_string(boundary_policy);  // throws on bad value
  make_system(system_name, parameter_overrides);  // unknown names rejected here
}

std::string RunConfig::normalized() const {
  std::ostringstream os;
  os << "[system]\nname = " << system_name << "\n";
  for (const auto& [k, v] : parameter_overrides)
    os << k << " = " << fmt_double(v) << "\n";
  os << "[flow]\n"
     << "tau = " << fmt_double(tau) << "\n"
     << "integration_tolerance = " << fmt_double(integration_tolerance) << "\n"
     << "chain_tolerance = " << fmt_double(chain_tolerance) << "\n"
     << "base_time_step = " << fmt_double(base_time_step) << "\n";
  os << "[grid]\nresolution = " << grid_resolution << "\n";
  os << "[run]\n"
     << "seed = " << seed << "\n"
     << "workers = " << workers << "\n"
     << "t_transient = " << fmt_double(t_transient) << "\n"
     << "t_average = " << fmt_double(t_average) << "\n"
     << "qr_interval = " << fmt_double(qr_interval) << "\n"
     << "n_steps = " << n_steps << "\n";
  os << "[shadow]\n"
     << "c_est = " << fmt_double(c_est) << "\n"
     << "delta = " << fmt_double(shadow_delta) << "\n"
     << "n = " << shadow_n << "\n"
     << "orbits = " << shadow_orbits << "\n";
  os << "[perturbation]\neps_list =";
  for (size_t i = 0; i < eps_list.size(); ++i)
    os << (i ? "," : " ") << fmt_double(eps_list[i]);
  os << "\nburn_in = " << burn_in << "\nn_samples = " << n_samples
     << "\nn_chains = " << n_chains << "\nboundary_policy = " << boundary_policy
     << "\ngamma = " << fmt_double(gamma)
     << "\navoidance_n_mc = " << avoidance_n_mc << "\n";
  os << "[rectangle]\n"
     << "eta = " << fmt_double(rect_eta) << "\n"
     << "stable_radius = " << fmt_double(rect_stable_radius) << "\n"
     << "thickness = " << fmt_double(rect_thickness) << "\n"
     << "eps = " << fmt_double(rect_eps) << "\n"
     << "count = " << rect_count << "\n";
  return os.str();
}

void RunConfig::compute_digest() {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(normalized())));
  digest_hex = buf;
}

RunConfig default_config() {
  RunConfig c;
  c.compute_digest();
  return c;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig c;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') throw InputError("config: malformed section at " + where);
      section = t.substr(1, t.size() - 2);
      if (section != "system" && section != "flow" && section != "grid" &&
          section != "run" && section != "shadow" && section != "perturbation" &&
          section != "rectangle")
        throw InputError("config: unknown section [" + section + "] at " + where);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InputError("config: expected key = value at " + where);
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    const std::string loc = "[" + section + "] " + key + " at " + where;

    if (section == "system") {
      if (key == "name")
        c.system_name = val;
      else
        c.parameter_overrides[key] = parse_double(val, loc);
    } else if (section == "flow") {
      if (key == "tau") c.tau = parse_double(val, loc);
      else if (key == "integration_tolerance") c.integration_tolerance = parse_double(val, loc);
      else if (key == "chain_tolerance") c.chain_tolerance = parse_double(val, loc);
      else if (key == "base_time_step") c.base_time_step = parse_double(val, loc);
      else throw InputError("config: unknown key " + loc);
    } else if (section == "grid") {
      if (key == "resolution") c.grid_resolution = static_cast<int>(parse_long(val, loc));
      else throw InputError("config: unknown key " + loc);
    } else if (section == "run") {
      if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_long(val, loc));
      else if (key == "workers") c.workers = static_cast<int>(parse_long(val, loc));
      else if (key == "t_transient") c.t_transient = parse_double(val, loc);
      else if (key == "t_average") c.t_average = parse_double(val, loc);
      else if (key == "qr_interval") c.qr_interval = parse_double(val, loc);
      else if (key == "n_steps") c.n_steps = parse_long(val, loc);
      else throw InputError("config: unknown key " + loc);
    } else if (section == "shadow") {
      if (key == "c_est") c.c_est = parse_double(val, loc);
      else if (key == "delta") c.shadow_delta = parse_double(val, loc);
      else if (key == "n") c.shadow_n = static_cast<int>(parse_long(val, loc));
      else if (key == "orbits") c.shadow_orbits = static_cast<int>(parse_long(val, loc));
      else throw InputError("config: unknown key " + loc);
    } else if (section == "perturbation") {
      if (key == "eps_list") c.eps_list = parse_list(val, loc);
      else if (key == "burn_in") c.burn_in = parse_long(val, loc);
      else if (key == "n_samples") c.n_samples = parse_long(val, loc);
      else if (key == "n_chains") c.n_chains = static_cast<int>(parse_long(val, loc));
      else if (key == "boundary_policy") c.boundary_policy = val;
      else if (key == "gamma") c.gamma = parse_double(val, loc);
      else if (key == "avoidance_n_mc") c.avoidance_n_mc = parse_long(val, loc);
      else throw InputError("config: unknown key " + loc);
    } else if (section == "rectangle") {
      if (key == "eta") c.rect_eta = parse_double(val, loc);
      else if (key == "stable_radius") c.rect_stable_radius = parse_double(val, loc);
      else if (key == "thickness") c.rect_thickness = parse_double(val, loc);
      else if (key == "eps") c.rect_eps = parse_double(val, loc);
      else if (key == "count") c.rect_count = static_cast<int>(parse_long(val, loc));
      else throw InputError("config: unknown key " + loc);
    } else {
      throw InputError("config: key outside any section at " + where);
    }
  }
  c.validate();
  c.compute_digest();
  return c;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace salab
