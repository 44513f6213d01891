#include "singorb/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "singorb/errors.hpp"

namespace singorb {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError(key, "expected a number, got \"" + text + "\"");
  }
  return value;
}

long long parse_integer(const std::string& key, const std::string& text) {
  long long value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError(key, "expected an integer, got \"" + text + "\"");
  }
  return value;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw ConfigError(key, "expected a comma-separated list of numbers");
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(key, "expected true or false, got \"" + text + "\"");
}

int positive_int(const std::string& key, const std::string& text) {
  const long long v = parse_integer(key, text);
  if (v < 1 || v > 1'000'000'000) throw ConfigError(key, "must be a positive integer");
  return static_cast<int>(v);
}

double positive(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (!(v > 0.0)) throw ConfigError(key, "must be positive");
  return v;
}

struct KeySpec {
  std::string name;
  std::string doc;
  std::function<void(RunConfig&, const std::string&, const std::string&)> apply;
};

struct Pending {
  std::optional<std::vector<double>> a;
  std::optional<std::vector<double>> alpha;
};

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"potential.a", "required; comma-separated coefficients a_i > 0 of V(x) = sum -a_i |x|^(-alpha_i)", nullptr},
      {"potential.alpha", "required; comma-separated exponents alpha_i > 0, same length as potential.a", nullptr},
      {"dim", "space dimension n (default 2)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.dim = positive_int(k, v); }},
      {"h", "required; energy level h",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.h = parse_double(k, v); }},
      {"route", "free | constrained | both (default free)",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "free") c.route = RouteChoice::kFree;
         else if (v == "constrained") c.route = RouteChoice::kConstrained;
         else if (v == "both") c.route = RouteChoice::kBoth;
         else throw ConfigError(k, "expected free, constrained or both, got \"" + v + "\"");
       }},
      {"modes", "Fourier modes K (default 32)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.modes = positive_int(k, v); }},
      {"quadrature", "quadrature nodes M >= 2K+1 (default max(256, 8K))",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.quadrature = positive_int(k, v); }},
      {"min_radius_floor", "singularity floor for loops and trajectories (default 1e-6)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.min_radius_floor = positive(k, v); }},
      {"seed", "RNG seed for starts and audits (default 0)",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const long long s = parse_integer(k, v);
         if (s < 0) throw ConfigError(k, "must be nonnegative");
         c.solver.rng_seed = static_cast<std::uint64_t>(s);
       }},
      {"restarts", "multistart count (default 8)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.restarts = positive_int(k, v); }},
      {"max_iters", "descent iterations per start (default 5000)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.max_iters = positive_int(k, v); }},
      {"grad_tol", "preconditioned gradient norm tolerance (default 1e-8)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.grad_tol = positive(k, v); }},
      {"armijo", "sufficient-decrease constant (default 1e-4)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.armijo = positive(k, v); }},
      {"shrink", "backtracking factor (default 0.5)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.shrink = positive(k, v); }},
      {"parallel", "run starts on worker threads: true | false (default true)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.solver.parallel = parse_bool(k, v); }},
      {"output_dir", "artifact directory (default singorb_out; SINGORB_OUTPUT or --output override it)",
       [](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }},
      {"audit.alpha_target", "exponent alpha in (A3) (default: largest potential exponent)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.alpha_target = positive(k, v); }},
      {"audit.beta_target", "exponent beta in (A4) (default: smallest potential exponent)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.beta_target = positive(k, v); }},
      {"audit.mu2", "slack mu2 >= 0 in (A3); solving requires h > mu2/alpha (default 0)",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.mu2 = parse_double(k, v);
         if (!(c.mu2 >= 0.0)) throw ConfigError(k, "must be nonnegative");
       }},
      {"audit.r_small", "radius bound r of (A4) (default 1)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.r_small = positive(k, v); }},
      {"audit.L0", "constant L0 of (B2)/(B3) (default 1)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.L0 = parse_double(k, v); }},
      {"audit.rho0", "radius rho0 of (B3') (default 0.1)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.rho0 = positive(k, v); }},
      {"audit.radius_min", "smallest sampled shell (default 1e-3)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.audit_radius_min = positive(k, v); }},
      {"audit.radius_max", "largest sampled shell (default 1e3)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.audit_radius_max = positive(k, v); }},
      {"audit.radius_count", "number of log-spaced shells (default 61)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.audit_radius_count = positive_int(k, v); }},
      {"audit.limit_tol", "|grad V| bound at the largest shell for (P1)/(B2') (default 1e-6)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.limit_tol = positive(k, v); }},
      {"verify.energy_tol", "energy residual tolerance (default 1e-6)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.verify.energy = positive(k, v); }},
      {"verify.periodicity_tol", "periodicity residual tolerance (default 1e-4)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.verify.periodicity = positive(k, v); }},
      {"verify.ode_tol", "ODE residual tolerance (default 1e-4)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.verify.ode = positive(k, v); }},
      {"verify.samples", "ODE residual sample count (default 400)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.verify.ode_samples = positive_int(k, v); }},
      {"verify.integrator_tol", "Runge-Kutta absolute/relative tolerance (default 1e-10)",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.verify.integrator.tol = positive(k, v); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  Pending pending;
  std::set<std::string> seen;
  std::map<std::string, const KeySpec*> index;
  for (const auto& k : key_table()) index[k.name] = &k;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    const auto it = index.find(key);
    if (it == index.end()) throw ConfigError(key, "unknown key");
    if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");
    if (key == "potential.a") {
      pending.a = parse_list(key, value);
    } else if (key == "potential.alpha") {
      pending.alpha = parse_list(key, value);
    } else {
      it->second->apply(cfg, key, value);
    }
  }

  if (!pending.a) throw ConfigError("potential.a", "missing required key");
  if (!pending.alpha) throw ConfigError("potential.alpha", "missing required key");
  if (!seen.count("h")) throw ConfigError("h", "missing required key");
  if (pending.a->size() != pending.alpha->size()) {
    throw ConfigError("potential.alpha", "must list as many exponents as potential.a lists coefficients");
  }
  for (std::size_t i = 0; i < pending.a->size(); ++i) {
    if (!((*pending.a)[i] > 0.0)) throw ConfigError("potential.a", "coefficients must be positive");
    if (!((*pending.alpha)[i] > 0.0)) throw ConfigError("potential.alpha", "exponents must be positive");
    cfg.terms.push_back({(*pending.a)[i], (*pending.alpha)[i]});
  }
  const int nodes = cfg.quadrature == 0 ? default_quadrature_nodes(cfg.solver.modes) : cfg.quadrature;
  if (nodes < 2 * cfg.solver.modes + 1) throw ConfigError("quadrature", "must be at least 2 * modes + 1");
  if (!(cfg.solver.shrink < 1.0)) throw ConfigError("shrink", "must lie in (0, 1)");
  if (!(cfg.solver.armijo < 1.0)) throw ConfigError("armijo", "must lie in (0, 1)");
  if (!(cfg.audit_radius_max > cfg.audit_radius_min)) {
    throw ConfigError("audit.radius_max", "must exceed audit.radius_min");
  }
  if (cfg.audit_radius_count < 2) throw ConfigError("audit.radius_count", "must be at least 2");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  return parse_config(in);
}

std::string config_reference() {
  std::ostringstream out;
  out << "Config file: one `key = value` per line, `#` comments.\n";
  for (const auto& k : key_table()) out << "  " << k.name << "\n      " << k.doc << "\n";
  return out.str();
}

EnergyProblem make_problem(const RunConfig& cfg) {
  EnergyProblem p{PotentialSpec(cfg.terms, cfg.dim), cfg.h,
                  cfg.quadrature == 0 ? default_quadrature_nodes(cfg.solver.modes) : cfg.quadrature,
                  cfg.min_radius_floor};
  p.validate(cfg.solver.modes);
  return p;
}

AuditConfig make_audit_config(const RunConfig& cfg) {
  const PotentialSpec spec(cfg.terms, cfg.dim);
  AuditConfig a = AuditConfig::defaults_for(spec, cfg.h);
  a.radii.resize(static_cast<std::size_t>(cfg.audit_radius_count));
  const double lo = std::log10(cfg.audit_radius_min);
  const double hi = std::log10(cfg.audit_radius_max);
  for (int i = 0; i < cfg.audit_radius_count; ++i) {
    a.radii[static_cast<std::size_t>(i)] = std::pow(10.0, lo + (hi - lo) * i / (cfg.audit_radius_count - 1));
  }
  if (cfg.alpha_target) a.alpha_target = *cfg.alpha_target;
  if (cfg.beta_target) a.beta_target = *cfg.beta_target;
  a.mu2 = cfg.mu2;
  a.r_small = cfg.r_small;
  a.L0 = cfg.L0;
  a.rho0 = cfg.rho0;
  a.limit_tol = cfg.limit_tol;
  a.seed = cfg.solver.rng_seed;
  return a;
}

}  // namespace singorb
