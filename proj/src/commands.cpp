#include "singorb/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

#include "singorb/config.hpp"
#include "singorb/errors.hpp"

namespace singorb::cli {

namespace {

using nlohmann::json;

struct Prepared {
  RunConfig cfg;
  EnergyProblem problem;
  AuditConfig audit;
};

json stamp(const std::string& schema) { return {{"schema", schema}, {"version", SINGORB_VERSION}}; }

// Loads and validates a config; prints the reason and returns nullopt on failure.
std::optional<Prepared> prepare(const std::filesystem::path& path, std::ostream& err) {
  try {
    RunConfig cfg = load_config(path);
    cfg.solver.validate();
    EnergyProblem problem = make_problem(cfg);
    AuditConfig audit = make_audit_config(cfg);
    audit.validate();
    return Prepared{std::move(cfg), std::move(problem), std::move(audit)};
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
  }
  return std::nullopt;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::filesystem::path make_output_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

const char* route_name(Route r) { return r == Route::kFree ? "free" : "constrained"; }

json problem_json(const Prepared& p) {
  return {{"potential", to_json(p.problem.potential)},
          {"h", p.problem.h},
          {"dim", p.problem.dim()},
          {"modes", p.cfg.solver.modes},
          {"quadrature", p.problem.quadrature_nodes},
          {"min_radius_floor", p.problem.min_radius_floor}};
}

json solver_json(const SolverOptions& s) {
  return {{"seed", s.rng_seed},   {"restarts", s.restarts}, {"max_iters", s.max_iters},
          {"grad_tol", s.grad_tol}, {"armijo", s.armijo},   {"shrink", s.shrink}};
}

json route_json(const MinimizeResult& r, const VerificationReport& v) {
  json j = to_json(r.best);
  j["route"] = route_name(r.route);
  j["best_start"] = r.best_start;
  j["infimum_estimate"] = r.infimum_estimate;
  j["starts"] = json::array();
  for (const auto& s : r.all_starts) j["starts"].push_back(to_json(s));
  j["verified"] = v.verdict;
  return j;
}

// Physical samples of a solution as a trajectory table.
Trajectory samples_as_trajectory(const OrbitSolution& s) {
  Trajectory t;
  const auto m = s.physical_samples.nodes.cols();
  for (Eigen::Index j = 0; j < m; ++j) {
    t.times.push_back(s.period * static_cast<double>(j) / static_cast<double>(m));
    t.positions.emplace_back(s.physical_samples.nodes.col(j));
    t.velocities.emplace_back(s.velocities.col(j));
  }
  return t;
}

void write_trace(std::ostream& out, const std::vector<MinimizeResult>& results) {
  out << "route,start,iteration,f,grad_norm,step,constraint_residual\n";
  out << std::setprecision(17);
  for (const auto& r : results) {
    for (std::size_t s = 0; s < r.all_starts.size(); ++s) {
      for (const auto& row : r.all_starts[s].trace) {
        out << route_name(r.route) << ',' << s << ',' << row.iteration << ',' << row.f << ',' << row.grad_norm << ','
            << row.step << ',' << row.constraint_residual << '\n';
      }
    }
  }
}

}  // namespace

std::string resolve_output_dir(const std::optional<std::string>& flag, const std::string& config_value) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("SINGORB_OUTPUT"); env != nullptr && *env != '\0') return env;
  return config_value;
}

int cmd_solve(const std::filesystem::path& config_path, const std::optional<std::string>& output_dir,
              std::ostream& out, std::ostream& err) {
  auto prepared = prepare(config_path, err);
  if (!prepared) return kExitConfigError;
  const Prepared& p = *prepared;

  const double threshold = p.audit.mu2 / p.audit.alpha_target;
  if (!(p.cfg.h > threshold)) {
    err << "config error: h: energy h = " << p.cfg.h << " must satisfy h > mu2/alpha = " << threshold
        << " (mu2 = " << p.audit.mu2 << ", alpha = " << p.audit.alpha_target << ")\n";
    return kExitConfigError;
  }

  const AuditReport audit = audit_assumptions(p.problem.potential, p.audit);
  const bool want_free = p.cfg.route != RouteChoice::kConstrained;
  const bool want_constrained = p.cfg.route != RouteChoice::kFree;
  if (want_free && !audit.saddle_route && !audit.minimization_route) {
    err << "warning: no route's hypotheses hold on the audit samples; solving anyway\n";
  } else if (want_constrained && !audit.minimization_route) {
    err << "warning: constrained-route hypotheses fail on the audit samples; solving anyway\n";
  }

  std::vector<MinimizeResult> results;
  try {
    if (want_free) results.push_back(minimize_free(p.problem, p.cfg.solver));
    if (want_constrained) results.push_back(minimize_on_F(p.problem, p.cfg.solver));
  } catch (const NoConvergenceError& e) {
    err << "no convergence: " << e.what() << '\n';
    return kExitNoConvergence;
  }

  std::vector<VerificationReport> reports;
  bool all_verified = true;
  for (const auto& r : results) {
    reports.push_back(verify_solution(p.problem, r.best, p.cfg.verify));
    all_verified = all_verified && reports.back().verdict;
  }

  const MinimizeResult& primary = results.front();
  json solution = stamp("singorb.solution");
  solution["problem"] = problem_json(p);
  solution["solver"] = solver_json(p.cfg.solver);
  solution.update(route_json(primary, reports.front()));
  solution["route"] = p.cfg.route == RouteChoice::kBoth ? "both" : route_name(primary.route);
  solution["primary_route"] = route_name(primary.route);
  solution["applicable_routes"] = to_json(audit)["applicable_routes"];
  json verification = stamp("singorb.verification");
  verification["route"] = route_name(primary.route);
  verification.update(to_json(reports.front()));
  verification["verdict"] = all_verified;
  if (results.size() > 1) {
    solution["routes"] = json::object();
    verification["routes"] = json::object();
    for (std::size_t i = 0; i < results.size(); ++i) {
      solution["routes"][route_name(results[i].route)] = route_json(results[i], reports[i]);
      verification["routes"][route_name(results[i].route)] = to_json(reports[i]);
    }
  }

  try {
    const auto dir = make_output_dir(resolve_output_dir(output_dir, p.cfg.output_dir));
    write_json(dir / "solution.json", solution);
    write_json(dir / "verification.json", verification);
    {
      std::ostringstream csv;
      write_csv(csv, p.problem.potential, samples_as_trajectory(primary.best));
      write_text(dir / "orbit.csv", csv.str());
    }
    {
      std::ostringstream csv;
      write_trace(csv, results);
      write_text(dir / "trace.csv", csv.str());
    }
    try {
      IntegratorOptions io = p.cfg.verify.integrator;
      io.collision_floor = std::max(io.collision_floor, p.problem.min_radius_floor);
      const Trajectory traj = integrate_orbit(p.problem.potential, primary.best.initial_position,
                                              primary.best.initial_velocity, primary.best.period, io);
      std::ostringstream csv;
      write_csv(csv, p.problem.potential, traj);
      write_text(dir / "trajectory.csv", csv.str());
    } catch (const CollisionError& e) {
      err << "trajectory.csv not written: " << e.what() << '\n';
    } catch (const StepFailureError& e) {
      err << "trajectory.csv not written: " << e.what() << '\n';
    }
    out << "wrote artifacts to " << dir.string() << '\n';
  } catch (const std::runtime_error& e) {
    err << "output error: " << e.what() << '\n';
    return kExitConfigError;
  }

  out << std::setprecision(10);
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    int converged = 0;
    for (const auto& s : r.all_starts) converged += s.converged ? 1 : 0;
    out << route_name(r.route) << ": f* = " << r.best.f_value << ", T = " << r.best.period
        << ", radius in [" << r.best.radius_min << ", " << r.best.radius_max << "], " << converged << "/"
        << r.all_starts.size() << " starts converged, verification "
        << (reports[i].verdict ? "passed" : "FAILED: " + reports[i].reason) << '\n';
  }
  return all_verified ? kExitOk : kExitFailed;
}

int cmd_audit(const std::filesystem::path& config_path, const std::optional<std::string>& output_dir,
              std::ostream& out, std::ostream& err) {
  auto prepared = prepare(config_path, err);
  if (!prepared) return kExitConfigError;
  const Prepared& p = *prepared;
  const AuditReport report = audit_assumptions(p.problem.potential, p.audit);

  json j = stamp("singorb.audit");
  j["potential"] = to_json(p.problem.potential);
  j["settings"] = {{"alpha_target", p.audit.alpha_target}, {"beta_target", p.audit.beta_target},
                   {"mu2", p.audit.mu2},                   {"r_small", p.audit.r_small},
                   {"L0", p.audit.L0},                     {"rho0", p.audit.rho0},
                   {"limit_tol", p.audit.limit_tol},       {"radius_min", p.audit.radii.front()},
                   {"radius_max", p.audit.radii.back()},   {"radius_count", p.audit.radii.size()},
                   {"seed", p.audit.seed}};
  j.update(to_json(report));
  try {
    const auto dir = make_output_dir(resolve_output_dir(output_dir, p.cfg.output_dir));
    write_json(dir / "audit.json", j);
  } catch (const std::runtime_error& e) {
    err << "output error: " << e.what() << '\n';
    return kExitConfigError;
  }
  for (const auto& [name, v] : j["hypotheses"].items()) {
    out << std::setw(13) << std::left << name << (v["holds_on_samples"].get<bool>() ? "holds" : "fails") << '\n';
  }
  out << "energy threshold mu2/alpha = " << report.energy_threshold << ", h = " << report.h << '\n';
  out << "applicable routes: " << j["applicable_routes"].dump() << '\n';
  return report.minimization_route || report.saddle_route ? kExitOk : kExitFailed;
}

int cmd_certificate(const CertificateArgs& args, std::ostream& out, std::ostream& err) {
  std::optional<SaddleCertificate> cert;
  std::string failure;
  try {
    if (args.probes < 1) throw std::invalid_argument("--probes must be at least 1");
    const EnergyProblem problem{PotentialSpec::homogeneous(args.a, args.alpha, args.dim), args.h,
                                default_quadrature_nodes(3), 1e-6};
    cert = saddle_certificate(problem, args.R, args.beta, args.probes, args.seed);
  } catch (const DegenerateCertificateError& e) {
    failure = e.what();
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfigError;
  }

  json j = stamp("singorb.certificate");
  j["potential"] = {{"a", args.a}, {"alpha", args.alpha}, {"dim", args.dim}};
  if (cert) {
    j.update(to_json(*cert));
  } else {
    j.update({{"R", args.R}, {"beta", args.beta}, {"h", args.h}, {"separated", false}, {"error", failure}});
  }
  try {
    const auto dir = make_output_dir(resolve_output_dir(args.output_dir, "singorb_out"));
    write_json(dir / "certificate.json", j);
  } catch (const std::runtime_error& e) {
    err << "output error: " << e.what() << '\n';
    return kExitConfigError;
  }
  if (!cert) {
    err << "degenerate certificate: " << failure << '\n';
    return kExitFailed;
  }
  out << std::setprecision(10) << "delta = " << cert->delta << ", lower_S = " << cert->lower_S
      << ", upper_Q = " << cert->upper_Q << ", M_R = " << cert->M_R << ", B_R = " << cert->B_R << '\n'
      << (cert->separated ? "separated on probes" : "not separated") << '\n';
  return cert->separated ? kExitOk : kExitFailed;
}

int cmd_verify(const std::filesystem::path& orbit_path, const std::filesystem::path& config_path,
               const std::optional<std::string>& output_dir, std::ostream& out, std::ostream& err) {
  auto prepared = prepare(config_path, err);
  if (!prepared) return kExitConfigError;
  const Prepared& p = *prepared;

  std::optional<FourierLoop> loop;
  double period = 0.0;
  try {
    std::ifstream in(orbit_path);
    if (!in) throw std::runtime_error("cannot read orbit file " + orbit_path.string());
    const json j = json::parse(in);
    if (!j.contains("loop") || !j.contains("period")) throw std::runtime_error("orbit file needs loop and period");
    loop = loop_from_json(j.at("loop"));
    period = j.at("period").get<double>();
    if (!(period > 0.0) || !std::isfinite(period)) throw std::runtime_error("period must be positive and finite");
    if (loop->dim() != p.problem.dim()) throw std::runtime_error("orbit dimension differs from config dim");
  } catch (const std::exception& e) {
    err << "orbit error: " << e.what() << '\n';
    return kExitConfigError;
  }

  const VerificationReport report = verify_loop(p.problem, *loop, period, p.cfg.verify);
  json j = stamp("singorb.verification");
  j["orbit"] = orbit_path.string();
  j.update(to_json(report));
  try {
    const auto dir = make_output_dir(resolve_output_dir(output_dir, p.cfg.output_dir));
    write_json(dir / "verification.json", j);
  } catch (const std::runtime_error& e) {
    err << "output error: " << e.what() << '\n';
    return kExitConfigError;
  }
  out << std::setprecision(4) << "energy residual " << report.energy_residual << ", periodicity residual "
      << report.periodicity_residual << ", ODE residual " << report.ode_residual << '\n'
      << (report.verdict ? "verified" : "verification failed: " + report.reason) << '\n';
  return report.verdict ? kExitOk : kExitFailed;
}

}  // namespace singorb::cli
