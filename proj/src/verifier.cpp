#include "singorb/verifier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "singorb/errors.hpp"

namespace singorb {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr std::array<double, 7> kC{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr std::array<double, 7> kB5{35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr std::array<double, 7> kB4{5179.0 / 57600, 0.0,           7571.0 / 16695, 393.0 / 640,
                                    -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

// State y = (q, v); y' = (v, -grad V(q)).
Eigen::VectorXd rhs(const PotentialSpec& spec, const Eigen::VectorXd& y, double floor, double t) {
  const int n = static_cast<int>(y.size() / 2);
  const Eigen::VectorXd q = y.head(n);
  const double r = q.norm();
  if (!(r > floor)) {
    std::ostringstream msg;
    msg << "trajectory reached |q| = " << r << " at t = " << t;
    throw CollisionError(msg.str(), t);
  }
  Eigen::VectorXd out(y.size());
  out.head(n) = y.tail(n);
  out.tail(n) = -potential_gradient(spec, q);
  return out;
}

}  // namespace

double orbit_energy(const PotentialSpec& spec, const Eigen::VectorXd& q, const Eigen::VectorXd& v) {
  return 0.5 * v.squaredNorm() + potential_value(spec, q);
}

Trajectory integrate_orbit(const PotentialSpec& spec, const Eigen::VectorXd& q0, const Eigen::VectorXd& v0,
                           double period, const IntegratorOptions& options) {
  const int n = spec.dim();
  if (q0.size() != n || v0.size() != n) throw std::invalid_argument("initial state dimension mismatch");
  if (!(q0.norm() > 0.0)) throw std::invalid_argument("initial position must be away from the origin");
  if (!(period > 0.0)) throw std::invalid_argument("integration time must be positive");
  if (!(options.tol > 0.0)) throw std::invalid_argument("integrator tolerance must be positive");

  Trajectory traj;
  Eigen::VectorXd y(2 * n);
  y << q0, v0;
  double t = 0.0;
  traj.times.push_back(t);
  traj.positions.push_back(q0);
  traj.velocities.push_back(v0);
  traj.stats.min_radius_seen = q0.norm();

  std::array<Eigen::VectorXd, 7> k;
  k[0] = rhs(spec, y, options.collision_floor, t);
  // Initial step from the local acceleration scale.
  double h = std::min(period, 0.01 * q0.norm() / std::max(1e-12, k[0].norm())) * std::pow(options.tol, 0.2);
  h = std::max(h, 1e-6 * period * options.tol);
  const double h_min = 1e-14 * std::max(1.0, period);

  while (t < period) {
    if (traj.stats.steps + traj.stats.rejected_steps >= options.max_steps) {
      throw StepFailureError("integrator exceeded max_steps");
    }
    bool last = false;
    if (t + h >= period) {
      h = period - t;
      last = true;
    }
    for (int s = 1; s < 7; ++s) {
      Eigen::VectorXd ys = y;
      for (int j = 0; j < s; ++j) {
        if (kA[s][j] != 0.0) ys += h * kA[s][j] * k[static_cast<std::size_t>(j)];
      }
      k[static_cast<std::size_t>(s)] = rhs(spec, ys, options.collision_floor, t + kC[static_cast<std::size_t>(s)] * h);
    }
    Eigen::VectorXd y5 = y;
    Eigen::VectorXd err = Eigen::VectorXd::Zero(y.size());
    for (std::size_t s = 0; s < 7; ++s) {
      y5 += h * kB5[s] * k[s];
      err += h * (kB5[s] - kB4[s]) * k[s];
    }
    double err_norm = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale = options.tol + options.tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err_norm = std::max(err_norm, std::abs(err[i]) / scale);
    }
    if (err_norm <= 1.0) {
      t = last ? period : t + h;
      y = y5;
      k[0] = k[6];  // first-same-as-last
      ++traj.stats.steps;
      traj.times.push_back(t);
      traj.positions.push_back(y.head(n));
      traj.velocities.push_back(y.tail(n));
      traj.stats.min_radius_seen = std::min(traj.stats.min_radius_seen, y.head(n).norm());
      if (last) break;
    } else {
      ++traj.stats.rejected_steps;
    }
    const double factor = err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
    h *= err_norm <= 1.0 ? factor : std::min(1.0, factor);
    if (h < h_min) {
      std::ostringstream msg;
      const double r = y.head(n).norm();
      // Step collapse deep in the well is the approach to a collision.
      if (r < 1e-2 * q0.norm()) {
        msg << "step size collapsed near |q| = " << r << " at t = " << t;
        throw CollisionError(msg.str(), t);
      }
      msg << "step size underflow (h = " << h << ") at t = " << t;
      throw StepFailureError(msg.str());
    }
  }
  return traj;
}

VerificationReport verify_loop(const EnergyProblem& problem, const FourierLoop& loop, double period,
                               const VerificationTolerances& tol) {
  if (!(period > 0.0)) throw std::invalid_argument("period must be positive");
  if (tol.ode_samples < 1) throw std::invalid_argument("ode_samples must be >= 1");
  VerificationReport rep;
  std::vector<std::string> reasons;

  // ODE residual on the Fourier solution itself, with exact second derivatives.
  const double inv_t2 = 1.0 / (period * period);
  bool ode_singular = false;
  for (int j = 0; j < tol.ode_samples; ++j) {
    const double s = static_cast<double>(j) / tol.ode_samples;
    const Eigen::VectorXd u = evaluate(loop, s);
    if (!(u.norm() > problem.min_radius_floor)) {
      ode_singular = true;
      break;
    }
    const Eigen::VectorXd acc = evaluate_derivative(loop, s, 2) * inv_t2;
    rep.ode_residual = std::max(rep.ode_residual, (acc + potential_gradient(problem.potential, u)).norm());
  }
  if (ode_singular) {
    rep.ode_residual = std::numeric_limits<double>::infinity();
    reasons.push_back("loop touches the singular set");
  }

  const Eigen::VectorXd q0 = evaluate(loop, 0.0);
  const Eigen::VectorXd v0 = evaluate_derivative(loop, 0.0, 1) / period;
  bool integrated = false;
  if (q0.norm() > problem.min_radius_floor) {
    try {
      IntegratorOptions io = tol.integrator;
      io.collision_floor = std::max(io.collision_floor, problem.min_radius_floor);
      const Trajectory traj = integrate_orbit(problem.potential, q0, v0, period, io);
      rep.stats = traj.stats;
      for (std::size_t i = 0; i < traj.times.size(); ++i) {
        rep.energy_residual = std::max(
            rep.energy_residual, std::abs(orbit_energy(problem.potential, traj.positions[i], traj.velocities[i]) - problem.h));
      }
      rep.periodicity_residual = (traj.positions.back() - q0).norm() + (traj.velocities.back() - v0).norm();
      integrated = true;
    } catch (const CollisionError& e) {
      reasons.push_back(std::string("collision: ") + e.what());
    } catch (const StepFailureError& e) {
      reasons.push_back(std::string("integrator failure: ") + e.what());
    }
  } else {
    reasons.push_back("initial position inside the singularity floor");
  }
  if (!integrated) {
    rep.energy_residual = std::numeric_limits<double>::infinity();
    rep.periodicity_residual = std::numeric_limits<double>::infinity();
  }

  if (integrated && !(rep.energy_residual <= tol.energy)) reasons.push_back("energy residual above tolerance");
  if (integrated && !(rep.periodicity_residual <= tol.periodicity)) reasons.push_back("periodicity residual above tolerance");
  if (!ode_singular && !(rep.ode_residual <= tol.ode)) reasons.push_back("ODE residual above tolerance");
  rep.verdict = rep.energy_residual <= tol.energy && rep.periodicity_residual <= tol.periodicity &&
                rep.ode_residual <= tol.ode;
  for (std::size_t i = 0; i < reasons.size(); ++i) rep.reason += (i ? "; " : "") + reasons[i];
  return rep;
}

VerificationReport verify_solution(const EnergyProblem& problem, const OrbitSolution& solution,
                                   const VerificationTolerances& tolerances) {
  return verify_loop(problem, solution.loop, solution.period, tolerances);
}

void write_csv(std::ostream& out, const PotentialSpec& spec, const Trajectory& trajectory) {
  const int n = spec.dim();
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",q_" << i;
  for (int i = 1; i <= n; ++i) out << ",v_" << i;
  out << ",energy\n";
  const auto old_precision = out.precision(17);
  for (std::size_t j = 0; j < trajectory.times.size(); ++j) {
    out << trajectory.times[j];
    for (int i = 0; i < n; ++i) out << ',' << trajectory.positions[j][i];
    for (int i = 0; i < n; ++i) out << ',' << trajectory.velocities[j][i];
    out << ',' << orbit_energy(spec, trajectory.positions[j], trajectory.velocities[j]) << '\n';
  }
  out.precision(old_precision);
}

nlohmann::json to_json(const VerificationReport& r) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  return {{"energy_residual", num(r.energy_residual)},
          {"periodicity_residual", num(r.periodicity_residual)},
          {"ode_residual", num(r.ode_residual)},
          {"verdict", r.verdict},
          {"reason", r.reason},
          {"integrator",
           {{"steps", r.stats.steps},
            {"rejected_steps", r.stats.rejected_steps},
            {"min_radius_seen", r.stats.min_radius_seen}}}};
}

}  // namespace singorb
