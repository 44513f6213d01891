#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "singorb/functionals.hpp"
#include "singorb/potentials.hpp"

namespace singorb {

struct IntegratorStats {
  int steps = 0;
  int rejected_steps = 0;
  double min_radius_seen = 0.0;
};

/// Accepted states of q'' = -grad V(q) on [0, T].
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> positions;
  std::vector<Eigen::VectorXd> velocities;
  IntegratorStats stats;
};

struct IntegratorOptions {
  double tol = 1e-10;             ///< absolute and relative
  double collision_floor = 1e-6;  ///< |q| below this aborts with CollisionError
  long max_steps = 10'000'000;
};

/// Dormand-Prince 5(4) integration from (q0, v0) over [0, T]. Takes no loop data, so it
/// serves as an independent check of variational solutions.
Trajectory integrate_orbit(const PotentialSpec& spec, const Eigen::VectorXd& q0, const Eigen::VectorXd& v0,
                           double period, const IntegratorOptions& options = {});

struct VerificationTolerances {
  double energy = 1e-6;
  double periodicity = 1e-4;
  double ode = 1e-4;
  int ode_samples = 400;
  IntegratorOptions integrator;
};

struct VerificationReport {
  double energy_residual = 0.0;       ///< max_t | |q'|^2/2 + V(q) - h |
  double periodicity_residual = 0.0;  ///< |q(T) - q(0)| + |q'(T) - q'(0)|
  double ode_residual = 0.0;          ///< max | u''(t/T)/T^2 + grad V(u(t/T)) |
  bool verdict = false;
  std::string reason;
  IntegratorStats stats;
};

VerificationReport verify_solution(const EnergyProblem& problem, const OrbitSolution& solution,
                                   const VerificationTolerances& tolerances = {});

/// Verification for a bare (loop, T) pair.
VerificationReport verify_loop(const EnergyProblem& problem, const FourierLoop& loop, double period,
                               const VerificationTolerances& tolerances = {});

double orbit_energy(const PotentialSpec& spec, const Eigen::VectorXd& q, const Eigen::VectorXd& v);

/// CSV columns t, q_1..q_n, v_1..v_n, energy.
void write_csv(std::ostream& out, const PotentialSpec& spec, const Trajectory& trajectory);

nlohmann::json to_json(const VerificationReport& report);

}  // namespace singorb
