#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "singorb/loop_space.hpp"
#include "singorb/potentials.hpp"

namespace singorb {

/// A fixed-energy problem: find T and a T-periodic q with q'' + grad V(q) = 0 and
/// |q'|^2 / 2 + V(q) = h.
struct EnergyProblem {
  PotentialSpec potential;
  double h = 0.5;
  int quadrature_nodes = 256;
  double min_radius_floor = 1e-6;

  int dim() const { return potential.dim(); }
  /// Throws std::invalid_argument unless the node count resolves `max_mode`.
  void validate(int max_mode) const;
};

/// Default quadrature node count for K modes: max(256, 8K).
int default_quadrature_nodes(int max_mode);

enum class PeriodMode { kFree, kConstrained };

struct OrbitSolution {
  FourierLoop loop{1, 1};  ///< unit-period critical loop
  double f_value = 0.0;
  double period = 0.0;
  Eigen::VectorXd initial_position;
  Eigen::VectorXd initial_velocity;
  GridLoop physical_samples;   ///< q(jT/M), j < M
  Eigen::MatrixXd velocities;  ///< q'(jT/M), n x M
  double radius_min = 0.0;
  double radius_mean = 0.0;
  double radius_max = 0.0;
};

/// Throws SingularityError when min_radius(loop) <= problem.min_radius_floor.
void require_clear_of_singularity(const EnergyProblem& problem, const FourierLoop& loop);
/// Throws SingularityError when the straight path from `from` to `to` brings some loop
/// point within the floor of the origin, or, in the plane, changes the winding number
/// about it. A step that jumps across the singular set is not a descent path.
void require_path_clear_of_singularity(const EnergyProblem& problem, const FourierLoop& from, const FourierLoop& to);

/// f(u) = 1/2 int |u'|^2 * int (h - V(u)).
double f_free(const EnergyProblem& problem, const FourierLoop& loop);
/// Coefficient-space gradient of f_free: <grad, v> = f'(u) v.
FourierLoop grad_f_free(const EnergyProblem& problem, const FourierLoop& loop);

/// g(u) = int (V(u) + 1/2 V'(u).u); the constraint manifold is {g = h}.
double constraint_g(const EnergyProblem& problem, const FourierLoop& loop);
FourierLoop grad_constraint_g(const EnergyProblem& problem, const FourierLoop& loop);

/// Scales the loop radially onto {g = h}. Throws ProjectionError when no scale in
/// [1e-6, 1e6] works.
FourierLoop project_to_F(const EnergyProblem& problem, const FourierLoop& loop);

/// f(u) = 1/4 int |u'|^2 * int V'(u).u.
double f_constrained(const EnergyProblem& problem, const FourierLoop& loop);
FourierLoop grad_f_constrained(const EnergyProblem& problem, const FourierLoop& loop);

/// f_free(y) - f_free(x), accumulated from coefficient and per-node differences so that
/// changes far below the rounding level of f itself stay resolved.
double f_free_change(const EnergyProblem& problem, const FourierLoop& x, const FourierLoop& y);
/// f_constrained(y) - f_constrained(x), computed like f_free_change.
double f_constrained_change(const EnergyProblem& problem, const FourierLoop& x, const FourierLoop& y);

/// Period from a unit-period critical loop. Free mode uses
/// 1/T^2 = int (h - V) / (1/2 int |u'|^2); constrained mode uses
/// 1/T^2 = int V'(u).u / int |u'|^2.
double period_from_loop(const EnergyProblem& problem, const FourierLoop& loop, PeriodMode mode);

/// Physical orbit q(t) = u(t/T) sampled on [0, T).
OrbitSolution rescale_to_solution(const EnergyProblem& problem, const FourierLoop& loop, double period);

/// Quadrature integrals of the potential terms along a loop.
struct LoopIntegrals {
  double kinetic = 0.0;   ///< int |u'|^2
  double potential = 0.0; ///< int V(u)
  double virial = 0.0;    ///< int V'(u).u
};
LoopIntegrals loop_integrals(const EnergyProblem& problem, const FourierLoop& loop);

nlohmann::json to_json(const OrbitSolution& solution);

}  // namespace singorb
