#include "singorb/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "singorb/errors.hpp"

namespace singorb {

namespace {

struct NodeData {
  Eigen::MatrixXd points;  // n x M
  Eigen::VectorXd radii;
};

NodeData sample_nodes(const EnergyProblem& problem, const FourierLoop& loop) {
  problem.validate(loop.max_mode());
  if (loop.dim() != problem.dim()) throw std::invalid_argument("loop dimension differs from potential dimension");
  require_clear_of_singularity(problem, loop);
  NodeData d;
  d.points = synthesize(loop, TrigTable::cached(problem.quadrature_nodes, loop.max_mode()));
  d.radii = d.points.colwise().norm().transpose();
  return d;
}

// Winding number about the origin of a closed planar polygon given by its nodes.
long winding_number(const Eigen::MatrixXd& nodes) {
  double turn = 0.0;
  const auto m = nodes.cols();
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Vector2d p = nodes.col(j).head<2>();
    const Eigen::Vector2d q = nodes.col((j + 1) % m).head<2>();
    turn += std::atan2(p.x() * q.y() - p.y() * q.x(), p.dot(q));
  }
  return std::lround(turn / (2.0 * std::numbers::pi));
}

// Projects per-node vectors G (n x M) onto the Fourier basis with trapezoidal weights:
// returns the coefficient gradient of u -> (1/M) sum_j G_j . u(t_j).
FourierLoop analyze(const Eigen::MatrixXd& per_node, int max_mode) {
  const auto m = static_cast<int>(per_node.cols());
  const TrigTable& table = TrigTable::cached(m, max_mode);
  const double w = 1.0 / m;
  return FourierLoop(w * per_node.rowwise().sum(), w * per_node * table.cos().transpose(),
                     w * per_node * table.sin().transpose());
}

// Gradient of the kinetic integral: d/da_k = 4 pi^2 k^2 a_k.
FourierLoop kinetic_gradient(const FourierLoop& loop) {
  FourierLoop g(loop.dim(), loop.max_mode());
  const double four_pi2 = 4.0 * std::numbers::pi * std::numbers::pi;
  for (int k = 1; k <= loop.max_mode(); ++k) {
    g.cos_mode(k) = four_pi2 * k * k * loop.cos_mode(k);
    g.sin_mode(k) = four_pi2 * k * k * loop.sin_mode(k);
  }
  return g;
}

// Per-node scale s(r) such that the gradient field equals s(r) x.
template <typename Fn>
Eigen::MatrixXd radial_field(const NodeData& d, Fn&& scale) {
  Eigen::MatrixXd out = d.points;
  for (Eigen::Index j = 0; j < out.cols(); ++j) out.col(j) *= scale(d.radii[j]);
  return out;
}

double gradient_scale(const PotentialSpec& spec, double r) {
  double s = 0.0;
  for (const auto& t : spec.terms()) s += t.coefficient * t.exponent * std::pow(r, -t.exponent - 2.0);
  return s;
}

double virial_gradient_scale(const PotentialSpec& spec, double r) {
  double s = 0.0;
  for (const auto& t : spec.terms()) s -= t.coefficient * t.exponent * t.exponent * std::pow(r, -t.exponent - 2.0);
  return s;
}

}  // namespace

void EnergyProblem::validate(int max_mode) const {
  if (quadrature_nodes < 2 * max_mode + 1) {
    throw std::invalid_argument("quadrature nodes must be at least 2K+1");
  }
  if (!(min_radius_floor > 0.0)) throw std::invalid_argument("min_radius_floor must be positive");
  if (!std::isfinite(h)) throw std::invalid_argument("energy h must be finite");
}

int default_quadrature_nodes(int max_mode) { return std::max(256, 8 * max_mode); }

void require_clear_of_singularity(const EnergyProblem& problem, const FourierLoop& loop) {
  const double r = min_radius(loop);
  if (!(r > problem.min_radius_floor)) {
    std::ostringstream msg;
    msg << "loop reaches radius " << r << " <= floor " << problem.min_radius_floor;
    throw SingularityError(msg.str());
  }
}

void require_path_clear_of_singularity(const EnergyProblem& problem, const FourierLoop& from, const FourierLoop& to) {
  require_clear_of_singularity(problem, to);
  const int m = refined_grid_size(std::max(from.max_mode(), to.max_mode()));
  const Eigen::MatrixXd a = to_grid(from, m).nodes;
  const Eigen::MatrixXd b = to_grid(to, m).nodes;
  // Closest approach of each node's straight segment a_j -> b_j to the origin.
  for (int j = 0; j < m; ++j) {
    const Eigen::VectorXd d = b.col(j) - a.col(j);
    const double dd = d.squaredNorm();
    const double s = dd > 0.0 ? std::clamp(-a.col(j).dot(d) / dd, 0.0, 1.0) : 0.0;
    const double r = (a.col(j) + s * d).norm();
    if (!(r > problem.min_radius_floor)) {
      std::ostringstream msg;
      msg << "step passes within " << r << " of the singularity at node " << j;
      throw SingularityError(msg.str());
    }
  }
  // In the plane, a change of winding number means the sweep crossed the origin.
  if (problem.dim() == 2 && winding_number(a) != winding_number(b)) {
    throw SingularityError("step changes the winding number about the singularity");
  }
}

LoopIntegrals loop_integrals(const EnergyProblem& problem, const FourierLoop& loop) {
  const NodeData d = sample_nodes(problem, loop);
  LoopIntegrals out;
  out.kinetic = kinetic_integral(loop);
  double v = 0.0, w = 0.0;
  for (Eigen::Index j = 0; j < d.radii.size(); ++j) {
    v += problem.potential.radial_value(d.radii[j]);
    w += problem.potential.radial_virial(d.radii[j]);
  }
  out.potential = v / static_cast<double>(d.radii.size());
  out.virial = w / static_cast<double>(d.radii.size());
  return out;
}

double f_free(const EnergyProblem& problem, const FourierLoop& loop) {
  const LoopIntegrals in = loop_integrals(problem, loop);
  return 0.5 * in.kinetic * (problem.h - in.potential);
}

FourierLoop grad_f_free(const EnergyProblem& problem, const FourierLoop& loop) {
  const NodeData d = sample_nodes(problem, loop);
  const double kinetic = kinetic_integral(loop);
  double v = 0.0;
  for (Eigen::Index j = 0; j < d.radii.size(); ++j) v += problem.potential.radial_value(d.radii[j]);
  const double energy_gap = problem.h - v / static_cast<double>(d.radii.size());

  // f'(u) v = int u'.v' * int (h - V) - 1/2 int |u'|^2 * int V'(u).v
  FourierLoop grad = kinetic_gradient(loop);
  grad *= 0.5 * energy_gap;
  FourierLoop pot = analyze(radial_field(d, [&](double r) { return gradient_scale(problem.potential, r); }),
                            loop.max_mode());
  pot *= -0.5 * kinetic;
  grad += pot;
  return grad;
}

double constraint_g(const EnergyProblem& problem, const FourierLoop& loop) {
  const LoopIntegrals in = loop_integrals(problem, loop);
  return in.potential + 0.5 * in.virial;
}

FourierLoop grad_constraint_g(const EnergyProblem& problem, const FourierLoop& loop) {
  const NodeData d = sample_nodes(problem, loop);
  return analyze(radial_field(d,
                              [&](double r) {
                                return gradient_scale(problem.potential, r) +
                                       0.5 * virial_gradient_scale(problem.potential, r);
                              }),
                 loop.max_mode());
}

FourierLoop project_to_F(const EnergyProblem& problem, const FourierLoop& loop) {
  if (!(problem.h > 0.0)) throw ProjectionError("projection onto the constraint manifold needs h > 0");
  const NodeData d = sample_nodes(problem, loop);
  const auto m = static_cast<double>(d.radii.size());
  const auto& terms = problem.potential.terms();

  // g(lambda u) = sum_i c_i lambda^(-alpha_i), c_i = (alpha_i/2 - 1) int a_i |u|^(-alpha_i).
  std::vector<double> c(terms.size(), 0.0);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < d.radii.size(); ++j) s += terms[i].coefficient * std::pow(d.radii[j], -terms[i].exponent);
    c[i] = (terms[i].exponent / 2.0 - 1.0) * s / m;
  }
  auto g_of = [&](double log_lambda) {
    double g = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) g += c[i] * std::exp(-terms[i].exponent * log_lambda);
    return g;
  };
  const double g0 = g_of(0.0);
  if (!(g0 > 0.0)) throw ProjectionError("constraint integral g(u) is not positive; no scaling reaches h > 0");

  double log_lambda = 0.0;
  if (terms.size() == 1) {
    log_lambda = std::log(g0 / problem.h) / terms[0].exponent;
  } else {
    // Bracket a sign change of g - h on a log grid over [1e-6, 1e6], then bisect.
    const double lo_bound = std::log(1e-6);
    const double hi_bound = std::log(1e6);
    constexpr int kScan = 240;
    double lo = lo_bound;
    double f_lo = g_of(lo) - problem.h;
    bool bracketed = false;
    double hi = lo;
    for (int i = 1; i <= kScan; ++i) {
      hi = lo_bound + (hi_bound - lo_bound) * i / kScan;
      const double f_hi = g_of(hi) - problem.h;
      if ((f_lo > 0.0) != (f_hi > 0.0) || f_hi == 0.0) {
        bracketed = true;
        break;
      }
      lo = hi;
      f_lo = f_hi;
    }
    if (!bracketed) throw ProjectionError("g(lambda u) = h has no root for lambda in [1e-6, 1e6]");
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double f_mid = g_of(mid) - problem.h;
      if ((f_mid > 0.0) == (f_lo > 0.0)) {
        lo = mid;
        f_lo = f_mid;
      } else {
        hi = mid;
      }
    }
    log_lambda = 0.5 * (lo + hi);
  }
  const double lambda = std::exp(log_lambda);
  if (!(lambda >= 1e-6 && lambda <= 1e6)) {
    throw ProjectionError("required scaling lies outside [1e-6, 1e6]");
  }
  return lambda * loop;
}

double f_constrained(const EnergyProblem& problem, const FourierLoop& loop) {
  const LoopIntegrals in = loop_integrals(problem, loop);
  return 0.25 * in.kinetic * in.virial;
}

FourierLoop grad_f_constrained(const EnergyProblem& problem, const FourierLoop& loop) {
  const NodeData d = sample_nodes(problem, loop);
  const double kinetic = kinetic_integral(loop);
  double w = 0.0;
  for (Eigen::Index j = 0; j < d.radii.size(); ++j) w += problem.potential.radial_virial(d.radii[j]);
  w /= static_cast<double>(d.radii.size());

  FourierLoop grad = kinetic_gradient(loop);
  grad *= 0.25 * w;
  FourierLoop vir = analyze(radial_field(d, [&](double r) { return virial_gradient_scale(problem.potential, r); }),
                            loop.max_mode());
  vir *= 0.25 * kinetic;
  grad += vir;
  return grad;
}

namespace {

struct IntegralChanges {
  double kinetic_before = 0.0;
  double kinetic_change = 0.0;
  LoopIntegrals before;
  double potential_change = 0.0;
  double virial_change = 0.0;
};

// Differences of the loop integrals between x and y = x + delta. Per node,
// |u + d| - |u| = (2 u.d + |d|^2) / (|u + d| + |u|) and
// r'^(-alpha) - r^(-alpha) = r^(-alpha) expm1(-alpha log1p(dr / r)).
IntegralChanges integral_changes(const EnergyProblem& problem, const FourierLoop& x, const FourierLoop& y) {
  require_clear_of_singularity(problem, y);
  const FourierLoop delta = y - x;
  IntegralChanges c;
  c.before = loop_integrals(problem, x);
  c.kinetic_before = c.before.kinetic;
  double dk = 0.0;
  for (int k = 1; k <= x.max_mode(); ++k) {
    dk += static_cast<double>(k) * k *
          (2.0 * x.cos_mode(k).dot(delta.cos_mode(k)) + delta.cos_mode(k).squaredNorm() +
           2.0 * x.sin_mode(k).dot(delta.sin_mode(k)) + delta.sin_mode(k).squaredNorm());
  }
  c.kinetic_change = 2.0 * std::numbers::pi * std::numbers::pi * dk;

  const TrigTable& table = TrigTable::cached(problem.quadrature_nodes, x.max_mode());
  const Eigen::MatrixXd u = synthesize(x, table);
  const Eigen::MatrixXd d = synthesize(delta, table);
  double dv = 0.0, dw = 0.0;
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    const double r = u.col(j).norm();
    const double r_new = (u.col(j) + d.col(j)).norm();
    const double dr = (2.0 * u.col(j).dot(d.col(j)) + d.col(j).squaredNorm()) / (r + r_new);
    const double log_ratio = std::log1p(dr / r);
    for (const auto& t : problem.potential.terms()) {
      const double change = t.coefficient * std::pow(r, -t.exponent) * std::expm1(-t.exponent * log_ratio);
      dv -= change;
      dw += t.exponent * change;
    }
  }
  c.potential_change = dv / static_cast<double>(u.cols());
  c.virial_change = dw / static_cast<double>(u.cols());
  return c;
}

}  // namespace

double f_free_change(const EnergyProblem& problem, const FourierLoop& x, const FourierLoop& y) {
  const IntegralChanges c = integral_changes(problem, x, y);
  const double gap_after = problem.h - (c.before.potential + c.potential_change);
  return 0.5 * (c.kinetic_change * gap_after - c.kinetic_before * c.potential_change);
}

double f_constrained_change(const EnergyProblem& problem, const FourierLoop& x, const FourierLoop& y) {
  const IntegralChanges c = integral_changes(problem, x, y);
  const double virial_after = c.before.virial + c.virial_change;
  return 0.25 * (c.kinetic_change * virial_after + c.kinetic_before * c.virial_change);
}

double period_from_loop(const EnergyProblem& problem, const FourierLoop& loop, PeriodMode mode) {
  const LoopIntegrals in = loop_integrals(problem, loop);
  if (!(in.kinetic > 1e-14)) throw DegenerateLoopError("kinetic integral vanishes; loop is constant");
  const double numerator = mode == PeriodMode::kFree ? problem.h - in.potential : in.virial;
  const double denominator = mode == PeriodMode::kFree ? 0.5 * in.kinetic : in.kinetic;
  if (!(numerator > 0.0)) {
    std::ostringstream msg;
    msg << "period formula numerator " << numerator << " is not positive";
    throw NegativeRateError(msg.str());
  }
  return std::sqrt(denominator / numerator);
}

OrbitSolution rescale_to_solution(const EnergyProblem& problem, const FourierLoop& loop, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("period must be positive");
  problem.validate(loop.max_mode());
  const TrigTable& table = TrigTable::cached(problem.quadrature_nodes, loop.max_mode());
  OrbitSolution s{loop, 0.0, period, {}, {}, {}, {}, 0.0, 0.0, 0.0};
  s.physical_samples.nodes = synthesize(loop, table, 0);
  s.velocities = synthesize(loop, table, 1) / period;
  s.initial_position = s.physical_samples.nodes.col(0);
  s.initial_velocity = evaluate_derivative(loop, 0.0, 1) / period;
  const Eigen::VectorXd radii = s.physical_samples.nodes.colwise().norm().transpose();
  s.radius_mean = radii.mean();
  s.radius_max = sup_norm(loop);
  s.radius_min = min_radius(loop);
  if (s.radius_min > problem.min_radius_floor) s.f_value = f_free(problem, loop);
  return s;
}

nlohmann::json to_json(const OrbitSolution& s) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"f_value", s.f_value},
          {"period", s.period},
          {"initial_position", vec(s.initial_position)},
          {"initial_velocity", vec(s.initial_velocity)},
          {"radius", {{"min", s.radius_min}, {"mean", s.radius_mean}, {"max", s.radius_max}}},
          {"loop", to_json(s.loop)}};
}

}  // namespace singorb
