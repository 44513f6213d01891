#include "singorb/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "singorb/errors.hpp"

namespace singorb {

namespace {

FourierLoop precondition(const FourierLoop& g) {
  FourierLoop out = g;
  for (int k = 1; k <= g.max_mode(); ++k) {
    const double w = 1.0 / (1.0 + static_cast<double>(k) * k);
    out.cos_mode(k) *= w;
    out.sin_mode(k) *= w;
  }
  return out;
}

std::mt19937_64 start_rng(std::uint64_t seed, int start_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(start_index), 0x5eedu};
  return std::mt19937_64(seq);
}

Eigen::VectorXd gaussian_vector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

StartOutcome descend(const EnergyProblem& problem, const SolverOptions& options, const FourierLoop& start,
                     Route route) {
  options.validate();
  const bool constrained = route == Route::kConstrained;
  auto objective = [&](const FourierLoop& u) {
    return constrained ? f_constrained(problem, u) : f_free(problem, u);
  };
  // f_constrained = f_free on F, and f_free is stationary under radial scaling there, so
  // f_free measures progress in both routes without picking up projection rounding.
  auto change = [&](const FourierLoop& from, const FourierLoop& to) { return f_free_change(problem, from, to); };
  auto retract = [&](const FourierLoop& u) { return constrained ? project_to_F(problem, u) : u; };

  StartOutcome out;
  FourierLoop x = project_antisymmetric(start);
  double f = 0.0;
  try {
    x = retract(x);
    f = objective(x);
  } catch (const SingularityError&) {
    out.feasible = false;
  } catch (const ProjectionError&) {
    out.feasible = false;
  }
  out.loop = x;
  if (!out.feasible || !std::isfinite(f)) {
    out.feasible = false;
    out.f_value = std::numeric_limits<double>::infinity();
    return out;
  }

  auto residual = [&](const FourierLoop& u) {
    return constrained ? std::abs(constraint_g(problem, u) - problem.h) : 0.0;
  };
  double current_residual = residual(x);
  out.max_constraint_residual = current_residual;

  double step = options.initial_step;
  double last_step = 0.0;
  int iter = 0;
  for (;; ++iter) {
    const FourierLoop grad = project_antisymmetric(constrained ? grad_f_constrained(problem, x) : grad_f_free(problem, x));
    FourierLoop dir = precondition(grad);
    if (constrained) {
      // Remove the normal component in the preconditioned metric.
      const FourierLoop normal = project_antisymmetric(grad_constraint_g(problem, x));
      const FourierLoop p_normal = precondition(normal);
      const double nn = coefficient_dot(normal, p_normal);
      if (nn > 0.0) dir -= (coefficient_dot(grad, p_normal) / nn) * p_normal;
    }
    dir *= -1.0;
    const double slope = coefficient_dot(grad, dir);
    const double gnorm = std::sqrt(std::max(0.0, -slope));
    out.grad_norm = gnorm;
    if (options.record_trace) out.trace.push_back({iter, f, gnorm, last_step, current_residual});
    if (gnorm <= options.grad_tol) {
      out.converged = true;
      break;
    }
    if (iter >= options.max_iters) break;

    bool accepted = false;
    double t = step;
    int attempt = 0;
    FourierLoop trial = x;
    double df = 0.0;
    for (; attempt < options.max_backtracks; ++attempt, t *= options.shrink) {
      try {
        trial = retract(x + t * dir);
        require_path_clear_of_singularity(problem, x, trial);
        df = change(x, trial);
      } catch (const SingularityError&) {
        ++out.singular_rejections;
        continue;
      } catch (const ProjectionError&) {
        continue;
      }
      if (!std::isfinite(df)) continue;
      if (df <= options.armijo * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    if (df > 0.0) out.monotone = false;
    x = std::move(trial);
    // Tracked by accumulating differences; a fresh evaluation cannot resolve them.
    f += df;
    last_step = t;
    if (constrained) {
      current_residual = residual(x);
      out.max_constraint_residual = std::max(out.max_constraint_residual, current_residual);
    }
    step = attempt == 0 ? t / options.shrink : t;
  }
  out.iterations = iter;
  out.f_value = objective(x);
  out.loop = std::move(x);
  return out;
}

MinimizeResult minimize(const EnergyProblem& problem, const SolverOptions& options, Route route) {
  options.validate();
  problem.validate(options.modes);
  auto run = [&problem, &options, route](int index) {
    const FourierLoop start = random_start(problem, options, index);
    return descend(problem, options, start, route);
  };

  MinimizeResult result;
  result.route = route;
  result.all_starts.resize(static_cast<std::size_t>(options.restarts));
  if (options.parallel && options.restarts > 1) {
    std::vector<std::future<StartOutcome>> jobs;
    jobs.reserve(static_cast<std::size_t>(options.restarts));
    for (int i = 0; i < options.restarts; ++i) jobs.push_back(std::async(std::launch::async, run, i));
    for (int i = 0; i < options.restarts; ++i) result.all_starts[static_cast<std::size_t>(i)] = jobs[static_cast<std::size_t>(i)].get();
  } else {
    for (int i = 0; i < options.restarts; ++i) result.all_starts[static_cast<std::size_t>(i)] = run(i);
  }

  result.infimum_estimate = std::numeric_limits<double>::infinity();
  for (int i = 0; i < options.restarts; ++i) {
    const auto& s = result.all_starts[static_cast<std::size_t>(i)];
    if (s.feasible) result.infimum_estimate = std::min(result.infimum_estimate, s.f_value);
    if (s.converged && s.f_value > 0.0 &&
        (result.best_start < 0 || s.f_value < result.all_starts[static_cast<std::size_t>(result.best_start)].f_value)) {
      result.best_start = i;
    }
  }
  if (result.best_start < 0) {
    int feasible = 0;
    for (const auto& s : result.all_starts) feasible += s.feasible ? 1 : 0;
    std::ostringstream msg;
    msg << "no start converged (" << feasible << " of " << options.restarts << " starts cleared the radius floor "
        << problem.min_radius_floor << ")";
    throw NoConvergenceError(msg.str());
  }
  const StartOutcome& best = result.all_starts[static_cast<std::size_t>(result.best_start)];
  const double period =
      period_from_loop(problem, best.loop, route == Route::kFree ? PeriodMode::kFree : PeriodMode::kConstrained);
  result.best = rescale_to_solution(problem, best.loop, period);
  result.best.f_value = best.f_value;
  return result;
}

// Largest |V| over the shell m <= |x| <= M.
double max_abs_potential(const PotentialSpec& spec, double m, double big_m) {
  constexpr int kSamples = 2001;
  double best = std::max(std::abs(spec.radial_value(m)), std::abs(spec.radial_value(big_m)));
  const double lm = std::log(m);
  const double lM = std::log(big_m);
  for (int i = 1; i < kSamples - 1; ++i) {
    best = std::max(best, std::abs(spec.radial_value(std::exp(lm + (lM - lm) * i / (kSamples - 1)))));
  }
  return best;
}

}  // namespace

void SolverOptions::validate() const {
  if (max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("grad_tol must be positive");
  if (!(armijo > 0.0 && armijo < 1.0)) throw std::invalid_argument("armijo constant must lie in (0, 1)");
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("shrink must lie in (0, 1)");
  if (max_backtracks < 1) throw std::invalid_argument("max_backtracks must be >= 1");
  if (!(initial_step > 0.0)) throw std::invalid_argument("initial_step must be positive");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  if (modes < 1) throw std::invalid_argument("modes must be >= 1");
}

std::optional<double> critical_radius(const EnergyProblem& problem) {
  if (problem.potential.terms().size() != 1 || !(problem.h > 0.0)) return std::nullopt;
  const PowerTerm& t = problem.potential.terms().front();
  if (!(t.exponent > 2.0)) return std::nullopt;
  return std::pow((t.exponent - 2.0) / (2.0 * problem.h * t.coefficient), 1.0 / t.exponent);
}

FourierLoop random_start(const EnergyProblem& problem, const SolverOptions& options, int start_index) {
  const int n = problem.dim();
  const int modes = options.modes;
  const double r_star = critical_radius(problem).value_or(1.0);
  std::mt19937_64 rng = start_rng(options.rng_seed, start_index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  FourierLoop loop(n, modes);
  constexpr int kAttempts = 50;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    const double radius = r_star * std::pow(4.0, 2.0 * unit(rng) - 1.0);
    const double phase = 2.0 * std::numbers::pi * unit(rng);
    Eigen::VectorXd e1 = gaussian_vector(rng, n).normalized();
    Eigen::VectorXd e2 = Eigen::VectorXd::Zero(n);
    if (n > 1) {
      e2 = gaussian_vector(rng, n);
      e2 -= e2.dot(e1) * e1;
      e2.normalize();
    }
    loop = FourierLoop(n, modes);
    loop.cos_mode(1) = radius * (std::cos(phase) * e1 + std::sin(phase) * e2);
    loop.sin_mode(1) = radius * (-std::sin(phase) * e1 + std::cos(phase) * e2);
    loop.cos_mode(1) += 0.15 * radius * gaussian_vector(rng, n) / std::sqrt(static_cast<double>(n));
    loop.sin_mode(1) += 0.15 * radius * gaussian_vector(rng, n) / std::sqrt(static_cast<double>(n));
    if (modes >= 3) {
      loop.cos_mode(3) = 0.1 * radius * gaussian_vector(rng, n) / std::sqrt(static_cast<double>(n));
      loop.sin_mode(3) = 0.1 * radius * gaussian_vector(rng, n) / std::sqrt(static_cast<double>(n));
    }
    if (min_radius(loop) > 10.0 * problem.min_radius_floor) break;
  }
  return loop;
}

StartOutcome descend_free(const EnergyProblem& problem, const SolverOptions& options, const FourierLoop& start) {
  return descend(problem, options, start, Route::kFree);
}

StartOutcome descend_on_F(const EnergyProblem& problem, const SolverOptions& options, const FourierLoop& start) {
  return descend(problem, options, start, Route::kConstrained);
}

MinimizeResult minimize_free(const EnergyProblem& problem, const SolverOptions& options) {
  return minimize(problem, options, Route::kFree);
}

MinimizeResult minimize_on_F(const EnergyProblem& problem, const SolverOptions& options) {
  return minimize(problem, options, Route::kConstrained);
}

SaddleCertificate saddle_certificate(const EnergyProblem& problem, double R, double beta, int probe_count,
                                     std::uint64_t seed, int constant_count) {
  if (!(R > 0.0)) throw std::invalid_argument("certificate needs R > 0");
  if (!(beta > 2.0)) throw std::invalid_argument("certificate needs beta > 2");
  if (!(problem.h > 0.0)) throw std::invalid_argument("certificate needs h > 0");
  if (probe_count < 1 || constant_count < 0) throw std::invalid_argument("certificate needs probe_count >= 1");
  constexpr int kProbeModes = 3;
  const int n = problem.dim();

  SaddleCertificate c;
  c.R = R;
  c.beta = beta;
  c.h = problem.h;
  c.probe_count = probe_count;
  c.constant_count = constant_count;
  c.M_R = R * (1.0 + 1.0 / std::sqrt(12.0));

  std::mt19937_64 rng = start_rng(seed, -1);
  std::vector<FourierLoop> probes;
  probes.reserve(static_cast<std::size_t>(probe_count));
  c.m_R = std::numeric_limits<double>::infinity();
  for (int p = 0; p < probe_count; ++p) {
    // e: zero-mean with unit kinetic integral; (u1, s) on the radius-R sphere with s > 0.
    FourierLoop e(n, kProbeModes);
    for (int k = 1; k <= kProbeModes; ++k) {
      e.cos_mode(k) = gaussian_vector(rng, n) / k;
      e.sin_mode(k) = gaussian_vector(rng, n) / k;
    }
    e *= 1.0 / std::sqrt(kinetic_integral(e));
    Eigen::VectorXd z = gaussian_vector(rng, n + 1);
    z *= R / z.norm();
    const double s = std::abs(z[n]);
    FourierLoop probe = s * e;
    probe.mean() = z.head(n);
    c.m_R = std::min(c.m_R, min_radius(probe));
    probes.push_back(std::move(probe));
  }
  if (!(c.m_R > problem.min_radius_floor)) {
    std::ostringstream msg;
    msg << "probe family reaches radius " << c.m_R << " <= floor " << problem.min_radius_floor;
    throw DegenerateCertificateError(msg.str());
  }

  c.B_R = max_abs_potential(problem.potential, c.m_R, c.M_R);
  const double delta_max = std::pow(std::pow(12.0, -beta / 2.0) * R * R * (problem.h + c.B_R), 1.0 / (2.0 - beta));
  c.delta = std::min(R / 2.0, delta_max / 2.0);
  c.lower_S = 0.5 * std::pow(12.0, beta / 2.0) * std::pow(c.delta, 2.0 - beta);
  c.upper_Q = 0.5 * problem.h * R * R + 0.5 * R * R * c.B_R;
  c.separated = c.lower_S > c.upper_Q;

  c.max_probe_f = -std::numeric_limits<double>::infinity();
  for (const auto& probe : probes) c.max_probe_f = std::max(c.max_probe_f, f_free(problem, probe));

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r_lo = std::min(R, 10.0 * problem.min_radius_floor);
  c.max_constant_f = constant_count > 0 ? -std::numeric_limits<double>::infinity() : 0.0;
  for (int i = 0; i < constant_count; ++i) {
    FourierLoop constant(n, kProbeModes);
    const double radius = r_lo + (R - r_lo) * std::pow(unit(rng), 1.0 / n);
    constant.mean() = radius * gaussian_vector(rng, n).normalized();
    c.max_constant_f = std::max(c.max_constant_f, f_free(problem, constant));
  }
  const double bound = c.upper_Q * (1.0 + 1e-12);
  c.probes_within_bound = c.max_probe_f <= bound && c.max_constant_f <= bound;
  return c;
}

nlohmann::json to_json(const StartOutcome& s) {
  return {{"f_value", s.feasible ? nlohmann::json(s.f_value) : nlohmann::json(nullptr)},
          {"converged", s.converged},
          {"feasible", s.feasible},
          {"iterations", s.iterations},
          {"grad_norm", s.grad_norm},
          {"singular_rejections", s.singular_rejections},
          {"max_constraint_residual", s.max_constraint_residual}};
}

nlohmann::json to_json(const SaddleCertificate& c) {
  return {{"R", c.R},
          {"delta", c.delta},
          {"beta", c.beta},
          {"h", c.h},
          {"m_R", c.m_R},
          {"M_R", c.M_R},
          {"B_R", c.B_R},
          {"lower_S", c.lower_S},
          {"upper_Q", c.upper_Q},
          {"separated", c.separated},
          {"probe_count", c.probe_count},
          {"constant_count", c.constant_count},
          {"max_probe_f", c.max_probe_f},
          {"max_constant_f", c.max_constant_f},
          {"probes_within_bound", c.probes_within_bound},
          {"scope", "probe certificate"}};
}

}  // namespace singorb
