#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <vector>

#include "singorb/functionals.hpp"

namespace singorb {

struct SolverOptions {
  int max_iters = 5000;
  double grad_tol = 1e-8;        ///< on the preconditioned gradient norm
  double armijo = 1e-4;          ///< sufficient-decrease constant
  double shrink = 0.5;
  int max_backtracks = 60;
  double initial_step = 1.0;
  int restarts = 8;
  int modes = 32;                ///< K
  std::uint64_t rng_seed = 0;
  bool parallel = true;          ///< one worker per start
  bool record_trace = true;

  void validate() const;
};

enum class Route { kFree, kConstrained };

struct TraceRow {
  int iteration = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  double constraint_residual = 0.0;  ///< |g - h|, constrained route only
};

struct StartOutcome {
  double f_value = 0.0;
  bool converged = false;
  bool feasible = true;  ///< false when no start loop cleared the singularity floor
  int iterations = 0;
  int singular_rejections = 0;  ///< trial steps rejected at the radius floor
  double grad_norm = 0.0;
  double max_constraint_residual = 0.0;
  bool monotone = true;  ///< accepted objective values never increased
  FourierLoop loop{1, 1};
  std::vector<TraceRow> trace;
};

struct MinimizeResult {
  Route route = Route::kFree;
  OrbitSolution best;
  std::vector<StartOutcome> all_starts;
  double infimum_estimate = 0.0;
  int best_start = -1;
};

/// Critical radius ((alpha - 2) / (2 h a))^(1/alpha) of the circular orbit for a single
/// term with alpha > 2 and h > 0; nullopt otherwise.
std::optional<double> critical_radius(const EnergyProblem& problem);

/// Random antisymmetric start (odd harmonics 1 and 3) for the given start index.
FourierLoop random_start(const EnergyProblem& problem, const SolverOptions& options, int start_index);

/// Preconditioned gradient descent on f_free over antisymmetric loops from `start`.
StartOutcome descend_free(const EnergyProblem& problem, const SolverOptions& options, const FourierLoop& start);
/// Descent on f_constrained over antisymmetric loops of the constraint manifold; every
/// accepted iterate is rescaled onto it.
StartOutcome descend_on_F(const EnergyProblem& problem, const SolverOptions& options, const FourierLoop& start);

/// Multistart minimization of f_free. Throws NoConvergenceError if no start converges.
MinimizeResult minimize_free(const EnergyProblem& problem, const SolverOptions& options);
/// Multistart minimization of f_constrained on the constraint manifold.
MinimizeResult minimize_on_F(const EnergyProblem& problem, const SolverOptions& options);

/// Probe-based check of the linking geometry f|_S > f|_dQ for the saddle-point route.
struct SaddleCertificate {
  double R = 0.0;
  double delta = 0.0;
  double beta = 0.0;
  double h = 0.0;
  double m_R = 0.0;    ///< smallest modulus over probe loops
  double M_R = 0.0;    ///< R (1 + 12^(-1/2))
  double B_R = 0.0;    ///< max |V| on m_R <= |x| <= M_R
  double lower_S = 0.0;
  double upper_Q = 0.0;
  bool separated = false;
  int probe_count = 0;
  int constant_count = 0;
  double max_probe_f = 0.0;     ///< largest f_free over probe loops
  double max_constant_f = 0.0;  ///< largest f_free over constant loops
  bool probes_within_bound = false;  ///< every probe/constant value <= upper_Q
};

SaddleCertificate saddle_certificate(const EnergyProblem& problem, double R, double beta, int probe_count,
                                     std::uint64_t seed = 0, int constant_count = 50);

nlohmann::json to_json(const StartOutcome& start);
nlohmann::json to_json(const SaddleCertificate& cert);

}  // namespace singorb
