#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "singorb/functionals.hpp"
#include "singorb/optimizer.hpp"
#include "singorb/potentials.hpp"
#include "singorb/verifier.hpp"

namespace singorb {

enum class RouteChoice { kFree, kConstrained, kBoth };

/// Everything a `solve`, `audit` or `verify` run needs, read from a key = value file.
struct RunConfig {
  std::vector<PowerTerm> terms;
  int dim = 2;
  double h = 0.0;
  RouteChoice route = RouteChoice::kFree;
  int quadrature = 0;  ///< 0 selects max(256, 8K)
  double min_radius_floor = 1e-6;
  SolverOptions solver;
  std::string output_dir = "singorb_out";

  std::optional<double> alpha_target;  ///< defaults to the largest exponent
  std::optional<double> beta_target;   ///< defaults to the smallest exponent
  double mu2 = 0.0;
  double r_small = 1.0;
  double L0 = 1.0;
  double rho0 = 0.1;
  double audit_radius_min = 1e-3;
  double audit_radius_max = 1e3;
  int audit_radius_count = 61;
  double limit_tol = 1e-6;

  VerificationTolerances verify;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown or duplicate keys, missing
/// required keys and malformed values raise ConfigError naming the key.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Documentation of every key and its default, for --help.
std::string config_reference();

EnergyProblem make_problem(const RunConfig& cfg);
AuditConfig make_audit_config(const RunConfig& cfg);

}  // namespace singorb
