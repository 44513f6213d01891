#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace singorb {

/// One attractive power-law term -a |x|^(-alpha).
struct PowerTerm {
  double coefficient = 1.0;  ///< a > 0
  double exponent = 1.0;     ///< alpha > 0
};

enum class PotentialKind { kHomogeneous, kSumOfHomogeneous };

/// V(x) = sum_i -a_i |x|^(-alpha_i) on R^n \ {0}. Radially symmetric and negative.
class PotentialSpec {
 public:
  PotentialSpec(std::vector<PowerTerm> terms, int dim);

  /// Single term -a |x|^(-alpha).
  static PotentialSpec homogeneous(double coefficient, double exponent, int dim);

  PotentialKind kind() const {
    return terms_.size() == 1 ? PotentialKind::kHomogeneous : PotentialKind::kSumOfHomogeneous;
  }
  const std::vector<PowerTerm>& terms() const { return terms_; }
  int dim() const { return dim_; }
  double min_exponent() const;
  double max_exponent() const;

  /// V as a function of r = |x|.
  double radial_value(double r) const;
  /// r V'(r) = grad V(x) . x at |x| = r.
  double radial_virial(double r) const;

 private:
  std::vector<PowerTerm> terms_;
  int dim_;
};

/// Points closer than this to the origin are rejected outright.
inline constexpr double kSingularGuard = 1e-300;

double potential_value(const PotentialSpec& spec, const Eigen::VectorXd& x);
Eigen::VectorXd potential_gradient(const PotentialSpec& spec, const Eigen::VectorXd& x);
/// Gradient of x -> grad V(x) . x, i.e. grad V(x) + V''(x) x.
Eigen::VectorXd virial_gradient(const PotentialSpec& spec, const Eigen::VectorXd& x);

struct RadialQuantities {
  double value = 0.0;      ///< V
  double v_dot_u = 0.0;    ///< V'(x) . x
  double hessian_uu = 0.0; ///< (V''(x) x, x)
};

RadialQuantities radial_euler_quantities(const PotentialSpec& spec, double r);

struct AuditConfig {
  std::vector<double> radii;  ///< strictly positive, increasing
  double alpha_target = 3.0;
  double beta_target = 3.0;
  double mu2 = 0.0;
  double h = 0.5;
  double r_small = 1.0;  ///< (A4) applies on 0 < |u| < r_small
  double L0 = 1.0;
  double rho0 = 0.1;
  double limit_tol = 1e-6;  ///< |grad V| bound at the outermost shells for (P1)/(B2')
  int directions_per_shell = 4;
  std::uint64_t seed = 0;

  /// Log-spaced shells 1e-3..1e3 (61 points) and exponent targets taken from `spec`:
  /// alpha_target = largest exponent, beta_target = smallest.
  static AuditConfig defaults_for(const PotentialSpec& spec, double h);
  void validate() const;
};

struct HypothesisVerdict {
  bool holds_on_samples = true;
  double worst_margin = 0.0;  ///< relative; negative means violated
  double worst_radius = 0.0;
  std::string note;
};

struct AuditReport {
  HypothesisVerdict a1, a2, a3, a4, a4_prime, a5, a5_prime, p1, b1, b2, b3, b2_prime, b3_prime, strong_force;
  double energy_threshold = 0.0;  ///< mu2 / alpha_target
  double h = 0.0;
  bool minimization_route = false;  ///< fixed-energy minimization on the constraint manifold
  bool saddle_route = false;  ///< saddle-point route
};

/// Checks every hypothesis on the sampled shells. Verdicts hold "on samples" only.
AuditReport audit_assumptions(const PotentialSpec& spec, const AuditConfig& cfg);

nlohmann::json to_json(const PotentialSpec& spec);
nlohmann::json to_json(const AuditReport& report);

}  // namespace singorb
