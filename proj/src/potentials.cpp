#include "singorb/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "singorb/errors.hpp"

namespace singorb {

namespace {

double checked_radius(const Eigen::VectorXd& x) {
  const double r = x.norm();
  if (!(r >= kSingularGuard)) {
    std::ostringstream msg;
    msg << "potential evaluated at |x| = " << r << " (singular set)";
    throw SingularityError(msg.str());
  }
  return r;
}

double rel(double diff, double scale) { return scale > 0.0 ? diff / scale : diff; }

constexpr double kMarginTol = 1e-12;

// Accumulates the worst margin of an inequality over sampled radii.
class VerdictBuilder {
 public:
  explicit VerdictBuilder(bool strict = false) : strict_(strict) {}

  void sample(double margin, double r) {
    ++count_;
    if (margin < worst_) {
      worst_ = margin;
      worst_r_ = r;
    }
  }

  HypothesisVerdict finish(std::string note = {}) const {
    HypothesisVerdict v;
    if (count_ == 0) {
      v.holds_on_samples = true;
      v.worst_margin = 0.0;
      v.note = note.empty() ? "no sampled radii in range (vacuous)" : note;
      return v;
    }
    v.worst_margin = worst_;
    v.worst_radius = worst_r_;
    v.holds_on_samples = strict_ ? worst_ > kMarginTol : worst_ >= -kMarginTol;
    v.note = std::move(note);
    return v;
  }

 private:
  bool strict_;
  int count_ = 0;
  double worst_ = std::numeric_limits<double>::infinity();
  double worst_r_ = 0.0;
};

HypothesisVerdict fail_with(HypothesisVerdict v, const std::string& note) {
  v.holds_on_samples = false;
  v.note = note;
  return v;
}

// |grad V| <= tol at the outermost shell and decaying there (log-log slope < 0).
HypothesisVerdict audit_limit_at_infinity(const PotentialSpec& spec, const AuditConfig& cfg) {
  HypothesisVerdict v;
  const std::size_t n = cfg.radii.size();
  const double r_max = cfg.radii.back();
  const double grad_max = std::abs(spec.radial_virial(r_max)) / r_max;
  v.worst_radius = r_max;
  v.worst_margin = (cfg.limit_tol - grad_max) / cfg.limit_tol;
  const std::size_t fit = std::min<std::size_t>(5, n);
  double slope = -1.0;
  if (fit >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = n - fit; i < n; ++i) {
      const double r = cfg.radii[i];
      const double x = std::log(r);
      const double y = std::log(std::abs(spec.radial_virial(r)) / r);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double m = static_cast<double>(fit);
    slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  std::ostringstream note;
  note << "|grad V| = " << grad_max << " at r = " << r_max << ", decay slope " << slope;
  v.note = note.str();
  v.holds_on_samples = grad_max <= cfg.limit_tol && slope < 0.0;
  return v;
}

}  // namespace

PotentialSpec::PotentialSpec(std::vector<PowerTerm> terms, int dim) : terms_(std::move(terms)), dim_(dim) {
  if (dim_ < 1) throw std::invalid_argument("potential dimension must be >= 1");
  if (terms_.empty()) throw std::invalid_argument("potential needs at least one term");
  for (const auto& t : terms_) {
    if (!(t.coefficient > 0.0) || !std::isfinite(t.coefficient)) {
      throw std::invalid_argument("potential coefficient a must be positive");
    }
    if (!(t.exponent > 0.0) || !std::isfinite(t.exponent)) {
      throw std::invalid_argument("potential exponent alpha must be positive");
    }
  }
}

PotentialSpec PotentialSpec::homogeneous(double coefficient, double exponent, int dim) {
  return PotentialSpec({PowerTerm{coefficient, exponent}}, dim);
}

double PotentialSpec::min_exponent() const {
  return std::min_element(terms_.begin(), terms_.end(),
                          [](const auto& a, const auto& b) { return a.exponent < b.exponent; })
      ->exponent;
}

double PotentialSpec::max_exponent() const {
  return std::max_element(terms_.begin(), terms_.end(),
                          [](const auto& a, const auto& b) { return a.exponent < b.exponent; })
      ->exponent;
}

double PotentialSpec::radial_value(double r) const {
  double v = 0.0;
  for (const auto& t : terms_) v -= t.coefficient * std::pow(r, -t.exponent);
  return v;
}

double PotentialSpec::radial_virial(double r) const {
  double w = 0.0;
  for (const auto& t : terms_) w += t.coefficient * t.exponent * std::pow(r, -t.exponent);
  return w;
}

double potential_value(const PotentialSpec& spec, const Eigen::VectorXd& x) {
  return spec.radial_value(checked_radius(x));
}

Eigen::VectorXd potential_gradient(const PotentialSpec& spec, const Eigen::VectorXd& x) {
  const double r = checked_radius(x);
  double scale = 0.0;
  for (const auto& t : spec.terms()) scale += t.coefficient * t.exponent * std::pow(r, -t.exponent - 2.0);
  return scale * x;
}

Eigen::VectorXd virial_gradient(const PotentialSpec& spec, const Eigen::VectorXd& x) {
  const double r = checked_radius(x);
  double scale = 0.0;
  for (const auto& t : spec.terms()) {
    scale -= t.coefficient * t.exponent * t.exponent * std::pow(r, -t.exponent - 2.0);
  }
  return scale * x;
}

RadialQuantities radial_euler_quantities(const PotentialSpec& spec, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("radial_euler_quantities needs r > 0");
  RadialQuantities q;
  for (const auto& t : spec.terms()) {
    const double p = t.coefficient * std::pow(r, -t.exponent);
    q.value -= p;
    q.v_dot_u += t.exponent * p;
    q.hessian_uu -= t.exponent * (t.exponent + 1.0) * p;
  }
  return q;
}

AuditConfig AuditConfig::defaults_for(const PotentialSpec& spec, double h) {
  AuditConfig cfg;
  constexpr int kCount = 61;
  cfg.radii.resize(kCount);
  for (int i = 0; i < kCount; ++i) cfg.radii[static_cast<std::size_t>(i)] = std::pow(10.0, -3.0 + 6.0 * i / (kCount - 1));
  cfg.alpha_target = spec.max_exponent();
  cfg.beta_target = spec.min_exponent();
  cfg.h = h;
  return cfg;
}

void AuditConfig::validate() const {
  if (radii.empty()) throw std::invalid_argument("audit radii must not be empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw std::invalid_argument("audit radii must be positive");
    if (i > 0 && !(radii[i] > radii[i - 1])) throw std::invalid_argument("audit radii must be strictly increasing");
  }
  if (!(mu2 >= 0.0)) throw std::invalid_argument("mu2 must be nonnegative");
  if (!(alpha_target > 0.0)) throw std::invalid_argument("alpha_target must be positive");
  if (!(r_small > 0.0) || !(rho0 > 0.0)) throw std::invalid_argument("r_small and rho0 must be positive");
  if (!(limit_tol > 0.0)) throw std::invalid_argument("limit_tol must be positive");
  if (directions_per_shell < 1) throw std::invalid_argument("directions_per_shell must be >= 1");
}

AuditReport audit_assumptions(const PotentialSpec& spec, const AuditConfig& cfg) {
  cfg.validate();
  AuditReport rep;
  rep.h = cfg.h;
  rep.energy_threshold = cfg.mu2 / cfg.alpha_target;

  VerdictBuilder a1(true), a2(true), a3, a4, a4p, a5, a5p, b1, b2, b3, b3p, sf;
  int a1_sign = 0;
  bool a1_sign_change = false;
  const double exp_l0 = std::exp(cfg.L0);
  const double exp_neg_l0 = std::exp(-cfg.L0);

  double sf_reference = 0.0;
  double sf_reference_r = 0.0;
  for (double r : cfg.radii) {
    if (r < cfg.r_small) {
      sf_reference = -spec.radial_value(r) * r * r;
      sf_reference_r = r;
    }
  }

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (double r : cfg.radii) {
    const RadialQuantities q = radial_euler_quantities(spec, r);
    const double v = q.value;
    const double w = q.v_dot_u;

    const double comb = 3.0 * w + q.hessian_uu;
    const int sign = comb > 0.0 ? 1 : (comb < 0.0 ? -1 : 0);
    if (a1_sign == 0) a1_sign = sign;
    if (sign != 0 && sign != a1_sign) a1_sign_change = true;
    a1.sample(rel(std::abs(comb), 3.0 * std::abs(w) + std::abs(q.hessian_uu)), r);

    a2.sample(rel(w, std::abs(w) + std::abs(v)), r);

    const double a3_rhs = -cfg.alpha_target * v + cfg.mu2;
    a3.sample(rel(a3_rhs - w, std::abs(a3_rhs) + std::abs(w)), r);

    const double a4_rhs = -cfg.beta_target * v;
    const double a4_margin = rel(w - a4_rhs, std::abs(a4_rhs) + std::abs(w));
    a4p.sample(a4_margin, r);
    if (r < cfg.r_small) a4.sample(a4_margin, r);

    const double energy_like = v + 0.5 * w;
    a5.sample(rel(-energy_like, std::abs(v) + 0.5 * std::abs(w)), r);

    for (int d = 0; d < cfg.directions_per_shell; ++d) {
      Eigen::VectorXd dir(spec.dim());
      for (int i = 0; i < spec.dim(); ++i) dir[i] = gauss(rng);
      if (dir.norm() == 0.0) dir[0] = 1.0;
      const Eigen::VectorXd x = r * dir.normalized();
      const double vp = potential_value(spec, x);
      const double vm = potential_value(spec, Eigen::VectorXd(-x));
      a5p.sample(-rel(std::abs(vp - vm), std::abs(vp)), r);
    }

    b1.sample(rel(-v, std::abs(v)), r);
    if (r >= exp_l0) b2.sample(rel(cfg.h - energy_like, std::abs(cfg.h) + std::abs(energy_like)), r);
    if (r <= exp_neg_l0) b3.sample(rel(energy_like - cfg.h, std::abs(cfg.h) + std::abs(energy_like)), r);
    if (r <= cfg.rho0) b3p.sample(rel(energy_like - cfg.h, std::abs(cfg.h) + std::abs(energy_like)), r);

    // -V r^2 must stay bounded away from 0 as r -> 0 (Gordon function ln|x|).
    if (r < cfg.r_small && sf_reference > 0.0) sf.sample(-v * r * r / sf_reference - 1.0, r);
  }

  rep.a1 = a1.finish();
  if (a1_sign_change) rep.a1 = fail_with(rep.a1, "3 V'.u + (V''u,u) changes sign");
  if (a1_sign == 0) rep.a1 = fail_with(rep.a1, "3 V'.u + (V''u,u) vanishes");
  rep.a2 = a2.finish();
  rep.a3 = a3.finish();
  if (!(cfg.alpha_target > 2.0)) rep.a3 = fail_with(rep.a3, "alpha_target must exceed 2");
  rep.a4 = a4.finish();
  rep.a4_prime = a4p.finish();
  if (!(cfg.beta_target > 2.0)) {
    rep.a4 = fail_with(rep.a4, "beta_target must exceed 2");
    rep.a4_prime = fail_with(rep.a4_prime, "beta_target must exceed 2");
  }
  rep.a5 = a5.finish();
  rep.a5_prime = a5p.finish();
  rep.p1 = audit_limit_at_infinity(spec, cfg);
  rep.b1 = b1.finish();
  rep.b2 = b2.finish();
  rep.b3 = b3.finish();
  rep.b2_prime = rep.p1;
  rep.b3_prime = b3p.finish();
  rep.strong_force = sf.finish("surrogate -V(x)|x|^2 >= c > 0 near 0, U(x) = ln|x|");
  if (sf_reference_r == 0.0) rep.strong_force = fail_with(rep.strong_force, "no sampled radii below r_small");
  if (!(cfg.beta_target >= 2.0)) rep.strong_force = fail_with(rep.strong_force, "beta_target < 2");

  const bool above_threshold = cfg.h > rep.energy_threshold;
  rep.minimization_route = above_threshold && rep.a1.holds_on_samples && rep.a2.holds_on_samples &&
                           rep.a3.holds_on_samples && rep.a4_prime.holds_on_samples && rep.a5_prime.holds_on_samples;
  rep.saddle_route =
      above_threshold && rep.p1.holds_on_samples && rep.a3.holds_on_samples && rep.a4.holds_on_samples;
  return rep;
}

nlohmann::json to_json(const PotentialSpec& spec) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : spec.terms()) terms.push_back({{"a", t.coefficient}, {"alpha", t.exponent}});
  return {{"kind", spec.kind() == PotentialKind::kHomogeneous ? "homogeneous" : "sum_of_homogeneous"},
          {"dim", spec.dim()},
          {"terms", terms}};
}

namespace {
nlohmann::json verdict_json(const HypothesisVerdict& v) {
  nlohmann::json j = {{"holds_on_samples", v.holds_on_samples},
                      {"worst_margin", v.worst_margin},
                      {"worst_radius", v.worst_radius}};
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}
}  // namespace

nlohmann::json to_json(const AuditReport& r) {
  nlohmann::json routes = nlohmann::json::array();
  if (r.minimization_route) routes.push_back("minimization");
  if (r.saddle_route) routes.push_back("saddle_point");
  return {{"hypotheses",
           {{"A1", verdict_json(r.a1)},
            {"A2", verdict_json(r.a2)},
            {"A3", verdict_json(r.a3)},
            {"A4", verdict_json(r.a4)},
            {"A4'", verdict_json(r.a4_prime)},
            {"A5", verdict_json(r.a5)},
            {"A5'", verdict_json(r.a5_prime)},
            {"P1", verdict_json(r.p1)},
            {"B1", verdict_json(r.b1)},
            {"B2", verdict_json(r.b2)},
            {"B3", verdict_json(r.b3)},
            {"B2'", verdict_json(r.b2_prime)},
            {"B3'", verdict_json(r.b3_prime)},
            {"strong_force", verdict_json(r.strong_force)}}},
          {"energy_threshold", r.energy_threshold},
          {"h", r.h},
          {"applicable_routes", routes},
          {"verdict_scope", "on_samples"}};
}

}  // namespace singorb
