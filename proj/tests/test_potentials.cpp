#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "singorb/errors.hpp"
#include "singorb/potentials.hpp"

using namespace singorb;

namespace {

Eigen::VectorXd random_point(std::mt19937_64& rng, int dim, double lo_exp, double hi_exp) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> e(lo_exp, hi_exp);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = n(rng);
  return std::pow(10.0, e(rng)) * x.normalized();
}

Eigen::VectorXd fd_gradient(const PotentialSpec& spec, const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    const double hstep = step * x.norm();
    xp[i] += hstep;
    xm[i] -= hstep;
    g[i] = (potential_value(spec, xp) - potential_value(spec, xm)) / (2 * hstep);
  }
  return g;
}

}  // namespace

TEST_CASE("spec construction validates terms") {
  CHECK_THROWS_AS(PotentialSpec({{-1.0, 3.0}}, 2), std::invalid_argument);
  CHECK_THROWS_AS(PotentialSpec({{1.0, 0.0}}, 2), std::invalid_argument);
  CHECK_THROWS_AS(PotentialSpec({}, 2), std::invalid_argument);
  CHECK_THROWS_AS(PotentialSpec({{1.0, 3.0}}, 0), std::invalid_argument);
  CHECK(PotentialSpec::homogeneous(1, 3, 2).kind() == PotentialKind::kHomogeneous);
  CHECK(PotentialSpec({{1, 3}, {2, 4}}, 2).kind() == PotentialKind::kSumOfHomogeneous);
}

TEST_CASE("value and gradient closed forms") {
  const auto spec = PotentialSpec::homogeneous(1.0, 3.0, 2);
  const Eigen::Vector2d x(2.0, 0.0);
  CHECK(potential_value(spec, x) == doctest::Approx(-0.125));
  const Eigen::VectorXd g = potential_gradient(spec, x);
  CHECK(g[0] == doctest::Approx(0.1875));
  CHECK(g[1] == doctest::Approx(0.0));

  std::mt19937_64 rng(1);
  for (int i = 0; i < 5; ++i) {
    CHECK(potential_value(spec, random_point(rng, 2, 0, 0)) == doctest::Approx(-1.0).epsilon(1e-14));
  }
}

TEST_CASE("singular guard throws") {
  const auto spec = PotentialSpec::homogeneous(1.0, 3.0, 2);
  CHECK_THROWS_AS(potential_value(spec, Eigen::Vector2d::Zero()), SingularityError);
  CHECK_THROWS_AS(potential_gradient(spec, Eigen::Vector2d::Zero()), SingularityError);
  CHECK_THROWS_AS(virial_gradient(spec, Eigen::Vector2d::Zero()), SingularityError);
}

TEST_CASE("gradient matches central differences") {
  std::mt19937_64 rng(2);
  const std::vector<PotentialSpec> specs = {PotentialSpec::homogeneous(1.0, 3.0, 2),
                                            PotentialSpec::homogeneous(2.5, 1.0, 3),
                                            PotentialSpec({{1.0, 3.0}, {0.5, 4.5}}, 2)};
  for (const auto& spec : specs) {
    for (int i = 0; i < 20; ++i) {
      const Eigen::VectorXd x = random_point(rng, spec.dim(), -3.0, 3.0);
      const Eigen::VectorXd g = potential_gradient(spec, x);
      CHECK((fd_gradient(spec, x, 1e-6) - g).norm() <= 1e-6 * g.norm());
    }
  }
}

TEST_CASE("virial gradient matches differences of grad V . x") {
  std::mt19937_64 rng(3);
  const PotentialSpec spec({{1.0, 3.0}, {0.5, 4.5}}, 3);
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd x = random_point(rng, 3, -1.0, 1.0);
    const Eigen::VectorXd g = virial_gradient(spec, x);
    Eigen::VectorXd fd(3);
    for (int j = 0; j < 3; ++j) {
      const double e = 1e-6 * x.norm();
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += e;
      xm[j] -= e;
      fd[j] = (potential_gradient(spec, xp).dot(xp) - potential_gradient(spec, xm).dot(xm)) / (2 * e);
    }
    CHECK((fd - g).norm() <= 1e-6 * g.norm());
  }
}

TEST_CASE("Euler identity for homogeneous terms") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> adist(0.1, 5.0), edist(0.5, 6.0);
  for (int i = 0; i < 30; ++i) {
    const double alpha = edist(rng);
    const auto spec = PotentialSpec::homogeneous(adist(rng), alpha, 3);
    const Eigen::VectorXd x = random_point(rng, 3, -2.0, 2.0);
    const double v = potential_value(spec, x);
    CHECK(std::abs(potential_gradient(spec, x).dot(x) + alpha * v) <= 1e-12 * std::abs(alpha * v));
  }
}

TEST_CASE("radial_euler_quantities") {
  const auto q = radial_euler_quantities(PotentialSpec::homogeneous(1, 3, 2), 1.0);
  CHECK(q.value == doctest::Approx(-1.0));
  CHECK(q.v_dot_u == doctest::Approx(3.0));
  CHECK(q.hessian_uu == doctest::Approx(-12.0));
  CHECK(3 * q.v_dot_u + q.hessian_uu == doctest::Approx(-3.0));

  const auto spec2 = PotentialSpec::homogeneous(1, 2, 2);
  for (double r : {0.1, 1.0, 7.0}) {
    const auto q2 = radial_euler_quantities(spec2, r);
    CHECK(std::abs(3 * q2.v_dot_u + q2.hessian_uu) <= 1e-12 * q2.v_dot_u);
  }

  // (V''x, x) against second differences of V along the ray.
  const PotentialSpec spec3({{1.0, 3.0}, {0.5, 4.5}}, 2);
  const double r = 1.3, e = 1e-4;
  const double fd = r * r * (spec3.radial_value(r + e) - 2 * spec3.radial_value(r) + spec3.radial_value(r - e)) / (e * e);
  CHECK(radial_euler_quantities(spec3, r).hessian_uu == doctest::Approx(fd).epsilon(1e-6));
  CHECK_THROWS_AS(radial_euler_quantities(spec3, 0.0), std::invalid_argument);
}

TEST_CASE("audit of the alpha = 3 potential") {
  const auto spec = PotentialSpec::homogeneous(1, 3, 2);
  const AuditReport r = audit_assumptions(spec, AuditConfig::defaults_for(spec, 0.5));
  CHECK(r.a1.holds_on_samples);
  CHECK(r.a2.holds_on_samples);
  CHECK(r.a3.holds_on_samples);
  CHECK(std::abs(r.a3.worst_margin) <= 1e-12);
  CHECK(r.a4_prime.holds_on_samples);
  CHECK_FALSE(r.a5.holds_on_samples);
  CHECK(r.a5_prime.holds_on_samples);
  CHECK(r.p1.holds_on_samples);
  CHECK(r.strong_force.holds_on_samples);
  CHECK(r.energy_threshold == 0.0);
  CHECK(r.minimization_route);
  CHECK(r.saddle_route);

  const auto j = to_json(r);
  CHECK(j["verdict_scope"] == "on_samples");
  CHECK(j["applicable_routes"].size() == 2);
}

TEST_CASE("audit rejects energies at or below the threshold") {
  const auto spec = PotentialSpec::homogeneous(1, 3, 2);
  auto cfg = AuditConfig::defaults_for(spec, -1.0);
  const AuditReport r = audit_assumptions(spec, cfg);
  CHECK_FALSE(r.minimization_route);
  CHECK_FALSE(r.saddle_route);

  cfg.h = 0.5;
  cfg.mu2 = 3.0;  // threshold 1
  CHECK_FALSE(audit_assumptions(spec, cfg).minimization_route);
  cfg.h = 1.0 + 1e-9;
  CHECK(audit_assumptions(spec, cfg).minimization_route);
}

TEST_CASE("strong force fails below exponent 2") {
  for (double alpha : {1.0, 1.5}) {
    const auto spec = PotentialSpec::homogeneous(1, alpha, 2);
    auto cfg = AuditConfig::defaults_for(spec, 0.5);
    cfg.beta_target = alpha;
    CHECK_FALSE(audit_assumptions(spec, cfg).strong_force.holds_on_samples);
  }
}

TEST_CASE("exponents above 2 satisfy A2, A3, A4' and A5'") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> edist(2.2, 6.0), adist(0.2, 3.0);
  for (int i = 0; i < 10; ++i) {
    std::vector<PowerTerm> terms = {{adist(rng), edist(rng)}};
    if (i % 2 == 1) terms.push_back({adist(rng), edist(rng)});
    const PotentialSpec spec(terms, 2);
    const AuditReport r = audit_assumptions(spec, AuditConfig::defaults_for(spec, 1.0));
    CHECK(r.a2.holds_on_samples);
    CHECK(r.a3.holds_on_samples);
    CHECK(r.a4_prime.holds_on_samples);
    CHECK(r.a5_prime.holds_on_samples);
  }
}

TEST_CASE("audit is deterministic for a fixed seed") {
  const PotentialSpec spec({{1.0, 3.0}, {0.5, 4.0}}, 3);
  auto cfg = AuditConfig::defaults_for(spec, 0.5);
  cfg.seed = 42;
  CHECK(to_json(audit_assumptions(spec, cfg)) == to_json(audit_assumptions(spec, cfg)));
}

TEST_CASE("audit config validation") {
  const auto spec = PotentialSpec::homogeneous(1, 3, 2);
  auto cfg = AuditConfig::defaults_for(spec, 0.5);
  cfg.mu2 = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = AuditConfig::defaults_for(spec, 0.5);
  cfg.radii = {1.0, 0.5};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
