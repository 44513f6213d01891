#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "singorb/errors.hpp"
#include "singorb/verifier.hpp"

using namespace singorb;
using testing::circle;
using testing::kPi;

namespace {

const PotentialSpec kSpec = PotentialSpec::homogeneous(1, 3, 2);
const double kT = 2 * kPi / std::sqrt(3.0);
const Eigen::Vector2d kQ0(1.0, 0.0);
const Eigen::Vector2d kV0(0.0, std::sqrt(3.0));

EnergyProblem problem() { return EnergyProblem{kSpec, 0.5, 256, 1e-6}; }

double periodicity(const Trajectory& t) {
  return (t.positions.back() - t.positions.front()).norm() + (t.velocities.back() - t.velocities.front()).norm();
}

}  // namespace

TEST_CASE("circular orbit closes and conserves energy") {
  const Trajectory t = integrate_orbit(kSpec, kQ0, kV0, kT);
  CHECK(t.times.front() == 0.0);
  CHECK(t.times.back() == kT);
  CHECK((t.positions.back() - kQ0).norm() <= 1e-6);
  double drift = 0.0;
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    drift = std::max(drift, std::abs(orbit_energy(kSpec, t.positions[i], t.velocities[i]) - 0.5));
  }
  CHECK(drift <= 1e-8);
  CHECK(t.stats.min_radius_seen > 0.0);
  for (std::size_t i = 1; i < t.times.size(); ++i) CHECK(t.times[i] > t.times[i - 1]);
}

TEST_CASE("energy drift over ten periods") {
  // The alpha = 3 circle is unstable (error grows by e^(2 pi) per period), so the long run uses the
  // Kepler circle of radius 1: V = -1/|x|, speed 1, period 2 pi, energy -1/2.
  const PotentialSpec kepler = PotentialSpec::homogeneous(1, 1, 2);
  IntegratorOptions o;
  o.tol = 1e-10;
  const Trajectory t = integrate_orbit(kepler, kQ0, Eigen::Vector2d(0.0, 1.0), 10 * 2 * kPi, o);
  double drift = 0.0;
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    drift = std::max(drift, std::abs(orbit_energy(kepler, t.positions[i], t.velocities[i]) + 0.5));
  }
  CHECK(drift <= 1e-7);
  CHECK((t.positions.back() - kQ0).norm() <= 1e-6);

  const Trajectory one = integrate_orbit(kSpec, kQ0, kV0, kT, o);
  drift = 0.0;
  for (std::size_t i = 0; i < one.times.size(); ++i) {
    drift = std::max(drift, std::abs(orbit_energy(kSpec, one.positions[i], one.velocities[i]) - 0.5));
  }
  CHECK(drift <= 1e-9);
}

TEST_CASE("radial infall collides") {
  // From rest at r0 = 1 with alpha = 3, the fall time is finite (about 0.528).
  CHECK_THROWS_AS(integrate_orbit(kSpec, kQ0, Eigen::Vector2d::Zero(), 10.0), CollisionError);
  try {
    integrate_orbit(kSpec, kQ0, Eigen::Vector2d::Zero(), 10.0);
  } catch (const CollisionError& e) {
    // r'^2/2 = r^-3 - 1 integrates to a fall time below 1.
    CHECK(e.time() > 0.0);
    CHECK(e.time() < 1.0);
  }
}

TEST_CASE("time reversal") {
  // Outside the angular momentum barrier, so the orbit escapes without colliding.
  const Eigen::Vector2d q0(1.0, 0.0), v0(0.1, 1.8);
  const double T = 2.0;
  const Trajectory fwd = integrate_orbit(kSpec, q0, v0, T);
  const Trajectory back = integrate_orbit(kSpec, fwd.positions.back(), -fwd.velocities.back(), T);
  CHECK((back.positions.back() - q0).norm() <= 1e-6);
  CHECK((back.velocities.back() + v0).norm() <= 1e-6);
}

TEST_CASE("observed convergence order is at least 4") {
  // Periodicity error against total work (steps) over a range of tolerances.
  std::vector<double> log_err, log_work;
  for (double tol : {1e-5, 1e-6, 1e-7, 1e-8}) {
    IntegratorOptions o;
    o.tol = tol;
    const Trajectory t = integrate_orbit(kSpec, kQ0, kV0, kT, o);
    log_err.push_back(std::log(periodicity(t)));
    log_work.push_back(std::log(static_cast<double>(t.stats.steps)));
    CHECK(periodicity(t) > 0.0);
  }
  // Least-squares slope of log error against log steps; order = -slope.
  const double n = static_cast<double>(log_err.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < log_err.size(); ++i) {
    sx += log_work[i];
    sy += log_err[i];
    sxx += log_work[i] * log_work[i];
    sxy += log_work[i] * log_err[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  MESSAGE("observed order " << -slope);
  CHECK(-slope >= 4.0);

  // Halving the tolerance never increases the periodicity residual.
  IntegratorOptions a, b;
  a.tol = 1e-8;
  b.tol = 5e-9;
  CHECK(periodicity(integrate_orbit(kSpec, kQ0, kV0, kT, b)) <= periodicity(integrate_orbit(kSpec, kQ0, kV0, kT, a)));
}

TEST_CASE("integrator input validation") {
  CHECK_THROWS_AS(integrate_orbit(kSpec, Eigen::Vector2d::Zero(), kV0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(integrate_orbit(kSpec, kQ0, kV0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(integrate_orbit(kSpec, Eigen::Vector3d(1, 0, 0), kV0, 1.0), std::invalid_argument);
  IntegratorOptions o;
  o.max_steps = 3;
  CHECK_THROWS_AS(integrate_orbit(kSpec, kQ0, kV0, kT, o), StepFailureError);
}

TEST_CASE("verify_solution on the analytic circle") {
  const auto p = problem();
  const OrbitSolution s = rescale_to_solution(p, circle(1.0), kT);
  const VerificationReport r = verify_solution(p, s);
  CHECK(r.verdict);
  CHECK(r.energy_residual <= 1e-6);
  CHECK(r.periodicity_residual <= 1e-4);
  CHECK(r.ode_residual <= 1e-4);
  CHECK(r.reason.empty());
}

TEST_CASE("perturbed and constant loops fail verification") {
  const auto p = problem();
  FourierLoop bent = circle(1.0);
  bent.cos_mode(3)[0] += 1e-2;
  const VerificationReport r = verify_loop(p, bent, kT);
  CHECK_FALSE(r.verdict);
  CHECK(r.ode_residual > 1e-2);
  CHECK_FALSE(r.reason.empty());

  FourierLoop constant(2, 2);
  constant.mean() << 1.0, 0.0;
  const VerificationReport c = verify_loop(p, constant, 1.0);
  CHECK_FALSE(c.verdict);
  CHECK(c.ode_residual == doctest::Approx(3.0));
}

TEST_CASE("collisions become a failed verdict") {
  const auto p = problem();
  FourierLoop plunge(2, 2);
  plunge.mean() << 1.0, 0.0;
  const VerificationReport r = verify_loop(p, plunge, 10.0);
  CHECK_FALSE(r.verdict);
  CHECK(std::isinf(r.energy_residual));
  CHECK(r.reason.find("collision") != std::string::npos);
  CHECK(to_json(r)["energy_residual"].is_null());
}

TEST_CASE("trajectory csv") {
  const Trajectory t = integrate_orbit(kSpec, kQ0, kV0, kT);
  std::ostringstream out;
  write_csv(out, kSpec, t);
  const std::string s = out.str();
  CHECK(s.rfind("t,q_1,q_2,v_1,v_2,energy\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) == t.times.size() + 1);
}
