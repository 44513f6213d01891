#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "singorb/loop_space.hpp"

namespace testing {

inline constexpr double kPi = std::numbers::pi;

// Circle of radius r in the first coordinate plane, traced once per unit time.
inline singorb::FourierLoop circle(double r, int max_mode = 4, int dim = 2) {
  singorb::FourierLoop loop(dim, max_mode);
  loop.cos_mode(1)[0] = r;
  loop.sin_mode(1)[1] = r;
  return loop;
}

inline singorb::FourierLoop random_loop(std::mt19937_64& rng, int dim, int max_mode, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  singorb::FourierLoop loop(dim, max_mode);
  for (int i = 0; i < dim; ++i) loop.mean()[i] = scale * n(rng);
  for (int k = 1; k <= max_mode; ++k) {
    for (int i = 0; i < dim; ++i) {
      loop.cos_mode(k)[i] = scale * n(rng) / k;
      loop.sin_mode(k)[i] = scale * n(rng) / k;
    }
  }
  return loop;
}

// Odd-harmonic loop dominated by a circle of radius r, so it stays well away from 0.
inline singorb::FourierLoop random_antisymmetric(std::mt19937_64& rng, double r, int max_mode = 7,
                                                 double noise = 0.1) {
  std::normal_distribution<double> n(0.0, 1.0);
  singorb::FourierLoop loop = circle(r, max_mode);
  for (int k = 1; k <= max_mode; k += 2) {
    for (int i = 0; i < 2; ++i) {
      loop.cos_mode(k)[i] += noise * r * n(rng) / (k * k);
      loop.sin_mode(k)[i] += noise * r * n(rng) / (k * k);
    }
  }
  return loop;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace testing
