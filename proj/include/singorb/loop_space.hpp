#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>

namespace singorb {

/// A closed loop u: R/Z -> R^n stored as a trigonometric polynomial
///
///   u(t) = mean + sum_{k=1}^{K} a_k cos(2 pi k t) + b_k sin(2 pi k t).
///
/// Column k-1 of cos_coeffs()/sin_coeffs() holds a_k/b_k.
class FourierLoop {
 public:
  FourierLoop(int dim, int max_mode);
  FourierLoop(Eigen::VectorXd mean, Eigen::MatrixXd cos_coeffs, Eigen::MatrixXd sin_coeffs);

  int dim() const { return static_cast<int>(mean_.size()); }
  int max_mode() const { return static_cast<int>(cos_.cols()); }

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cos_coeffs() const { return cos_; }
  const Eigen::MatrixXd& sin_coeffs() const { return sin_; }
  Eigen::VectorXd& mean() { return mean_; }
  Eigen::MatrixXd& cos_coeffs() { return cos_; }
  Eigen::MatrixXd& sin_coeffs() { return sin_; }

  /// Coefficients of mode k (1-based).
  auto cos_mode(int k) const { return cos_.col(k - 1); }
  auto sin_mode(int k) const { return sin_.col(k - 1); }
  auto cos_mode(int k) { return cos_.col(k - 1); }
  auto sin_mode(int k) { return sin_.col(k - 1); }

  FourierLoop& operator+=(const FourierLoop& other);
  FourierLoop& operator-=(const FourierLoop& other);
  FourierLoop& operator*=(double s);

  friend FourierLoop operator+(FourierLoop a, const FourierLoop& b) { return a += b; }
  friend FourierLoop operator-(FourierLoop a, const FourierLoop& b) { return a -= b; }
  friend FourierLoop operator*(double s, FourierLoop a) { return a *= s; }
  friend FourierLoop operator*(FourierLoop a, double s) { return a *= s; }

  bool operator==(const FourierLoop& other) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cos_;
  Eigen::MatrixXd sin_;
};

/// Uniform samples u(j/M), j = 0..M-1, stored column-wise (n x M).
struct GridLoop {
  Eigen::MatrixXd nodes;

  int dim() const { return static_cast<int>(nodes.rows()); }
  int size() const { return static_cast<int>(nodes.cols()); }
};

/// Quantities entering the Wirtinger, Sobolev and Friedrichs-Poincare inequalities on
/// a unit-period loop. Each ratio is left side over right side; a check passes iff
/// its ratio is >= 1 up to a relative tolerance of 1e-10.
struct InequalityReport {
  double kinetic = 0.0;   ///< int |u'|^2
  double l2 = 0.0;        ///< int |w|^2, w the zero-mean part
  double sup_norm = 0.0;  ///< |w|_inf
  double pinned_l2 = 0.0; ///< int |u - u(0)|^2
  double wirtinger_ratio = 0.0;
  double sobolev_ratio = 0.0;
  double poincare_ratio = 0.0;
  bool wirtinger_ok = false;
  bool sobolev_ok = false;
  bool poincare_ok = false;
};

/// cos/sin(2 pi k j / M) for j < M, k = 1..K, laid out K x M.
class TrigTable {
 public:
  TrigTable(int nodes, int max_mode);

  int nodes() const { return static_cast<int>(cos_.cols()); }
  int max_mode() const { return static_cast<int>(cos_.rows()); }
  const Eigen::MatrixXd& cos() const { return cos_; }
  const Eigen::MatrixXd& sin() const { return sin_; }

  /// Shared per-thread table for (nodes, max_mode).
  static const TrigTable& cached(int nodes, int max_mode);

 private:
  Eigen::MatrixXd cos_;
  Eigen::MatrixXd sin_;
};

Eigen::VectorXd evaluate(const FourierLoop& loop, double t);
/// order-th time derivative at t (order >= 0).
Eigen::VectorXd evaluate_derivative(const FourierLoop& loop, double t, int order);

/// Values (order 0) or derivatives of the loop at the M uniform nodes, n x M.
Eigen::MatrixXd synthesize(const FourierLoop& loop, const TrigTable& table, int order = 0);

GridLoop to_grid(const FourierLoop& loop, int nodes);
/// Discrete Fourier analysis; requires grid.size() >= 2 * max_mode + 1.
FourierLoop from_grid(const GridLoop& grid, int max_mode);

/// Sum of products of matching coefficients.
double coefficient_dot(const FourierLoop& a, const FourierLoop& b);

/// int_0^1 |u'|^2 dt via Parseval.
double kinetic_integral(const FourierLoop& loop);
/// int_0^1 |u|^2 dt via Parseval.
double l2_integral(const FourierLoop& loop);
/// (int |u'|^2)^{1/2} + |u(0)|.
double h1_norm(const FourierLoop& loop);

/// Zeroes the mean and every even mode, giving u(t + 1/2) = -u(t).
FourierLoop project_antisymmetric(const FourierLoop& loop);
FourierLoop project_zero_mean(const FourierLoop& loop);

InequalityReport inequality_report(const FourierLoop& loop);

/// Nodes of the refined scanning grid used by min_radius and sup_norm.
int refined_grid_size(int max_mode);
/// min_t |u(t)|: refined grid scan plus golden-section polish.
double min_radius(const FourierLoop& loop);
/// max_t |u(t)|: refined grid scan plus golden-section polish.
double sup_norm(const FourierLoop& loop);

nlohmann::json to_json(const FourierLoop& loop);
FourierLoop loop_from_json(const nlohmann::json& j);

/// CSV rows `t,u_1,...,u_n` with t = j/M.
void write_csv(std::ostream& out, const GridLoop& grid);
GridLoop read_grid_csv(std::istream& in);

}  // namespace singorb
