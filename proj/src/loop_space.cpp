#include "singorb/loop_space.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace singorb {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_same_shape(const FourierLoop& a, const FourierLoop& b) {
  if (a.dim() != b.dim() || a.max_mode() != b.max_mode()) {
    throw std::invalid_argument("FourierLoop shape mismatch");
  }
}

// Golden-section search for the minimum of phi on [lo, hi].
double golden_minimize(const std::function<double(double)>& phi, double lo, double hi, double* arg) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = phi(c);
  double fd = phi(d);
  for (int it = 0; it < 80 && (hi - lo) > 1e-15; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = phi(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = phi(d);
    }
  }
  if (fc < fd) {
    *arg = c;
    return fc;
  }
  *arg = d;
  return fd;
}

// Extremum of sign * |u(t)|^2 over the refined grid, polished locally.
double extreme_radius(const FourierLoop& loop, double sign) {
  const int m = refined_grid_size(loop.max_mode());
  const Eigen::MatrixXd nodes = synthesize(loop, TrigTable::cached(m, loop.max_mode()));
  const Eigen::VectorXd sq = nodes.colwise().squaredNorm().transpose() * sign;
  Eigen::Index best = 0;
  const double grid_best = sq.minCoeff(&best);
  const double t0 = static_cast<double>(best) / m;
  auto phi = [&](double t) { return sign * evaluate(loop, t).squaredNorm(); };
  double arg = t0;
  const double polished = golden_minimize(phi, t0 - 1.0 / m, t0 + 1.0 / m, &arg);
  return std::sqrt(sign * std::min(grid_best, polished));
}

}  // namespace

FourierLoop::FourierLoop(int dim, int max_mode) {
  if (dim < 1 || max_mode < 1) throw std::invalid_argument("FourierLoop needs dim >= 1 and max_mode >= 1");
  mean_ = Eigen::VectorXd::Zero(dim);
  cos_ = Eigen::MatrixXd::Zero(dim, max_mode);
  sin_ = Eigen::MatrixXd::Zero(dim, max_mode);
}

FourierLoop::FourierLoop(Eigen::VectorXd mean, Eigen::MatrixXd cos_coeffs, Eigen::MatrixXd sin_coeffs)
    : mean_(std::move(mean)), cos_(std::move(cos_coeffs)), sin_(std::move(sin_coeffs)) {
  if (mean_.size() < 1 || cos_.cols() < 1) throw std::invalid_argument("FourierLoop needs dim >= 1 and max_mode >= 1");
  if (cos_.rows() != mean_.size() || sin_.rows() != mean_.size() || sin_.cols() != cos_.cols()) {
    throw std::invalid_argument("FourierLoop coefficient shapes disagree");
  }
}

FourierLoop& FourierLoop::operator+=(const FourierLoop& other) {
  require_same_shape(*this, other);
  mean_ += other.mean_;
  cos_ += other.cos_;
  sin_ += other.sin_;
  return *this;
}

FourierLoop& FourierLoop::operator-=(const FourierLoop& other) {
  require_same_shape(*this, other);
  mean_ -= other.mean_;
  cos_ -= other.cos_;
  sin_ -= other.sin_;
  return *this;
}

FourierLoop& FourierLoop::operator*=(double s) {
  mean_ *= s;
  cos_ *= s;
  sin_ *= s;
  return *this;
}

bool FourierLoop::operator==(const FourierLoop& other) const {
  return dim() == other.dim() && max_mode() == other.max_mode() && mean_ == other.mean_ && cos_ == other.cos_ &&
         sin_ == other.sin_;
}

TrigTable::TrigTable(int nodes, int max_mode) {
  if (nodes < 1 || max_mode < 1) throw std::invalid_argument("TrigTable needs nodes >= 1 and max_mode >= 1");
  // Only M distinct angles occur; index them exactly instead of accumulating phase.
  Eigen::VectorXd c(nodes), s(nodes);
  for (int m = 0; m < nodes; ++m) {
    const double theta = kTwoPi * m / nodes;
    c[m] = std::cos(theta);
    s[m] = std::sin(theta);
  }
  cos_.resize(max_mode, nodes);
  sin_.resize(max_mode, nodes);
  for (int k = 1; k <= max_mode; ++k) {
    for (int j = 0; j < nodes; ++j) {
      const auto idx = static_cast<int>((static_cast<long long>(k) * j) % nodes);
      cos_(k - 1, j) = c[idx];
      sin_(k - 1, j) = s[idx];
    }
  }
}

const TrigTable& TrigTable::cached(int nodes, int max_mode) {
  thread_local std::map<std::pair<int, int>, std::unique_ptr<TrigTable>> cache;
  auto& slot = cache[{nodes, max_mode}];
  if (!slot) slot = std::make_unique<TrigTable>(nodes, max_mode);
  return *slot;
}

Eigen::VectorXd evaluate(const FourierLoop& loop, double t) { return evaluate_derivative(loop, t, 0); }

Eigen::VectorXd evaluate_derivative(const FourierLoop& loop, double t, int order) {
  if (order < 0) throw std::invalid_argument("derivative order must be nonnegative");
  Eigen::VectorXd out = order == 0 ? loop.mean() : Eigen::VectorXd::Zero(loop.dim());
  const double shift = order * std::numbers::pi / 2.0;
  for (int k = 1; k <= loop.max_mode(); ++k) {
    const double omega = kTwoPi * k;
    const double theta = omega * t + shift;
    const double scale = std::pow(omega, order);
    out += scale * (std::cos(theta) * loop.cos_mode(k) + std::sin(theta) * loop.sin_mode(k));
  }
  return out;
}

Eigen::MatrixXd synthesize(const FourierLoop& loop, const TrigTable& table, int order) {
  if (table.max_mode() != loop.max_mode()) throw std::invalid_argument("TrigTable mode count mismatch");
  if (order < 0) throw std::invalid_argument("derivative order must be nonnegative");
  Eigen::MatrixXd a = loop.cos_coeffs();
  Eigen::MatrixXd b = loop.sin_coeffs();
  if (order > 0) {
    for (int k = 1; k <= loop.max_mode(); ++k) {
      const double scale = std::pow(kTwoPi * k, order);
      a.col(k - 1) *= scale;
      b.col(k - 1) *= scale;
    }
  }
  // d^p/dt^p of (a cos + b sin) cycles with period 4 in p.
  Eigen::MatrixXd out;
  switch (order % 4) {
    case 0: out = a * table.cos() + b * table.sin(); break;
    case 1: out = b * table.cos() - a * table.sin(); break;
    case 2: out = -(a * table.cos() + b * table.sin()); break;
    default: out = a * table.sin() - b * table.cos(); break;
  }
  if (order == 0) out.colwise() += loop.mean();
  return out;
}

GridLoop to_grid(const FourierLoop& loop, int nodes) {
  return GridLoop{synthesize(loop, TrigTable::cached(nodes, loop.max_mode()))};
}

FourierLoop from_grid(const GridLoop& grid, int max_mode) {
  const int m = grid.size();
  if (m < 2 * max_mode + 1) throw std::invalid_argument("from_grid needs at least 2K+1 nodes");
  const TrigTable& table = TrigTable::cached(m, max_mode);
  Eigen::VectorXd mean = grid.nodes.rowwise().mean();
  Eigen::MatrixXd a = (2.0 / m) * grid.nodes * table.cos().transpose();
  Eigen::MatrixXd b = (2.0 / m) * grid.nodes * table.sin().transpose();
  return FourierLoop(std::move(mean), std::move(a), std::move(b));
}

double coefficient_dot(const FourierLoop& a, const FourierLoop& b) {
  require_same_shape(a, b);
  return a.mean().dot(b.mean()) + (a.cos_coeffs().array() * b.cos_coeffs().array()).sum() +
         (a.sin_coeffs().array() * b.sin_coeffs().array()).sum();
}

double kinetic_integral(const FourierLoop& loop) {
  double sum = 0.0;
  for (int k = 1; k <= loop.max_mode(); ++k) {
    sum += static_cast<double>(k) * k * (loop.cos_mode(k).squaredNorm() + loop.sin_mode(k).squaredNorm());
  }
  return 2.0 * std::numbers::pi * std::numbers::pi * sum;
}

double l2_integral(const FourierLoop& loop) {
  return loop.mean().squaredNorm() + 0.5 * (loop.cos_coeffs().squaredNorm() + loop.sin_coeffs().squaredNorm());
}

double h1_norm(const FourierLoop& loop) { return std::sqrt(kinetic_integral(loop)) + evaluate(loop, 0.0).norm(); }

FourierLoop project_antisymmetric(const FourierLoop& loop) {
  FourierLoop out = loop;
  out.mean().setZero();
  for (int k = 2; k <= loop.max_mode(); k += 2) {
    out.cos_mode(k).setZero();
    out.sin_mode(k).setZero();
  }
  return out;
}

FourierLoop project_zero_mean(const FourierLoop& loop) {
  FourierLoop out = loop;
  out.mean().setZero();
  return out;
}

InequalityReport inequality_report(const FourierLoop& loop) {
  constexpr double kRelTol = 1e-10;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  InequalityReport r;
  const FourierLoop zero_mean = project_zero_mean(loop);
  r.kinetic = kinetic_integral(loop);
  r.l2 = l2_integral(zero_mean);
  r.sup_norm = sup_norm(zero_mean);
  FourierLoop pinned = loop;
  pinned.mean() -= evaluate(loop, 0.0);
  r.pinned_l2 = l2_integral(pinned);

  auto ratio = [](double lhs, double rhs) {
    if (rhs > 0.0) return lhs / rhs;
    return std::numeric_limits<double>::infinity();
  };
  r.wirtinger_ratio = ratio(r.kinetic, 4.0 * pi2 * r.l2);
  r.sobolev_ratio = ratio(r.kinetic, 12.0 * r.sup_norm * r.sup_norm);
  r.poincare_ratio = ratio(r.kinetic, pi2 * r.pinned_l2);
  r.wirtinger_ok = r.wirtinger_ratio >= 1.0 - kRelTol;
  r.sobolev_ok = r.sobolev_ratio >= 1.0 - kRelTol;
  r.poincare_ok = r.poincare_ratio >= 1.0 - kRelTol;
  return r;
}

int refined_grid_size(int max_mode) { return std::max(64, 8 * (2 * max_mode + 1)); }

double min_radius(const FourierLoop& loop) { return extreme_radius(loop, 1.0); }

double sup_norm(const FourierLoop& loop) { return extreme_radius(loop, -1.0); }

nlohmann::json to_json(const FourierLoop& loop) {
  auto vec = [](const auto& v) {
    std::vector<double> out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v[i];
    return out;
  };
  nlohmann::json cos = nlohmann::json::array();
  nlohmann::json sin = nlohmann::json::array();
  for (int k = 1; k <= loop.max_mode(); ++k) {
    cos.push_back(vec(loop.cos_mode(k)));
    sin.push_back(vec(loop.sin_mode(k)));
  }
  return {{"dim", loop.dim()}, {"max_mode", loop.max_mode()}, {"mean", vec(loop.mean())}, {"cos", cos}, {"sin", sin}};
}

FourierLoop loop_from_json(const nlohmann::json& j) {
  const int dim = j.at("dim").get<int>();
  const int modes = j.at("max_mode").get<int>();
  FourierLoop loop(dim, modes);
  auto fill = [dim](const nlohmann::json& arr, auto&& target, const char* what) {
    if (!arr.is_array() || static_cast<int>(arr.size()) != dim) {
      throw std::invalid_argument(std::string("FourierLoop JSON: bad vector in ") + what);
    }
    for (int i = 0; i < dim; ++i) target[i] = arr[static_cast<std::size_t>(i)].get<double>();
  };
  fill(j.at("mean"), loop.mean(), "mean");
  const auto& cos = j.at("cos");
  const auto& sin = j.at("sin");
  if (static_cast<int>(cos.size()) != modes || static_cast<int>(sin.size()) != modes) {
    throw std::invalid_argument("FourierLoop JSON: cos/sin must hold max_mode vectors");
  }
  for (int k = 1; k <= modes; ++k) {
    fill(cos[static_cast<std::size_t>(k - 1)], loop.cos_mode(k), "cos");
    fill(sin[static_cast<std::size_t>(k - 1)], loop.sin_mode(k), "sin");
  }
  return loop;
}

void write_csv(std::ostream& out, const GridLoop& grid) {
  out << "t";
  for (int i = 1; i <= grid.dim(); ++i) out << ",u_" << i;
  out << '\n';
  const auto old_precision = out.precision(17);
  for (int j = 0; j < grid.size(); ++j) {
    out << static_cast<double>(j) / grid.size();
    for (int i = 0; i < grid.dim(); ++i) out << ',' << grid.nodes(i, j);
    out << '\n';
  }
  out.precision(old_precision);
}

GridLoop read_grid_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("grid CSV: missing header");
  const auto dim = static_cast<int>(std::count(line.begin(), line.end(), ','));
  if (dim < 1) throw std::invalid_argument("grid CSV: header needs t and at least one coordinate");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != dim + 1) throw std::invalid_argument("grid CSV: ragged row");
    rows.push_back(std::move(row));
  }
  GridLoop grid{Eigen::MatrixXd(dim, static_cast<Eigen::Index>(rows.size()))};
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (int i = 0; i < dim; ++i) grid.nodes(i, static_cast<Eigen::Index>(j)) = rows[j][static_cast<std::size_t>(i + 1)];
  }
  return grid;
}

}  // namespace singorb
