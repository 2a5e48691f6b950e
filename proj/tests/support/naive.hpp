// Deliberately plain re-implementations used as oracles by the tests:
// explicit dense matrices, projectors from the normal equations, loops
// instead of vectorized expressions. Inputs are assumed full column rank.
#pragma once

#include <Eigen/Dense>
#include <boost/random/uniform_real_distribution.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "tsci/dataset.hpp"
#include "tsci/forest.hpp"
#include "tsci/random.hpp"
#include "tsci/types.hpp"

namespace naive {

using tsci::Index;
using tsci::Matrix;
using tsci::Vector;

inline Matrix projector(const Matrix& a) {
  if (a.cols() == 0) return Matrix::Zero(a.rows(), a.rows());
  const Matrix gram = a.transpose() * a;
  return a * gram.ldlt().solve(a.transpose());
}

inline Matrix annihilator(const Matrix& a) {
  return Matrix::Identity(a.rows(), a.rows()) - projector(a);
}

/// Omega' (I - P_[Omega V | Omega W]) Omega assembled in full.
inline Matrix transform(const Matrix& omega, const Matrix& v, const Matrix& w) {
  const Matrix hat = omega * tsci::hcat(v, w);
  return omega.transpose() * annihilator(hat) * omega;
}

inline double quad(const Vector& a, const Matrix& m, const Vector& b) {
  double s = 0.0;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) s += a(i) * m(i, j) * b(j);
  return s;
}

inline double beta_init(const Vector& y, const Vector& d, const Matrix& m) { return quad(d, m, y) / quad(d, m, d); }

inline Vector eps(const Vector& y, const Vector& d, double beta, const Matrix& v, const Matrix& w) {
  return annihilator(tsci::hcat(v, w)) * (y - beta * d);
}

inline double cov(const Vector& y, const Vector& d, const Vector& f_hat, double beta, const Matrix& v, const Matrix& w) {
  const Vector e = eps(y, d, beta, v, w);
  double s = 0.0;
  for (Index i = 0; i < d.size(); ++i) s += (d(i) - f_hat(i)) * e(i);
  return s / static_cast<double>(d.size() - v.cols() - w.cols());
}

inline double se_hetero(const Vector& e, const Matrix& m, const Vector& d) {
  double num = 0.0;
  for (Index i = 0; i < m.rows(); ++i) {
    double md = 0.0;
    for (Index j = 0; j < m.cols(); ++j) md += m(i, j) * d(j);
    num += e(i) * e(i) * md * md;
  }
  return std::sqrt(num) / quad(d, m, d);
}

inline double beta_hetero(double b_init, const Matrix& m, const Vector& d, const Vector& f_hat, const Vector& e) {
  double s = 0.0;
  for (Index i = 0; i < d.size(); ++i) s += m(i, i) * (d(i) - f_hat(i)) * e(i);
  return b_init - s / quad(d, m, d);
}

inline double h_hat(const Vector& e, const Matrix& mq, const Matrix& mqp, const Vector& d) {
  const Vector a = mq * d;
  const Vector b = mqp * d;
  const double dq = quad(d, mq, d);
  const double dqp = quad(d, mqp, d);
  double t1 = 0.0, t2 = 0.0, t3 = 0.0;
  for (Index i = 0; i < d.size(); ++i) {
    t1 += e(i) * e(i) * b(i) * b(i);
    t2 += e(i) * e(i) * a(i) * a(i);
    t3 += e(i) * e(i) * a(i) * b(i);
  }
  return t1 / (dqp * dqp) + t2 / (dq * dq) - 2.0 * t3 / (dq * dqp);
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// Hand-rolled generators for the property suites.

struct Toy {
  Vector y, d;
  Matrix z, x;
  Vector f;
};

/// Z ~ U(-2, 2), X ~ U(0, 1)^p, D = smooth nonlinear f(Z, X) + noise,
/// Y = D + Z + noise.
inline Toy make_toy(std::uint64_t seed, Index n, Index p, double noise = 1.0) {
  tsci::Rng rng(seed);
  Toy t;
  t.z.resize(n, 1);
  t.x.resize(n, p);
  boost::random::uniform_real_distribution<double> u(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    t.z(i, 0) = 4.0 * u(rng) - 2.0;
    for (Index j = 0; j < p; ++j) t.x(i, j) = u(rng);
  }
  t.f.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double zi = t.z(i, 0);
    t.f(i) = zi + zi * zi + std::sin(2.0 * zi) + (p > 0 ? 0.5 * t.x(i, 0) * zi : 0.0);
  }
  const Vector delta = noise * tsci::standard_normal_vector(rng, n);
  const Vector eps = 0.5 * delta + noise * tsci::standard_normal_vector(rng, n);
  t.d = t.f + delta;
  t.y = t.d + t.z.col(0) + eps;
  return t;
}

inline Index uniform(tsci::Rng& rng, Index lo, Index hi) { return tsci::uniform_index(rng, lo, hi); }

/// A forest fit on the first third of the rows, evaluated on the rest.
struct ToyForest {
  tsci::WeightMatrix omega;
  tsci::SplitIndex split;
};

inline ToyForest toy_forest(const Toy& t, std::uint64_t seed, int trees = 20, int min_leaf = 3) {
  const Index n = t.y.size();
  ToyForest out;
  out.split = tsci::split_sample(n, seed);
  const Matrix cov = tsci::hcat(t.z, t.x);
  tsci::ForestParams params;
  params.num_trees = trees;
  params.min_leaf = min_leaf;
  params.seed = seed;
  const auto forest =
      tsci::fit_forest(tsci::take_rows(cov, out.split.a2), tsci::take_rows(t.d, out.split.a2), params);
  out.omega = tsci::forest_weights(forest, tsci::take_rows(cov, out.split.a1));
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace naive
