#include "tsci/strength.hpp"

#include <algorithm>
#include <cmath>

#include "tsci/error.hpp"
#include "tsci/random.hpp"
#include "tsci/stats.hpp"

namespace tsci {
namespace {

constexpr std::uint64_t kStrengthTag = 0x5747;

void check_bootstrap_args(double alpha0, int l) {
  if (l < 50) throw UsageError("bootstrap needs L >= 50, got " + std::to_string(l));
  if (!(alpha0 > 0.0 && alpha0 < 0.5)) throw UsageError("alpha0 must lie in (0, 0.5)");
}

double residual_scale(const Vector& d, const Vector& f_hat) {
  const double s = (d - f_hat).squaredNorm() / static_cast<double>(d.size());
  if (!(s > 0.0)) throw PerfectFitError("first stage reproduces D exactly; strength is undefined");
  return s;
}

Matrix bootstrap_draws(const Vector& d, const Vector& f_hat, int l, std::uint64_t seed) {
  const Vector delta = d - f_hat;
  const Vector centered = delta.array() - delta.mean();
  Matrix out(d.size(), l);
  for (int k = 0; k < l; ++k) out.col(k) = bootstrap_multipliers(seed, kStrengthTag, k, d.size()).cwiseProduct(centered);
  return out;
}

}  // namespace

Vector bootstrap_multipliers(std::uint64_t seed, std::uint64_t tag, int index, Index n) {
  Rng rng(derive_seed(seed, {tag, static_cast<std::uint64_t>(index)}));
  return standard_normal_vector(rng, n);
}

double mu_hat(const Vector& d, const Vector& f_hat, const Matrix& m) {
  return d.dot(m * d) / residual_scale(d, f_hat);
}

double strength_bootstrap_quantile(const Vector& f_hat, const Matrix& m, const Vector& d, double alpha0, int l,
                                   std::uint64_t seed) {
  check_bootstrap_args(alpha0, l);
  if ((d - f_hat).squaredNorm() == 0.0) return 0.0;  // every draw is zero
  const double scale = residual_scale(d, f_hat);
  const Matrix draws = bootstrap_draws(d, f_hat, l, seed);
  const Vector mf = m * f_hat;
  const Matrix md = m * draws;
  std::vector<double> stats(static_cast<std::size_t>(l));
  for (int k = 0; k < l; ++k)
    stats[static_cast<std::size_t>(k)] = std::abs((2.0 * mf.dot(draws.col(k)) + draws.col(k).dot(md.col(k))) / scale);
  return upper_empirical_quantile(stats, alpha0);
}

StrengthBootstrap::StrengthBootstrap(const WeightMatrix& omega, const Vector& d, const Vector& f_hat, int l,
                                     std::uint64_t seed)
    : f_hat_(f_hat), scale_(residual_scale(d, f_hat)) {
  if (l < 50) throw UsageError("bootstrap needs L >= 50, got " + std::to_string(l));
  delta_ = bootstrap_draws(d, f_hat, l, seed);
  omega_delta_ = omega.omega * delta_;
  omega_delta_sq_ = omega_delta_.colwise().squaredNorm().transpose();
}

double StrengthBootstrap::quantile(const TransformMatrix& tm, double alpha0) const {
  check_bootstrap_args(alpha0, static_cast<int>(delta_.cols()));
  const Vector mf = tm.m * f_hat_;
  const Matrix proj = tm.hat_basis.transpose() * omega_delta_;
  const Vector linear = delta_.transpose() * mf;
  std::vector<double> stats(static_cast<std::size_t>(delta_.cols()));
  for (Index k = 0; k < delta_.cols(); ++k) {
    const double quad = omega_delta_sq_(k) - proj.col(k).squaredNorm();
    stats[static_cast<std::size_t>(k)] = std::abs((2.0 * linear(k) + quad) / scale_);
  }
  return upper_empirical_quantile(stats, alpha0);
}

StrengthResult strength_test(int q, const Vector& d, const Vector& f_hat, const TransformMatrix& tm,
                             const StrengthBootstrap& boot, double alpha0, int l) {
  StrengthResult r;
  r.q = q;
  r.l = l;
  r.trace_m = tm.trace_m;
  r.mu_hat = mu_hat(d, f_hat, tm.m);
  r.threshold = std::max(2.0 * tm.trace_m, 10.0);
  r.s_quantile = boot.quantile(tm, alpha0);
  r.passed = strength_passes(r.mu_hat, r.threshold, r.s_quantile);
  return r;
}

QmaxResult q_max(const std::vector<StrengthResult>& table) {
  QmaxResult out;
  out.table = table;
  if (table.empty() || !table.front().passed) {
    out.weak_iv = true;
    return out;
  }
  std::size_t k = 0;
  while (k + 1 < table.size() && table[k + 1].passed) ++k;
  out.q_max = table[k].q;
  for (std::size_t j = k + 2; j < table.size(); ++j)
    if (table[j].passed) out.later_passes.push_back(table[j].q);
  return out;
}

}  // namespace tsci
