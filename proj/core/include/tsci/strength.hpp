#pragma once

#include <cstdint>
#include <vector>

#include "tsci/types.hpp"
#include "tsci/violation.hpp"
#include "tsci/weights.hpp"

namespace tsci {

struct StrengthResult {
  int q = 0;
  double mu_hat = 0.0;
  double trace_m = 0.0;
  double threshold = 0.0;  ///< max(2 Tr[M], 10)
  double s_quantile = 0.0;
  bool passed = false;
  int l = 0;
};

/// D'MD / (|D - f_hat|^2 / n1). Throws PerfectFitError when D == f_hat.
double mu_hat(const Vector& d, const Vector& f_hat, const Matrix& m);

/// Upper-alpha0 empirical quantile of |S^[l]|, l = 1..L, where
///   S^[l] = (2 f_hat' M delta^[l] + delta^[l]' M delta^[l]) / (|D - f_hat|^2 / n1),
///   delta^[l]_i = U^[l]_i (delta_i - mean(delta)), U i.i.d. N(0, 1).
/// Replicate l draws from its own stream derived from `seed`. Requires
/// L >= 50 and 0 < alpha0 < 0.5 (UsageError otherwise). Zero when D = f_hat.
double strength_bootstrap_quantile(const Vector& f_hat, const Matrix& m, const Vector& d, double alpha0, int l,
                                   std::uint64_t seed);

/// The same bootstrap evaluated for many M(V) built from one weighting
/// matrix. Omega * delta^[l] is formed once; per V the quadratic forms use
///   delta' M delta = |Omega delta|^2 - |hat_basis' Omega delta|^2.
/// Draws are identical to strength_bootstrap_quantile with the same seed.
class StrengthBootstrap {
 public:
  StrengthBootstrap(const WeightMatrix& omega, const Vector& d, const Vector& f_hat, int l, std::uint64_t seed);

  double quantile(const TransformMatrix& tm, double alpha0) const;

 private:
  Vector f_hat_;
  double scale_ = 0.0;  ///< |D - f_hat|^2 / n1
  Matrix delta_;        ///< n1 x L bootstrap draws
  Matrix omega_delta_;
  Vector omega_delta_sq_;
};

/// Ties pass.
inline bool strength_passes(double mu_hat, double threshold, double s_quantile) noexcept {
  return mu_hat >= threshold + s_quantile;
}

/// Pass iff mu_hat >= threshold + s_quantile.
StrengthResult strength_test(int q, const Vector& d, const Vector& f_hat, const TransformMatrix& tm,
                             const StrengthBootstrap& boot, double alpha0, int l);

struct QmaxResult {
  int q_max = 0;  ///< meaningful only when weak_iv is false
  bool weak_iv = false;
  std::vector<StrengthResult> table;  ///< one row per order in the chain
  std::vector<int> later_passes;      ///< orders above the first failure that passed anyway
};

/// Scans the table upward and stops at the first failure. weak_iv when q = 0 fails.
QmaxResult q_max(const std::vector<StrengthResult>& table);

/// Standard-normal multipliers for bootstrap replicate `index`.
Vector bootstrap_multipliers(std::uint64_t seed, std::uint64_t tag, int index, Index n);

}  // namespace tsci
