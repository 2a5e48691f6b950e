#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsci/estimator.hpp"
#include "tsci/types.hpp"
#include "tsci/violation.hpp"

namespace tsci {

struct PairwiseEntry {
  int q = 0;
  int q_prime = 0;
  double diff = 0.0;    ///< beta(V_q) - beta(V_q')
  double h_hat = 0.0;   ///< variance estimate of the difference
  double stat = 0.0;    ///< |diff| / sqrt(h_hat); infinite when h_hat = 0 and diff != 0
  bool exceeds_z = false;  ///< stat > z_{alpha0}, the fixed-threshold pairwise comparison
};

struct SelectionReport {
  int q_max = 0;
  std::vector<TsciFit> fits;  ///< hetero-seq fits for q = 0..q_max
  std::vector<PairwiseEntry> pairwise;
  double rho_hat = 0.0;
  std::vector<int> layer_flags;  ///< C(V_q), q = 0..q_max
  int q_c = 0;
  int q_r = 0;
  bool invalid_iv = false;
  std::vector<std::string> notes;
};

/// Variance of beta(V_q) - beta(V_q') from the residuals at the largest order:
///   sum e^2 a'^2 / den'^2 + sum e^2 a^2 / den^2 - 2 sum e^2 a a' / (den den'),
/// a = M(V_q) D, den = D' M(V_q) D (primes for q'). Values in [-1e-10, 0)
/// clamp to 0; anything lower throws DegenerateError.
double h_hat(const Vector& eps_qmax, const Vector& md_q, double denom_q, const Vector& md_qp, double denom_qp);

/// Bootstrap threshold: upper-alpha0 quantile over l of
///   T^[l] = max_{0 <= q < q' <= Q} |D'M_q' e^[l] / D'M_q' D - D'M_q e^[l] / D'M_q D| / sqrt(H(q, q')),
/// e^[l]_i = U^[l]_i (eps_i - mean(eps)). The unknown f is replaced by D, the
/// same plug-in H uses, so each normalized pair has unit bootstrap variance.
/// Pairs with H = 0 are skipped.
/// Requires at least two transforms, L >= 50, 0 < alpha0 < 0.5.
double comparison_bootstrap_rho(const Vector& d, const Vector& eps_qmax, const std::vector<const TransformMatrix*>& ms,
                                double alpha0, int l, std::uint64_t seed);

/// C(V_q) = 1 iff some q' > q has stat > rho_hat; C(V_Q) = 0.
int layer_test(int q, int q_max, const std::vector<PairwiseEntry>& pairwise, double rho_hat);

struct SelectionInputs {
  const Vector* y = nullptr;
  const Vector* d = nullptr;
  const Vector* f_hat = nullptr;
  std::vector<const TransformMatrix*> transforms;  ///< M(V_0) .. M(V_{Q_max})
  double alpha = 0.05;
  double alpha0 = 0.025;
  int l = 300;
  std::uint64_t seed = 0;
};

/// Layer-test selection over V_0 .. V_{Q_max}: per-order estimates with the
/// correction residuals taken at Q_max, pairwise table, bootstrap rho, layer
/// flags, q_c, q_r and the invalidity verdict. With Q_max = 0 nothing can be
/// compared: q_c = q_r = 0, invalid_iv = false and a note is recorded.
SelectionReport select_violation_space(const SelectionInputs& in);

}  // namespace tsci
