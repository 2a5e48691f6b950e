#pragma once

#include <string>
#include <vector>

#include "tsci/linalg.hpp"
#include "tsci/types.hpp"
#include "tsci/violation.hpp"

namespace tsci {

enum class CorrectionKind { homo, hetero, hetero_seq };
enum class SeKind { hetero, homo };

std::string to_string(CorrectionKind kind);
std::string to_string(SeKind kind);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

struct TsciFit {
  int q = 0;
  double beta_init = 0.0;
  double beta = 0.0;  ///< bias-corrected
  CorrectionKind correction_kind = CorrectionKind::hetero;
  double se = 0.0;
  SeKind se_kind = SeKind::hetero;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double mu_hat = 0.0;  ///< NaN when the first stage fits D exactly
  double trace_m = 0.0;
  double denom = 0.0;  ///< D' M D
  std::vector<std::string> warnings;

  Interval ci() const noexcept { return {ci_lo, ci_hi}; }
};

/// Y'MD / D'MD. Throws WeakIvError when D'MD <= 0.
double beta_init(const Vector& y, const Vector& d, const Matrix& m);

/// (D - f_hat)' P_perp (Y - D beta_init) / (n1 - r), P_perp of the untransformed [V | W].
double cov_hat(const Vector& d, const Vector& f_hat, const Vector& y, double beta_init, const ResidualProjector& p);

double beta_corrected_homo(double beta_init, double cov_hat, double trace_m, double denom);

/// beta_init - sum_i M_ii (D - f_hat)_i eps_i / denom.
double beta_corrected_hetero(double beta_init, const Matrix& m, const Vector& d, const Vector& f_hat,
                             const Vector& eps_hat, double denom);

/// P_perp (Y - D beta).
Vector residual_eps(const Vector& y, const Vector& d, double beta, const ResidualProjector& p);

/// sqrt(sum_i eps_i^2 (MD)_i^2) / denom.
double se_hetero(const Vector& eps_hat, const Matrix& m, const Vector& d, double denom);

/// sigma * sqrt(D'M^2 D) / denom with sigma^2 = |eps|^2 / (len(eps) - rank).
double se_homo(const Vector& eps_hat, const Matrix& m, const Vector& d, double denom, Index rank);

/// beta -/+ z_{alpha/2} se; zero width for alpha >= 1.
Interval confidence_interval(double beta, double se, double alpha);

struct EstimateOptions {
  CorrectionKind correction = CorrectionKind::hetero;
  SeKind se = SeKind::hetero;
  double alpha = 0.05;
};

/// Full single-space fit at violation order q. `eps_override`, when given,
/// replaces P_perp(Y - D beta_init) in the hetero correction (the selection
/// path passes epsilon-hat at the largest order); the SE always uses the
/// fit's own residuals.
TsciFit estimate_tsci(const Vector& y, const Vector& d, const Vector& f_hat, const TransformMatrix& tm, int q,
                      const EstimateOptions& options, const Vector* eps_override = nullptr);

/// Foil estimators. ok = false with a note when the estimator is undefined.
struct BaselineFit {
  std::string name;
  double beta = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool ok = true;
  bool negative_denominator = false;
  std::string note;

  Interval ci() const noexcept { return {ci_lo, ci_hi}; }
};

/// beta_init without correction; homoscedastic SE.
BaselineFit rf_init(const Vector& y, const Vector& d, const TransformMatrix& tm, double alpha);

/// Y'P f_hat / f_hat'P f_hat with SE sqrt(|P(Y - beta D)|^2 / (n1 f_hat'P f_hat)).
BaselineFit rf_plug(const Vector& y, const Vector& d, const Vector& f_hat, const ResidualProjector& p, double alpha);

/// Y'P f_hat / D'P f_hat; sandwich SE sqrt(sum (P f_hat)_i^2 e_i^2) / |D'P f_hat|
/// with e = P(Y - beta D). The denominator may be negative, which is flagged.
BaselineFit rf_ee(const Vector& y, const Vector& d, const Vector& f_hat, const ResidualProjector& p, double alpha);

/// beta_init over all rows with the full-sample transform; sigma^2 = |P(Y - beta D)|^2 / n.
BaselineFit rf_full(const Vector& y, const Vector& d, const TransformMatrix& full_tm, double alpha);

/// Two-stage least squares: regressors [D | W], instruments [Z | W],
/// homoscedastic SE from |Y - X b|^2 / (n - cols(X)).
BaselineFit tsls(const Vector& y, const Vector& d, const Matrix& z, const Matrix& w, double alpha);

}  // namespace tsci
