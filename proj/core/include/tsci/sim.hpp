#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsci/dataset.hpp"
#include "tsci/pipeline.hpp"
#include "tsci/random.hpp"

namespace tsci {

struct SimConfig {
  int model = 1;  ///< 1, 2 continuous instrument; 3 binary instrument
  int vio = 1;    ///< 0 (valid IV), 1: h = Z, 2: h = Z + Z^2 - 1
  double a = 1.0;
  Index n = 3000;
  int p = 20;
  int error = 1;  ///< 1 homoscedastic normal, 2 heteroscedastic
  double beta = 1.0;
  double kappa = 0.6;
  int reps = 200;
  std::uint64_t seed = 0;

  /// UsageError for an unknown model, violation, error distribution, p < 1,
  /// n < 3, reps < 1, or model 3 with vio = 2.
  void validate() const;
};

struct SimCovariates {
  Matrix x_star;  ///< n x (p + 1) latent Gaussian, corr 0.5^|i-j|
  Matrix x;       ///< Phi(x_star) on the first p columns
  Vector z;
};

/// AR(1) construction of the latent Gaussian rows, so the covariance is
/// exactly 0.5^|i-j|. Continuous Z = 4(Phi(x*_{p+1}) - 0.5); binary
/// Z = 1(Phi(x*_{p+1}) > 0.6).
SimCovariates gen_covariates(Index n, int p, bool binary_z, Rng& rng);

/// Treatment mean f(Z, X) for models 1-3 with interaction strength a.
Vector gen_mean(int model, double a, const Vector& z, const Matrix& x);

/// Violation function h(Z): 0, Z, or Z + Z^2 - 1.
Vector violation_h(int vio, const Vector& z);

struct SimErrors {
  Vector delta;
  Vector eps;
};

/// Error 1: (delta, eps) ~ N(0, [[1, .5], [.5, 1]]).
/// Error 2: delta ~ N(0, Z^2 + .25), eps = kappa delta + c (1.38072 tau1 + 0.86^2 tau2),
/// c = sqrt((1 - kappa^2) / (0.86^4 + 1.38072^2)), tau1 ~ N(0, Z^2 + .25), tau2 ~ N(0, 1).
SimErrors gen_errors(int dist, const Vector& z, double kappa, Rng& rng);

/// corr(delta, eps | Z = z) under error distribution 2.
double error2_conditional_corr(double z, double kappa);

struct SimData {
  Dataset data;
  Vector f;
  Vector h;
  SimErrors errors;
};

/// Y = D beta + h(Z) + 0.2 sum_j X_j + eps, D = f(Z, X) + delta.
SimData generate(const SimConfig& config, std::uint64_t replicate_seed);

enum class SimEstimator {
  tsci_rf_oracle,
  tsci_rf_comp,
  tsci_rf_robust,
  tsci_ba_oracle,
  tsci_ba_comp,
  tsci_ba_robust,
  tsls,
  rf_init,
  rf_plug,
  rf_full,
};

std::string to_string(SimEstimator e);
/// Comma-separated names; "default" expands to every estimator except rf_full.
std::vector<SimEstimator> parse_estimators(const std::string& text);
std::vector<SimEstimator> default_estimators();

struct EstimatorTally {
  SimEstimator estimator{};
  int runs = 0;
  int covered = 0;
  double abs_bias_sum = 0.0;
  double length_sum = 0.0;
  int failures = 0;

  double coverage() const noexcept { return runs ? static_cast<double>(covered) / runs : 0.0; }
  double mean_abs_bias() const noexcept { return runs ? abs_bias_sum / runs : 0.0; }
  double mean_length() const noexcept { return runs ? length_sum / runs : 0.0; }
};

/// What one replicate produced, kept so summaries can be recomputed.
struct ReplicateRecord {
  struct Estimate {
    bool ok = false;
    double beta = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
  };
  std::vector<Estimate> estimates;  ///< parallel to the estimator menu
  int invalid_rf = -1;              ///< -1 when the forest pipeline did not run
  int invalid_ba = -1;
  std::vector<double> mu_hat;       ///< forest strength per order (NaN where absent)
  int q_max = -1;
  int q_c = -1;
  std::string error;                ///< first error message, if any
};

struct SimSummary {
  SimConfig config;
  std::vector<SimEstimator> estimators;
  std::vector<EstimatorTally> tallies;
  std::vector<ReplicateRecord> replicates;
  double invalidity = 0.0;     ///< forest pipeline (basis pipeline when the forest is not run)
  double invalidity_ba = 0.0;
  std::vector<double> mean_mu_hat;  ///< per order q, over replicates where it was computed
  std::vector<int> mu_hat_counts;
};

/// Replicate r uses generate(config, derive_seed(config.seed, {tag, r})) and
/// its own pipeline seed, so the summary does not depend on scheduling.
/// Estimator failures are tallied, never dropped silently.
SimSummary run_replications(const SimConfig& config, const std::vector<SimEstimator>& estimators,
                            const TsciConfig& pipeline);

/// Tallies from stored replicate records (replicate order does not matter).
SimSummary summarize(const SimConfig& config, const std::vector<SimEstimator>& estimators,
                     std::vector<ReplicateRecord> replicates);

/// Rows coverage / bias / length / failures, one column per estimator, then invalidity.
std::string sim_csv(const SimSummary& summary);

}  // namespace tsci
