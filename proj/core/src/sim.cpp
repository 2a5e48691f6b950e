#include "tsci/sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include "tsci/error.hpp"
#include "tsci/parallel.hpp"
#include "tsci/stats.hpp"

namespace tsci {
namespace {

constexpr std::uint64_t kDataTag = 0xda7a;
constexpr std::uint64_t kPipelineTag = 0x919e;

constexpr double kTau1Weight = 1.38072;
constexpr double kTau2Weight = 0.86 * 0.86;

bool uses_forest(SimEstimator e) {
  switch (e) {
    case SimEstimator::tsci_rf_oracle:
    case SimEstimator::tsci_rf_comp:
    case SimEstimator::tsci_rf_robust:
    case SimEstimator::rf_init:
    case SimEstimator::rf_plug:
    case SimEstimator::rf_full:
    case SimEstimator::tsls: return true;
    default: return false;
  }
}

bool uses_basis(SimEstimator e) {
  return e == SimEstimator::tsci_ba_oracle || e == SimEstimator::tsci_ba_comp || e == SimEstimator::tsci_ba_robust;
}

ReplicateRecord::Estimate from_fit(const TsciFit& fit) {
  ReplicateRecord::Estimate e;
  e.ok = std::isfinite(fit.beta) && std::isfinite(fit.ci_lo) && std::isfinite(fit.ci_hi);
  e.beta = fit.beta;
  e.ci_lo = fit.ci_lo;
  e.ci_hi = fit.ci_hi;
  return e;
}

ReplicateRecord::Estimate from_baseline(const std::vector<BaselineFit>& fits, const std::string& name) {
  for (const BaselineFit& b : fits)
    if (b.name == name) {
      ReplicateRecord::Estimate e;
      e.ok = b.ok && std::isfinite(b.beta) && std::isfinite(b.ci_lo) && std::isfinite(b.ci_hi);
      e.beta = b.beta;
      e.ci_lo = b.ci_lo;
      e.ci_hi = b.ci_hi;
      return e;
    }
  return {};
}

}  // namespace

void SimConfig::validate() const {
  if (model < 1 || model > 3) throw UsageError("model must be 1, 2 or 3");
  if (vio < 0 || vio > 2) throw UsageError("vio must be 0, 1 or 2");
  if (model == 3 && vio == 2)
    throw UsageError("model 3 has a binary instrument: vio 2 differs from vio 1 only by a constant");
  if (error != 1 && error != 2) throw UsageError("error must be 1 or 2");
  if (p < 1) throw UsageError("p must be >= 1");
  if (n < 3) throw UsageError("n must be >= 3");
  if (reps < 1) throw UsageError("reps must be >= 1");
  if (!(kappa >= -1.0 && kappa <= 1.0)) throw UsageError("kappa must lie in [-1, 1]");
}

SimCovariates gen_covariates(Index n, int p, bool binary_z, Rng& rng) {
  SimCovariates out;
  const Index k = p + 1;
  out.x_star.resize(n, k);
  const double innovation = std::sqrt(0.75);
  for (Index i = 0; i < n; ++i) {
    out.x_star(i, 0) = standard_normal(rng);
    for (Index j = 1; j < k; ++j) out.x_star(i, j) = 0.5 * out.x_star(i, j - 1) + innovation * standard_normal(rng);
  }
  out.x.resize(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) out.x(i, j) = normal_cdf(out.x_star(i, j));
  out.z.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double u = normal_cdf(out.x_star(i, p));
    out.z(i) = binary_z ? (u > 0.6 ? 1.0 : 0.0) : 4.0 * (u - 0.5);
  }
  return out;
}

Vector gen_mean(int model, double a, const Vector& z, const Matrix& x) {
  const Index n = z.size();
  const Index k = std::min<Index>(5, x.cols());
  Vector f(n);
  for (Index i = 0; i < n; ++i) {
    const double zi = z(i);
    const double inter = a * x.row(i).head(k).sum();
    const double lin = -0.3 * x.row(i).sum();
    switch (model) {
      case 1: f(i) = -25.0 / 12.0 + zi + zi * zi + std::pow(zi, 4) / 8.0 + zi * inter + lin; break;
      case 2:
        f(i) = std::sin(2.0 * std::numbers::pi * zi) + 1.5 * std::cos(2.0 * std::numbers::pi * zi) + zi * inter + lin;
        break;
      case 3: f(i) = zi * (1.0 + inter) + lin; break;
      default: throw UsageError("model must be 1, 2 or 3");
    }
  }
  return f;
}

Vector violation_h(int vio, const Vector& z) {
  switch (vio) {
    case 0: return Vector::Zero(z.size());
    case 1: return z;
    case 2: return z.array() + z.array().square() - 1.0;
    default: throw UsageError("vio must be 0, 1 or 2");
  }
}

SimErrors gen_errors(int dist, const Vector& z, double kappa, Rng& rng) {
  const Index n = z.size();
  SimErrors out;
  out.delta.resize(n);
  out.eps.resize(n);
  if (dist == 1) {
    const double rho = 0.5;
    const double c = std::sqrt(1.0 - rho * rho);
    for (Index i = 0; i < n; ++i) {
      const double u1 = standard_normal(rng);
      const double u2 = standard_normal(rng);
      out.delta(i) = u1;
      out.eps(i) = rho * u1 + c * u2;
    }
    return out;
  }
  if (dist != 2) throw UsageError("error must be 1 or 2");
  const double c = std::sqrt((1.0 - kappa * kappa) / (kTau2Weight * kTau2Weight + kTau1Weight * kTau1Weight));
  for (Index i = 0; i < n; ++i) {
    const double s = std::sqrt(z(i) * z(i) + 0.25);
    const double delta = s * standard_normal(rng);
    const double tau1 = s * standard_normal(rng);
    const double tau2 = standard_normal(rng);
    out.delta(i) = delta;
    out.eps(i) = kappa * delta + c * (kTau1Weight * tau1 + kTau2Weight * tau2);
  }
  return out;
}

double error2_conditional_corr(double z, double kappa) {
  const double s2 = z * z + 0.25;
  const double c2 = (1.0 - kappa * kappa) / (kTau2Weight * kTau2Weight + kTau1Weight * kTau1Weight);
  const double var_eps = kappa * kappa * s2 + c2 * (kTau1Weight * kTau1Weight * s2 + kTau2Weight * kTau2Weight);
  return kappa * std::sqrt(s2) / std::sqrt(var_eps);
}

SimData generate(const SimConfig& config, std::uint64_t replicate_seed) {
  config.validate();
  Rng rng(replicate_seed);
  SimCovariates cov = gen_covariates(config.n, config.p, config.model == 3, rng);
  SimData out;
  out.f = gen_mean(config.model, config.a, cov.z, cov.x);
  out.h = violation_h(config.vio, cov.z);
  out.errors = gen_errors(config.error, cov.z, config.kappa, rng);
  const Vector d = out.f + out.errors.delta;
  const Vector y = d * config.beta + out.h + 0.2 * cov.x.rowwise().sum() + out.errors.eps;
  out.data = Dataset(y, d, Matrix(cov.z), std::move(cov.x));
  return out;
}

std::string to_string(SimEstimator e) {
  switch (e) {
    case SimEstimator::tsci_rf_oracle: return "tsci_rf_oracle";
    case SimEstimator::tsci_rf_comp: return "tsci_rf_comp";
    case SimEstimator::tsci_rf_robust: return "tsci_rf_robust";
    case SimEstimator::tsci_ba_oracle: return "tsci_ba_oracle";
    case SimEstimator::tsci_ba_comp: return "tsci_ba_comp";
    case SimEstimator::tsci_ba_robust: return "tsci_ba_robust";
    case SimEstimator::tsls: return "tsls";
    case SimEstimator::rf_init: return "rf_init";
    case SimEstimator::rf_plug: return "rf_plug";
    case SimEstimator::rf_full: return "rf_full";
  }
  return "unknown";
}

std::vector<SimEstimator> default_estimators() {
  return {SimEstimator::tsci_rf_oracle, SimEstimator::tsci_rf_comp, SimEstimator::tsci_rf_robust,
          SimEstimator::tsci_ba_oracle, SimEstimator::tsci_ba_comp, SimEstimator::tsci_ba_robust,
          SimEstimator::tsls,           SimEstimator::rf_init,      SimEstimator::rf_plug};
}

std::vector<SimEstimator> parse_estimators(const std::string& text) {
  static const std::vector<SimEstimator> all = {
      SimEstimator::tsci_rf_oracle, SimEstimator::tsci_rf_comp, SimEstimator::tsci_rf_robust,
      SimEstimator::tsci_ba_oracle, SimEstimator::tsci_ba_comp, SimEstimator::tsci_ba_robust,
      SimEstimator::tsls,           SimEstimator::rf_init,      SimEstimator::rf_plug,
      SimEstimator::rf_full};
  std::vector<SimEstimator> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item == "default") {
      for (SimEstimator e : default_estimators())
        if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
      continue;
    }
    auto it = std::find_if(all.begin(), all.end(), [&](SimEstimator e) { return to_string(e) == item; });
    if (it == all.end()) throw UsageError("unknown estimator '" + item + "'");
    if (std::find(out.begin(), out.end(), *it) == out.end()) out.push_back(*it);
  }
  if (out.empty()) throw UsageError("estimator menu is empty");
  return out;
}

SimSummary summarize(const SimConfig& config, const std::vector<SimEstimator>& estimators,
                     std::vector<ReplicateRecord> replicates) {
  SimSummary s;
  s.config = config;
  s.estimators = estimators;
  s.tallies.resize(estimators.size());
  for (std::size_t k = 0; k < estimators.size(); ++k) s.tallies[k].estimator = estimators[k];

  int rf_runs = 0, rf_invalid = 0, ba_runs = 0, ba_invalid = 0;
  for (const ReplicateRecord& r : replicates) {
    for (std::size_t k = 0; k < estimators.size() && k < r.estimates.size(); ++k) {
      const auto& e = r.estimates[k];
      EstimatorTally& t = s.tallies[k];
      if (!e.ok) {
        ++t.failures;
        continue;
      }
      ++t.runs;
      if (e.ci_lo <= config.beta && config.beta <= e.ci_hi) ++t.covered;
      t.abs_bias_sum += std::abs(e.beta - config.beta);
      t.length_sum += e.ci_hi - e.ci_lo;
    }
    if (r.invalid_rf >= 0) {
      ++rf_runs;
      rf_invalid += r.invalid_rf;
    }
    if (r.invalid_ba >= 0) {
      ++ba_runs;
      ba_invalid += r.invalid_ba;
    }
    if (s.mean_mu_hat.size() < r.mu_hat.size()) {
      s.mean_mu_hat.resize(r.mu_hat.size(), 0.0);
      s.mu_hat_counts.resize(r.mu_hat.size(), 0);
    }
    for (std::size_t q = 0; q < r.mu_hat.size(); ++q)
      if (std::isfinite(r.mu_hat[q])) {
        s.mean_mu_hat[q] += r.mu_hat[q];
        ++s.mu_hat_counts[q];
      }
  }
  for (std::size_t q = 0; q < s.mean_mu_hat.size(); ++q)
    s.mean_mu_hat[q] = s.mu_hat_counts[q] ? s.mean_mu_hat[q] / s.mu_hat_counts[q] : std::nan("");
  s.invalidity_ba = ba_runs ? static_cast<double>(ba_invalid) / ba_runs : 0.0;
  s.invalidity = rf_runs ? static_cast<double>(rf_invalid) / rf_runs : s.invalidity_ba;
  s.replicates = std::move(replicates);
  return s;
}

SimSummary run_replications(const SimConfig& config, const std::vector<SimEstimator>& estimators,
                            const TsciConfig& pipeline) {
  config.validate();
  pipeline.validate();
  const bool want_rf = std::any_of(estimators.begin(), estimators.end(), uses_forest);
  const bool want_ba = std::any_of(estimators.begin(), estimators.end(), uses_basis);
  auto wants = [&](SimEstimator e) { return std::find(estimators.begin(), estimators.end(), e) != estimators.end(); };

  std::vector<ReplicateRecord> records(static_cast<std::size_t>(config.reps));
  parallel_for(records.size(), [&](std::size_t r) {
    ReplicateRecord& rec = records[r];
    rec.estimates.resize(estimators.size());
    const SimData sim = generate(config, derive_seed(config.seed, {kDataTag, r}));
    const CovariateBasis w = build_w(sim.data.x(), pipeline.w_mode);
    const std::uint64_t seed = derive_seed(config.seed, {kPipelineTag, r});

    std::optional<SplitResult> rf, ba;
    if (want_rf) {
      TsciConfig cfg = pipeline;
      cfg.stage = FirstStage::forest;
      SplitOptions opt;
      opt.oracle_q = config.vio;
      opt.baselines = wants(SimEstimator::rf_init) || wants(SimEstimator::rf_plug);
      opt.tsls = wants(SimEstimator::tsls);
      opt.full_sample_forest = wants(SimEstimator::rf_full);
      try {
        rf = run_split(sim.data, w, cfg, seed, opt);
      } catch (const Error& e) {
        rec.error = e.what();
      }
    }
    if (want_ba) {
      TsciConfig cfg = pipeline;
      cfg.stage = FirstStage::basis;
      SplitOptions opt;
      opt.oracle_q = config.vio;
      try {
        ba = run_split(sim.data, w, cfg, seed, opt);
      } catch (const Error& e) {
        if (rec.error.empty()) rec.error = e.what();
      }
    }

    if (rf) {
      rec.invalid_rf = rf->weak_iv ? 0 : static_cast<int>(rf->selection.invalid_iv);
      rec.q_max = rf->weak_iv ? -1 : rf->q_max;
      rec.q_c = rf->weak_iv ? -1 : rf->selection.q_c;
      for (const StrengthResult& sr : rf->strength) rec.mu_hat.push_back(sr.mu_hat);
    }
    if (ba) rec.invalid_ba = ba->weak_iv ? 0 : static_cast<int>(ba->selection.invalid_iv);

    for (std::size_t k = 0; k < estimators.size(); ++k) {
      ReplicateRecord::Estimate& out = rec.estimates[k];
      switch (estimators[k]) {
        case SimEstimator::tsci_rf_oracle:
          if (rf && rf->oracle) out = from_fit(*rf->oracle);
          break;
        case SimEstimator::tsci_rf_comp:
          if (rf) out = from_fit(rf->fit_c);
          break;
        case SimEstimator::tsci_rf_robust:
          if (rf) out = from_fit(rf->fit_r);
          break;
        case SimEstimator::tsci_ba_oracle:
          if (ba && ba->oracle) out = from_fit(*ba->oracle);
          break;
        case SimEstimator::tsci_ba_comp:
          if (ba) out = from_fit(ba->fit_c);
          break;
        case SimEstimator::tsci_ba_robust:
          if (ba) out = from_fit(ba->fit_r);
          break;
        case SimEstimator::tsls:
        case SimEstimator::rf_init:
        case SimEstimator::rf_plug:
        case SimEstimator::rf_full:
          if (rf) out = from_baseline(rf->baselines, to_string(estimators[k]));
          break;
      }
    }
  });
  return summarize(config, estimators, std::move(records));
}

std::string sim_csv(const SimSummary& s) {
  std::ostringstream out;
  out << std::setprecision(6);
  out << "model,vio,a,n,error,reps,metric";
  for (SimEstimator e : s.estimators) out << ',' << to_string(e);
  out << ",invalidity\n";
  const char* metrics[] = {"coverage", "bias", "length", "failures"};
  for (const char* metric : metrics) {
    out << s.config.model << ',' << s.config.vio << ',' << s.config.a << ',' << s.config.n << ',' << s.config.error << ','
        << s.config.reps << ',' << metric;
    for (const EstimatorTally& t : s.tallies) {
      out << ',';
      const std::string m = metric;
      if (m == "coverage") out << t.coverage();
      else if (m == "bias") out << t.mean_abs_bias();
      else if (m == "length") out << t.mean_length();
      else out << t.failures;
    }
    out << ',' << s.invalidity << '\n';
  }
  return out.str();
}

}  // namespace tsci
