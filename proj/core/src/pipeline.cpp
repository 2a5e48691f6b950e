#include "tsci/pipeline.hpp"

#include <cmath>
#include <limits>

#include "tsci/error.hpp"
#include "tsci/parallel.hpp"
#include "tsci/violation.hpp"

namespace tsci {
namespace {

constexpr std::uint64_t kForestTag = 0xf0e5;
constexpr std::uint64_t kStrengthSeedTag = 0x57e9;
constexpr std::uint64_t kSelectionSeedTag = 0x5e1e;
constexpr std::uint64_t kFullForestTag = 0xf011;
constexpr std::uint64_t kSplitTag = 0x5911;

TsciFit unavailable_fit(int q, const std::string& why) {
  TsciFit fit;
  fit.q = q;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  fit.beta_init = fit.beta = fit.se = fit.ci_lo = fit.ci_hi = fit.mu_hat = nan;
  fit.warnings.push_back(why);
  return fit;
}

bool usable(const TsciFit& fit) { return std::isfinite(fit.beta) && std::isfinite(fit.se); }

Matrix rows_or_empty(const Matrix& m, const IndexList& rows) {
  return m.cols() > 0 ? take_rows(m, rows) : Matrix(static_cast<Index>(rows.size()), 0);
}

}  // namespace

std::string to_string(FirstStage stage) {
  switch (stage) {
    case FirstStage::forest: return "rf";
    case FirstStage::basis: return "basis";
    case FirstStage::boosting: return "boost";
  }
  return "unknown";
}

FirstStage parse_first_stage(const std::string& text) {
  if (text == "rf") return FirstStage::forest;
  if (text == "basis") return FirstStage::basis;
  if (text == "boost") return FirstStage::boosting;
  throw UsageError("stage must be rf, basis or boost, got '" + text + "'");
}

void TsciConfig::validate() const {
  if (q_cap < 0) throw UsageError("violation order cap must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  if (!(alpha0 > 0.0 && alpha0 < 0.5)) throw UsageError("alpha0 must lie in (0, 0.5)");
  if (boot_l < 50) throw UsageError("bootstrap replications must be >= 50");
  if (basis_count < 1) throw UsageError("basis count must be >= 1");
  if (forest.num_trees < 1 || forest.min_leaf < 1) throw UsageError("forest needs >= 1 tree and min_leaf >= 1");
  boosting.validate();
}

SplitResult run_split(const Dataset& data, const CovariateBasis& w, const TsciConfig& config, std::uint64_t seed,
                      const SplitOptions& options) {
  config.validate();
  SplitResult out;
  out.seed = seed;
  const Matrix covariates = data.covariates();

  // First stage.
  SplitIndex split;
  WeightMatrix omega;
  switch (config.stage) {
    case FirstStage::basis:
      split = no_split(data.n());
      omega = basis_omega(data.z(), w, config.basis_count);
      break;
    case FirstStage::forest: {
      split = split_sample(data.n(), seed);
      ForestParams params = config.forest;
      params.seed = derive_seed(seed, {kForestTag});
      const Forest forest = fit_forest(take_rows(covariates, split.a2), take_rows(data.d(), split.a2), params);
      omega = forest_weights(forest, take_rows(covariates, split.a1));
      out.empty_leaf_events = omega.empty_leaf_events;
      break;
    }
    case FirstStage::boosting:
      split = split_sample(data.n(), seed);
      omega = boosting_omega(take_rows(covariates, split.a2), take_rows(data.d(), split.a2),
                             take_rows(covariates, split.a1), config.boosting);
      out.boosting_iterations = omega.iterations;
      if (omega.iterations < config.boosting.m_stop)
        out.warnings.push_back("boosting stopped after " + std::to_string(omega.iterations) + " iterations");
      break;
  }
  out.n1 = static_cast<Index>(split.a1.size());
  if (!options.dump_omega.empty()) write_weight_csv(omega, options.dump_omega);

  const Vector y = take_rows(data.y(), split.a1);
  const Vector d = take_rows(data.d(), split.a1);
  const Vector f_hat = omega.predict(d);
  const Matrix w_a1 = take_rows(w.w, split.a1);

  // Violation chain and transforms.
  const auto chain = polynomial_chain(data.z(), config.q_cap, w.w);
  if (static_cast<int>(chain.size()) - 1 < config.q_cap)
    out.warnings.push_back("violation chain truncated at order " + std::to_string(chain.size() - 1) +
                           ": higher powers add no rank");
  const TransformBuilder builder(omega);
  std::vector<TransformMatrix> transforms;
  for (const ViolationBasis& vb : chain) {
    try {
      transforms.push_back(builder.build(rows_or_empty(vb.v, split.a1), w_a1));
    } catch (const DegenerateError& e) {
      out.warnings.push_back("order " + std::to_string(vb.q) + " dropped: " + e.what());
      break;
    }
  }
  if (transforms.empty()) throw DegenerateError("no violation space leaves residual degrees of freedom");

  // Strength scan over every order; Q_max stops at the first failure.
  const StrengthBootstrap boot(omega, d, f_hat, config.boot_l, derive_seed(seed, {kStrengthSeedTag}));
  for (std::size_t q = 0; q < transforms.size(); ++q)
    out.strength.push_back(strength_test(static_cast<int>(q), d, f_hat, transforms[q], boot, config.alpha0, config.boot_l));
  const QmaxResult qm = q_max(out.strength);
  out.weak_iv = qm.weak_iv;
  out.q_max = qm.q_max;
  out.later_passes = qm.later_passes;

  EstimateOptions single;
  single.alpha = config.alpha;
  auto fit_at = [&](const TransformMatrix& tm, int q) {
    try {
      return estimate_tsci(y, d, f_hat, tm, q, single);
    } catch (const WeakIvError& e) {
      return unavailable_fit(q, e.what());
    }
  };

  if (out.weak_iv) {
    out.warnings.push_back("weak instrument: strength test fails without any violation adjustment");
    out.selection.q_max = 0;
    out.selection.layer_flags = {0};
    out.selection.notes.push_back("weak instrument: selection skipped, valid-IV fit reported");
    out.fit_c = fit_at(transforms.front(), 0);
    out.fit_c.warnings.push_back("instrument failed the strength test at q = 0");
    out.fit_r = out.fit_c;
  } else {
    SelectionInputs in;
    in.y = &y;
    in.d = &d;
    in.f_hat = &f_hat;
    for (int q = 0; q <= out.q_max; ++q) in.transforms.push_back(&transforms[static_cast<std::size_t>(q)]);
    in.alpha = config.alpha;
    in.alpha0 = config.alpha0;
    in.l = config.boot_l;
    in.seed = derive_seed(seed, {kSelectionSeedTag});
    out.selection = select_violation_space(in);
    out.fit_c = fit_at(transforms[static_cast<std::size_t>(out.selection.q_c)], out.selection.q_c);
    out.fit_r = fit_at(transforms[static_cast<std::size_t>(out.selection.q_r)], out.selection.q_r);
  }

  if (options.oracle_q < 0) return out;

  // Oracle order: reuse the chain transform when available.
  std::optional<TransformMatrix> own;
  const TransformMatrix* oracle_tm = nullptr;
  Matrix v_oracle;
  if (options.oracle_q < static_cast<int>(transforms.size())) {
    oracle_tm = &transforms[static_cast<std::size_t>(options.oracle_q)];
    v_oracle = chain[static_cast<std::size_t>(options.oracle_q)].v;
  } else {
    v_oracle = polynomial_violation_basis(data.z(), options.oracle_q).v;
    try {
      own = builder.build(rows_or_empty(v_oracle, split.a1), w_a1);
      oracle_tm = &*own;
    } catch (const DegenerateError& e) {
      out.warnings.push_back(std::string("oracle order unavailable: ") + e.what());
    }
  }
  if (oracle_tm) out.oracle = fit_at(*oracle_tm, options.oracle_q);

  if (options.baselines && oracle_tm) {
    out.baselines.push_back(rf_init(y, d, *oracle_tm, config.alpha));
    out.baselines.push_back(rf_plug(y, d, f_hat, oracle_tm->projector, config.alpha));
    out.baselines.push_back(rf_ee(y, d, f_hat, oracle_tm->projector, config.alpha));
  }
  if (options.tsls) out.baselines.push_back(tsls(data.y(), data.d(), data.z(), w.w, config.alpha));
  if (options.full_sample_forest) {
    ForestParams params = config.forest;
    params.seed = derive_seed(seed, {kFullForestTag});
    const WeightMatrix full = full_sample_weights(data, params);
    try {
      const TransformMatrix full_tm = TransformBuilder(full).build(v_oracle, w.w);
      out.baselines.push_back(rf_full(data.y(), data.d(), full_tm, config.alpha));
    } catch (const DegenerateError& e) {
      BaselineFit f;
      f.name = "rf_full";
      f.ok = false;
      f.note = e.what();
      out.baselines.push_back(f);
    }
  }
  return out;
}

TsciReport run_tsci(const Dataset& data, const TsciConfig& config, int num_splits, std::uint64_t seed,
                    const std::string& dump_omega) {
  config.validate();
  if (num_splits < 1) throw UsageError("number of splits must be >= 1");
  TsciReport rep;
  rep.config = config;
  rep.n = data.n();
  rep.seed = seed;

  const CovariateBasis w = build_w(data.x(), config.w_mode);
  rep.warnings = w.warnings;
  if (config.stage == FirstStage::basis && num_splits > 1) {
    rep.warnings.push_back("projection first stage uses no sample split; running a single pass");
    num_splits = 1;
  }

  rep.splits.resize(static_cast<std::size_t>(num_splits));
  parallel_for(rep.splits.size(), [&](std::size_t s) {
    SplitOptions options;
    if (s == 0) options.dump_omega = dump_omega;
    rep.splits[s] = run_split(data, w, config, derive_seed(seed, {kSplitTag, s}), options);
  });

  std::vector<double> bc, sc, br, sr;
  for (const SplitResult& s : rep.splits) {
    if (s.selection.invalid_iv) ++rep.invalid_votes;
    if (s.weak_iv) ++rep.weak_iv_votes;
    if (usable(s.fit_c)) {
      bc.push_back(s.fit_c.beta);
      sc.push_back(s.fit_c.se);
    }
    if (usable(s.fit_r)) {
      br.push_back(s.fit_r.beta);
      sr.push_back(s.fit_r.se);
    }
  }
  rep.invalid_iv = 2 * rep.invalid_votes > num_splits;
  rep.weak_iv = 2 * rep.weak_iv_votes > num_splits;
  if (!bc.empty()) rep.comp = aggregate_splits(std::move(bc), std::move(sc), config.alpha);
  if (!br.empty()) rep.robust = aggregate_splits(std::move(br), std::move(sr), config.alpha);
  if (!rep.comp) rep.warnings.push_back("no split produced a usable estimate");
  return rep;
}

}  // namespace tsci
