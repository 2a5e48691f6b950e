#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsci/aggregate.hpp"
#include "tsci/alt_stage.hpp"
#include "tsci/dataset.hpp"
#include "tsci/estimator.hpp"
#include "tsci/forest.hpp"
#include "tsci/selection.hpp"
#include "tsci/strength.hpp"

namespace tsci {

enum class FirstStage { forest, basis, boosting };

std::string to_string(FirstStage stage);
/// "rf", "basis" or "boost"; UsageError otherwise.
FirstStage parse_first_stage(const std::string& text);

struct TsciConfig {
  FirstStage stage = FirstStage::forest;
  ForestParams forest;
  BoostingConfig boosting;
  int basis_count = 6;  ///< polynomial degree M of the projection first stage
  int q_cap = 3;
  double alpha = 0.05;
  double alpha0 = 0.025;
  int boot_l = 300;
  WMode w_mode;

  void validate() const;
};

/// Extras computed alongside the selection path, mostly for simulation.
struct SplitOptions {
  int oracle_q = -1;             ///< >= 0: also fit at this known violation order
  bool baselines = false;           ///< rf_init / rf_plug / rf_ee at the oracle order
  bool tsls = false;                ///< two-stage least squares on all rows
  bool full_sample_forest = false;  ///< rf_full at the oracle order (costly: n x n smoother)
  std::string dump_omega;           ///< write the weighting matrix here as CSV when non-empty
};

/// One sample split taken through first stage, strength scan, selection and
/// the final single-space fits at q_c and q_r.
struct SplitResult {
  std::uint64_t seed = 0;
  Index n1 = 0;
  std::vector<StrengthResult> strength;  ///< every order of the chain, including those past the first failure
  int q_max = 0;
  bool weak_iv = false;
  std::vector<int> later_passes;
  SelectionReport selection;
  TsciFit fit_c;
  TsciFit fit_r;
  std::optional<TsciFit> oracle;
  std::vector<BaselineFit> baselines;
  Index empty_leaf_events = 0;
  int boosting_iterations = 0;
  std::vector<std::string> warnings;
};

/// Runs one split. For the projection first stage there is no split: A1 is every row.
SplitResult run_split(const Dataset& data, const CovariateBasis& w, const TsciConfig& config, std::uint64_t seed,
                      const SplitOptions& options = {});

struct TsciReport {
  TsciConfig config;
  Index n = 0;
  std::uint64_t seed = 0;
  std::vector<SplitResult> splits;
  std::optional<MultiSplitResult> comp;    ///< aggregated q_c fits
  std::optional<MultiSplitResult> robust;  ///< aggregated q_r fits
  int invalid_votes = 0;
  int weak_iv_votes = 0;
  bool invalid_iv = false;  ///< strict majority of splits flag V_0
  bool weak_iv = false;     ///< strict majority of splits fail the strength test at V_0
  std::vector<std::string> warnings;
};

/// Multi-split driver: `num_splits` independent splits (one for the projection
/// stage), run in parallel, then aggregated. `dump_omega` applies to the first split.
TsciReport run_tsci(const Dataset& data, const TsciConfig& config, int num_splits, std::uint64_t seed,
                    const std::string& dump_omega = {});

}  // namespace tsci
