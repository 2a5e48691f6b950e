#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "tsci/estimator.hpp"

namespace tsci {

struct MedianCi {
  double beta_med = 0.0;
  double se_med = 0.0;
  Interval ci;
};

/// beta_med = median(beta), se_med = median(sqrt(se_s^2 + (beta_s - beta_med)^2)),
/// ci = beta_med -/+ z_{alpha/2} se_med. Throws SizeError for no splits.
MedianCi median_ci(std::span<const double> betas, std::span<const double> ses, double alpha);

struct MultiSplitCi {
  Interval ci;
  bool empty = false;       ///< no grid point accepted
  bool contiguous = true;   ///< accepted grid points form one run
  double grid_step = 0.0;
};

inline constexpr int kMultiSplitGrid = 2001;

/// Inverts median p-values p_s(b) = 2(1 - Phi(|beta_s - b| / se_s)) on an
/// evenly spaced grid over [min beta - 6 max se, max beta + 6 max se]; b is
/// accepted when 2 * median_s p_s(b) > alpha. Returns the smallest interval
/// enclosing the accepted points.
MultiSplitCi multisplit_ci(std::span<const double> betas, std::span<const double> ses, double alpha,
                           int grid = kMultiSplitGrid);

struct MultiSplitResult {
  std::vector<double> betas;
  std::vector<double> ses;
  double alpha = 0.05;
  MedianCi median;
  MultiSplitCi multisplit;

  std::size_t splits() const noexcept { return betas.size(); }
};

MultiSplitResult aggregate_splits(std::vector<double> betas, std::vector<double> ses, double alpha);

/// Two-column CSV (beta,se) with 17 significant digits; reading it back and
/// aggregating reproduces the same doubles.
void save_split_fits(const std::filesystem::path& path, std::span<const double> betas, std::span<const double> ses);
void load_split_fits(const std::filesystem::path& path, std::vector<double>& betas, std::vector<double>& ses);

}  // namespace tsci
