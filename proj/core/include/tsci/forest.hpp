#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsci/dataset.hpp"
#include "tsci/random.hpp"
#include "tsci/types.hpp"
#include "tsci/weights.hpp"

namespace tsci {

struct ForestParams {
  int num_trees = 200;
  int mtry = 0;  ///< 0 selects max(1, floor(p / 3))
  int min_leaf = 5;
  double sample_fraction = 1.0;
  bool bootstrap = true;  ///< resample with replacement; otherwise subsample
  int max_depth = 0;      ///< 0 means unlimited
  std::uint64_t seed = 0;

  int resolved_mtry(Index num_features) const;
};

struct TreeNode {
  int feature = -1;  ///< -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int leaf = -1;  ///< leaf id in [0, leaf_count) for leaves
};

/// CART regression tree with axis-aligned splits. Rows with
/// x[feature] <= threshold go left.
class RegressionTree {
 public:
  struct GrowParams {
    int mtry = 1;
    int min_leaf = 1;
    int max_depth = 0;
  };

  /// Grows on the rows of `x` listed in `sample` (duplicates allowed).
  /// Splits minimise the summed squared error of `y` over mtry randomly drawn
  /// features; exact ties prefer the lower feature index, then the lower
  /// threshold. A node becomes a leaf when it holds fewer than 2 * min_leaf
  /// rows, reaches max_depth, has zero variance, or no split improves.
  static RegressionTree grow(const Matrix& x, const Vector& y, std::span<const Index> sample, const GrowParams& params,
                             Rng& rng);

  /// Leaf id of one covariate row.
  int leaf_of(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  std::vector<int> leaves_of(const Matrix& rows) const;

  int leaf_count() const noexcept { return leaf_count_; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  /// Mean training response per leaf.
  const std::vector<double>& leaf_values() const noexcept { return leaf_values_; }
  /// Training rows (counting duplicates) per leaf.
  const std::vector<Index>& leaf_sizes() const noexcept { return leaf_sizes_; }

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const { return leaf_values_[static_cast<std::size_t>(leaf_of(row))]; }

 private:
  std::vector<TreeNode> nodes_;
  std::vector<double> leaf_values_;
  std::vector<Index> leaf_sizes_;
  int leaf_count_ = 0;
};

class Forest {
 public:
  Forest(std::vector<RegressionTree> trees, ForestParams params) : trees_(std::move(trees)), params_(params) {}

  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  const ForestParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return trees_.size(); }

  Vector predict(const Matrix& rows) const;

 private:
  std::vector<RegressionTree> trees_;
  ForestParams params_;
};

/// Bagged regression trees of `response` on `covariates`. Tree s draws from
/// its own stream derived from params.seed, so the result does not depend on
/// scheduling. Throws SizeError if rows < min_leaf.
Forest fit_forest(const Matrix& covariates, const Vector& response, const ForestParams& params);

/// Omega_ij = (1/S) sum_s 1[reference j shares query i's leaf in tree s] /
/// #(reference rows in that leaf). If a query row's leaf holds no reference
/// row, that tree contributes the uniform row 1/n_ref and the event is
/// counted in empty_leaf_events.
WeightMatrix forest_weights(const Forest& forest, const Matrix& reference, const Matrix& query);

/// Query rows equal to the reference rows: the n1 x n1 matrix over A1.
inline WeightMatrix forest_weights(const Forest& forest, const Matrix& a1_rows) {
  return forest_weights(forest, a1_rows, a1_rows);
}

/// Forest trained and evaluated on all rows (no split), kind full_sample_forest.
WeightMatrix full_sample_weights(const Dataset& data, const ForestParams& params);

}  // namespace tsci
