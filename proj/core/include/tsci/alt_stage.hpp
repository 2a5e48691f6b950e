#pragma once

#include <span>
#include <string>

#include "tsci/dataset.hpp"
#include "tsci/types.hpp"
#include "tsci/weights.hpp"

namespace tsci {

/// Projection first stage: omega is the orthogonal projector onto
/// col-span([B | W]) where B holds z_j, z_j^2, ..., z_j^M for every
/// instrument column j, each centered and scaled to unit norm. Built on all
/// rows. Throws DimensionError when M * pz + cols(W) >= n and
/// DegenerateError when [B | W] has rank 0.
WeightMatrix basis_omega(const Matrix& z, const CovariateBasis& w, int basis_count);

struct BoostingConfig {
  enum class Base { componentwise_linear, tree };

  double nu = 0.1;
  int m_stop = 100;
  Base base = Base::componentwise_linear;
  int tree_depth = 2;
  int tree_min_leaf = 5;

  /// Throws UsageError unless 0 < nu <= 1, m_stop >= 1, depth >= 1, min_leaf >= 1.
  void validate() const;
};

std::string to_string(BoostingConfig::Base base);

/// L2 boosting expressed as a smoother over A1. Base learners are selected
/// on the A2 rows (residual SSE argmin); the chosen learner's hat matrix H is
/// rebuilt on the A1 rows and applied as
///   omega <- omega + nu * H * (I - omega),   omega_0 = 0.
/// Componentwise-linear candidates are the covariate columns plus a constant
/// column; a candidate that vanishes on either side is skipped for the next
/// best. If none remains the loop stops and `iterations` records how many
/// steps were taken.
WeightMatrix boosting_omega(const Matrix& covariates_a2, const Vector& d_a2, const Matrix& covariates_a1,
                            const BoostingConfig& config);

/// Rank-1 least-squares hat matrix c c' / |c|^2. Throws SingularBaseError for
/// a zero column.
Matrix linear_hat_matrix(const Vector& column);

/// Leaf-averaging matrix: H_ij = 1[leaf_i == leaf_j] / #{k : leaf_k == leaf_i}.
Matrix leaf_hat_matrix(std::span<const int> leaf_ids);

}  // namespace tsci
