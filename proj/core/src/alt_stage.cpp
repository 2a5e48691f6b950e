#include "tsci/alt_stage.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "tsci/error.hpp"
#include "tsci/forest.hpp"
#include "tsci/linalg.hpp"

namespace tsci {

WeightMatrix basis_omega(const Matrix& z, const CovariateBasis& w, int basis_count) {
  const Index n = z.rows();
  if (basis_count < 1) throw UsageError("basis_omega: basis count must be >= 1");
  if (w.w.rows() != n) throw DimensionError("basis_omega: Z and W row counts differ");
  const Index cols = basis_count * z.cols() + w.w.cols();
  if (cols >= n)
    throw DimensionError("basis_omega: " + std::to_string(cols) + " basis columns for " + std::to_string(n) + " rows");

  Matrix b(n, basis_count * z.cols());
  for (Index j = 0; j < z.cols(); ++j) {
    Vector power = z.col(j);
    for (int k = 0; k < basis_count; ++k) {
      Vector col = power.array() - power.mean();
      const double norm = col.norm();
      if (norm > 0.0) col /= norm;
      b.col(j * basis_count + k) = col;
      power = power.cwiseProduct(z.col(j));
    }
  }

  WeightMatrix out;
  out.kind = WeightKind::basis;
  out.projector_basis = orthonormal_basis(hcat(b, w.w));
  if (out.projector_basis.cols() == 0) throw DegenerateError("basis_omega: [B | W] has rank 0");
  out.omega = out.projector_basis * out.projector_basis.transpose();
  return out;
}

void BoostingConfig::validate() const {
  if (!(nu > 0.0 && nu <= 1.0)) throw UsageError("boosting: nu must lie in (0, 1]");
  if (m_stop < 1) throw UsageError("boosting: m_stop must be >= 1");
  if (tree_depth < 1) throw UsageError("boosting: tree depth must be >= 1");
  if (tree_min_leaf < 1) throw UsageError("boosting: tree min_leaf must be >= 1");
}

std::string to_string(BoostingConfig::Base base) {
  return base == BoostingConfig::Base::tree ? "tree" : "componentwise-linear";
}

Matrix linear_hat_matrix(const Vector& column) {
  const double sq = column.squaredNorm();
  if (!(sq > 0.0)) throw SingularBaseError("linear base learner: zero-norm column");
  return column * column.transpose() / sq;
}

Matrix leaf_hat_matrix(std::span<const int> leaf_ids) {
  const auto n = static_cast<Index>(leaf_ids.size());
  std::unordered_map<int, Index> counts;
  for (int l : leaf_ids) ++counts[l];
  Matrix h = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (leaf_ids[static_cast<std::size_t>(i)] == leaf_ids[static_cast<std::size_t>(j)])
        h(i, j) = 1.0 / static_cast<double>(counts[leaf_ids[static_cast<std::size_t>(i)]]);
  return h;
}

namespace {

// omega <- omega + nu * c (c'(I - omega)) / |c|^2
void linear_step(Matrix& omega, const Vector& c, double nu) {
  Eigen::RowVectorXd row = c.transpose() - c.transpose() * omega;
  omega.noalias() += (nu / c.squaredNorm()) * c * row;
}

// omega <- omega + nu * H (I - omega) with H the leaf-averaging matrix.
void leaf_step(Matrix& omega, const std::vector<int>& leaves, int leaf_count, double nu) {
  const Index n = omega.rows();
  Matrix avg = Matrix::Zero(leaf_count, n);  // per-leaf mean of rows of (I - omega)
  std::vector<Index> counts(static_cast<std::size_t>(leaf_count), 0);
  for (Index i = 0; i < n; ++i) {
    const int l = leaves[static_cast<std::size_t>(i)];
    avg.row(l) -= omega.row(i);
    avg(l, i) += 1.0;
    ++counts[static_cast<std::size_t>(l)];
  }
  for (int l = 0; l < leaf_count; ++l)
    if (counts[static_cast<std::size_t>(l)] > 0) avg.row(l) /= static_cast<double>(counts[static_cast<std::size_t>(l)]);
  for (Index i = 0; i < n; ++i) omega.row(i) += nu * avg.row(leaves[static_cast<std::size_t>(i)]);
}

}  // namespace

WeightMatrix boosting_omega(const Matrix& covariates_a2, const Vector& d_a2, const Matrix& covariates_a1,
                            const BoostingConfig& config) {
  config.validate();
  if (covariates_a2.rows() != d_a2.size()) throw DataError("boosting: A2 covariate and treatment rows differ");
  if (covariates_a2.cols() != covariates_a1.cols()) throw DimensionError("boosting: A1 and A2 covariate widths differ");
  const Index n1 = covariates_a1.rows();
  const Index n2 = covariates_a2.rows();
  const Index p = covariates_a2.cols();

  WeightMatrix out;
  out.kind = WeightKind::boosting;
  out.omega = Matrix::Zero(n1, n1);
  Vector residual = d_a2;

  if (config.base == BoostingConfig::Base::componentwise_linear) {
    // Candidate k < p is covariate column k; candidate p is the constant.
    auto column_a2 = [&](Index k) -> Vector { return k < p ? Vector(covariates_a2.col(k)) : Vector::Ones(n2); };
    auto column_a1 = [&](Index k) -> Vector { return k < p ? Vector(covariates_a1.col(k)) : Vector::Ones(n1); };
    Vector sq_a2(p + 1), sq_a1(p + 1);
    for (Index k = 0; k <= p; ++k) {
      sq_a2(k) = column_a2(k).squaredNorm();
      sq_a1(k) = column_a1(k).squaredNorm();
    }
    for (int m = 0; m < config.m_stop; ++m) {
      Index best = -1;
      double best_gain = -1.0;
      for (Index k = 0; k <= p; ++k) {
        if (!(sq_a2(k) > 0.0) || !(sq_a1(k) > 0.0)) continue;
        const double proj = k < p ? covariates_a2.col(k).dot(residual) : residual.sum();
        const double gain = proj * proj / sq_a2(k);  // SSE reduction of the full LS fit
        if (gain > best_gain) {
          best_gain = gain;
          best = k;
        }
      }
      if (best < 0) break;
      const Vector c2 = column_a2(best);
      residual -= (config.nu * c2.dot(residual) / sq_a2(best)) * c2;
      linear_step(out.omega, column_a1(best), config.nu);
      ++out.iterations;
    }
    return out;
  }

  RegressionTree::GrowParams grow{static_cast<int>(p), config.tree_min_leaf, config.tree_depth};
  IndexList all(static_cast<std::size_t>(n2));
  for (Index i = 0; i < n2; ++i) all[static_cast<std::size_t>(i)] = i;
  Rng rng(0);  // mtry = p, so every feature is scanned and the draw order is irrelevant
  for (int m = 0; m < config.m_stop; ++m) {
    if (n2 < 2 * static_cast<Index>(config.tree_min_leaf)) break;
    const RegressionTree tree = RegressionTree::grow(covariates_a2, residual, all, grow, rng);
    for (Index i = 0; i < n2; ++i) residual(i) -= config.nu * tree.predict(covariates_a2.row(i));

    // Leaves relabelled by A1 occupancy; leaves with no A1 row drop out of H.
    const auto raw = tree.leaves_of(covariates_a1);
    std::unordered_map<int, int> relabel;
    std::vector<int> leaves(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      auto [it, inserted] = relabel.emplace(raw[i], static_cast<int>(relabel.size()));
      leaves[i] = it->second;
    }
    leaf_step(out.omega, leaves, static_cast<int>(relabel.size()), config.nu);
    ++out.iterations;
  }
  return out;
}

}  // namespace tsci
