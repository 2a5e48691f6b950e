#pragma once

#include "tsci/types.hpp"

namespace tsci {

/// Relative tolerance for rank decisions: singular values (or pivoted-QR
/// diagonal entries) below kRankTolerance * largest count as zero.
inline constexpr double kRankTolerance = 1e-10;

/// Numerical column rank from singular values. Zero-column or all-zero input
/// has rank 0.
Index numeric_rank(const Matrix& a, double rel_tol = kRankTolerance);

/// Orthonormal basis of col-span(a) from a column-pivoted Householder QR.
/// Columns whose pivot falls below rel_tol * largest pivot are dropped.
/// Returns an a.rows() x rank matrix.
Matrix orthonormal_basis(const Matrix& a, double rel_tol = kRankTolerance);

/// Annihilator of a column span, stored as the orthonormal basis Q so that
/// P_perp = I - Q Q'. Never materialised unless dense() is called.
class ResidualProjector {
 public:
  ResidualProjector() = default;
  /// `basis` has orthonormal columns spanning the removed space; `rank` is the
  /// rank recorded for degrees-of-freedom purposes.
  ResidualProjector(Matrix basis, Index rank);

  Index size() const noexcept { return basis_.rows(); }
  Index rank() const noexcept { return rank_; }
  const Matrix& basis() const noexcept { return basis_; }

  Vector apply(const Vector& u) const;
  Matrix apply(const Matrix& u) const;
  Matrix dense() const;
  double trace() const noexcept { return static_cast<double>(size() - basis_.cols()); }

 private:
  Matrix basis_;
  Index rank_ = 0;
};

/// Residual projector onto the orthogonal complement of col-span(span).
/// The basis comes from pivoted QR; the recorded rank uses singular values.
/// `n_rows` is needed when span has no columns.
ResidualProjector make_residual_projector(const Matrix& span, Index n_rows);

}  // namespace tsci
