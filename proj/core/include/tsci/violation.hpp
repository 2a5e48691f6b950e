#pragma once

#include <vector>

#include "tsci/dataset.hpp"
#include "tsci/linalg.hpp"
#include "tsci/types.hpp"
#include "tsci/weights.hpp"

namespace tsci {

/// Evaluated violation basis V_q. q = 0 is the null space (no columns).
struct ViolationBasis {
  int q = 0;
  Matrix v;
  Index rank = 0;  ///< numerical column rank of v
};

/// Columns z, z^2, ..., z^q of one instrument.
ViolationBasis polynomial_violation_basis(const Vector& z, int q);

/// Several instruments: for each power k = 1..q the columns z_1^k, ..., z_m^k,
/// so V_q is a prefix of V_{q+1}.
ViolationBasis polynomial_violation_basis(const Matrix& z, int q);

/// V_0, V_1, ..., V_{q_cap}, cut short at the first order whose columns add no
/// rank to [V | W] (a binary instrument yields V_0 and V_1 only).
std::vector<ViolationBasis> polynomial_chain(const Matrix& z, int q_cap, const Matrix& w);

/// P_perp of col-span([V | W]) over the A1 rows. Throws DegenerateError when
/// the row count does not exceed rank([V | W]).
ResidualProjector residual_projector(const Matrix& v_a1, const Matrix& w_a1);

/// M(V) = Omega' P_perp(Omega [V | W]) Omega over A1.
struct TransformMatrix {
  Matrix m;
  double trace_m = 0.0;
  double trace_m2 = 0.0;
  Index v_rank = 0;  ///< rank([V_A1 | W_A1]) of the untransformed columns

  /// Orthonormal basis of col-span(Omega [V | W]); M = Omega'Omega - G G' with G = Omega' hat_basis.
  Matrix hat_basis;
  /// Residual maker of the untransformed [V_A1 | W_A1], used for epsilon-hat and Cov-hat.
  ResidualProjector projector;

  Index size() const noexcept { return m.rows(); }
};

/// Builds M(V) for many V against one weighting matrix. The Gram matrix
/// Omega'Omega is formed once at construction (Omega itself for projection
/// smoothers), so each additional V costs O(n1^2 * cols(V, W)).
class TransformBuilder {
 public:
  explicit TransformBuilder(const WeightMatrix& omega);

  /// v_a1 and w_a1 are the rows of V and W restricted to A1, in the row order of omega.
  TransformMatrix build(const Matrix& v_a1, const Matrix& w_a1) const;

  const WeightMatrix& weights() const noexcept { return *omega_; }
  const Matrix& gram() const noexcept { return gram_; }

 private:
  const WeightMatrix* omega_;
  Matrix gram_;
};

/// One-shot convenience over TransformBuilder: restricts V and W to split.a1.
TransformMatrix transform_matrix(const WeightMatrix& omega, const ViolationBasis& v, const CovariateBasis& w,
                                 const SplitIndex& split);

}  // namespace tsci
