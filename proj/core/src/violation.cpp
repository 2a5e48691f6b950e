#include "tsci/violation.hpp"

#include "tsci/error.hpp"

namespace tsci {

ViolationBasis polynomial_violation_basis(const Vector& z, int q) {
  return polynomial_violation_basis(Matrix(z), q);
}

ViolationBasis polynomial_violation_basis(const Matrix& z, int q) {
  if (q < 0) throw UsageError("violation order must be >= 0");
  ViolationBasis out;
  out.q = q;
  out.v.resize(z.rows(), z.cols() * q);
  Matrix power = Matrix::Ones(z.rows(), z.cols());
  for (int k = 0; k < q; ++k) {
    power = power.cwiseProduct(z);
    out.v.middleCols(k * z.cols(), z.cols()) = power;
  }
  out.rank = numeric_rank(out.v);
  return out;
}

std::vector<ViolationBasis> polynomial_chain(const Matrix& z, int q_cap, const Matrix& w) {
  if (q_cap < 0) throw UsageError("violation order cap must be >= 0");
  std::vector<ViolationBasis> chain{polynomial_violation_basis(z, 0)};
  Index prev_rank = numeric_rank(w);
  for (int q = 1; q <= q_cap; ++q) {
    ViolationBasis next = polynomial_violation_basis(z, q);
    const Index r = numeric_rank(hcat(next.v, w));
    if (r <= prev_rank) break;
    prev_rank = r;
    chain.push_back(std::move(next));
  }
  return chain;
}

ResidualProjector residual_projector(const Matrix& v_a1, const Matrix& w_a1) {
  const Index n1 = w_a1.rows() > 0 ? w_a1.rows() : v_a1.rows();
  const Matrix span = hcat(v_a1, w_a1);
  ResidualProjector p = make_residual_projector(span, n1);
  if (n1 <= p.rank())
    throw DegenerateError("residual projector: " + std::to_string(n1) + " rows do not exceed rank " +
                          std::to_string(p.rank()));
  return p;
}

TransformBuilder::TransformBuilder(const WeightMatrix& omega) : omega_(&omega) {
  const Index n = omega.size();
  if (omega.omega.cols() != n) throw DimensionError("weighting matrix must be square");
  if (omega.kind == WeightKind::basis && omega.projector_basis.cols() > 0) {
    gram_ = omega.omega;  // symmetric idempotent
  } else {
    gram_ = Matrix::Zero(n, n);
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(omega.omega.transpose());
    gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
  }
}

TransformMatrix TransformBuilder::build(const Matrix& v_a1, const Matrix& w_a1) const {
  const Matrix& omega = omega_->omega;
  const Index n1 = omega.rows();
  if (v_a1.rows() != n1 && v_a1.cols() > 0) throw DimensionError("V rows do not match the weighting matrix");
  if (w_a1.rows() != n1) throw DimensionError("W rows do not match the weighting matrix");

  TransformMatrix out;
  out.projector = residual_projector(v_a1, w_a1);
  out.v_rank = out.projector.rank();

  const Matrix span = hcat(v_a1, w_a1);
  out.hat_basis = orthonormal_basis(omega * span);
  const Matrix g = omega.transpose() * out.hat_basis;

  out.m = gram_;
  if (g.cols() > 0) {
    out.m.selfadjointView<Eigen::Lower>().rankUpdate(g, -1.0);
    out.m.triangularView<Eigen::StrictlyUpper>() = out.m.transpose();
  }
  out.trace_m = out.m.trace();
  out.trace_m2 = out.m.squaredNorm();
  return out;
}

TransformMatrix transform_matrix(const WeightMatrix& omega, const ViolationBasis& v, const CovariateBasis& w,
                                 const SplitIndex& split) {
  const Matrix v_a1 = v.v.cols() > 0 ? take_rows(v.v, split.a1) : Matrix(static_cast<Index>(split.a1.size()), 0);
  return TransformBuilder(omega).build(v_a1, take_rows(w.w, split.a1));
}

}  // namespace tsci
