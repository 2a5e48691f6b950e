#include "tsci/linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

namespace tsci {

Index numeric_rank(const Matrix& a, double rel_tol) {
  if (a.cols() == 0 || a.rows() == 0) return 0;
  // Thin factor first: rank(a) = rank(R) and R is small for tall inputs.
  Matrix small;
  if (a.rows() > 2 * a.cols()) {
    Eigen::HouseholderQR<Matrix> qr(a);
    small = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  } else {
    small = a;
  }
  Eigen::JacobiSVD<Matrix> svd(small);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cutoff = rel_tol * s(0);
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) ++r;
  return r;
}

Matrix orthonormal_basis(const Matrix& a, double rel_tol) {
  if (a.cols() == 0) return Matrix(a.rows(), 0);
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  qr.setThreshold(rel_tol);
  const Index r = qr.rank();
  Matrix q = Matrix::Identity(a.rows(), r);
  q.applyOnTheLeft(qr.householderQ());
  return q;
}

ResidualProjector::ResidualProjector(Matrix basis, Index rank) : basis_(std::move(basis)), rank_(rank) {}

Vector ResidualProjector::apply(const Vector& u) const {
  if (basis_.cols() == 0) return u;
  return u - basis_ * (basis_.transpose() * u);
}

Matrix ResidualProjector::apply(const Matrix& u) const {
  if (basis_.cols() == 0) return u;
  return u - basis_ * (basis_.transpose() * u);
}

Matrix ResidualProjector::dense() const {
  Matrix p = Matrix::Identity(size(), size());
  if (basis_.cols() > 0) p.noalias() -= basis_ * basis_.transpose();
  return p;
}

ResidualProjector make_residual_projector(const Matrix& span, Index n_rows) {
  if (span.cols() == 0) return ResidualProjector(Matrix(n_rows, 0), 0);
  return ResidualProjector(orthonormal_basis(span), numeric_rank(span));
}

}  // namespace tsci
