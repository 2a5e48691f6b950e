#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace tsci {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Rows of `m` listed in `rows`, in that order.
inline Matrix take_rows(const Matrix& m, const IndexList& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

inline Vector take_rows(const Vector& v, const IndexList& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = v(rows[i]);
  return out;
}

/// [a | b] with matching row counts; either side may have zero columns.
inline Matrix hcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() == 0 ? b.rows() : a.rows(), a.cols() + b.cols());
  if (a.cols() > 0) out.leftCols(a.cols()) = a;
  if (b.cols() > 0) out.rightCols(b.cols()) = b;
  return out;
}

}  // namespace tsci
