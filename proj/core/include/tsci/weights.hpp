#pragma once

#include <filesystem>
#include <string>

#include "tsci/types.hpp"

namespace tsci {

enum class WeightKind { forest, basis, boosting, full_sample_forest };

std::string to_string(WeightKind kind);

/// Linear-smoother representation of a first stage: f_hat = omega * D over
/// the evaluation rows.
struct WeightMatrix {
  Matrix omega;
  WeightKind kind = WeightKind::forest;

  /// Orthonormal basis Q with omega = Q Q', set only for projection
  /// smoothers (kind == basis). Lets omega' omega be formed in O(n^2 k).
  Matrix projector_basis;

  /// Query rows whose leaf had no reference rows in some tree (forest kinds).
  Index empty_leaf_events = 0;
  /// Boosting iterations actually applied.
  int iterations = 0;

  Index size() const noexcept { return omega.rows(); }
  Vector predict(const Vector& d) const { return omega * d; }
  bool is_projector() const noexcept { return projector_basis.cols() > 0 || (kind == WeightKind::basis); }
};

/// Row-major CSV dump of omega, 17 significant digits, no header.
void write_weight_csv(const WeightMatrix& w, const std::filesystem::path& path);

}  // namespace tsci
