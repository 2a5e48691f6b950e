#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tsci/types.hpp"

namespace tsci {

/// Outcome, treatment, instruments and baseline covariates for n units.
/// Immutable once built; construction validates shapes and finiteness.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Vector y, Vector d, Matrix z, Matrix x);

  Index n() const noexcept { return y_.size(); }
  Index pz() const noexcept { return z_.cols(); }
  Index px() const noexcept { return x_.cols(); }

  const Vector& y() const noexcept { return y_; }
  const Vector& d() const noexcept { return d_; }
  const Matrix& z() const noexcept { return z_; }
  const Matrix& x() const noexcept { return x_; }

  /// [Z | X], the covariate rows first stages split on.
  Matrix covariates() const { return hcat(z_, x_); }

  // Column names carried through from CSV; synthesized when absent.
  std::string y_name = "Y";
  std::string d_name = "D";
  std::vector<std::string> z_names;
  std::vector<std::string> x_names;

 private:
  Vector y_;
  Vector d_;
  Matrix z_;
  Matrix x_;
};

/// Which CSV columns play which role.
struct ColumnSpec {
  std::string y;
  std::string d;
  std::vector<std::string> z;
  std::vector<std::string> x;
};

/// Reads a comma-separated file with a header row. Throws SchemaError for a
/// missing column and DataError (with row and column) for an empty,
/// unparseable or non-finite cell.
Dataset load_dataset(const std::filesystem::path& path, const ColumnSpec& spec);

/// Writes Y, D, Z..., X... with 17 significant digits so load_dataset
/// reproduces every double exactly.
void save_dataset(const Dataset& data, const std::filesystem::path& path);

/// Random 2:1 partition of {0..n-1}.
struct SplitIndex {
  IndexList a1;  ///< first-stage evaluation / second-stage sample, |a1| = floor(2n/3)
  IndexList a2;  ///< first-stage training sample
  std::uint64_t seed = 0;
};

/// Uniformly random partition with |a1| = floor(2n/3); both lists sorted.
/// Deterministic given (n, seed). Throws SizeError for n < 3.
SplitIndex split_sample(Index n, std::uint64_t seed);

/// The degenerate split used by first stages that need none: a1 = all rows.
SplitIndex no_split(Index n);

struct WMode {
  enum class Kind { linear, basis };
  Kind kind = Kind::linear;
  int degree = 1;  ///< per-coordinate polynomial degree for Kind::basis

  /// Parses "linear" or "basis:k".
  static WMode parse(const std::string& text);
  std::string to_string() const;
};

/// Outcome-model covariates W, first column the constant 1.
struct CovariateBasis {
  Matrix w;
  Index rank = 0;
  std::vector<std::string> warnings;
};

/// linear: W = [1 | X]. basis(k): W = [1 | x_j, x_j^2, ..., x_j^k for each j].
/// Rank deficiency is recorded as a warning, not an error.
CovariateBasis build_w(const Matrix& x, WMode mode);

}  // namespace tsci
