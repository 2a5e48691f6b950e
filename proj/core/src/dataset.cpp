#include "tsci/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "tsci/error.hpp"
#include "tsci/linalg.hpp"
#include "tsci/random.hpp"

namespace tsci {
namespace {

std::string trim(std::string_view s) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw DataError(std::string("non-finite entry in ") + what);
}

}  // namespace

Dataset::Dataset(Vector y, Vector d, Matrix z, Matrix x)
    : y_(std::move(y)), d_(std::move(d)), z_(std::move(z)), x_(std::move(x)) {
  const Index n = y_.size();
  if (n < 1) throw SizeError("dataset needs at least one row");
  if (d_.size() != n || z_.rows() != n || x_.rows() != n)
    throw DataError("Y, D, Z and X must share the same row count");
  check_finite(y_, "Y");
  check_finite(d_, "D");
  check_finite(z_, "Z");
  check_finite(x_, "X");
  for (Index j = 0; j < z_.cols(); ++j) z_names.push_back("Z" + std::to_string(j + 1));
  for (Index j = 0; j < x_.cols(); ++j) x_names.push_back("X" + std::to_string(j + 1));
}

Dataset load_dataset(const std::filesystem::path& path, const ColumnSpec& spec) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty file: " + path.string());
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const auto header = split_fields(line);

  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) position.emplace(header[i], i);

  auto locate = [&](const std::string& name) {
    auto it = position.find(name);
    if (it == position.end()) throw SchemaError("missing column '" + name + "' in " + path.string());
    return it->second;
  };
  if (spec.y.empty() || spec.d.empty()) throw SchemaError("outcome and treatment columns must be named");
  if (spec.z.empty()) throw SchemaError("at least one instrument column is required");

  std::vector<std::string> names{spec.y, spec.d};
  names.insert(names.end(), spec.z.begin(), spec.z.end());
  names.insert(names.end(), spec.x.begin(), spec.x.end());
  std::vector<std::size_t> cols;
  for (const auto& nm : names) cols.push_back(locate(nm));

  std::vector<std::vector<double>> values(names.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::size_t c = cols[k];
      if (c >= fields.size() || fields[c].empty())
        throw DataError("empty cell at row " + std::to_string(row) + ", column '" + names[k] + "'", row, names[k]);
      const std::string& cell = fields[c];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw DataError("bad value '" + cell + "' at row " + std::to_string(row) + ", column '" + names[k] + "'", row,
                        names[k]);
      values[k].push_back(v);
    }
  }
  if (row == 0) throw SizeError("no data rows in " + path.string());

  const auto n = static_cast<Index>(row);
  auto column = [&](std::size_t k) { return Eigen::Map<const Vector>(values[k].data(), n); };
  Matrix z(n, static_cast<Index>(spec.z.size()));
  Matrix x(n, static_cast<Index>(spec.x.size()));
  for (std::size_t j = 0; j < spec.z.size(); ++j) z.col(static_cast<Index>(j)) = column(2 + j);
  for (std::size_t j = 0; j < spec.x.size(); ++j) x.col(static_cast<Index>(j)) = column(2 + spec.z.size() + j);

  Dataset data(column(0), column(1), std::move(z), std::move(x));
  data.y_name = spec.y;
  data.d_name = spec.d;
  data.z_names = spec.z;
  data.x_names = spec.x;
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << data.y_name << ',' << data.d_name;
  for (const auto& nm : data.z_names) out << ',' << nm;
  for (const auto& nm : data.x_names) out << ',' << nm;
  out << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    out << format_double(data.y()(i)) << ',' << format_double(data.d()(i));
    for (Index j = 0; j < data.pz(); ++j) out << ',' << format_double(data.z()(i, j));
    for (Index j = 0; j < data.px(); ++j) out << ',' << format_double(data.x()(i, j));
    out << '\n';
  }
}

SplitIndex split_sample(Index n, std::uint64_t seed) {
  if (n < 3) throw SizeError("sample splitting needs n >= 3, got " + std::to_string(n));
  IndexList perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(derive_seed(seed, {0x5b1d}));
  for (Index i = n - 1; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(uniform_index(rng, 0, i))]);

  const Index n1 = (2 * n) / 3;
  SplitIndex split;
  split.seed = seed;
  split.a1.assign(perm.begin(), perm.begin() + n1);
  split.a2.assign(perm.begin() + n1, perm.end());
  std::sort(split.a1.begin(), split.a1.end());
  std::sort(split.a2.begin(), split.a2.end());
  return split;
}

SplitIndex no_split(Index n) {
  SplitIndex split;
  split.a1.resize(static_cast<std::size_t>(n));
  std::iota(split.a1.begin(), split.a1.end(), Index{0});
  return split;
}

WMode WMode::parse(const std::string& text) {
  if (text == "linear") return {};
  const std::string prefix = "basis:";
  if (text.rfind(prefix, 0) == 0) {
    int k = 0;
    const std::string tail = text.substr(prefix.size());
    auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), k);
    if (ec == std::errc() && ptr == tail.data() + tail.size() && k >= 1) return {Kind::basis, k};
  }
  throw UsageError("w-mode must be 'linear' or 'basis:k' with k >= 1, got '" + text + "'");
}

std::string WMode::to_string() const {
  return kind == Kind::linear ? std::string("linear") : "basis:" + std::to_string(degree);
}

CovariateBasis build_w(const Matrix& x, WMode mode) {
  if (!x.allFinite()) throw DataError("non-finite covariate");
  const Index n = x.rows();
  const Index per = mode.kind == WMode::Kind::linear ? 1 : mode.degree;
  CovariateBasis out;
  out.w.resize(n, 1 + x.cols() * per);
  out.w.col(0).setOnes();
  for (Index j = 0; j < x.cols(); ++j) {
    Vector power = x.col(j);
    for (Index k = 0; k < per; ++k) {
      out.w.col(1 + j * per + k) = power;
      if (k + 1 < per) power = power.cwiseProduct(x.col(j));
    }
  }
  out.rank = numeric_rank(out.w);
  if (out.rank < out.w.cols())
    out.warnings.push_back("covariate basis is rank deficient: rank " + std::to_string(out.rank) + " of " +
                           std::to_string(out.w.cols()) + " columns");
  return out;
}

}  // namespace tsci
