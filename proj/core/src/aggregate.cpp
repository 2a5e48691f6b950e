#include "tsci/aggregate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

#include "tsci/error.hpp"
#include "tsci/stats.hpp"

namespace tsci {
namespace {

void check_pairs(std::span<const double> betas, std::span<const double> ses) {
  if (betas.empty()) throw SizeError("aggregation needs at least one split");
  if (betas.size() != ses.size()) throw DimensionError("aggregation: beta and se counts differ");
}

}  // namespace

MedianCi median_ci(std::span<const double> betas, std::span<const double> ses, double alpha) {
  check_pairs(betas, ses);
  MedianCi out;
  out.beta_med = median(betas);
  std::vector<double> spread(betas.size());
  for (std::size_t s = 0; s < betas.size(); ++s) {
    const double dev = betas[s] - out.beta_med;
    spread[s] = std::sqrt(ses[s] * ses[s] + dev * dev);
  }
  out.se_med = median(spread);
  out.ci = confidence_interval(out.beta_med, out.se_med, alpha);
  return out;
}

MultiSplitCi multisplit_ci(std::span<const double> betas, std::span<const double> ses, double alpha, int grid) {
  check_pairs(betas, ses);
  if (grid < 2) throw UsageError("multisplit grid needs at least two points");
  const auto [bmin, bmax] = std::minmax_element(betas.begin(), betas.end());
  const double smax = *std::max_element(ses.begin(), ses.end());
  const double lo = *bmin - 6.0 * smax;
  const double hi = *bmax + 6.0 * smax;

  MultiSplitCi out;
  out.grid_step = (hi - lo) / static_cast<double>(grid - 1);
  std::vector<double> p(betas.size());
  int first = -1, last = -1, runs = 0;
  bool prev = false;
  for (int g = 0; g < grid; ++g) {
    const double b0 = g == grid - 1 ? hi : lo + out.grid_step * g;
    for (std::size_t s = 0; s < betas.size(); ++s) {
      const double dev = std::abs(betas[s] - b0);
      p[s] = ses[s] > 0.0 ? std::erfc(dev / (ses[s] * std::numbers::sqrt2)) : (dev == 0.0 ? 1.0 : 0.0);
    }
    const bool accepted = 2.0 * median(p) > alpha;
    if (accepted) {
      if (first < 0) first = g;
      last = g;
      if (!prev) ++runs;
    }
    prev = accepted;
  }
  if (first < 0) {
    out.empty = true;
    out.contiguous = true;
    out.ci = {std::nan(""), std::nan("")};
    return out;
  }
  out.contiguous = runs == 1;
  out.ci = {lo + out.grid_step * first, last == grid - 1 ? hi : lo + out.grid_step * last};
  return out;
}

MultiSplitResult aggregate_splits(std::vector<double> betas, std::vector<double> ses, double alpha) {
  MultiSplitResult out;
  out.alpha = alpha;
  out.median = median_ci(betas, ses, alpha);
  out.multisplit = multisplit_ci(betas, ses, alpha);
  out.betas = std::move(betas);
  out.ses = std::move(ses);
  return out;
}

void save_split_fits(const std::filesystem::path& path, std::span<const double> betas, std::span<const double> ses) {
  check_pairs(betas, ses);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "beta,se\n";
  char buf[64];
  for (std::size_t s = 0; s < betas.size(); ++s) {
    auto r = std::to_chars(buf, buf + sizeof(buf), betas[s], std::chars_format::general, 17);
    out.write(buf, r.ptr - buf);
    out << ',';
    r = std::to_chars(buf, buf + sizeof(buf), ses[s], std::chars_format::general, 17);
    out.write(buf, r.ptr - buf);
    out << '\n';
  }
}

void load_split_fits(const std::filesystem::path& path, std::vector<double>& betas, std::vector<double>& ses) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  betas.clear();
  ses.clear();
  std::string line;
  std::size_t row = 0;
  if (!std::getline(in, line)) throw SchemaError("empty split file " + path.string());
  if (line.rfind("beta,se", 0) != 0) throw SchemaError("split file must start with a 'beta,se' header");
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    double b = 0.0, s = 0.0;
    const char* end = line.data() + line.size();
    auto r1 = std::from_chars(line.data(), line.data() + (comma == std::string::npos ? line.size() : comma), b);
    if (comma == std::string::npos || r1.ec != std::errc() || r1.ptr != line.data() + comma)
      throw DataError("bad beta at row " + std::to_string(row), row, "beta");
    auto r2 = std::from_chars(line.data() + comma + 1, end, s);
    if (r2.ec != std::errc() || r2.ptr != end) throw DataError("bad se at row " + std::to_string(row), row, "se");
    betas.push_back(b);
    ses.push_back(s);
  }
  if (betas.empty()) throw SizeError("no rows in " + path.string());
}

}  // namespace tsci
