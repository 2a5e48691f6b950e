#include "tsci/stats.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tsci {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

double z_two_sided(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("z_two_sided: alpha must be positive");
  if (alpha >= 1.0) return 0.0;
  return normal_quantile(1.0 - alpha / 2.0);
}

double median(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double upper_empirical_quantile(std::span<const double> draws, double alpha) {
  if (draws.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("quantile level must lie in (0, 1)");
  std::vector<double> v(draws.begin(), draws.end());
  std::sort(v.begin(), v.end());
  const auto l = static_cast<double>(v.size());
  // rank k (1-based) is the largest k with (L - k + 1) >= alpha * L
  auto k = static_cast<std::size_t>(std::floor(l + 1.0 - alpha * l + 1e-12));
  k = std::clamp<std::size_t>(k, 1, v.size());
  return v[k - 1];
}

}  // namespace tsci
