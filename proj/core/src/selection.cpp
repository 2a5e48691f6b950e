#include "tsci/selection.hpp"

#include <cmath>
#include <limits>

#include "tsci/error.hpp"
#include "tsci/stats.hpp"
#include "tsci/strength.hpp"

namespace tsci {
namespace {

constexpr std::uint64_t kComparisonTag = 0xc0b9;

}  // namespace

double h_hat(const Vector& eps_qmax, const Vector& md_q, double denom_q, const Vector& md_qp, double denom_qp) {
  if (!(denom_q > 0.0) || !(denom_qp > 0.0)) throw WeakIvError("h_hat: non-positive D'MD");
  const auto e2 = eps_qmax.array().square();
  const double term_qp = (e2 * md_qp.array().square()).sum() / (denom_qp * denom_qp);
  const double term_q = (e2 * md_q.array().square()).sum() / (denom_q * denom_q);
  const double cross = (e2 * md_q.array() * md_qp.array()).sum() / (denom_qp * denom_q);
  const double h = term_qp + term_q - 2.0 * cross;
  if (h >= 0.0) return h;
  if (h >= -1e-10) return 0.0;
  throw DegenerateError("h_hat: variance estimate " + std::to_string(h) + " is negative");
}

double comparison_bootstrap_rho(const Vector& d, const Vector& eps_qmax, const std::vector<const TransformMatrix*>& ms,
                                double alpha0, int l, std::uint64_t seed) {
  if (ms.size() < 2) throw UsageError("comparison bootstrap needs at least two violation spaces");
  if (l < 50) throw UsageError("bootstrap needs L >= 50, got " + std::to_string(l));
  if (!(alpha0 > 0.0 && alpha0 < 0.5)) throw UsageError("alpha0 must lie in (0, 0.5)");

  const std::size_t k = ms.size();
  std::vector<Vector> md(k);
  std::vector<double> den(k);
  for (std::size_t j = 0; j < k; ++j) {
    md[j] = ms[j]->m * d;
    den[j] = d.dot(md[j]);
  }

  struct Pair {
    std::size_t q, qp;
    double inv_sd;
  };
  std::vector<Pair> pairs;
  for (std::size_t q = 0; q < k; ++q)
    for (std::size_t qp = q + 1; qp < k; ++qp) {
      const double h = h_hat(eps_qmax, md[q], den[q], md[qp], den[qp]);
      if (h > 0.0) pairs.push_back({q, qp, 1.0 / std::sqrt(h)});
    }
  if (pairs.empty()) return 0.0;

  const Vector centered = eps_qmax.array() - eps_qmax.mean();
  Matrix draws(centered.size(), l);
  for (int b = 0; b < l; ++b) draws.col(b) = bootstrap_multipliers(seed, kComparisonTag, b, centered.size()).cwiseProduct(centered);

  // Row j of `proj` holds D' M_j e^[l] / D' M_j D for every l.
  Matrix basis(centered.size(), static_cast<Index>(k));
  for (std::size_t j = 0; j < k; ++j) basis.col(static_cast<Index>(j)) = md[j] / den[j];
  const Matrix proj = basis.transpose() * draws;

  std::vector<double> stats(static_cast<std::size_t>(l));
  for (int b = 0; b < l; ++b) {
    double t = 0.0;
    for (const Pair& p : pairs)
      t = std::max(t, std::abs(proj(static_cast<Index>(p.qp), b) - proj(static_cast<Index>(p.q), b)) * p.inv_sd);
    stats[static_cast<std::size_t>(b)] = t;
  }
  return upper_empirical_quantile(stats, alpha0);
}

int layer_test(int q, int q_max, const std::vector<PairwiseEntry>& pairwise, double rho_hat) {
  if (q >= q_max) return 0;
  for (const PairwiseEntry& e : pairwise)
    if (e.q == q && e.q_prime > q && e.q_prime <= q_max && e.stat > rho_hat) return 1;
  return 0;
}

SelectionReport select_violation_space(const SelectionInputs& in) {
  if (!in.y || !in.d || !in.f_hat || in.transforms.empty()) throw UsageError("selection: incomplete inputs");
  const Vector& y = *in.y;
  const Vector& d = *in.d;
  const Vector& f_hat = *in.f_hat;

  SelectionReport rep;
  rep.q_max = static_cast<int>(in.transforms.size()) - 1;
  const TransformMatrix& top = *in.transforms.back();

  const double b_top = beta_init(y, d, top.m);
  const Vector eps_top = residual_eps(y, d, b_top, top.projector);

  EstimateOptions opts;
  opts.alpha = in.alpha;
  for (int q = 0; q <= rep.q_max; ++q)
    rep.fits.push_back(estimate_tsci(y, d, f_hat, *in.transforms[static_cast<std::size_t>(q)], q, opts, &eps_top));

  if (rep.q_max == 0) {
    rep.layer_flags = {0};
    rep.notes.push_back("Q_max = 0: no larger violation space to compare against");
    return rep;
  }

  std::vector<Vector> md;
  for (const TransformMatrix* tm : in.transforms) md.push_back(tm->m * d);
  const double z0 = normal_quantile(1.0 - in.alpha0);
  for (int q = 0; q <= rep.q_max; ++q)
    for (int qp = q + 1; qp <= rep.q_max; ++qp) {
      const TsciFit& a = rep.fits[static_cast<std::size_t>(q)];
      const TsciFit& b = rep.fits[static_cast<std::size_t>(qp)];
      PairwiseEntry e;
      e.q = q;
      e.q_prime = qp;
      e.diff = a.beta - b.beta;
      e.h_hat = h_hat(eps_top, md[static_cast<std::size_t>(q)], a.denom, md[static_cast<std::size_t>(qp)], b.denom);
      if (e.h_hat > 0.0) {
        e.stat = std::abs(e.diff) / std::sqrt(e.h_hat);
      } else {
        e.stat = e.diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        if (e.diff != 0.0)
          rep.notes.push_back("zero variance estimate for pair (" + std::to_string(q) + ", " + std::to_string(qp) +
                              ") with a nonzero difference");
      }
      e.exceeds_z = e.stat > z0;
      rep.pairwise.push_back(e);
    }

  rep.rho_hat = comparison_bootstrap_rho(d, eps_top, in.transforms, in.alpha0, in.l, in.seed);
  for (int q = 0; q <= rep.q_max; ++q) rep.layer_flags.push_back(layer_test(q, rep.q_max, rep.pairwise, rep.rho_hat));

  rep.q_c = rep.q_max;
  for (int q = 0; q <= rep.q_max; ++q)
    if (rep.layer_flags[static_cast<std::size_t>(q)] == 0) {
      rep.q_c = q;
      break;
    }
  rep.q_r = std::min(rep.q_c + 1, rep.q_max);
  rep.invalid_iv = rep.layer_flags.front() == 1;
  return rep;
}

}  // namespace tsci
