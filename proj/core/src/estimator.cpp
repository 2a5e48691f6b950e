#include "tsci/estimator.hpp"

#include <cmath>
#include <limits>

#include "tsci/error.hpp"
#include "tsci/stats.hpp"

namespace tsci {

std::string to_string(CorrectionKind kind) {
  switch (kind) {
    case CorrectionKind::homo: return "homo";
    case CorrectionKind::hetero: return "hetero";
    case CorrectionKind::hetero_seq: return "hetero-seq";
  }
  return "unknown";
}

std::string to_string(SeKind kind) { return kind == SeKind::homo ? "homo" : "hetero"; }

double beta_init(const Vector& y, const Vector& d, const Matrix& m) {
  const Vector md = m * d;
  const double denom = d.dot(md);
  if (!(denom > 0.0)) throw WeakIvError("D'MD = " + std::to_string(denom) + " is not positive");
  return y.dot(md) / denom;
}

double cov_hat(const Vector& d, const Vector& f_hat, const Vector& y, double beta_init, const ResidualProjector& p) {
  const Index n1 = d.size();
  if (n1 <= p.rank()) throw DegenerateError("cov_hat: n1 does not exceed rank([V | W])");
  const Vector resid = p.apply(Vector(y - d * beta_init));
  return (d - f_hat).dot(resid) / static_cast<double>(n1 - p.rank());
}

double beta_corrected_homo(double beta_init, double cov_hat, double trace_m, double denom) {
  return beta_init - cov_hat * trace_m / denom;
}

double beta_corrected_hetero(double beta_init, const Matrix& m, const Vector& d, const Vector& f_hat,
                             const Vector& eps_hat, double denom) {
  const Vector delta = d - f_hat;
  double s = 0.0;
  for (Index i = 0; i < d.size(); ++i) s += m(i, i) * delta(i) * eps_hat(i);
  return beta_init - s / denom;
}

Vector residual_eps(const Vector& y, const Vector& d, double beta, const ResidualProjector& p) {
  return p.apply(Vector(y - d * beta));
}

double se_hetero(const Vector& eps_hat, const Matrix& m, const Vector& d, double denom) {
  const Vector md = m * d;
  return std::sqrt((eps_hat.array().square() * md.array().square()).sum()) / denom;
}

double se_homo(const Vector& eps_hat, const Matrix& m, const Vector& d, double denom, Index rank) {
  const Index len = eps_hat.size();
  if (len <= rank) throw DegenerateError("se_homo: residual length does not exceed rank");
  const double sigma = std::sqrt(eps_hat.squaredNorm() / static_cast<double>(len - rank));
  return sigma * (m * d).norm() / denom;
}

Interval confidence_interval(double beta, double se, double alpha) {
  const double half = z_two_sided(alpha) * se;
  return {beta - half, beta + half};
}

TsciFit estimate_tsci(const Vector& y, const Vector& d, const Vector& f_hat, const TransformMatrix& tm, int q,
                      const EstimateOptions& options, const Vector* eps_override) {
  TsciFit fit;
  fit.q = q;
  fit.trace_m = tm.trace_m;
  const Vector md = tm.m * d;
  fit.denom = d.dot(md);
  if (!(fit.denom > 0.0)) throw WeakIvError("D'MD = " + std::to_string(fit.denom) + " is not positive at q = " + std::to_string(q));
  fit.beta_init = y.dot(md) / fit.denom;

  const Vector eps = residual_eps(y, d, fit.beta_init, tm.projector);
  const Vector& eps_corr = eps_override ? *eps_override : eps;

  fit.correction_kind = options.correction;
  if (options.correction == CorrectionKind::homo) {
    const double c = cov_hat(d, f_hat, y, fit.beta_init, tm.projector);
    fit.beta = beta_corrected_homo(fit.beta_init, c, tm.trace_m, fit.denom);
  } else {
    if (eps_override) fit.correction_kind = CorrectionKind::hetero_seq;
    fit.beta = beta_corrected_hetero(fit.beta_init, tm.m, d, f_hat, eps_corr, fit.denom);
  }

  fit.se_kind = options.se;
  fit.se = options.se == SeKind::homo ? se_homo(eps, tm.m, d, fit.denom, tm.v_rank) : se_hetero(eps, tm.m, d, fit.denom);
  if (!(fit.se > 0.0)) fit.warnings.push_back("zero standard error: degenerate inference");

  const Interval ci = confidence_interval(fit.beta, fit.se, options.alpha);
  fit.ci_lo = ci.lo;
  fit.ci_hi = ci.hi;

  const double resid_sq = (d - f_hat).squaredNorm();
  fit.mu_hat = resid_sq > 0.0 ? fit.denom / (resid_sq / static_cast<double>(d.size()))
                              : std::numeric_limits<double>::quiet_NaN();
  return fit;
}

namespace {

BaselineFit finish(BaselineFit fit, double alpha) {
  const Interval ci = confidence_interval(fit.beta, fit.se, alpha);
  fit.ci_lo = ci.lo;
  fit.ci_hi = ci.hi;
  return fit;
}

BaselineFit failed(std::string name, std::string note) {
  BaselineFit fit;
  fit.name = std::move(name);
  fit.ok = false;
  fit.note = std::move(note);
  fit.beta = fit.se = fit.ci_lo = fit.ci_hi = std::numeric_limits<double>::quiet_NaN();
  return fit;
}

}  // namespace

BaselineFit rf_init(const Vector& y, const Vector& d, const TransformMatrix& tm, double alpha) {
  const Vector md = tm.m * d;
  const double denom = d.dot(md);
  if (!(denom > 0.0)) return failed("rf_init", "D'MD is not positive");
  BaselineFit fit;
  fit.name = "rf_init";
  fit.beta = y.dot(md) / denom;
  fit.se = se_homo(residual_eps(y, d, fit.beta, tm.projector), tm.m, d, denom, tm.v_rank);
  return finish(fit, alpha);
}

BaselineFit rf_plug(const Vector& y, const Vector& d, const Vector& f_hat, const ResidualProjector& p, double alpha) {
  const Vector pf = p.apply(f_hat);
  const double denom = f_hat.dot(pf);
  if (!(denom > 0.0)) return failed("rf_plug", "f_hat'P f_hat is not positive");
  BaselineFit fit;
  fit.name = "rf_plug";
  fit.beta = y.dot(pf) / denom;
  const double rss = residual_eps(y, d, fit.beta, p).squaredNorm();
  fit.se = std::sqrt(rss / (static_cast<double>(y.size()) * denom));
  return finish(fit, alpha);
}

BaselineFit rf_ee(const Vector& y, const Vector& d, const Vector& f_hat, const ResidualProjector& p, double alpha) {
  const Vector pf = p.apply(f_hat);
  const double denom = d.dot(pf);
  if (denom == 0.0) return failed("rf_ee", "D'P f_hat is zero");
  BaselineFit fit;
  fit.name = "rf_ee";
  fit.negative_denominator = denom < 0.0;
  if (fit.negative_denominator) fit.note = "negative D'P f_hat";
  fit.beta = y.dot(pf) / denom;
  const Vector e = residual_eps(y, d, fit.beta, p);
  fit.se = std::sqrt((pf.array().square() * e.array().square()).sum()) / std::abs(denom);
  return finish(fit, alpha);
}

BaselineFit rf_full(const Vector& y, const Vector& d, const TransformMatrix& full_tm, double alpha) {
  const Vector md = full_tm.m * d;
  const double denom = d.dot(md);
  if (!(denom > 0.0)) return failed("rf_full", "D'M D is not positive");
  BaselineFit fit;
  fit.name = "rf_full";
  fit.beta = y.dot(md) / denom;
  const double sigma =
      std::sqrt(residual_eps(y, d, fit.beta, full_tm.projector).squaredNorm() / static_cast<double>(y.size()));
  fit.se = sigma * md.norm() / denom;
  return finish(fit, alpha);
}

BaselineFit tsls(const Vector& y, const Vector& d, const Matrix& z, const Matrix& w, double alpha) {
  const Index n = y.size();
  const Matrix x = hcat(Matrix(d), w);
  const Matrix q = orthonormal_basis(hcat(z, w));
  if (q.cols() < x.cols()) return failed("tsls", "fewer instruments than regressors");
  const Matrix x_hat = q * (q.transpose() * x);
  Eigen::ColPivHouseholderQR<Matrix> qr(x_hat);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < x.cols()) return failed("tsls", "first-stage fitted regressors are rank deficient");
  const Vector b = qr.solve(y);
  if (n <= x.cols()) return failed("tsls", "no residual degrees of freedom");
  const double sigma2 = (y - x * b).squaredNorm() / static_cast<double>(n - x.cols());
  const Matrix xtx_inv = (x_hat.transpose() * x_hat).inverse();

  BaselineFit fit;
  fit.name = "tsls";
  fit.beta = b(0);
  fit.se = std::sqrt(sigma2 * xtx_inv(0, 0));
  return finish(fit, alpha);
}

}  // namespace tsci
