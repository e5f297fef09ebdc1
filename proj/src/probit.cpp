#include "clubconv/probit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "clubconv/error.hpp"

namespace clubconv {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kSeparationIndex = 30.0;

// phi(z) / Phi(z), stable in the lower tail.
double inverse_mills(double z) {
  if (z > -30.0) return normal_pdf(z) / normal_cdf(z);
  const double z2 = z * z;
  return -z / (1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2));
}

Eigen::VectorXd signs(const Eigen::VectorXd& y) { return (2.0 * y.array() - 1.0).matrix(); }

}  // namespace

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double log_normal_cdf(double z) {
  if (z > 5.0) return std::log1p(-0.5 * std::erfc(z / kSqrt2));
  if (z > -30.0) return std::log(normal_cdf(z));
  const double z2 = z * z;
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * M_PI) +
         std::log(1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2));
}

double probit_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd q = signs(y);
  const Eigen::VectorXd xb = X * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < xb.size(); ++i) ll += log_normal_cdf(q(i) * xb(i));
  return ll;
}

Eigen::VectorXd probit_score(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd q = signs(y);
  const Eigen::VectorXd xb = X * beta;
  Eigen::VectorXd w(xb.size());
  for (Eigen::Index i = 0; i < xb.size(); ++i) w(i) = q(i) * inverse_mills(q(i) * xb(i));
  return X.transpose() * w;
}

Eigen::MatrixXd probit_hessian(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd q = signs(y);
  const Eigen::VectorXd xb = X * beta;
  Eigen::VectorXd w(xb.size());
  for (Eigen::Index i = 0; i < xb.size(); ++i) {
    const double s = q(i) * xb(i);
    const double lam = inverse_mills(s);
    w(i) = lam * (lam + s);
  }
  return -(X.transpose() * w.asDiagonal() * X);
}

void validate_design(const DesignMatrix& d) {
  const auto n = d.X.rows();
  const auto p = d.X.cols();
  if (d.y.size() != n) throw Error(ErrorKind::InvalidDesign, "outcome length differs from the row count");
  if (static_cast<Eigen::Index>(d.names.size()) != p) {
    throw Error(ErrorKind::InvalidDesign, "covariate names do not match the column count");
  }
  if (!d.row_labels.empty() && static_cast<Eigen::Index>(d.row_labels.size()) != n) {
    throw Error(ErrorKind::InvalidDesign, "row labels do not match the row count");
  }
  if (p < 1 || n <= p) {
    throw Error(ErrorKind::InvalidDesign,
                "need more observations than covariates (n=" + std::to_string(n) + ", p=" + std::to_string(p) + ")");
  }
  if (!d.X.allFinite()) throw Error(ErrorKind::InvalidDesign, "design contains non-finite values");
  int ones = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d.y(i) != 0.0 && d.y(i) != 1.0) throw Error(ErrorKind::InvalidDesign, "outcomes must be 0 or 1");
    ones += d.y(i) == 1.0;
  }
  if (ones == 0 || ones == n) throw Error(ErrorKind::InvalidDesign, "outcome needs both classes");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.X);
  if (qr.rank() < p) throw Error(ErrorKind::Singular, "design matrix is rank deficient");
}

ProbitFit fit_probit(const DesignMatrix& design, const ProbitOptions& opts) {
  validate_design(design);
  const auto n = design.X.rows();
  const auto p = design.X.cols();
  const Eigen::VectorXd& y = design.y;

  // Fit on columns scaled to unit max-abs; undo afterwards.
  Eigen::VectorXd scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double m = design.X.col(j).cwiseAbs().maxCoeff();
    scale(j) = m > 0.0 ? m : 1.0;
  }
  const Eigen::MatrixXd Xs = design.X * scale.cwiseInverse().asDiagonal();

  const double mean_y = y.mean();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (opts.start == ProbitStart::LogOdds) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if ((design.X.col(j).array() == 1.0).all()) {
        beta(j) = boost::math::quantile(boost::math::normal(), mean_y);
        break;
      }
    }
  }

  double ll = probit_loglik(Xs, y, beta);
  bool converged = false;
  int iter = 0;
  Eigen::VectorXd grad;
  for (; iter < opts.max_iter; ++iter) {
    grad = probit_score(Xs, y, beta);
    const Eigen::MatrixXd neg_hess = -probit_hessian(Xs, y, beta);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_hess);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    Eigen::VectorXd step = ldlt.solve(grad);
    if (!step.allFinite()) break;
    if (grad.cwiseAbs().maxCoeff() < opts.grad_tol && step.norm() < opts.step_tol) {
      beta += step;
      converged = true;
      ++iter;
      break;
    }
    double t = 1.0;
    double ll_new = probit_loglik(Xs, y, beta + step);
    while (!(ll_new >= ll - 1e-12 * std::abs(ll)) && t > 1e-12) {
      t *= 0.5;
      ll_new = probit_loglik(Xs, y, beta + t * step);
    }
    if (t <= 1e-12) break;
    beta += t * step;
    ll = ll_new;
    if (beta.cwiseAbs().maxCoeff() > 1e6) break;
  }

  const Eigen::VectorXd q = signs(y);
  const Eigen::VectorXd index = (Xs * beta).cwiseProduct(q);
  const bool extreme = (index.array() > kSeparationIndex).any();
  if (extreme || (!converged && beta.cwiseAbs().maxCoeff() > 50.0)) {
    std::ostringstream msg;
    msg << "likelihood approaches its supremum along direction (";
    const Eigen::VectorXd dir = beta.cwiseQuotient(scale).normalized();
    for (Eigen::Index j = 0; j < p; ++j) msg << (j ? ", " : "") << design.names[static_cast<std::size_t>(j)] << "=" << dir(j);
    msg << ")";
    throw Error(ErrorKind::Separation, msg.str());
  }
  if (!converged) {
    throw Error(ErrorKind::NoConvergence, "Newton-Raphson did not converge in " + std::to_string(opts.max_iter) +
                                              " iterations");
  }

  ProbitFit fit;
  fit.names = design.names;
  fit.n = static_cast<int>(n);
  fit.iterations = iter;
  fit.loglik = probit_loglik(Xs, y, beta);
  fit.max_abs_score = probit_score(Xs, y, beta).cwiseAbs().maxCoeff();

  // Sandwich in scaled coordinates: H^-1 (sum g_i g_i') H^-1.
  const Eigen::MatrixXd hess = probit_hessian(Xs, y, beta);
  const Eigen::MatrixXd hinv = hess.inverse();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
  const Eigen::VectorXd xb = Xs * beta;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd gi = q(i) * inverse_mills(q(i) * xb(i)) * Xs.row(i).transpose();
    meat += gi * gi.transpose();
  }
  Eigen::MatrixXd cov = hinv * meat * hinv;
  if (opts.small_sample_correction) cov *= static_cast<double>(n) / static_cast<double>(n - p);
  const Eigen::VectorXd inv_scale = scale.cwiseInverse();
  fit.beta = beta.cwiseProduct(inv_scale);
  fit.cov_robust = inv_scale.asDiagonal() * cov * inv_scale.asDiagonal();
  fit.cov_robust = 0.5 * (fit.cov_robust + fit.cov_robust.transpose()).eval();
  fit.se = fit.cov_robust.diagonal().cwiseSqrt();
  fit.z = fit.beta.cwiseQuotient(fit.se);
  fit.p_value.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) fit.p_value(j) = std::erfc(std::abs(fit.z(j)) / kSqrt2);

  const double ones = y.sum();
  const double zeros = static_cast<double>(n) - ones;
  fit.mean_y = mean_y;
  fit.sd_y = std::sqrt((y.array() - mean_y).square().sum() / static_cast<double>(n - 1));
  fit.loglik_null = ones * std::log(ones / n) + zeros * std::log(zeros / n);
  fit.mcfadden_r2 = 1.0 - fit.loglik / fit.loglik_null;
  fit.lr_stat = std::max(0.0, 2.0 * (fit.loglik - fit.loglik_null));
  fit.lr_df = static_cast<int>(p) - 1;
  fit.lr_p_value = fit.lr_df > 0 ? boost::math::gamma_q(fit.lr_df / 2.0, fit.lr_stat / 2.0) : 1.0;
  fit.aic = -2.0 * fit.loglik + 2.0 * static_cast<double>(p);
  fit.bic = -2.0 * fit.loglik + static_cast<double>(p) * std::log(static_cast<double>(n));

  const Classification table = classification_table(fit, design);
  fit.n_correct = table.tp + table.tn;
  return fit;
}

double predict_prob(const ProbitFit& fit, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != fit.beta.size()) {
    throw Error(ErrorKind::DimensionMismatch, "covariate vector has " + std::to_string(x.size()) +
                                                  " entries, model has " + std::to_string(fit.beta.size()));
  }
  return normal_cdf(x.dot(fit.beta));
}

Classification classification_table(const ProbitFit& fit, const DesignMatrix& design, double threshold) {
  if (design.X.cols() != fit.beta.size()) {
    throw Error(ErrorKind::DimensionMismatch, "design does not match the fitted model");
  }
  Classification c;
  for (Eigen::Index i = 0; i < design.X.rows(); ++i) {
    const bool predicted = normal_cdf(design.X.row(i).dot(fit.beta)) > threshold;
    const bool actual = design.y(i) == 1.0;
    if (predicted && actual) ++c.tp;
    else if (!predicted && !actual) ++c.tn;
    else if (predicted) ++c.fp;
    else ++c.fn;
  }
  const auto n = design.X.rows();
  c.accuracy = n > 0 ? static_cast<double>(c.tp + c.tn) / static_cast<double>(n) : 0.0;
  return c;
}

}  // namespace clubconv
