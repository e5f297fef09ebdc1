#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace clubconv {

// n observations of p named covariates (the first usually the constant) and a
// 0/1 outcome.
struct DesignMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> row_labels;  // optional, one per observation
};

// Throws InvalidDesign (shape, outcome coding, single class) or Singular (rank).
void validate_design(const DesignMatrix& design);

enum class ProbitStart { Zero, LogOdds };

struct ProbitOptions {
  int max_iter = 100;
  double grad_tol = 1e-8;
  double step_tol = 1e-10;
  ProbitStart start = ProbitStart::Zero;
  // Multiplies the sandwich by n / (n - p).
  bool small_sample_correction = false;
};

struct ProbitFit {
  std::vector<std::string> names;
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov_robust;
  Eigen::VectorXd se;
  Eigen::VectorXd z;
  Eigen::VectorXd p_value;
  double loglik = 0.0;
  double loglik_null = 0.0;
  double mcfadden_r2 = 0.0;
  double lr_stat = 0.0;
  int lr_df = 0;
  double lr_p_value = 1.0;
  int n = 0;
  int n_correct = 0;
  double aic = 0.0;
  double bic = 0.0;
  double mean_y = 0.0;
  double sd_y = 0.0;
  int iterations = 0;
  // Largest absolute score component at the optimum, in column-scaled coordinates.
  double max_abs_score = 0.0;
};

double normal_cdf(double z);
double normal_pdf(double z);
double log_normal_cdf(double z);

double probit_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);
Eigen::VectorXd probit_score(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);
Eigen::MatrixXd probit_hessian(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta);

ProbitFit fit_probit(const DesignMatrix& design, const ProbitOptions& opts = {});

double predict_prob(const ProbitFit& fit, const Eigen::Ref<const Eigen::VectorXd>& x);

struct Classification {
  int tp = 0;
  int tn = 0;
  int fp = 0;
  int fn = 0;
  double accuracy = 0.0;
};

// Predicts 1 when the fitted probability exceeds the threshold.
Classification classification_table(const ProbitFit& fit, const DesignMatrix& design, double threshold = 0.5);

}  // namespace clubconv
