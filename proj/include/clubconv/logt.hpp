#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clubconv/panel.hpp"

namespace clubconv {

// Relative transition paths: h(i, t) = y(i, t) / cross-sectional mean at t,
// and H(t) = mean over units of (h(i, t) - 1)^2.
struct TransitionPaths {
  Eigen::MatrixXd h;
  Eigen::VectorXd H;
  std::vector<UnitId> units;
  std::vector<int> periods;
};

enum class Decision { ConvergenceNotRejected, Rejected };
enum class ConvergenceClass { Absolute, Conditional, NotApplicable };

const char* to_string(Decision d);
const char* to_string(ConvergenceClass c);

struct RegressionSample {
  int first_t = 0;  // 1-based period index of the first regression observation
  int count = 0;
};

struct LogTResult {
  double a_hat = 0.0;
  double b_hat = 0.0;
  double se_hac = 0.0;
  double t_stat = 0.0;
  double alpha_hat = 0.0;
  double r = 0.0;
  RegressionSample sample;
  int bandwidth = 0;
  Decision decision = Decision::Rejected;
  ConvergenceClass cls = ConvergenceClass::NotApplicable;
  // Set when the group consists of identical series; no regression was run.
  bool degenerate = false;
};

struct HacConfig {
  std::optional<int> bandwidth;  // empty: floor(4 (S/100)^(2/9))
};

struct LogTConfig {
  double r = 0.3;
  HacConfig hac;
  double critical_value = -1.65;
  SmoothingConfig smoothing;
};

TransitionPaths relative_transitions(const Panel& panel);

// H(t) for a set of raw series given as matrix rows.
Eigen::VectorXd cross_sectional_variance(const Eigen::Ref<const Eigen::MatrixXd>& values);

int automatic_bandwidth(int sample_size);

// First 1-based period index of the trimmed regression sample, [rT] floored at 2.
int regression_start(double r, int n_periods);

double newey_west_lrv(std::span<const double> residuals, std::span<const double> regressor, int bandwidth);

LogTResult logt_regress(const Eigen::Ref<const Eigen::VectorXd>& H, double r, const HacConfig& hac,
                        double critical_value);
LogTResult logt_regress(const TransitionPaths& paths, double r, const HacConfig& hac, double critical_value);

// Log-t test on raw rows with no smoothing step; the clustering inner loop.
LogTResult logt_on_values(const Eigen::Ref<const Eigen::MatrixXd>& values, const LogTConfig& cfg);

// smooth -> relative_transitions -> logt_regress.
LogTResult convergence_test(const Panel& panel, const LogTConfig& cfg);

// Fills decision and class from b_hat and t_stat.
void classify(LogTResult& result, double critical_value);

}  // namespace clubconv
