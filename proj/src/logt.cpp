#include "clubconv/logt.hpp"

#include <cmath>
#include <string>

#include "clubconv/error.hpp"

namespace clubconv {

const char* to_string(Decision d) {
  return d == Decision::ConvergenceNotRejected ? "ConvergenceNotRejected" : "Rejected";
}

const char* to_string(ConvergenceClass c) {
  switch (c) {
    case ConvergenceClass::Absolute: return "Absolute";
    case ConvergenceClass::Conditional: return "Conditional";
    case ConvergenceClass::NotApplicable: return "NotApplicable";
  }
  return "NotApplicable";
}

namespace {

Eigen::MatrixXd relative_matrix(const Eigen::Ref<const Eigen::MatrixXd>& values) {
  const Eigen::RowVectorXd mean = values.colwise().mean();
  for (Eigen::Index t = 0; t < mean.size(); ++t) {
    if (!(mean(t) > 0.0)) {
      throw Error(ErrorKind::DegenerateVariance,
                  "cross-sectional mean is zero at period index " + std::to_string(t + 1));
    }
  }
  return values.array().rowwise() / mean.array();
}

Eigen::VectorXd variance_of(const Eigen::MatrixXd& h) {
  return (h.array() - 1.0).square().colwise().mean().transpose();
}

}  // namespace

TransitionPaths relative_transitions(const Panel& panel) {
  TransitionPaths paths;
  paths.h = relative_matrix(panel.values());
  paths.H = variance_of(paths.h);
  paths.units = panel.units();
  paths.periods = panel.periods();
  return paths;
}

Eigen::VectorXd cross_sectional_variance(const Eigen::Ref<const Eigen::MatrixXd>& values) {
  return variance_of(relative_matrix(values));
}

int automatic_bandwidth(int sample_size) {
  return static_cast<int>(std::floor(4.0 * std::pow(sample_size / 100.0, 2.0 / 9.0)));
}

int regression_start(double r, int n_periods) {
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorKind::InvalidConfig, "trimming fraction must lie in (0, 1)");
  // Guard against r*T landing a hair below an integer (0.29 * 100 = 28.999...).
  const int start = static_cast<int>(std::floor(r * n_periods + 1e-9));
  return start < 2 ? 2 : start;
}

double newey_west_lrv(std::span<const double> residuals, std::span<const double> regressor, int bandwidth) {
  if (residuals.size() != regressor.size()) {
    throw Error(ErrorKind::DimensionMismatch, "residual and regressor lengths differ");
  }
  const auto n = residuals.size();
  if (n < 2) throw Error(ErrorKind::SampleTooSmall, "long-run variance needs at least 2 observations");
  if (bandwidth < 0 || static_cast<std::size_t>(bandwidth) >= n) {
    throw Error(ErrorKind::BandwidthTooLarge,
                "bandwidth " + std::to_string(bandwidth) + " for " + std::to_string(n) + " observations");
  }
  double xbar = 0.0;
  for (double x : regressor) xbar += x;
  xbar /= static_cast<double>(n);
  std::vector<double> score(n);
  for (std::size_t t = 0; t < n; ++t) score[t] = residuals[t] * (regressor[t] - xbar);

  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = lag; t < n; ++t) s += score[t] * score[t - lag];
    return s / static_cast<double>(n);
  };
  double lrv = autocov(0);
  for (int lag = 1; lag <= bandwidth; ++lag) {
    const double w = 1.0 - static_cast<double>(lag) / (bandwidth + 1.0);
    lrv += 2.0 * w * autocov(static_cast<std::size_t>(lag));
  }
  return lrv < 0.0 ? 0.0 : lrv;
}

void classify(LogTResult& result, double critical_value) {
  result.alpha_hat = result.b_hat / 2.0;
  result.decision = result.t_stat < critical_value ? Decision::Rejected : Decision::ConvergenceNotRejected;
  if (result.decision == Decision::Rejected) {
    result.cls = ConvergenceClass::NotApplicable;
  } else if (result.b_hat >= 2.0) {
    result.cls = ConvergenceClass::Absolute;
  } else if (result.b_hat >= 0.0) {
    result.cls = ConvergenceClass::Conditional;
  } else {
    result.cls = ConvergenceClass::NotApplicable;
  }
}

LogTResult logt_regress(const Eigen::Ref<const Eigen::VectorXd>& H, double r, const HacConfig& hac,
                        double critical_value) {
  const int T = static_cast<int>(H.size());
  if (T < 5) throw Error(ErrorKind::SampleTooSmall, "log-t regression needs T >= 5");
  const int start = regression_start(r, T);
  const int count = T - start + 1;
  if (count < 3) {
    throw Error(ErrorKind::SampleTooSmall, std::to_string(count) + " regression observations, need 3");
  }
  if (!(H(0) > 0.0)) throw Error(ErrorKind::DegenerateVariance, "H_1 is zero");
  for (int t = start; t <= T; ++t) {
    if (!(H(t - 1) > 0.0)) {
      throw Error(ErrorKind::DegenerateVariance, "H_t is zero at period index " + std::to_string(t));
    }
  }

  std::vector<double> x(static_cast<std::size_t>(count));
  std::vector<double> y(static_cast<std::size_t>(count));
  const double log_h1 = std::log(H(0));
  for (int k = 0; k < count; ++k) {
    const double t = start + k;
    const double log_t = std::log(t);
    x[static_cast<std::size_t>(k)] = log_t;
    y[static_cast<std::size_t>(k)] = log_h1 - std::log(H(start + k - 1)) - 2.0 * std::log(log_t);
  }

  double xbar = 0.0;
  double ybar = 0.0;
  for (int k = 0; k < count; ++k) {
    xbar += x[static_cast<std::size_t>(k)];
    ybar += y[static_cast<std::size_t>(k)];
  }
  xbar /= count;
  ybar /= count;
  double sxx = 0.0;
  double sxy = 0.0;
  for (int k = 0; k < count; ++k) {
    const double dx = x[static_cast<std::size_t>(k)] - xbar;
    sxx += dx * dx;
    sxy += dx * (y[static_cast<std::size_t>(k)] - ybar);
  }

  LogTResult out;
  out.r = r;
  out.sample = {start, count};
  out.b_hat = sxy / sxx;
  out.a_hat = ybar - out.b_hat * xbar;

  std::vector<double> resid(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const auto i = static_cast<std::size_t>(k);
    resid[i] = y[i] - out.a_hat - out.b_hat * x[i];
  }
  out.bandwidth = hac.bandwidth ? *hac.bandwidth : automatic_bandwidth(count);
  const double lrv = newey_west_lrv(resid, x, out.bandwidth);
  out.se_hac = std::sqrt(count * lrv) / sxx;
  if (out.se_hac > 0.0) {
    out.t_stat = out.b_hat / out.se_hac;
  } else {
    // Exact fit: the sign of the slope decides.
    out.t_stat = out.b_hat == 0.0 ? 0.0 : std::copysign(HUGE_VAL, out.b_hat);
  }
  classify(out, critical_value);
  return out;
}

LogTResult logt_regress(const TransitionPaths& paths, double r, const HacConfig& hac, double critical_value) {
  return logt_regress(paths.H, r, hac, critical_value);
}

LogTResult logt_on_values(const Eigen::Ref<const Eigen::MatrixXd>& values, const LogTConfig& cfg) {
  return logt_regress(cross_sectional_variance(values), cfg.r, cfg.hac, cfg.critical_value);
}

LogTResult convergence_test(const Panel& panel, const LogTConfig& cfg) {
  const Panel prepared = smooth(panel, cfg.smoothing);
  return logt_regress(relative_transitions(prepared), cfg.r, cfg.hac, cfg.critical_value);
}

}  // namespace clubconv
