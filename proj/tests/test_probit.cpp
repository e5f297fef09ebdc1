#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "clubconv/error.hpp"
#include "clubconv/probit.hpp"
#include "oracles.hpp"

using namespace clubconv;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::IoError;
}

DesignMatrix simulate(std::mt19937_64& rng, int n, const Eigen::VectorXd& beta) {
  std::normal_distribution<double> z;
  const auto p = beta.size();
  DesignMatrix d;
  d.X.resize(n, p);
  d.y.resize(n);
  for (Eigen::Index j = 0; j < p; ++j) d.names.push_back(j == 0 ? "const" : "x" + std::to_string(j));
  for (int i = 0; i < n; ++i) {
    d.X(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p; ++j) d.X(i, j) = z(rng);
    const double latent = d.X.row(i).dot(beta) + z(rng);
    d.y(i) = latent > 0 ? 1.0 : 0.0;
  }
  return d;
}

oracle::Mat rows_of(const Eigen::MatrixXd& X) {
  oracle::Mat m(X.rows(), oracle::Vec(X.cols()));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) m[i][j] = X(i, j);
  return m;
}

}  // namespace

TEST_CASE("normal cdf and prediction") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(std::fabs(normal_cdf(1.96) - oracle::normal_cdf_integral(1.96)) < 1e-10);
  CHECK(std::fabs(normal_cdf(1.96) - 0.975) < 1e-4);
  CHECK(std::fabs(normal_cdf(-1.96) - 0.025) < 1e-4);
  CHECK(normal_cdf(-1.96) + normal_cdf(1.96) == doctest::Approx(1.0).epsilon(1e-15));
  for (double zv : {-40.0, -35.0, -31.0, -10.0, -1.0, 0.5, 8.0}) {
    const double ref = zv > -30 ? std::log(normal_cdf(zv)) : log_normal_cdf(zv);
    CHECK(log_normal_cdf(zv) == doctest::Approx(ref).epsilon(1e-12));
  }
  // Continuity across the asymptotic switch.
  CHECK(log_normal_cdf(-30.0 - 1e-9) == doctest::Approx(log_normal_cdf(-30.0 + 1e-9)).epsilon(1e-9));

  ProbitFit fit;
  fit.beta = Eigen::Vector2d(0.5, 1.46);
  CHECK(predict_prob(fit, Eigen::Vector2d(1.0, 1.0)) == doctest::Approx(0.975).epsilon(1e-4));
  CHECK(predict_prob(fit, Eigen::Vector2d(1.0, -0.5 / 1.46)) == doctest::Approx(0.5));
  CHECK(kind_of([&] { predict_prob(fit, Eigen::Vector3d(1, 2, 3)); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("balanced constant-only design") {
  DesignMatrix d{{"const"}, Eigen::MatrixXd::Ones(4, 1), Eigen::Vector4d(0, 1, 0, 1), {}};
  const auto fit = fit_probit(d);
  CHECK(std::fabs(fit.beta(0)) < 1e-12);
  CHECK(predict_prob(fit, Eigen::VectorXd::Ones(1)) == doctest::Approx(0.5));
  CHECK(fit.loglik == doctest::Approx(4 * std::log(0.5)));
  CHECK(fit.loglik_null == doctest::Approx(fit.loglik));
  CHECK(fit.mcfadden_r2 == doctest::Approx(0.0));
  const auto tab = classification_table(fit, d, 0.0);
  CHECK(tab.tp == 2);
  CHECK(tab.fp == 2);
  CHECK(tab.accuracy == doctest::Approx(0.5));
}

TEST_CASE("score matches finite differences of the log-likelihood") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd b0(3);
    b0 << 0.2, -0.7, 1.1;
    const auto d = simulate(rng, 40, b0);
    Eigen::VectorXd beta(3);
    for (int j = 0; j < 3; ++j) beta(j) = z(rng);
    const Eigen::VectorXd g = probit_score(d.X, d.y, beta);
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-5;
      Eigen::VectorXd up = beta, dn = beta;
      up(j) += h;
      dn(j) -= h;
      const double fd = (oracle::probit_loglik(rows_of(d.X), {d.y.data(), d.y.data() + d.y.size()},
                                               {up.data(), up.data() + 3}) -
                         oracle::probit_loglik(rows_of(d.X), {d.y.data(), d.y.data() + d.y.size()},
                                               {dn.data(), dn.data() + 3})) /
                        (2 * h);
      CHECK(std::fabs(g(j) - fd) <= 1e-5 * std::max(1.0, std::fabs(fd)));
    }
    CHECK(probit_loglik(d.X, d.y, beta) ==
          doctest::Approx(oracle::probit_loglik(rows_of(d.X), {d.y.data(), d.y.data() + d.y.size()},
                                                {beta.data(), beta.data() + 3}))
              .epsilon(1e-10));
  }
}

TEST_CASE("fit agrees with direct likelihood maximisation") {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd b0(3);
    b0 << 0.3, 0.8, -0.6;
    const auto d = simulate(rng, 60, b0);
    const auto fit = fit_probit(d);
    const auto X = rows_of(d.X);
    const oracle::Vec y(d.y.data(), d.y.data() + d.y.size());
    const auto nm = oracle::nelder_mead([&](const oracle::Vec& b) { return -oracle::probit_loglik(X, y, b); },
                                        {0, 0, 0});
    for (int j = 0; j < 3; ++j) CHECK(std::fabs(fit.beta(j) - nm[j]) < 1e-5);
    CHECK(fit.max_abs_score < 1e-6);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(probit_hessian(d.X, d.y, fit.beta));
    CHECK(es.eigenvalues().maxCoeff() < 0);
  }
}

TEST_CASE("diagnostics") {
  std::mt19937_64 rng(9);
  Eigen::VectorXd b0(4);
  b0 << 0.5, 1.0, -0.5, 0.2;
  const auto d = simulate(rng, 80, b0);
  const auto fit = fit_probit(d);
  const double n = 80, p = 4;
  const double ybar = d.y.mean();
  CHECK(fit.loglik_null == doctest::Approx(n * (ybar * std::log(ybar) + (1 - ybar) * std::log(1 - ybar))));
  CHECK(std::fabs(fit.lr_stat + 2 * fit.loglik_null * fit.mcfadden_r2) < 1e-10);
  CHECK(fit.lr_stat == doctest::Approx(2 * (fit.loglik - fit.loglik_null)));
  CHECK(fit.lr_df == 3);
  CHECK(fit.aic == doctest::Approx(-2 * fit.loglik + 2 * p));
  CHECK(fit.bic == doctest::Approx(-2 * fit.loglik + p * std::log(n)));
  CHECK(fit.mcfadden_r2 >= 0.0);
  CHECK(fit.mcfadden_r2 < 1.0);
  CHECK(fit.n == 80);
  CHECK(fit.mean_y == doctest::Approx(ybar));
  CHECK((fit.cov_robust - fit.cov_robust.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.cov_robust);
  CHECK(es.eigenvalues().minCoeff() >= -1e-14);
  for (int j = 0; j < 4; ++j) {
    CHECK(fit.se(j) == doctest::Approx(std::sqrt(fit.cov_robust(j, j))));
    CHECK(fit.z(j) == doctest::Approx(fit.beta(j) / fit.se(j)));
    CHECK(fit.p_value(j) == doctest::Approx(2 * normal_cdf(-std::fabs(fit.z(j)))));
  }
  const auto tab = classification_table(fit, d);
  CHECK(tab.tp + tab.tn == fit.n_correct);
  CHECK(tab.tp + tab.tn + tab.fp + tab.fn == 80);

  // Sandwich by hand.
  const Eigen::MatrixXd Hinv = probit_hessian(d.X, d.y, fit.beta).inverse();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 80; ++i) {
    const Eigen::VectorXd gi = probit_score(d.X.row(i), d.y.segment(i, 1), fit.beta);
    meat += gi * gi.transpose();
  }
  const Eigen::MatrixXd sandwich = Hinv * meat * Hinv;
  CHECK((sandwich - fit.cov_robust).cwiseAbs().maxCoeff() < 1e-8 * sandwich.cwiseAbs().maxCoeff());

  ProbitOptions dof;
  dof.small_sample_correction = true;
  const auto fit2 = fit_probit(d, dof);
  CHECK(fit2.cov_robust(1, 1) == doctest::Approx(fit.cov_robust(1, 1) * n / (n - p)));

  ProbitOptions lo;
  lo.start = ProbitStart::LogOdds;
  CHECK((fit_probit(d, lo).beta - fit.beta).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("rescaling and label flip") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd b0(3);
    b0 << -0.2, 0.9, 0.4;
    auto d = simulate(rng, 50, b0);
    const auto fit = fit_probit(d);

    auto scaled = d;
    const double k = rep % 2 ? 1e4 : -0.003;
    scaled.X.col(2) *= k;
    const auto fs = fit_probit(scaled);
    CHECK(fs.beta(2) * k == doctest::Approx(fit.beta(2)).epsilon(1e-8));
    CHECK(fs.loglik == doctest::Approx(fit.loglik).epsilon(1e-10));
    CHECK(fs.mcfadden_r2 == doctest::Approx(fit.mcfadden_r2).epsilon(1e-8));
    CHECK(fs.lr_stat == doctest::Approx(fit.lr_stat).epsilon(1e-8));
    CHECK(fs.n_correct == fit.n_correct);

    auto flipped = d;
    flipped.y = (1.0 - d.y.array()).matrix();
    const auto ff = fit_probit(flipped);
    CHECK((ff.beta + fit.beta).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(ff.loglik == doctest::Approx(fit.loglik).epsilon(1e-10));
  }
}

TEST_CASE("invalid designs") {
  DesignMatrix d{{"const", "x"}, Eigen::MatrixXd(4, 2), Eigen::Vector4d(0, 0, 0, 0), {}};
  d.X << 1, 1, 1, 2, 1, 3, 1, 4;
  CHECK(kind_of([&] { fit_probit(d); }) == ErrorKind::InvalidDesign);
  d.y << 0, 1, 2, 1;
  CHECK(kind_of([&] { fit_probit(d); }) == ErrorKind::InvalidDesign);
  d.y << 0, 1, 0, 1;
  d.X.col(1) = d.X.col(0);
  CHECK(kind_of([&] { fit_probit(d); }) == ErrorKind::Singular);
  DesignMatrix tiny{{"const", "x"}, Eigen::MatrixXd::Ones(2, 2), Eigen::Vector2d(0, 1), {}};
  CHECK(kind_of([&] { fit_probit(tiny); }) == ErrorKind::InvalidDesign);

  // Perfectly separated by x.
  DesignMatrix sep{{"const", "x"}, Eigen::MatrixXd(6, 2), Eigen::VectorXd(6), {}};
  sep.X << 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3;
  sep.y << 0, 0, 0, 1, 1, 1;
  CHECK(kind_of([&] { fit_probit(sep); }) == ErrorKind::Separation);
}

TEST_CASE("known coefficients are covered by three robust standard errors") {
  std::mt19937_64 rng(2020);
  Eigen::VectorXd b0(3);
  b0 << 0.5, -1.0, 2.0;
  int covered = 0;
  const int reps = 500;
  for (int rep = 0; rep < reps; ++rep) {
    const auto fit = fit_probit(simulate(rng, 1000, b0));
    covered += ((fit.beta - b0).cwiseAbs().array() <= 3 * fit.se.array()).all();
  }
  CHECK(covered >= 0.99 * reps);
}

TEST_CASE("threshold zero predicts every observation positive") {
  std::mt19937_64 rng(31);
  Eigen::VectorXd b0(2);
  b0 << 0.1, 0.5;
  const auto d = simulate(rng, 30, b0);
  const auto fit = fit_probit(d);
  const auto tab = classification_table(fit, d, 0.0);
  CHECK(tab.tn + tab.fn == 0);
  CHECK(tab.accuracy == doctest::Approx(d.y.mean()));
}
