#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "clubconv/error.hpp"
#include "clubconv/logt.hpp"
#include "clubconv/simlab.hpp"
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

// H_t chosen so that log(H1/Ht) - 2 log log t = a + b log t exactly for t >= 2.
Eigen::VectorXd exact_H(int T, double a, double b) {
  Eigen::VectorXd H(T);
  H(0) = 0.5;
  for (int t = 2; t <= T; ++t) {
    const double lt = std::log(static_cast<double>(t));
    H(t - 1) = H(0) / std::exp(a + b * lt + 2.0 * std::log(lt));
  }
  return H;
}

}  // namespace

TEST_CASE("two-unit relative transitions") {
  // y = (1, 2) at every period: mean 1.5, h = (2/3, 4/3), H = 1/9.
  const auto p = oracle::make_panel({{1, 1, 1, 1, 1}, {2, 2, 2, 2, 2}});
  const auto paths = relative_transitions(p);
  for (int t = 0; t < 5; ++t) {
    CHECK(paths.h(0, t) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(paths.H(t) == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
  }
}

TEST_CASE("identical units give DegenerateVariance") {
  const auto p = oracle::make_panel({{1, 2, 3, 4, 5, 6}, {1, 2, 3, 4, 5, 6}, {1, 2, 3, 4, 5, 6}});
  CHECK(kind_of([&] { convergence_test(p, {}); }) == ErrorKind::DegenerateVariance);
}

TEST_CASE("exact linear fit recovers a and b for any HAC setting") {
  const auto H = exact_H(30, 0.7, -0.4);
  for (std::optional<int> bw : {std::optional<int>{}, std::optional<int>{0}, std::optional<int>{3}}) {
    const auto res = logt_regress(H, 0.3, HacConfig{bw}, -1.65);
    CHECK(std::fabs(res.a_hat - 0.7) < 1e-10);
    CHECK(std::fabs(res.b_hat + 0.4) < 1e-10);
    CHECK(res.alpha_hat == res.b_hat / 2);
    CHECK(res.decision == Decision::Rejected);
  }
}

TEST_CASE("regression sample") {
  CHECK(regression_start(0.3, 15) == 4);
  CHECK(regression_start(0.3, 40) == 12);
  CHECK(regression_start(0.29, 100) == 29);
  CHECK(regression_start(0.1, 5) == 2);
  CHECK(kind_of([] { regression_start(1.0, 10); }) == ErrorKind::InvalidConfig);
  const auto res = logt_regress(exact_H(15, 0.1, 0.2), 0.3, {}, -1.65);
  CHECK(res.sample.first_t == 4);
  CHECK(res.sample.count == 12);
  CHECK(res.bandwidth == automatic_bandwidth(12));
  CHECK(automatic_bandwidth(100) == 4);
  CHECK(automatic_bandwidth(12) == 2);
  CHECK(kind_of([] { logt_regress(exact_H(5, 0, 0), 0.9, {}, -1.65); }) == ErrorKind::SampleTooSmall);
}

TEST_CASE("Newey-West long-run variance") {
  const std::vector<double> e{0.5, -1.0, 0.25, 2.0, -0.75, 0.1};
  const std::vector<double> x{1, 2, 3, 4, 5, 6};
  double white = 0;
  for (std::size_t i = 0; i < e.size(); ++i) white += std::pow(e[i] * (x[i] - 3.5), 2);
  white /= 6.0;
  CHECK(newey_west_lrv(e, x, 0) == doctest::Approx(white).epsilon(1e-14));

  // Hand-computed lag-1 term.
  std::vector<double> s(6);
  for (int i = 0; i < 6; ++i) s[i] = e[i] * (x[i] - 3.5);
  double g1 = 0;
  for (int i = 1; i < 6; ++i) g1 += s[i] * s[i - 1];
  CHECK(newey_west_lrv(e, x, 1) == doctest::Approx(white + 2 * 0.5 * g1 / 6).epsilon(1e-14));

  CHECK(kind_of([&] { newey_west_lrv(e, x, 6); }) == ErrorKind::BandwidthTooLarge);
  CHECK(kind_of([&] { newey_west_lrv(e, std::vector<double>{1, 2}, 0); }) == ErrorKind::DimensionMismatch);

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z;
  std::vector<double> res(10000), ones(10000);
  for (std::size_t i = 0; i < res.size(); ++i) {
    res[i] = z(rng);
    // Regressor alternating +-1 so that the demeaned regressor is +-1 and scores are the residuals.
    ones[i] = i % 2 ? 1.0 : -1.0;
  }
  CHECK(std::fabs(newey_west_lrv(res, ones, 4) - 1.0) < 0.05);

  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> a(20), b(20);
    for (int i = 0; i < 20; ++i) {
      a[i] = z(rng) + (i > 0 ? 0.9 * a[i - 1] : 0);
      b[i] = z(rng);
    }
    CHECK(newey_west_lrv(a, b, rep % 20) >= 0.0);
  }
}

TEST_CASE("OLS matches the normal equations on random panels") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> nd(3, 30), td(10, 50);
  for (int rep = 0; rep < 60; ++rep) {
    const auto p = oracle::random_panel(rng, nd(rng), td(rng));
    const auto res = convergence_test(p, {});
    const auto ref = oracle::logt_normal_equations(oracle::cross_variance(p), regression_start(0.3, p.n_periods()));
    CHECK(std::fabs(res.a_hat - ref.a) < 1e-8);
    CHECK(std::fabs(res.b_hat - ref.b) < 1e-8);
  }
}

TEST_CASE("h has unit cross-sectional mean; scale and permutation invariance") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const auto p = oracle::random_panel(rng, 12, 20);
    const auto paths = relative_transitions(p);
    CHECK((paths.h.colwise().mean().array() - 1.0).abs().maxCoeff() < 1e-12);

    const auto base = convergence_test(p, {});
    for (double k : {0.05, 20.0}) {
      const auto s = convergence_test(p.scaled(k), {});
      CHECK(s.b_hat == doctest::Approx(base.b_hat).epsilon(1e-9));
      CHECK(s.t_stat == doctest::Approx(base.t_stat).epsilon(1e-9));
      CHECK(s.decision == base.decision);
      CHECK(s.cls == base.cls);
    }
    std::vector<std::size_t> rows(12);
    std::iota(rows.rbegin(), rows.rend(), 0);
    const auto perm = convergence_test(p.select_units(rows), {});
    CHECK(perm.b_hat == doctest::Approx(base.b_hat).epsilon(1e-9));
  }
}

TEST_CASE("classification fields") {
  LogTResult r;
  r.b_hat = 2.5;
  r.t_stat = 3.0;
  classify(r, -1.65);
  CHECK(r.cls == ConvergenceClass::Absolute);
  CHECK(r.alpha_hat == 1.25);
  r.b_hat = 0.055;
  r.t_stat = 3.329;
  classify(r, -1.65);
  CHECK(r.cls == ConvergenceClass::Conditional);
  CHECK(r.alpha_hat == doctest::Approx(0.0275));
  r.b_hat = -0.3;
  r.t_stat = -1.0;
  classify(r, -1.65);
  CHECK(r.decision == Decision::ConvergenceNotRejected);
  CHECK(r.cls == ConvergenceClass::NotApplicable);
  r.t_stat = -1.7;
  classify(r, -1.65);
  CHECK(r.decision == Decision::Rejected);
  CHECK(std::string(to_string(r.decision)) == "Rejected");
}

TEST_CASE("HP smoothing is applied before the regression") {
  std::mt19937_64 rng(8);
  const auto p = oracle::random_panel(rng, 8, 15);
  LogTConfig cfg;
  cfg.smoothing.method = SmoothingMethod::HodrickPrescott;
  const auto a = convergence_test(p, cfg);
  const auto b = convergence_test(smooth(p, cfg.smoothing), {});
  CHECK(a.b_hat == b.b_hat);
}

TEST_CASE("slope recovers twice the decay rate on a slowly varying DGP") {
  // With L(t) = log(t + 1) in the decay, H_t ~ t^{-2 alpha} / log(t)^2 and b estimates 2 alpha.
  double sum = 0;
  const int reps = 40;
  for (int s = 0; s < reps; ++s) {
    DgpConfig cfg;
    cfg.clubs = {{50, 1.0, 0.5, 0.2}};
    cfg.T = 200;
    cfg.seed = 100 + s;
    cfg.slowly_varying = true;
    sum += convergence_test(generate_panel(cfg).panel, {}).b_hat;
  }
  CHECK(std::fabs(sum / reps - 1.0) < 0.15);
}
