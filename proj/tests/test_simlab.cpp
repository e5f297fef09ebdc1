#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "clubconv/error.hpp"
#include "clubconv/simlab.hpp"

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

DgpConfig single(std::uint64_t seed) {
  DgpConfig cfg;
  cfg.clubs = {{20, 1.0, 0.5, 0.1}};
  cfg.seed = seed;
  return cfg;
}

DgpConfig pair(std::uint64_t seed) {
  DgpConfig cfg;
  cfg.clubs = {{10, 1.0, 0.5, 0.1}, {10, 2.0, 0.5, 0.1}};
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("seed determinism") {
  const auto a = generate_panel(pair(42));
  const auto b = generate_panel(pair(42));
  CHECK(a.panel.values() == b.panel.values());
  CHECK(a.membership == b.membership);
  CHECK(generate_panel(pair(43)).panel.values() != a.panel.values());
  CHECK(a.panel.units()[0].code == "C1U01");
  CHECK(a.panel.units()[10].code == "C2U01");
  CHECK(a.membership[15] == 1);
  CHECK(a.panel.n_periods() == 40);
}

TEST_CASE("noiseless panels are exact") {
  DgpConfig cfg;
  cfg.clubs = {{5, 1.7, 0.5, 0.0}};
  cfg.T = 12;
  const auto sim = generate_panel(cfg);
  for (int t = 1; t <= 12; ++t) {
    const double mu = cfg.mu0 * std::pow(1.0 + cfg.growth, t);
    for (int i = 0; i < 5; ++i) CHECK(sim.panel.values()(i, t - 1) / mu == doctest::Approx(1.7).epsilon(1e-15));
  }
  const auto paths = relative_transitions(sim.panel);
  CHECK((paths.h.array() - 1.0).abs().maxCoeff() < 1e-14);
  CHECK(paths.H.cwiseAbs().maxCoeff() < 1e-28);
}

TEST_CASE("generated panels stay positive under heavy noise") {
  DgpConfig cfg;
  cfg.clubs = {{30, 0.5, 0.2, 0.4}};
  cfg.seed = 8;
  const auto sim = generate_panel(cfg);
  CHECK((sim.panel.values().array() > 0).all());

}

TEST_CASE("config validation") {
  DgpConfig cfg = single(1);
  cfg.T = 9;
  CHECK(kind_of([&] { generate_panel(cfg); }) == ErrorKind::InvalidConfig);
  cfg = single(1);
  cfg.growth = -0.1;
  CHECK(kind_of([&] { generate_panel(cfg); }) == ErrorKind::InvalidConfig);
  cfg = single(1);
  cfg.clubs = {{1, 1.0, 0.5, 0.1}};
  CHECK(kind_of([&] { generate_panel(cfg); }) == ErrorKind::InvalidConfig);
  cfg.clubs = {{4, -1.0, 0.5, 0.1}};
  CHECK(kind_of([&] { generate_panel(cfg); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("adjusted Rand index") {
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {5, 5, 2, 2}) == 1.0);
  // Hand-computed from the contingency table {2,1 ; 0,1,2}.
  CHECK(adjusted_rand_index({0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 2, 2}) == doctest::Approx(0.8 / 3.3));
  CHECK(kind_of([] { adjusted_rand_index({0}, {0, 1}); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("size and power of the log-t test") {
  int not_rejected = 0;
  int rejected = 0;
  const int reps = 500;
  for (int s = 0; s < reps; ++s) {
    not_rejected += convergence_test(generate_panel(single(10000 + s)).panel, {}).decision ==
                    Decision::ConvergenceNotRejected;
    rejected += convergence_test(generate_panel(pair(20000 + s)).panel, {}).decision == Decision::Rejected;
  }
  CHECK(not_rejected >= 0.90 * reps);
  CHECK(rejected >= 0.95 * reps);
  const double size = 1.0 - static_cast<double>(not_rejected) / reps;
  MESSAGE("null rejection rate " << size << " (informative band [0.01, 0.12])");
}

TEST_CASE("monte carlo summary") {
  auto two = pair(7);
  two.slowly_varying = true;
  const std::vector<MonteCarloCell> grid{{"null", single(7)}, {"two", two}};
  const auto one = monte_carlo(grid, Analysis::LogT, 1, {});
  REQUIRE(one.size() == 2);
  const auto direct = convergence_test(generate_panel(single(7)).panel, {});
  CHECK(one[0].mean_b_hat == direct.b_hat);
  CHECK(one[0].sd_b_hat == 0.0);
  CHECK(one[0].rejection_rate == (direct.decision == Decision::Rejected ? 1.0 : 0.0));

  const auto a = monte_carlo(grid, Analysis::Clustering, 20, {});
  const auto b = monte_carlo(grid, Analysis::Clustering, 20, {});
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(a[k].mean_b_hat == b[k].mean_b_hat);
    CHECK(a[k].recovery_rate == b[k].recovery_rate);
  }
  CHECK(a[1].recovery_rate >= 0.9);
  CHECK(a[1].mean_ari > 0.9);
  CHECK(kind_of([&] { monte_carlo(grid, Analysis::LogT, 0, {}); }) == ErrorKind::InvalidConfig);

  std::ostringstream csv;
  write_summary_csv(csv, a);
  CHECK(csv.str().rfind("cell,replications,rejection_rate", 0) == 0);
  CHECK(csv.str().find("\nnull,20,") != std::string::npos);
}
