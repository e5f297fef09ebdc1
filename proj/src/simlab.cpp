#include "clubconv/simlab.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>

#include "clubconv/error.hpp"
#include "csv.hpp"

namespace clubconv {

namespace {

void validate(const DgpConfig& cfg) {
  if (cfg.T < 10) throw Error(ErrorKind::InvalidConfig, "simulated panels need T >= 10");
  if (!(cfg.growth >= 0.0) || !(cfg.mu0 > 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "common trend needs g >= 0 and mu0 > 0");
  }
  int total = 0;
  for (const auto& c : cfg.clubs) {
    if (c.n_units < 1 || !(c.delta_limit > 0.0) || !(c.alpha >= 0.0) || !(c.noise_sd >= 0.0)) {
      throw Error(ErrorKind::InvalidConfig, "club spec needs n >= 1, delta > 0, alpha >= 0, sigma >= 0");
    }
    total += c.n_units;
  }
  if (total < 2) throw Error(ErrorKind::InvalidConfig, "simulated panels need at least 2 units");
}

std::string unit_code(std::size_t club, int unit) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "C%zuU%02d", club + 1, unit + 1);
  return buf;
}

}  // namespace

SimulatedPanel generate_panel(const DgpConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  int total = 0;
  for (const auto& c : cfg.clubs) total += c.n_units;
  Eigen::MatrixXd values(total, cfg.T);
  std::vector<UnitId> units;
  std::vector<int> membership;
  std::vector<int> periods;
  for (int t = 0; t < cfg.T; ++t) periods.push_back(cfg.first_year + t);

  Eigen::Index row = 0;
  for (std::size_t k = 0; k < cfg.clubs.size(); ++k) {
    const auto& club = cfg.clubs[k];
    for (int u = 0; u < club.n_units; ++u, ++row) {
      units.push_back({unit_code(k, u), unit_code(k, u)});
      membership.push_back(static_cast<int>(k));
      for (int t = 1; t <= cfg.T; ++t) {
        double decay = std::pow(static_cast<double>(t), -club.alpha);
        if (cfg.slowly_varying) decay /= std::log(t + 1.0);
        const double mu = cfg.mu0 * std::pow(1.0 + cfg.growth, t);
        double delta = 0.0;
        int attempts = 0;
        do {
          if (++attempts > 100) {
            throw Error(ErrorKind::InvalidConfig, "could not draw a positive transition parameter in 100 attempts");
          }
          delta = club.delta_limit + club.noise_sd * normal(rng) * decay;
        } while (!(delta > 0.0));
        values(row, t - 1) = delta * mu;
      }
    }
  }
  return {Panel(std::move(units), std::move(periods), std::move(values)), std::move(membership)};
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::DimensionMismatch, "label vectors differ in length");
  const double n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  auto pairs = [](double m) { return m * (m - 1.0) / 2.0; };
  double sum_joint = 0.0;
  double sum_rows = 0.0;
  double sum_cols = 0.0;
  for (const auto& [key, m] : joint) sum_joint += pairs(m);
  for (const auto& [key, m] : rows) sum_rows += pairs(m);
  for (const auto& [key, m] : cols) sum_cols += pairs(m);
  const double expected = sum_rows * sum_cols / pairs(n);
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (sum_joint - expected) / (max_index - expected);
}

std::vector<int> partition_labels(const ClubPartition& partition, const Panel& panel) {
  std::vector<int> labels(panel.n_units(), -1);
  int next = static_cast<int>(partition.clubs.size());
  for (std::size_t i = 0; i < panel.n_units(); ++i) {
    const int club = partition.club_of(panel.units()[i].code);
    labels[i] = club >= 0 ? club : next++;
  }
  return labels;
}

bool exact_recovery(const ClubPartition& partition, const Panel& panel, const std::vector<int>& truth) {
  if (!partition.divergent.empty()) return false;
  const auto labels = partition_labels(partition, panel);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      if ((labels[i] == labels[j]) != (truth[i] == truth[j])) return false;
    }
  }
  return true;
}

std::vector<MonteCarloSummary> monte_carlo(const std::vector<MonteCarloCell>& grid, Analysis analysis,
                                           int replications, const ClusterConfig& cfg) {
  if (replications < 1) throw Error(ErrorKind::InvalidConfig, "replications must be >= 1");
  std::vector<MonteCarloSummary> out;
  for (const auto& cell : grid) {
    MonteCarloSummary s;
    s.label = cell.label;
    s.replications = replications;
    double sum_b = 0.0;
    double sum_b2 = 0.0;
    int n_b = 0;
    int rejections = 0;
    int recovered = 0;
    double ari = 0.0;
    for (int k = 0; k < replications; ++k) {
      DgpConfig dgp = cell.dgp;
      dgp.seed = cell.dgp.seed + static_cast<std::uint64_t>(k);
      try {
        const auto sim = generate_panel(dgp);
        const auto overall = convergence_test(sim.panel, cfg.logt);
        rejections += overall.decision == Decision::Rejected;
        sum_b += overall.b_hat;
        sum_b2 += overall.b_hat * overall.b_hat;
        ++n_b;
        if (analysis == Analysis::Clustering) {
          const auto partition = merge_clubs(sim.panel, identify_clubs(sim.panel, cfg), cfg);
          recovered += exact_recovery(partition, sim.panel, sim.membership);
          ari += adjusted_rand_index(partition_labels(partition, sim.panel), sim.membership);
        }
      } catch (const Error&) {
        ++s.failures;
      }
    }
    s.rejection_rate = static_cast<double>(rejections) / replications;
    if (n_b > 0) {
      s.mean_b_hat = sum_b / n_b;
      s.sd_b_hat = n_b > 1 ? std::sqrt(std::max(0.0, (sum_b2 - n_b * s.mean_b_hat * s.mean_b_hat) / (n_b - 1))) : 0.0;
    }
    if (analysis == Analysis::Clustering) {
      s.recovery_rate = static_cast<double>(recovered) / replications;
      s.mean_ari = ari / replications;
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<MonteCarloSummary>& rows) {
  out << "cell,replications,rejection_rate,mean_b_hat,sd_b_hat,recovery_rate,mean_ari,failures\n";
  for (const auto& r : rows) {
    out << r.label << ',' << r.replications << ',' << csv::format_sig(r.rejection_rate, 12) << ','
        << csv::format_sig(r.mean_b_hat, 12) << ',' << csv::format_sig(r.sd_b_hat, 12) << ','
        << csv::format_sig(r.recovery_rate, 12) << ',' << csv::format_sig(r.mean_ari, 12) << ',' << r.failures
        << '\n';
  }
}

}  // namespace clubconv
