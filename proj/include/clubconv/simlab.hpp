#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clubconv/clustering.hpp"
#include "clubconv/panel.hpp"

namespace clubconv {

struct ClubSpec {
  int n_units = 10;
  double delta_limit = 1.0;
  double alpha = 0.5;
  double noise_sd = 0.1;
};

struct DgpConfig {
  std::vector<ClubSpec> clubs;
  int T = 40;
  double growth = 0.02;  // mu_t = mu0 (1 + g)^t
  double mu0 = 10.0;
  std::uint64_t seed = 1;
  // Divides the transition noise by L(t) = log(t + 1).
  bool slowly_varying = false;
  int first_year = 1;
};

struct SimulatedPanel {
  Panel panel;
  std::vector<int> membership;  // 0-based true club per unit
};

// y_it = delta_it mu_t with delta_it = delta_c + sigma_c xi_it t^-alpha_c [/ L(t)],
// xi_it iid N(0, 1) redrawn while delta_it <= 0.
SimulatedPanel generate_panel(const DgpConfig& cfg);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

// Club label per unit from a partition (divergent units get distinct singleton labels).
std::vector<int> partition_labels(const ClubPartition& partition, const Panel& panel);

// Exact recovery: same clubs up to relabelling, no divergent units.
bool exact_recovery(const ClubPartition& partition, const Panel& panel, const std::vector<int>& truth);

enum class Analysis { LogT, Clustering };

struct MonteCarloCell {
  std::string label;
  DgpConfig dgp;
};

struct MonteCarloSummary {
  std::string label;
  int replications = 0;
  double rejection_rate = 0.0;
  double mean_b_hat = 0.0;
  double sd_b_hat = 0.0;
  double recovery_rate = 0.0;  // clustering only
  double mean_ari = 0.0;       // clustering only
  int failures = 0;            // replications where the analysis raised an error
};

// Replication k of a cell uses seed dgp.seed + k. Clustering runs merge the clubs.
std::vector<MonteCarloSummary> monte_carlo(const std::vector<MonteCarloCell>& grid, Analysis analysis,
                                           int replications, const ClusterConfig& cfg);

void write_summary_csv(std::ostream& out, const std::vector<MonteCarloSummary>& rows);

}  // namespace clubconv
