#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "clubconv/logt.hpp"
#include "clubconv/panel.hpp"

namespace clubconv {

enum class OrderingKind { FinalPeriod, MeanLastFraction };

struct Ordering {
  OrderingKind kind = OrderingKind::FinalPeriod;
  double fraction = 1.0 / 3.0;  // used by MeanLastFraction, in (0, 1]
};

struct ClusterConfig {
  Ordering ordering;
  double sieve_threshold = 0.0;
  double sieve_step = 0.05;
  double core_threshold = -1.65;
  LogTConfig logt;
};

struct Club {
  std::vector<std::string> members;  // in ordering-statistic order
  LogTResult result;
};

struct MergeTest {
  std::size_t first_club = 0;  // 0-based club indices at the time of the test; second = first + 1
  std::size_t second_club = 0;
  std::vector<std::string> members;
  LogTResult result;
  bool merged = false;
};

struct TransitionTest {
  std::vector<std::string> units;
  std::size_t first_club = 0;  // the subset spans first_club and first_club + 1
  LogTResult result;
  bool heuristic = false;
};

struct ClubPartition {
  std::vector<Club> clubs;
  std::vector<std::string> divergent;
  std::vector<MergeTest> merge_tests;
  std::vector<TransitionTest> transition_tests;

  // 0-based club index of a unit, or -1 for divergent/unknown units.
  int club_of(const std::string& code) const;
};

// Panel row indices in decreasing order of the ordering statistic (stable).
std::vector<std::size_t> order_units(const Panel& panel, const Ordering& ordering);

// Core group drawn from `sorted` (row indices in ordering order); empty when none exists.
std::vector<std::size_t> form_core_group(const Panel& panel, std::span<const std::size_t> sorted,
                                         const ClusterConfig& cfg);

// Core plus every candidate that passes the sieve, in ordering order.
std::vector<std::size_t> sieve_membership(const Panel& panel, std::span<const std::size_t> core,
                                          std::span<const std::size_t> candidates, const ClusterConfig& cfg);

ClubPartition identify_clubs(const Panel& panel, const ClusterConfig& cfg);

ClubPartition merge_clubs(const Panel& panel, ClubPartition partition, const ClusterConfig& cfg);

// Log-t test on a subset spanning two adjacent clubs; appended to partition.transition_tests.
LogTResult transition_test(const Panel& panel, ClubPartition& partition, std::span<const std::string> subset,
                           const ClusterConfig& cfg);

// Bottom ceil(half) of club k followed by the top ceil(half) of club k + 1. A heuristic.
std::vector<std::string> default_transition_subset(const ClubPartition& partition, std::size_t club);

// Runs the heuristic transition test for every adjacent club pair.
void run_default_transitions(const Panel& panel, ClubPartition& partition, const ClusterConfig& cfg);

// Log-t test of a group of units; identical series are reported as trivially convergent.
LogTResult group_test(const Panel& panel, std::span<const std::size_t> rows, const ClusterConfig& cfg);

// Throws InvalidSubset describing the first violated partition invariant.
void check_partition(const ClubPartition& partition, const Panel& panel, double critical_value);

}  // namespace clubconv
