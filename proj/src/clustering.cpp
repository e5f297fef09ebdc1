#include "clubconv/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "clubconv/error.hpp"

namespace clubconv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool rows_identical(const Eigen::MatrixXd& values, std::span<const std::size_t> rows) {
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (values.row(static_cast<Eigen::Index>(rows[k])) != values.row(static_cast<Eigen::Index>(rows[0]))) {
      return false;
    }
  }
  return true;
}

LogTResult trivially_convergent(const ClusterConfig& cfg) {
  LogTResult r;
  r.r = cfg.logt.r;
  r.t_stat = kInf;
  r.degenerate = true;
  r.decision = Decision::ConvergenceNotRejected;
  r.cls = ConvergenceClass::Absolute;
  return r;
}

std::vector<Eigen::Index> as_index(std::span<const std::size_t> rows) {
  return {rows.begin(), rows.end()};
}

// t statistic used for core and sieve decisions. Identical series count as
// perfectly convergent, any other degenerate group as divergent.
double trial_stat(const Panel& panel, std::span<const std::size_t> rows, const ClusterConfig& cfg) {
  if (rows_identical(panel.values(), rows)) return kInf;
  try {
    return logt_on_values(panel.values()(as_index(rows), Eigen::all), cfg.logt).t_stat;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DegenerateVariance) return -kInf;
    throw;
  }
}

std::vector<std::string> codes_of(const Panel& panel, std::span<const std::size_t> rows) {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(panel.units()[r].code);
  return out;
}

void validate(const ClusterConfig& cfg) {
  if (cfg.ordering.kind == OrderingKind::MeanLastFraction &&
      !(cfg.ordering.fraction > 0.0 && cfg.ordering.fraction <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "ordering fraction must lie in (0, 1]");
  }
  if (!std::isfinite(cfg.sieve_threshold) || !std::isfinite(cfg.core_threshold)) {
    throw Error(ErrorKind::InvalidConfig, "clustering thresholds must be finite");
  }
  if (!(cfg.sieve_step > 0.0)) throw Error(ErrorKind::InvalidConfig, "sieve step must be positive");
}

// Rank of each unit code under the configured ordering of the prepared panel.
std::map<std::string, std::size_t> rank_map(const Panel& panel, const Ordering& ordering) {
  std::map<std::string, std::size_t> rank;
  const auto order = order_units(panel, ordering);
  for (std::size_t k = 0; k < order.size(); ++k) rank[panel.units()[order[k]].code] = k;
  return rank;
}

std::vector<std::size_t> rows_of(const Panel& panel, std::span<const std::string> codes) {
  std::vector<std::size_t> rows;
  rows.reserve(codes.size());
  for (const auto& c : codes) {
    auto idx = panel.index_of(c);
    if (!idx) throw Error(ErrorKind::InvalidSubset, "unknown unit " + c);
    rows.push_back(*idx);
  }
  return rows;
}

}  // namespace

int ClubPartition::club_of(const std::string& code) const {
  for (std::size_t k = 0; k < clubs.size(); ++k) {
    if (std::find(clubs[k].members.begin(), clubs[k].members.end(), code) != clubs[k].members.end()) {
      return static_cast<int>(k);
    }
  }
  return -1;
}

std::vector<std::size_t> order_units(const Panel& panel, const Ordering& ordering) {
  const auto& v = panel.values();
  const Eigen::Index T = v.cols();
  Eigen::Index width = 1;
  if (ordering.kind == OrderingKind::MeanLastFraction) {
    width = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::ceil(ordering.fraction * T - 1e-9)), 1, T);
  }
  const Eigen::VectorXd stat = v.rightCols(width).rowwise().mean();
  std::vector<std::size_t> idx(panel.n_units());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return stat(static_cast<Eigen::Index>(a)) > stat(static_cast<Eigen::Index>(b));
  });
  return idx;
}

std::vector<std::size_t> form_core_group(const Panel& panel, std::span<const std::size_t> sorted,
                                         const ClusterConfig& cfg) {
  const std::size_t n = sorted.size();
  for (std::size_t start = 0; start + 1 < n; ++start) {
    const double t2 = trial_stat(panel, sorted.subspan(start, 2), cfg);
    if (!(t2 > cfg.core_threshold)) continue;
    std::size_t best_k = 2;
    double best_t = t2;
    for (std::size_t k = 3; start + k <= n; ++k) {
      const double tk = trial_stat(panel, sorted.subspan(start, k), cfg);
      if (tk > cfg.core_threshold && tk >= best_t) {
        best_t = tk;
        best_k = k;
      }
    }
    return {sorted.begin() + static_cast<std::ptrdiff_t>(start),
            sorted.begin() + static_cast<std::ptrdiff_t>(start + best_k)};
  }
  return {};
}

std::vector<std::size_t> sieve_membership(const Panel& panel, std::span<const std::size_t> core,
                                          std::span<const std::size_t> candidates, const ClusterConfig& cfg) {
  if (core.empty()) throw Error(ErrorKind::InvalidSubset, "sieve needs a non-empty core");

  std::vector<double> stats;
  stats.reserve(candidates.size());
  std::vector<std::size_t> trial(core.begin(), core.end());
  for (auto cand : candidates) {
    trial.push_back(cand);
    stats.push_back(trial_stat(panel, trial, cfg));
    trial.pop_back();
  }

  // Membership order follows the candidates' order; core first.
  double c = cfg.sieve_threshold;
  for (;;) {
    std::vector<std::size_t> club(core.begin(), core.end());
    double max_accepted = -kInf;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      if (stats[k] > c) {
        club.push_back(candidates[k]);
        max_accepted = std::max(max_accepted, stats[k]);
      }
    }
    if (club.size() == core.size()) return club;
    if (trial_stat(panel, club, cfg) >= cfg.logt.critical_value) return club;
    if (!std::isfinite(max_accepted)) return {core.begin(), core.end()};
    c += cfg.sieve_step;
  }
}

LogTResult group_test(const Panel& panel, std::span<const std::size_t> rows, const ClusterConfig& cfg) {
  if (rows.size() < 2) throw Error(ErrorKind::InvalidSubset, "a group test needs at least 2 units");
  if (rows_identical(panel.values(), rows)) return trivially_convergent(cfg);
  return logt_on_values(panel.values()(as_index(rows), Eigen::all), cfg.logt);
}

ClubPartition identify_clubs(const Panel& raw, const ClusterConfig& cfg) {
  validate(cfg);
  const Panel panel = smooth(raw, cfg.logt.smoothing);
  const auto& values = panel.values();
  const std::size_t n = panel.n_units();

  // Fuse bitwise-identical series onto their first occurrence.
  std::vector<std::size_t> rep_of(n);
  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < n; ++i) {
    rep_of[i] = i;
    for (auto r : reps) {
      if (values.row(static_cast<Eigen::Index>(r)) == values.row(static_cast<Eigen::Index>(i))) {
        rep_of[i] = r;
        break;
      }
    }
    if (rep_of[i] == i) reps.push_back(i);
  }

  const auto order = order_units(panel, cfg.ordering);
  std::vector<std::size_t> position(n);
  for (std::size_t k = 0; k < n; ++k) position[order[k]] = k;

  std::vector<std::size_t> remaining;     // representatives, ordering order
  for (auto r : order) {
    if (rep_of[r] == r) remaining.push_back(r);
  }

  std::vector<std::vector<std::size_t>> fused_clubs;
  std::vector<std::size_t> fused_divergent;
  while (remaining.size() >= 2) {
    // The whole remainder first: on the first pass this is the overall panel test.
    if (trial_stat(panel, remaining, cfg) >= cfg.logt.critical_value) {
      fused_clubs.push_back(remaining);
      remaining.clear();
      break;
    }
    const auto core = form_core_group(panel, remaining, cfg);
    if (core.empty()) break;
    std::vector<std::size_t> candidates;
    for (auto r : remaining) {
      if (std::find(core.begin(), core.end(), r) == core.end()) candidates.push_back(r);
    }
    auto club = sieve_membership(panel, core, candidates, cfg);
    std::set<std::size_t> taken(club.begin(), club.end());
    std::vector<std::size_t> rest;
    for (auto r : remaining) {
      if (!taken.count(r)) rest.push_back(r);
    }
    fused_clubs.push_back(std::move(club));
    remaining = std::move(rest);
  }
  fused_divergent = remaining;

  auto expand = [&](const std::vector<std::size_t>& fused) {
    std::set<std::size_t> keep(fused.begin(), fused.end());
    std::vector<std::size_t> rows;
    for (auto r : order) {
      if (keep.count(rep_of[r])) rows.push_back(r);
    }
    return rows;
  };

  ClubPartition out;
  for (const auto& fused : fused_clubs) {
    const auto rows = expand(fused);
    out.clubs.push_back({codes_of(panel, rows), group_test(panel, rows, cfg)});
  }
  // A divergent representative with duplicates forms its own trivially convergent club.
  std::vector<std::size_t> lone;
  for (auto r : fused_divergent) {
    const auto rows = expand({r});
    if (rows.size() >= 2) {
      out.clubs.push_back({codes_of(panel, rows), trivially_convergent(cfg)});
    } else {
      lone.push_back(r);
    }
  }
  std::sort(lone.begin(), lone.end(), [&](auto a, auto b) { return position[a] < position[b]; });
  out.divergent = codes_of(panel, lone);
  return out;
}

ClubPartition merge_clubs(const Panel& raw, ClubPartition partition, const ClusterConfig& cfg) {
  validate(cfg);
  const Panel panel = smooth(raw, cfg.logt.smoothing);
  const auto rank = rank_map(panel, cfg.ordering);
  auto& clubs = partition.clubs;
  bool merged = true;
  while (merged && clubs.size() >= 2) {
    merged = false;
    for (std::size_t k = 0; k + 1 < clubs.size(); ++k) {
      std::vector<std::string> members = clubs[k].members;
      members.insert(members.end(), clubs[k + 1].members.begin(), clubs[k + 1].members.end());
      std::stable_sort(members.begin(), members.end(),
                       [&](const auto& a, const auto& b) { return rank.at(a) < rank.at(b); });
      const auto rows = rows_of(panel, members);
      MergeTest test{k, k + 1, members, group_test(panel, rows, cfg), false};
      test.merged = test.result.decision == Decision::ConvergenceNotRejected;
      partition.merge_tests.push_back(test);
      if (test.merged) {
        clubs[k] = {std::move(members), test.result};
        clubs.erase(clubs.begin() + static_cast<std::ptrdiff_t>(k) + 1);
        merged = true;
        break;
      }
    }
  }
  return partition;
}

LogTResult transition_test(const Panel& raw, ClubPartition& partition, std::span<const std::string> subset,
                           const ClusterConfig& cfg) {
  if (subset.size() < 2) throw Error(ErrorKind::InvalidSubset, "transition subset needs at least 2 units");
  std::set<int> touched;
  std::set<std::string> seen;
  for (const auto& code : subset) {
    if (!seen.insert(code).second) throw Error(ErrorKind::InvalidSubset, "unit " + code + " listed twice");
    const int club = partition.club_of(code);
    if (club < 0) throw Error(ErrorKind::InvalidSubset, "unit " + code + " is not in any club");
    touched.insert(club);
  }
  if (touched.size() != 2 || *touched.rbegin() - *touched.begin() != 1) {
    throw Error(ErrorKind::InvalidSubset, "transition subset must span exactly two adjacent clubs");
  }
  const Panel panel = smooth(raw, cfg.logt.smoothing);
  const auto rows = rows_of(panel, subset);
  const auto result = group_test(panel, rows, cfg);
  const auto first = static_cast<std::size_t>(*touched.begin());
  const auto heuristic = default_transition_subset(partition, first);
  const bool is_heuristic =
      heuristic.size() == subset.size() && std::equal(heuristic.begin(), heuristic.end(), subset.begin());
  partition.transition_tests.push_back({{subset.begin(), subset.end()}, first, result, is_heuristic});
  return result;
}

std::vector<std::string> default_transition_subset(const ClubPartition& partition, std::size_t club) {
  if (club + 1 >= partition.clubs.size()) {
    throw Error(ErrorKind::InvalidSubset, "club " + std::to_string(club + 1) + " has no successor");
  }
  const auto& upper = partition.clubs[club].members;
  const auto& lower = partition.clubs[club + 1].members;
  const std::size_t take_upper = (upper.size() + 1) / 2;
  const std::size_t take_lower = (lower.size() + 1) / 2;
  std::vector<std::string> subset(upper.end() - static_cast<std::ptrdiff_t>(take_upper), upper.end());
  subset.insert(subset.end(), lower.begin(), lower.begin() + static_cast<std::ptrdiff_t>(take_lower));
  return subset;
}

void run_default_transitions(const Panel& panel, ClubPartition& partition, const ClusterConfig& cfg) {
  for (std::size_t k = 0; k + 1 < partition.clubs.size(); ++k) {
    const auto subset = default_transition_subset(partition, k);
    transition_test(panel, partition, subset, cfg);
  }
}

void check_partition(const ClubPartition& partition, const Panel& panel, double critical_value) {
  std::multiset<std::string> seen;
  for (std::size_t k = 0; k < partition.clubs.size(); ++k) {
    const auto& club = partition.clubs[k];
    if (club.members.size() < 2) {
      throw Error(ErrorKind::InvalidSubset, "club " + std::to_string(k + 1) + " has fewer than 2 units");
    }
    if (club.result.decision != Decision::ConvergenceNotRejected || club.result.t_stat < critical_value) {
      throw Error(ErrorKind::InvalidSubset, "club " + std::to_string(k + 1) + " fails the log-t test");
    }
    seen.insert(club.members.begin(), club.members.end());
  }
  seen.insert(partition.divergent.begin(), partition.divergent.end());
  const auto codes = panel.codes();
  if (seen.size() != codes.size() || std::set<std::string>(seen.begin(), seen.end()).size() != seen.size()) {
    throw Error(ErrorKind::InvalidSubset, "clubs and divergent set overlap or miss units");
  }
  for (const auto& c : codes) {
    if (!seen.count(c)) throw Error(ErrorKind::InvalidSubset, "unit " + c + " missing from partition");
  }
  for (const auto& m : partition.merge_tests) {
    if (m.second_club != m.first_club + 1) throw Error(ErrorKind::InvalidSubset, "merge test on non-adjacent clubs");
  }
}

}  // namespace clubconv
