#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clubconv/clustering.hpp"
#include "clubconv/logt.hpp"
#include "clubconv/probit.hpp"
#include "clubconv/simlab.hpp"

namespace clubconv {

struct ReportMeta {
  std::string version;
  std::map<std::string, std::string> config;
  std::string data_hash;
  std::string timestamp;
};

// Convergence analysis of one panel: overall test plus the club partition.
struct PanelAnalysis {
  LogTResult logt;
  ClubPartition partition;
};

struct ProbitReport {
  ProbitFit fit;
  Classification table;
};

struct Report {
  ReportMeta meta;
  std::optional<PanelAnalysis> analysis;
  std::map<std::string, PanelAnalysis> sectors;
  std::optional<ProbitReport> probit;
  std::vector<MonteCarloSummary> montecarlo;
};

std::string report_to_json(const Report& report, int indent = 2);
Report report_from_json(const std::string& text);

// 64-bit FNV-1a of the bytes, as "fnv1a64:<16 hex digits>".
std::string content_hash(const std::string& bytes);

// Writes h.csv and H.csv, plus club_means.csv and relative_to_club.csv when a
// grouping is given. Returns the written paths.
std::vector<std::string> emit_paths(const TransitionPaths& paths, const ClubPartition* grouping,
                                    const std::string& out_dir, const std::string& prefix = "");

}  // namespace clubconv
