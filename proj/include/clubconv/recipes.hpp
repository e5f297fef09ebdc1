#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clubconv/clustering.hpp"
#include "clubconv/panel.hpp"
#include "clubconv/probit.hpp"
#include "clubconv/report.hpp"

namespace clubconv {

enum class Recipe { Overall, TargetRatio, Sector, Probit, MonteCarlo };

Recipe parse_recipe(const std::string& name);
const char* to_string(Recipe recipe);

// A covariate averaged per unit over an inclusive year window.
struct CovariateSpec {
  std::string name;
  std::string path;
  int first_year = 0;
  int last_year = 0;
};

struct MonteCarloSettings {
  Analysis analysis = Analysis::Clustering;
  int replications = 500;
  int T = 40;
  int units_per_club = 10;
  std::vector<double> delta_limits{1.0, 2.0};
  std::vector<double> alphas{0.5};
  double noise_sd = 0.1;
  double growth = 0.02;
  bool slowly_varying = false;
};

struct AnalysisConfig {
  Recipe recipe = Recipe::Overall;
  std::string panel_path;
  Layout layout = Layout::Wide;
  bool lenient = false;
  bool allow_zero = false;
  std::optional<int> first_year;
  std::optional<int> last_year;
  std::string targets_path;
  std::map<std::string, std::string> sector_paths;
  std::string clubs_path;
  std::map<std::string, CovariateSpec> covariates;
  // Design columns after the constant; SQ_<name> is the square of <name>'s average.
  std::vector<std::string> probit_columns{"GDPCAP", "SQ_GDPCAP", "ENVEXPGDP", "ENIMPDEP", "NUCLENCAP"};
  ProbitOptions probit;
  ClusterConfig cluster;
  bool merge = true;
  bool heuristic_transitions = true;
  // Explicit transition subsets keyed by panel: "" for the main panel, else the sector name.
  std::map<std::string, std::vector<std::vector<std::string>>> transition_subsets;
  MonteCarloSettings mc;
  std::uint64_t seed = 1;
  std::string out_dir;
  // Every key/value applied, for the report echo.
  std::map<std::string, std::string> echo;
};

AnalysisConfig default_config();

// Applies one key/value; relative paths resolve against base_dir.
void apply_setting(AnalysisConfig& cfg, const std::string& key, const std::string& value,
                   const std::string& base_dir = "");

// Flat "key = value" lines, '#' comments.
AnalysisConfig parse_config(std::istream& in, const std::string& base_dir = "");
AnalysisConfig load_config_file(const std::string& path);

// Unit -> (year -> value) from a long-layout file; missing markers are skipped.
using LongSeries = std::map<std::string, std::map<int, double>>;
LongSeries load_long_series(std::istream& in);

// Mean of each unit's available values within the window; units without any are absent.
std::map<std::string, double> window_average(const LongSeries& series, int first_year, int last_year);

// (unit, 1-based club) pairs in file order from a "unit,club" file; 0 marks a divergent unit.
std::vector<std::pair<std::string, int>> load_club_assignment(std::istream& in);

DesignMatrix build_design(const std::map<std::string, std::map<std::string, double>>& averages,
                          const std::vector<std::string>& columns,
                          const std::vector<std::pair<std::string, int>>& clubs);

// Overall test, clubs, merging and transition tests for one panel.
PanelAnalysis analyse_panel(const Panel& panel, const AnalysisConfig& cfg, const std::string& panel_key = "");

Report run(const AnalysisConfig& cfg);

// run() plus report.json and the path CSVs under cfg.out_dir.
Report run_and_write(const AnalysisConfig& cfg);

}  // namespace clubconv
