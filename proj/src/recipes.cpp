#include "clubconv/recipes.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>

#include "clubconv/error.hpp"
#include "csv.hpp"

#ifndef CLUBCONV_VERSION
#define CLUBCONV_VERSION "0.0.0"
#endif

namespace clubconv {

namespace {

namespace fs = std::filesystem;

bool parse_bool(const std::string& key, const std::string& v) {
  const auto s = csv::lower(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error(ErrorKind::InvalidConfig, key + ": expected a boolean, got '" + v + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidConfig, key + ": expected a number, got '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  const double d = parse_double(key, v);
  if (d != static_cast<int>(d)) throw Error(ErrorKind::InvalidConfig, key + ": expected an integer");
  return static_cast<int>(d);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',' || c == ';' || c == '+' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(parse_double(key, item));
  if (out.empty()) throw Error(ErrorKind::InvalidConfig, key + ": empty list");
  return out;
}

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || base.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Panel load_configured_panel(const std::string& path, const AnalysisConfig& cfg) {
  LoadOptions opts;
  opts.layout = cfg.layout;
  opts.lenient = cfg.lenient;
  opts.policy = cfg.allow_zero ? ValuePolicy::NonNegative : ValuePolicy::StrictlyPositive;
  std::istringstream in(read_file(path));
  auto loaded = load_panel_with_warnings(in, opts);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << path << ": " << w << '\n';
  Panel panel = std::move(loaded.panel);
  if (cfg.first_year || cfg.last_year) {
    panel = panel.select_periods(cfg.first_year.value_or(panel.periods().front()),
                                 cfg.last_year.value_or(panel.periods().back()));
  }
  return panel;
}

struct Outputs {
  Report report;
  std::vector<std::pair<std::string, Panel>> panels;  // prefix, panel actually analysed
};

Outputs execute(const AnalysisConfig& cfg) {
  Outputs out;
  Report& report = out.report;
  report.meta.version = CLUBCONV_VERSION;
  report.meta.config = cfg.echo;
  report.meta.timestamp = utc_timestamp();

  std::string fingerprint;
  auto absorb = [&](const std::string& path) {
    if (!path.empty()) fingerprint += read_file(path);
  };

  auto main_panel = [&]() {
    if (cfg.panel_path.empty()) throw Error(ErrorKind::InvalidConfig, "recipe needs 'panel'");
    absorb(cfg.panel_path);
    return load_configured_panel(cfg.panel_path, cfg);
  };

  switch (cfg.recipe) {
    case Recipe::Overall: {
      Panel panel = main_panel();
      report.analysis = analyse_panel(panel, cfg);
      out.panels.emplace_back("", std::move(panel));
      break;
    }
    case Recipe::TargetRatio: {
      if (cfg.targets_path.empty()) throw Error(ErrorKind::InvalidConfig, "target_ratio needs 'targets'");
      Panel panel = main_panel();
      absorb(cfg.targets_path);
      Panel ratio = rescale_to_targets(panel, load_targets_file(cfg.targets_path));
      report.analysis = analyse_panel(ratio, cfg);
      out.panels.emplace_back("", std::move(ratio));
      break;
    }
    case Recipe::Sector: {
      if (cfg.sector_paths.empty()) throw Error(ErrorKind::InvalidConfig, "sector recipe needs sector.<name> paths");
      for (const auto& [name, path] : cfg.sector_paths) {
        absorb(path);
        Panel panel = load_configured_panel(path, cfg);
        report.sectors.emplace(name, analyse_panel(panel, cfg, name));
        out.panels.emplace_back(name + "_", std::move(panel));
      }
      break;
    }
    case Recipe::Probit: {
      std::vector<std::pair<std::string, int>> clubs;
      if (!cfg.clubs_path.empty()) {
        absorb(cfg.clubs_path);
        std::istringstream in(read_file(cfg.clubs_path));
        clubs = load_club_assignment(in);
      } else {
        Panel panel = main_panel();
        report.analysis = analyse_panel(panel, cfg);
        for (std::size_t k = 0; k < report.analysis->partition.clubs.size(); ++k) {
          for (const auto& code : report.analysis->partition.clubs[k].members) {
            clubs.emplace_back(code, static_cast<int>(k) + 1);
          }
        }
        out.panels.emplace_back("", std::move(panel));
      }
      std::map<std::string, std::map<std::string, double>> averages;
      std::set<std::string> bases;
      for (const auto& col : cfg.probit_columns) bases.insert(col.rfind("SQ_", 0) == 0 ? col.substr(3) : col);
      for (const auto& base : bases) {
        auto it = cfg.covariates.find(base);
        if (it == cfg.covariates.end() || it->second.path.empty()) {
          throw Error(ErrorKind::InvalidConfig, "probit needs covariate." + base);
        }
        absorb(it->second.path);
        std::istringstream in(read_file(it->second.path));
        averages[base] = window_average(load_long_series(in), it->second.first_year, it->second.last_year);
      }
      DesignMatrix design = build_design(averages, cfg.probit_columns, clubs);
      ProbitReport pr;
      pr.fit = fit_probit(design, cfg.probit);
      pr.table = classification_table(pr.fit, design);
      report.probit = pr;
      break;
    }
    case Recipe::MonteCarlo: {
      std::vector<MonteCarloCell> grid;
      for (double alpha : cfg.mc.alphas) {
        MonteCarloCell cell;
        std::ostringstream label;
        label << "alpha=" << alpha << ";clubs=" << cfg.mc.delta_limits.size();
        cell.label = label.str();
        cell.dgp.T = cfg.mc.T;
        cell.dgp.growth = cfg.mc.growth;
        cell.dgp.seed = cfg.seed;
        cell.dgp.slowly_varying = cfg.mc.slowly_varying;
        for (double delta : cfg.mc.delta_limits) {
          cell.dgp.clubs.push_back({cfg.mc.units_per_club, delta, alpha, cfg.mc.noise_sd});
        }
        grid.push_back(std::move(cell));
      }
      report.montecarlo = monte_carlo(grid, cfg.mc.analysis, cfg.mc.replications, cfg.cluster);
      break;
    }
  }
  report.meta.data_hash = content_hash(fingerprint);
  return out;
}

}  // namespace

Recipe parse_recipe(const std::string& name) {
  const auto s = csv::lower(name);
  if (s == "overall") return Recipe::Overall;
  if (s == "target_ratio") return Recipe::TargetRatio;
  if (s == "sector") return Recipe::Sector;
  if (s == "probit") return Recipe::Probit;
  if (s == "montecarlo") return Recipe::MonteCarlo;
  throw Error(ErrorKind::InvalidConfig, "unknown recipe '" + name + "'");
}

const char* to_string(Recipe recipe) {
  switch (recipe) {
    case Recipe::Overall: return "overall";
    case Recipe::TargetRatio: return "target_ratio";
    case Recipe::Sector: return "sector";
    case Recipe::Probit: return "probit";
    case Recipe::MonteCarlo: return "montecarlo";
  }
  return "overall";
}

AnalysisConfig default_config() {
  AnalysisConfig cfg;
  cfg.covariates["GDPCAP"] = {"GDPCAP", "", 2010, 2018};
  cfg.covariates["ENVEXPGDP"] = {"ENVEXPGDP", "", 2014, 2016};
  cfg.covariates["ENIMPDEP"] = {"ENIMPDEP", "", 2009, 2018};
  cfg.covariates["NUCLENCAP"] = {"NUCLENCAP", "", 2010, 2018};
  return cfg;
}

void apply_setting(AnalysisConfig& cfg, const std::string& key, const std::string& value,
                   const std::string& base_dir) {
  auto suffix = [&](const std::string& prefix) -> std::optional<std::string> {
    if (key.rfind(prefix, 0) == 0 && key.size() > prefix.size()) return key.substr(prefix.size());
    return std::nullopt;
  };

  if (key == "recipe") {
    cfg.recipe = parse_recipe(value);
  } else if (key == "panel") {
    cfg.panel_path = resolve(base_dir, value);
  } else if (key == "layout") {
    const auto s = csv::lower(value);
    if (s != "wide" && s != "long") throw Error(ErrorKind::InvalidConfig, "layout must be wide or long");
    cfg.layout = s == "wide" ? Layout::Wide : Layout::Long;
  } else if (key == "lenient") {
    cfg.lenient = parse_bool(key, value);
  } else if (key == "allow_zero") {
    cfg.allow_zero = parse_bool(key, value);
  } else if (key == "first_year") {
    cfg.first_year = parse_int(key, value);
  } else if (key == "last_year") {
    cfg.last_year = parse_int(key, value);
  } else if (key == "targets") {
    cfg.targets_path = resolve(base_dir, value);
  } else if (key == "clubs") {
    cfg.clubs_path = resolve(base_dir, value);
  } else if (key == "out") {
    cfg.out_dir = resolve(base_dir, value);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "r") {
    cfg.cluster.logt.r = parse_double(key, value);
    if (!(cfg.cluster.logt.r > 0.0 && cfg.cluster.logt.r < 1.0)) {
      throw Error(ErrorKind::InvalidConfig, "r must lie in (0, 1)");
    }
  } else if (key == "crit") {
    cfg.cluster.logt.critical_value = parse_double(key, value);
  } else if (key == "bandwidth") {
    if (csv::lower(value) == "auto") {
      cfg.cluster.logt.hac.bandwidth.reset();
    } else {
      const int b = parse_int(key, value);
      if (b < 0) throw Error(ErrorKind::InvalidConfig, "bandwidth must be >= 0");
      cfg.cluster.logt.hac.bandwidth = b;
    }
  } else if (key == "smoothing") {
    const auto s = csv::lower(value);
    if (s == "none") {
      cfg.cluster.logt.smoothing.method = SmoothingMethod::None;
    } else if (s == "hp") {
      cfg.cluster.logt.smoothing.method = SmoothingMethod::HodrickPrescott;
    } else {
      throw Error(ErrorKind::InvalidConfig, "smoothing must be none or hp");
    }
  } else if (key == "hp_lambda") {
    cfg.cluster.logt.smoothing.lambda = parse_double(key, value);
    if (!(cfg.cluster.logt.smoothing.lambda > 0.0)) throw Error(ErrorKind::InvalidConfig, "hp_lambda must be > 0");
  } else if (key == "ordering") {
    const auto s = csv::lower(value);
    if (s == "final") {
      cfg.cluster.ordering.kind = OrderingKind::FinalPeriod;
    } else if (s == "mean_last") {
      cfg.cluster.ordering.kind = OrderingKind::MeanLastFraction;
    } else {
      throw Error(ErrorKind::InvalidConfig, "ordering must be final or mean_last");
    }
  } else if (key == "ordering_fraction") {
    cfg.cluster.ordering.fraction = parse_double(key, value);
  } else if (key == "sieve_c") {
    cfg.cluster.sieve_threshold = parse_double(key, value);
  } else if (key == "sieve_step") {
    cfg.cluster.sieve_step = parse_double(key, value);
  } else if (key == "core_crit") {
    cfg.cluster.core_threshold = parse_double(key, value);
  } else if (key == "merge") {
    cfg.merge = parse_bool(key, value);
  } else if (key == "transitions") {
    const auto s = csv::lower(value);
    if (s != "heuristic" && s != "none") throw Error(ErrorKind::InvalidConfig, "transitions must be heuristic or none");
    cfg.heuristic_transitions = s == "heuristic";
  } else if (suffix("transition.")) {
    cfg.transition_subsets[""].push_back(split_list(value));
  } else if (auto rest = suffix("sector_transition.")) {
    const auto dot = rest->find('.');
    cfg.transition_subsets[rest->substr(0, dot)].push_back(split_list(value));
  } else if (auto name = suffix("sector.")) {
    cfg.sector_paths[*name] = resolve(base_dir, value);
  } else if (auto name = suffix("covariate.")) {
    auto& spec = cfg.covariates[*name];
    spec.name = *name;
    spec.path = resolve(base_dir, value);
  } else if (auto name = suffix("window.")) {
    static const std::regex range(R"(\s*(\d{4})\s*-\s*(\d{4})\s*)");
    std::smatch m;
    if (!std::regex_match(value, m, range)) throw Error(ErrorKind::InvalidConfig, key + ": expected YYYY-YYYY");
    auto& spec = cfg.covariates[*name];
    spec.name = *name;
    spec.first_year = std::stoi(m[1]);
    spec.last_year = std::stoi(m[2]);
    if (spec.last_year < spec.first_year) throw Error(ErrorKind::InvalidConfig, key + ": empty window");
  } else if (key == "probit.columns") {
    cfg.probit_columns = split_list(value);
  } else if (key == "probit.start") {
    const auto s = csv::lower(value);
    if (s != "zero" && s != "logodds") throw Error(ErrorKind::InvalidConfig, "probit.start must be zero or logodds");
    cfg.probit.start = s == "zero" ? ProbitStart::Zero : ProbitStart::LogOdds;
  } else if (key == "probit.dof_correction") {
    cfg.probit.small_sample_correction = parse_bool(key, value);
  } else if (key == "mc.analysis") {
    const auto s = csv::lower(value);
    if (s != "logt" && s != "clustering") throw Error(ErrorKind::InvalidConfig, "mc.analysis must be logt or clustering");
    cfg.mc.analysis = s == "logt" ? Analysis::LogT : Analysis::Clustering;
  } else if (key == "mc.reps") {
    cfg.mc.replications = parse_int(key, value);
  } else if (key == "mc.T") {
    cfg.mc.T = parse_int(key, value);
  } else if (key == "mc.units_per_club") {
    cfg.mc.units_per_club = parse_int(key, value);
  } else if (key == "mc.delta") {
    cfg.mc.delta_limits = parse_doubles(key, value);
  } else if (key == "mc.alpha") {
    cfg.mc.alphas = parse_doubles(key, value);
  } else if (key == "mc.sigma") {
    cfg.mc.noise_sd = parse_double(key, value);
  } else if (key == "mc.growth") {
    cfg.mc.growth = parse_double(key, value);
  } else if (key == "mc.slowly_varying") {
    cfg.mc.slowly_varying = parse_bool(key, value);
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown key '" + key + "'");
  }
  cfg.echo[key] = value;
}

AnalysisConfig parse_config(std::istream& in, const std::string& base_dir) {
  AnalysisConfig cfg = default_config();
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto t = csv::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::InvalidConfig, "config line " + std::to_string(n) + ": expected key = value");
    }
    apply_setting(cfg, csv::trim(t.substr(0, eq)), csv::trim(t.substr(eq + 1)), base_dir);
  }
  return cfg;
}

AnalysisConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config " + path);
  return parse_config(in, fs::path(path).parent_path().string());
}

LongSeries load_long_series(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row) || row.size() != 3 || csv::lower(row[0]) != "unit" || csv::lower(row[1]) != "year" ||
      csv::lower(row[2]) != "value") {
    throw Error(ErrorKind::MalformedInput, "long layout header must be 'unit,year,value'");
  }
  LongSeries out;
  while (reader.next(row)) {
    if (row.size() != 3) {
      throw Error(ErrorKind::MalformedInput, "line " + std::to_string(reader.line()) + ": expected 3 fields");
    }
    const int year = csv::parse_int(row[1], reader.line());
    const auto v = csv::parse_cell(row[2], reader.line());
    if (!v) continue;
    if (!out[row[0]].emplace(year, *v).second) {
      throw Error(ErrorKind::MalformedInput, "duplicate observation " + row[0] + "/" + row[1]);
    }
  }
  return out;
}

std::map<std::string, double> window_average(const LongSeries& series, int first_year, int last_year) {
  std::map<std::string, double> out;
  for (const auto& [code, years] : series) {
    double sum = 0.0;
    int count = 0;
    for (auto it = years.lower_bound(first_year); it != years.end() && it->first <= last_year; ++it) {
      sum += it->second;
      ++count;
    }
    if (count > 0) out[code] = sum / count;
  }
  return out;
}

std::vector<std::pair<std::string, int>> load_club_assignment(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row) || row.size() != 2 || csv::lower(row[0]) != "unit" || csv::lower(row[1]) != "club") {
    throw Error(ErrorKind::MalformedInput, "club file header must be 'unit,club'");
  }
  std::vector<std::pair<std::string, int>> out;
  std::set<std::string> seen;
  while (reader.next(row)) {
    if (row.size() != 2) throw Error(ErrorKind::MalformedInput, "line " + std::to_string(reader.line()));
    const int club = csv::parse_int(row[1], reader.line());
    if (club < 0) throw Error(ErrorKind::MalformedInput, "club numbers must be >= 0");
    if (!seen.insert(row[0]).second) throw Error(ErrorKind::MalformedInput, "duplicate unit " + row[0]);
    out.emplace_back(row[0], club);
  }
  return out;
}

DesignMatrix build_design(const std::map<std::string, std::map<std::string, double>>& averages,
                          const std::vector<std::string>& columns,
                          const std::vector<std::pair<std::string, int>>& clubs) {
  DesignMatrix d;
  d.names.push_back("const");
  d.names.insert(d.names.end(), columns.begin(), columns.end());
  std::vector<std::pair<std::string, int>> rows;
  for (const auto& entry : clubs) {
    if (entry.second > 0) rows.push_back(entry);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(d.names.size());
  d.X.resize(n, p);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [code, club] = rows[static_cast<std::size_t>(i)];
    d.row_labels.push_back(code);
    d.y(i) = club == 1 ? 0.0 : 1.0;
    d.X(i, 0) = 1.0;
    for (std::size_t j = 0; j < columns.size(); ++j) {
      const bool squared = columns[j].rfind("SQ_", 0) == 0;
      const std::string base = squared ? columns[j].substr(3) : columns[j];
      auto cov = averages.find(base);
      if (cov == averages.end()) throw Error(ErrorKind::InvalidConfig, "no averages for covariate " + base);
      auto v = cov->second.find(code);
      if (v == cov->second.end()) {
        throw Error(ErrorKind::MissingValue, "covariate " + base + " has no data for " + code + " in its window");
      }
      d.X(i, static_cast<Eigen::Index>(j) + 1) = squared ? v->second * v->second : v->second;
    }
  }
  validate_design(d);
  return d;
}

PanelAnalysis analyse_panel(const Panel& panel, const AnalysisConfig& cfg, const std::string& panel_key) {
  PanelAnalysis a;
  a.logt = convergence_test(panel, cfg.cluster.logt);
  a.partition = identify_clubs(panel, cfg.cluster);
  if (cfg.merge) a.partition = merge_clubs(panel, std::move(a.partition), cfg.cluster);
  if (cfg.heuristic_transitions) run_default_transitions(panel, a.partition, cfg.cluster);
  if (auto it = cfg.transition_subsets.find(panel_key); it != cfg.transition_subsets.end()) {
    for (const auto& subset : it->second) transition_test(panel, a.partition, subset, cfg.cluster);
  }
  return a;
}

Report run(const AnalysisConfig& cfg) { return execute(cfg).report; }

Report run_and_write(const AnalysisConfig& cfg) {
  Outputs out = execute(cfg);
  if (cfg.out_dir.empty()) return out.report;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + cfg.out_dir + ": " + ec.message());
  {
    std::ofstream json(fs::path(cfg.out_dir) / "report.json", std::ios::binary);
    if (!json) throw Error(ErrorKind::IoError, "cannot write report.json");
    json << report_to_json(out.report);
  }
  for (const auto& [prefix, panel] : out.panels) {
    const Panel prepared = smooth(panel, cfg.cluster.logt.smoothing);
    const PanelAnalysis* analysis = nullptr;
    if (prefix.empty()) {
      if (out.report.analysis) analysis = &*out.report.analysis;
    } else {
      analysis = &out.report.sectors.at(prefix.substr(0, prefix.size() - 1));
    }
    emit_paths(relative_transitions(prepared), analysis ? &analysis->partition : nullptr, cfg.out_dir, prefix);
  }
  if (!out.report.montecarlo.empty()) {
    std::ofstream csv_out(fs::path(cfg.out_dir) / "montecarlo.csv", std::ios::binary);
    if (!csv_out) throw Error(ErrorKind::IoError, "cannot write montecarlo.csv");
    write_summary_csv(csv_out, out.report.montecarlo);
  }
  return out.report;
}

}  // namespace clubconv
