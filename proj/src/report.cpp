#include "clubconv/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "clubconv/error.hpp"
#include "csv.hpp"

namespace clubconv {

namespace {

using json = nlohmann::ordered_json;

// JSON has no infinities; non-finite values travel as strings.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double to_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  throw Error(ErrorKind::MalformedInput, "expected a number, got '" + s + "'");
}

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

Eigen::VectorXd to_vec(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_num(a[i]);
  return v;
}

Decision parse_decision(const std::string& s) {
  if (s == "ConvergenceNotRejected") return Decision::ConvergenceNotRejected;
  if (s == "Rejected") return Decision::Rejected;
  throw Error(ErrorKind::MalformedInput, "unknown decision " + s);
}

ConvergenceClass parse_class(const std::string& s) {
  if (s == "Absolute") return ConvergenceClass::Absolute;
  if (s == "Conditional") return ConvergenceClass::Conditional;
  if (s == "NotApplicable") return ConvergenceClass::NotApplicable;
  throw Error(ErrorKind::MalformedInput, "unknown convergence class " + s);
}

json logt_json(const LogTResult& r) {
  return json{{"a_hat", num(r.a_hat)},
              {"b_hat", num(r.b_hat)},
              {"se_hac", num(r.se_hac)},
              {"t_stat", num(r.t_stat)},
              {"alpha_hat", num(r.alpha_hat)},
              {"r", num(r.r)},
              {"first_t", r.sample.first_t},
              {"count", r.sample.count},
              {"bandwidth", r.bandwidth},
              {"decision", to_string(r.decision)},
              {"class", to_string(r.cls)},
              {"degenerate", r.degenerate}};
}

LogTResult logt_from(const json& j) {
  LogTResult r;
  r.a_hat = to_num(j.at("a_hat"));
  r.b_hat = to_num(j.at("b_hat"));
  r.se_hac = to_num(j.at("se_hac"));
  r.t_stat = to_num(j.at("t_stat"));
  r.alpha_hat = to_num(j.at("alpha_hat"));
  r.r = to_num(j.at("r"));
  r.sample = {j.at("first_t").get<int>(), j.at("count").get<int>()};
  r.bandwidth = j.at("bandwidth").get<int>();
  r.decision = parse_decision(j.at("decision").get<std::string>());
  r.cls = parse_class(j.at("class").get<std::string>());
  r.degenerate = j.at("degenerate").get<bool>();
  return r;
}

// Result fields inlined next to the identifying keys.
json with_result(json head, const LogTResult& r) {
  const json body = logt_json(r);
  for (const auto& [k, v] : body.items()) head[k] = v;
  return head;
}

void analysis_json(json& out, const PanelAnalysis& a) {
  out["logt"] = logt_json(a.logt);
  json clubs = json::array();
  for (const auto& c : a.partition.clubs) clubs.push_back(with_result(json{{"members", c.members}}, c.result));
  out["clubs"] = clubs;
  out["divergent"] = a.partition.divergent;
  json merges = json::array();
  for (const auto& m : a.partition.merge_tests) {
    merges.push_back(with_result(
        json{{"clubs", {m.first_club + 1, m.second_club + 1}}, {"members", m.members}, {"merged", m.merged}},
        m.result));
  }
  out["merges"] = merges;
  json transitions = json::array();
  for (const auto& t : a.partition.transition_tests) {
    transitions.push_back(with_result(
        json{{"clubs", {t.first_club + 1, t.first_club + 2}}, {"units", t.units}, {"heuristic", t.heuristic}},
        t.result));
  }
  out["transitions"] = transitions;
}

PanelAnalysis analysis_from(const json& j) {
  PanelAnalysis a;
  a.logt = logt_from(j.at("logt"));
  for (const auto& c : j.at("clubs")) {
    a.partition.clubs.push_back({c.at("members").get<std::vector<std::string>>(), logt_from(c)});
  }
  a.partition.divergent = j.at("divergent").get<std::vector<std::string>>();
  for (const auto& m : j.at("merges")) {
    MergeTest t;
    t.first_club = m.at("clubs")[0].get<std::size_t>() - 1;
    t.second_club = m.at("clubs")[1].get<std::size_t>() - 1;
    t.members = m.at("members").get<std::vector<std::string>>();
    t.merged = m.at("merged").get<bool>();
    t.result = logt_from(m);
    a.partition.merge_tests.push_back(std::move(t));
  }
  for (const auto& m : j.at("transitions")) {
    TransitionTest t;
    t.first_club = m.at("clubs")[0].get<std::size_t>() - 1;
    t.units = m.at("units").get<std::vector<std::string>>();
    t.heuristic = m.at("heuristic").get<bool>();
    t.result = logt_from(m);
    a.partition.transition_tests.push_back(std::move(t));
  }
  return a;
}

json probit_json(const ProbitReport& p) {
  const auto& f = p.fit;
  json coef = json::array();
  for (std::size_t j = 0; j < f.names.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    coef.push_back(json{{"name", f.names[j]},
                        {"beta", num(f.beta(k))},
                        {"se", num(f.se(k))},
                        {"z", num(f.z(k))},
                        {"p", num(f.p_value(k))}});
  }
  json cov = json::array();
  for (Eigen::Index r = 0; r < f.cov_robust.rows(); ++r) cov.push_back(vec(f.cov_robust.row(r).transpose()));
  return json{{"coef", coef},
              {"cov_robust", cov},
              {"loglik", num(f.loglik)},
              {"loglik_null", num(f.loglik_null)},
              {"mcfadden_r2", num(f.mcfadden_r2)},
              {"lr", {{"stat", num(f.lr_stat)}, {"df", f.lr_df}, {"p", num(f.lr_p_value)}}},
              {"classified", {{"correct", f.n_correct}, {"total", f.n}}},
              {"aic", num(f.aic)},
              {"bic", num(f.bic)},
              {"mean_y", num(f.mean_y)},
              {"sd_y", num(f.sd_y)},
              {"iterations", f.iterations},
              {"max_abs_score", num(f.max_abs_score)},
              {"table",
               {{"tp", p.table.tp},
                {"tn", p.table.tn},
                {"fp", p.table.fp},
                {"fn", p.table.fn},
                {"accuracy", num(p.table.accuracy)}}}};
}

ProbitReport probit_from(const json& j) {
  ProbitReport p;
  auto& f = p.fit;
  const auto& coef = j.at("coef");
  const auto k = static_cast<Eigen::Index>(coef.size());
  f.beta.resize(k);
  f.se.resize(k);
  f.z.resize(k);
  f.p_value.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& c = coef[static_cast<std::size_t>(i)];
    f.names.push_back(c.at("name").get<std::string>());
    f.beta(i) = to_num(c.at("beta"));
    f.se(i) = to_num(c.at("se"));
    f.z(i) = to_num(c.at("z"));
    f.p_value(i) = to_num(c.at("p"));
  }
  f.cov_robust.resize(k, k);
  for (Eigen::Index r = 0; r < k; ++r) f.cov_robust.row(r) = to_vec(j.at("cov_robust")[static_cast<std::size_t>(r)]);
  f.loglik = to_num(j.at("loglik"));
  f.loglik_null = to_num(j.at("loglik_null"));
  f.mcfadden_r2 = to_num(j.at("mcfadden_r2"));
  f.lr_stat = to_num(j.at("lr").at("stat"));
  f.lr_df = j.at("lr").at("df").get<int>();
  f.lr_p_value = to_num(j.at("lr").at("p"));
  f.n_correct = j.at("classified").at("correct").get<int>();
  f.n = j.at("classified").at("total").get<int>();
  f.aic = to_num(j.at("aic"));
  f.bic = to_num(j.at("bic"));
  f.mean_y = to_num(j.at("mean_y"));
  f.sd_y = to_num(j.at("sd_y"));
  f.iterations = j.at("iterations").get<int>();
  f.max_abs_score = to_num(j.at("max_abs_score"));
  const auto& t = j.at("table");
  p.table = {t.at("tp").get<int>(), t.at("tn").get<int>(), t.at("fp").get<int>(), t.at("fn").get<int>(),
             to_num(t.at("accuracy"))};
  return p;
}

json mc_json(const MonteCarloSummary& s) {
  return json{{"cell", s.label},
              {"replications", s.replications},
              {"rejection_rate", num(s.rejection_rate)},
              {"mean_b_hat", num(s.mean_b_hat)},
              {"sd_b_hat", num(s.sd_b_hat)},
              {"recovery_rate", num(s.recovery_rate)},
              {"mean_ari", num(s.mean_ari)},
              {"failures", s.failures}};
}

MonteCarloSummary mc_from(const json& j) {
  MonteCarloSummary s;
  s.label = j.at("cell").get<std::string>();
  s.replications = j.at("replications").get<int>();
  s.rejection_rate = to_num(j.at("rejection_rate"));
  s.mean_b_hat = to_num(j.at("mean_b_hat"));
  s.sd_b_hat = to_num(j.at("sd_b_hat"));
  s.recovery_rate = to_num(j.at("recovery_rate"));
  s.mean_ari = to_num(j.at("mean_ari"));
  s.failures = j.at("failures").get<int>();
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

}  // namespace

std::string report_to_json(const Report& report, int indent) {
  json root;
  root["meta"] = json{{"version", report.meta.version},
                      {"config", report.meta.config},
                      {"data_hash", report.meta.data_hash},
                      {"timestamp", report.meta.timestamp}};
  if (report.analysis) analysis_json(root, *report.analysis);
  if (!report.sectors.empty()) {
    json sectors = json::object();
    for (const auto& [name, a] : report.sectors) {
      json s;
      analysis_json(s, a);
      sectors[name] = s;
    }
    root["sectors"] = sectors;
  }
  if (report.probit) root["probit"] = probit_json(*report.probit);
  if (!report.montecarlo.empty()) {
    json mc = json::array();
    for (const auto& s : report.montecarlo) mc.push_back(mc_json(s));
    root["montecarlo"] = mc;
  }
  return root.dump(indent) + "\n";
}

Report report_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedInput, std::string("report JSON: ") + e.what());
  }
  Report r;
  try {
    const auto& meta = root.at("meta");
    r.meta.version = meta.at("version").get<std::string>();
    r.meta.config = meta.at("config").get<std::map<std::string, std::string>>();
    r.meta.data_hash = meta.at("data_hash").get<std::string>();
    r.meta.timestamp = meta.at("timestamp").get<std::string>();
    if (root.contains("logt")) r.analysis = analysis_from(root);
    if (root.contains("sectors")) {
      for (const auto& [name, s] : root.at("sectors").items()) r.sectors.emplace(name, analysis_from(s));
    }
    if (root.contains("probit")) r.probit = probit_from(root.at("probit"));
    if (root.contains("montecarlo")) {
      for (const auto& s : root.at("montecarlo")) r.montecarlo.push_back(mc_from(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedInput, std::string("report JSON: ") + e.what());
  }
  return r;
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> emit_paths(const TransitionPaths& paths, const ClubPartition* grouping,
                                    const std::string& out_dir, const std::string& prefix) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + out_dir + ": " + ec.message());
  const fs::path dir(out_dir);
  const auto fmt = [](double v) { return csv::format_sig(v, 12); };
  const auto T = paths.h.cols();
  std::vector<std::string> written;

  auto year_header = [&](const std::string& first) {
    std::string s = first;
    for (int y : paths.periods) s += "," + std::to_string(y);
    return s + "\n";
  };

  std::string h = year_header("unit");
  for (std::size_t i = 0; i < paths.units.size(); ++i) {
    h += paths.units[i].code;
    for (Eigen::Index t = 0; t < T; ++t) h += "," + fmt(paths.h(static_cast<Eigen::Index>(i), t));
    h += "\n";
  }
  write_text(dir / (prefix + "h.csv"), h);
  written.push_back((dir / (prefix + "h.csv")).string());

  std::string var = "year,H\n";
  for (Eigen::Index t = 0; t < T; ++t) {
    var += std::to_string(paths.periods[static_cast<std::size_t>(t)]) + "," + fmt(paths.H(t)) + "\n";
  }
  write_text(dir / (prefix + "H.csv"), var);
  written.push_back((dir / (prefix + "H.csv")).string());

  if (grouping == nullptr || grouping->clubs.empty()) return written;

  std::map<std::string, Eigen::Index> row_of;
  for (std::size_t i = 0; i < paths.units.size(); ++i) row_of[paths.units[i].code] = static_cast<Eigen::Index>(i);
  std::vector<Eigen::RowVectorXd> means;
  for (const auto& club : grouping->clubs) {
    Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(T);
    for (const auto& code : club.members) {
      auto it = row_of.find(code);
      if (it == row_of.end()) throw Error(ErrorKind::InvalidSubset, "grouping names unknown unit " + code);
      m += paths.h.row(it->second);
    }
    means.push_back(m / static_cast<double>(club.members.size()));
  }

  std::string cm = "year";
  for (std::size_t k = 0; k < means.size(); ++k) cm += ",club" + std::to_string(k + 1);
  cm += "\n";
  for (Eigen::Index t = 0; t < T; ++t) {
    cm += std::to_string(paths.periods[static_cast<std::size_t>(t)]);
    for (const auto& m : means) cm += "," + fmt(m(t));
    cm += "\n";
  }
  write_text(dir / (prefix + "club_means.csv"), cm);
  written.push_back((dir / (prefix + "club_means.csv")).string());

  std::string rel = year_header("unit,club");
  for (std::size_t k = 0; k < grouping->clubs.size(); ++k) {
    for (const auto& code : grouping->clubs[k].members) {
      rel += code + "," + std::to_string(k + 1);
      const auto r = row_of.at(code);
      for (Eigen::Index t = 0; t < T; ++t) rel += "," + fmt(paths.h(r, t) / means[k](t));
      rel += "\n";
    }
  }
  write_text(dir / (prefix + "relative_to_club.csv"), rel);
  written.push_back((dir / (prefix + "relative_to_club.csv")).string());
  return written;
}

}  // namespace clubconv
