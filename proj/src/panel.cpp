#include "clubconv/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "clubconv/error.hpp"
#include "csv.hpp"

namespace clubconv {

namespace {

bool is_ascii_code(const std::string& code) {
  return !code.empty() &&
         std::all_of(code.begin(), code.end(), [](unsigned char c) { return c > 0x20 && c < 0x7f; });
}

void check_value(double v, const std::string& code, int year, ValuePolicy policy) {
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::MalformedInput, "non-finite value for " + code + " in " + std::to_string(year));
  }
  const bool ok = policy == ValuePolicy::StrictlyPositive ? v > 0.0 : v >= 0.0;
  if (!ok) {
    std::ostringstream msg;
    msg << "value " << v << " for " << code << " in " << year << " violates positivity";
    throw Error(ErrorKind::NonPositiveValue, msg.str());
  }
}

using CellGrid = std::vector<std::vector<std::optional<double>>>;

// Trims all-missing edge periods, then applies the strict/lenient gap rule.
LoadedPanel assemble(std::vector<std::string> codes, std::vector<int> years, CellGrid cells,
                     const LoadOptions& opts) {
  std::vector<std::string> warnings;
  const std::size_t n = codes.size();
  if (n < 2) {
    throw Error(ErrorKind::EmptyPanel, "panel needs at least 2 units, found " + std::to_string(n));
  }

  auto column_empty = [&](std::size_t t) {
    return std::all_of(cells.begin(), cells.end(), [t](const auto& row) { return !row[t].has_value(); });
  };
  std::size_t first = 0;
  std::size_t last = years.size();
  while (first < last && column_empty(first)) ++first;
  while (last > first && column_empty(last - 1)) --last;

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    auto gap = std::find_if(cells[i].begin() + first, cells[i].begin() + last,
                            [](const auto& c) { return !c.has_value(); });
    if (gap == cells[i].begin() + last) {
      keep.push_back(i);
      continue;
    }
    const int year = years[static_cast<std::size_t>(gap - cells[i].begin())];
    if (!opts.lenient) {
      throw Error(ErrorKind::MissingValue,
                  "unit " + codes[i] + " has no value for " + std::to_string(year));
    }
    warnings.push_back("dropped unit " + codes[i] + ": missing value for " + std::to_string(year));
  }

  const std::size_t t_count = last - first;
  if (keep.size() < 2 || t_count < 5) {
    throw Error(ErrorKind::EmptyPanel, std::to_string(keep.size()) + " units x " + std::to_string(t_count) +
                                           " periods survive; need at least 2 x 5");
  }

  std::vector<UnitId> units;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(t_count));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    units.push_back({codes[keep[r]], codes[keep[r]]});
    for (std::size_t t = 0; t < t_count; ++t) {
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = *cells[keep[r]][first + t];
    }
  }
  std::vector<int> periods(years.begin() + static_cast<std::ptrdiff_t>(first),
                           years.begin() + static_cast<std::ptrdiff_t>(last));
  return {Panel(std::move(units), std::move(periods), std::move(values), opts.policy), std::move(warnings)};
}

LoadedPanel load_wide(std::istream& in, const LoadOptions& opts) {
  csv::Reader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) throw Error(ErrorKind::MalformedInput, "empty input");
  if (header.size() < 2 || csv::lower(header[0]) != "unit") {
    throw Error(ErrorKind::MalformedInput, "wide layout header must start with 'unit'");
  }
  std::vector<int> years;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const int y = csv::parse_int(header[c], reader.line());
    if (!years.empty() && y != years.back() + 1) {
      throw Error(ErrorKind::MalformedInput, "header years must be consecutive and increasing");
    }
    years.push_back(y);
  }

  std::vector<std::string> codes;
  CellGrid cells;
  std::set<std::string> seen;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() != header.size()) {
      throw Error(ErrorKind::MalformedInput, "line " + std::to_string(reader.line()) + ": expected " +
                                                 std::to_string(header.size()) + " fields");
    }
    const std::string& code = row[0];
    if (!is_ascii_code(code)) {
      throw Error(ErrorKind::MalformedInput, "line " + std::to_string(reader.line()) + ": bad unit code");
    }
    if (!seen.insert(code).second) throw Error(ErrorKind::MalformedInput, "duplicate unit " + code);
    std::vector<std::optional<double>> cell_row;
    for (std::size_t c = 1; c < row.size(); ++c) {
      auto v = csv::parse_cell(row[c], reader.line());
      if (v) check_value(*v, code, years[c - 1], opts.policy);
      cell_row.push_back(v);
    }
    codes.push_back(code);
    cells.push_back(std::move(cell_row));
  }
  return assemble(std::move(codes), std::move(years), std::move(cells), opts);
}

LoadedPanel load_long(std::istream& in, const LoadOptions& opts) {
  csv::Reader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) throw Error(ErrorKind::MalformedInput, "empty input");
  if (header.size() != 3 || csv::lower(header[0]) != "unit" || csv::lower(header[1]) != "year" ||
      csv::lower(header[2]) != "value") {
    throw Error(ErrorKind::MalformedInput, "long layout header must be 'unit,year,value'");
  }

  std::vector<std::string> codes;
  std::map<std::string, std::map<int, std::optional<double>>> obs;
  int min_year = std::numeric_limits<int>::max();
  int max_year = std::numeric_limits<int>::min();
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() != 3) {
      throw Error(ErrorKind::MalformedInput, "line " + std::to_string(reader.line()) + ": expected 3 fields");
    }
    if (!is_ascii_code(row[0])) {
      throw Error(ErrorKind::MalformedInput, "line " + std::to_string(reader.line()) + ": bad unit code");
    }
    const int year = csv::parse_int(row[1], reader.line());
    auto v = csv::parse_cell(row[2], reader.line());
    if (v) check_value(*v, row[0], year, opts.policy);
    auto [it, fresh] = obs.try_emplace(row[0]);
    if (fresh) codes.push_back(row[0]);
    if (!it->second.emplace(year, v).second) {
      throw Error(ErrorKind::MalformedInput, "duplicate observation " + row[0] + "/" + std::to_string(year));
    }
    min_year = std::min(min_year, year);
    max_year = std::max(max_year, year);
  }
  if (codes.empty()) throw Error(ErrorKind::EmptyPanel, "no observations");

  std::vector<int> years;
  for (int y = min_year; y <= max_year; ++y) years.push_back(y);
  CellGrid cells;
  for (const auto& code : codes) {
    const auto& series = obs.at(code);
    std::vector<std::optional<double>> cell_row;
    for (int y : years) {
      auto it = series.find(y);
      cell_row.push_back(it == series.end() ? std::nullopt : it->second);
    }
    cells.push_back(std::move(cell_row));
  }
  return assemble(std::move(codes), std::move(years), std::move(cells), opts);
}

}  // namespace

Panel::Panel(std::vector<UnitId> units, std::vector<int> periods, Eigen::MatrixXd values, ValuePolicy policy)
    : units_(std::move(units)), periods_(std::move(periods)), values_(std::move(values)), policy_(policy) {
  if (units_.size() < 2 || periods_.size() < 5) {
    throw Error(ErrorKind::EmptyPanel, "panel needs N >= 2 and T >= 5, got " + std::to_string(units_.size()) +
                                           " x " + std::to_string(periods_.size()));
  }
  if (static_cast<std::size_t>(values_.rows()) != units_.size() ||
      static_cast<std::size_t>(values_.cols()) != periods_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "value matrix does not match unit/period labels");
  }
  for (std::size_t t = 1; t < periods_.size(); ++t) {
    if (periods_[t] != periods_[t - 1] + 1) {
      throw Error(ErrorKind::MalformedInput, "periods must be consecutive");
    }
  }
  std::set<std::string> seen;
  for (const auto& u : units_) {
    if (!is_ascii_code(u.code)) throw Error(ErrorKind::MalformedInput, "unit code must be non-empty ASCII");
    if (!seen.insert(u.code).second) throw Error(ErrorKind::MalformedInput, "duplicate unit " + u.code);
  }
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    for (Eigen::Index t = 0; t < values_.cols(); ++t) {
      check_value(values_(i, t), units_[static_cast<std::size_t>(i)].code, periods_[static_cast<std::size_t>(t)],
                  policy_);
    }
  }
}

std::optional<std::size_t> Panel::index_of(const std::string& code) const {
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (units_[i].code == code) return i;
  }
  return std::nullopt;
}

std::vector<std::string> Panel::codes() const {
  std::vector<std::string> out;
  out.reserve(units_.size());
  for (const auto& u : units_) out.push_back(u.code);
  return out;
}

Panel Panel::select_units(std::span<const std::size_t> rows) const {
  std::vector<UnitId> units;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= units_.size()) throw Error(ErrorKind::DimensionMismatch, "unit index out of range");
    units.push_back(units_[rows[r]]);
    values.row(static_cast<Eigen::Index>(r)) = values_.row(static_cast<Eigen::Index>(rows[r]));
  }
  return Panel(std::move(units), periods_, std::move(values), policy_);
}

Panel Panel::select_periods(int first_year, int last_year) const {
  const auto lo = std::max(first_year, periods_.front());
  const auto hi = std::min(last_year, periods_.back());
  if (hi < lo) throw Error(ErrorKind::EmptyPanel, "period window does not overlap the panel");
  const auto offset = static_cast<Eigen::Index>(lo - periods_.front());
  const auto count = static_cast<Eigen::Index>(hi - lo + 1);
  std::vector<int> periods;
  for (int y = lo; y <= hi; ++y) periods.push_back(y);
  return Panel(units_, std::move(periods), values_.middleCols(offset, count), policy_);
}

Panel Panel::with_values(Eigen::MatrixXd values) const {
  return Panel(units_, periods_, std::move(values), policy_);
}

Panel Panel::scaled(double factor) const { return with_values(values_ * factor); }

LoadedPanel load_panel_with_warnings(std::istream& in, const LoadOptions& opts) {
  return opts.layout == Layout::Wide ? load_wide(in, opts) : load_long(in, opts);
}

Panel load_panel(std::istream& in, const LoadOptions& opts) {
  return load_panel_with_warnings(in, opts).panel;
}

Panel load_panel_file(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  return load_panel(in, opts);
}

void write_panel_wide(std::ostream& out, const Panel& panel) {
  out << "unit";
  for (int y : panel.periods()) out << ',' << y;
  out << '\n';
  for (std::size_t i = 0; i < panel.n_units(); ++i) {
    out << panel.units()[i].code;
    for (Eigen::Index t = 0; t < panel.values().cols(); ++t) {
      out << ',' << csv::format_shortest(panel.values()(static_cast<Eigen::Index>(i), t));
    }
    out << '\n';
  }
}

TargetVector::TargetVector(std::map<std::string, double> targets) : targets_(std::move(targets)) {
  for (const auto& [code, v] : targets_) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw Error(ErrorKind::NonPositiveValue, "target for " + code + " must be positive");
    }
  }
}

std::optional<double> TargetVector::find(const std::string& code) const {
  auto it = targets_.find(code);
  if (it == targets_.end()) return std::nullopt;
  return it->second;
}

TargetVector TargetVector::reciprocal() const {
  std::map<std::string, double> inv;
  for (const auto& [code, v] : targets_) inv.emplace(code, 1.0 / v);
  return TargetVector(std::move(inv));
}

TargetVector load_targets(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row) || row.size() != 2 || csv::lower(row[0]) != "unit" || csv::lower(row[1]) != "target") {
    throw Error(ErrorKind::MalformedInput, "target file header must be 'unit,target'");
  }
  std::map<std::string, double> targets;
  while (reader.next(row)) {
    if (row.size() != 2) {
      throw Error(ErrorKind::MalformedInput, "line " + std::to_string(reader.line()) + ": expected 2 fields");
    }
    auto v = csv::parse_cell(row[1], reader.line());
    if (!v) throw Error(ErrorKind::MissingTarget, "no target value for " + row[0]);
    if (!targets.emplace(row[0], *v).second) throw Error(ErrorKind::MalformedInput, "duplicate target " + row[0]);
  }
  return TargetVector(std::move(targets));
}

TargetVector load_targets_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  return load_targets(in);
}

Panel rescale_to_targets(const Panel& panel, const TargetVector& targets) {
  Eigen::MatrixXd values = panel.values();
  for (std::size_t i = 0; i < panel.n_units(); ++i) {
    const auto& code = panel.units()[i].code;
    auto target = targets.find(code);
    if (!target) throw Error(ErrorKind::MissingTarget, "no target for unit " + code);
    values.row(static_cast<Eigen::Index>(i)) /= *target;
  }
  return panel.with_values(std::move(values));
}

// Solves (I + lambda D'D) tau = y through the equivalent form
// tau = y - D' (D D' + I/lambda)^{-1} D y, which stays well conditioned as
// lambda grows because D D' has full rank.
Eigen::VectorXd hp_trend(const Eigen::Ref<const Eigen::VectorXd>& series, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::InvalidConfig, "HP lambda must be positive and finite");
  }
  const Eigen::Index n = series.size();
  if (n < 3) return series;
  const Eigen::Index m = n - 2;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, n);
  for (Eigen::Index r = 0; r < m; ++r) {
    d(r, r) = 1.0;
    d(r, r + 1) = -2.0;
    d(r, r + 2) = 1.0;
  }
  Eigen::MatrixXd system = d * d.transpose();
  system.diagonal().array() += 1.0 / lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::Singular, "HP system not positive definite");
  const Eigen::VectorXd z = llt.solve(d * series);
  return series - d.transpose() * z;
}

Panel smooth(const Panel& panel, const SmoothingConfig& cfg) {
  if (cfg.method == SmoothingMethod::None) return panel;
  Eigen::MatrixXd values(panel.values().rows(), panel.values().cols());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    values.row(i) = hp_trend(panel.values().row(i).transpose(), cfg.lambda).transpose();
  }
  const bool ok = panel.policy() == ValuePolicy::StrictlyPositive ? (values.array() > 0.0).all()
                                                                   : (values.array() >= 0.0).all();
  if (!ok) throw Error(ErrorKind::SmoothingBrokePositivity, "HP trend left the admissible value range");
  return panel.with_values(std::move(values));
}

}  // namespace clubconv
