#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace clubconv {

struct UnitId {
  std::string code;
  std::string name;

  friend bool operator==(const UnitId&, const UnitId&) = default;
};

// StrictlyPositive is the default. NonNegative admits zero cells (raw sector
// shares start at 0% for some units); the cross-sectional mean is then checked
// where it is divided by.
enum class ValuePolicy { StrictlyPositive, NonNegative };

// N units x T consecutive periods of an indicator. Immutable once built.
class Panel {
 public:
  Panel(std::vector<UnitId> units, std::vector<int> periods, Eigen::MatrixXd values,
        ValuePolicy policy = ValuePolicy::StrictlyPositive);

  std::size_t n_units() const { return units_.size(); }
  std::size_t n_periods() const { return periods_.size(); }
  const std::vector<UnitId>& units() const { return units_; }
  const std::vector<int>& periods() const { return periods_; }
  const Eigen::MatrixXd& values() const { return values_; }
  ValuePolicy policy() const { return policy_; }

  std::optional<std::size_t> index_of(const std::string& code) const;
  std::vector<std::string> codes() const;

  // Rows in the given order; the result must still satisfy the panel invariants.
  Panel select_units(std::span<const std::size_t> rows) const;
  Panel select_periods(int first_year, int last_year) const;
  Panel with_values(Eigen::MatrixXd values) const;
  Panel scaled(double factor) const;

 private:
  std::vector<UnitId> units_;
  std::vector<int> periods_;
  Eigen::MatrixXd values_;
  ValuePolicy policy_;
};

enum class Layout { Wide, Long };

struct LoadOptions {
  Layout layout = Layout::Wide;
  // Drop units with gaps (and log a warning) instead of failing.
  bool lenient = false;
  ValuePolicy policy = ValuePolicy::StrictlyPositive;
};

struct LoadedPanel {
  Panel panel;
  std::vector<std::string> warnings;
};

LoadedPanel load_panel_with_warnings(std::istream& in, const LoadOptions& opts);
Panel load_panel(std::istream& in, const LoadOptions& opts = {});
Panel load_panel_file(const std::string& path, const LoadOptions& opts = {});

// Wide layout, shortest round-trip decimal representation of every value.
void write_panel_wide(std::ostream& out, const Panel& panel);

// Per-unit positive targets keyed by unit code.
class TargetVector {
 public:
  TargetVector() = default;
  explicit TargetVector(std::map<std::string, double> targets);

  const std::map<std::string, double>& targets() const { return targets_; }
  std::optional<double> find(const std::string& code) const;
  TargetVector reciprocal() const;

 private:
  std::map<std::string, double> targets_;
};

TargetVector load_targets(std::istream& in);
TargetVector load_targets_file(const std::string& path);

Panel rescale_to_targets(const Panel& panel, const TargetVector& targets);

enum class SmoothingMethod { None, HodrickPrescott };

struct SmoothingConfig {
  SmoothingMethod method = SmoothingMethod::None;
  double lambda = 6.25;
};

// Trend of the Hodrick-Prescott decomposition of one series.
Eigen::VectorXd hp_trend(const Eigen::Ref<const Eigen::VectorXd>& series, double lambda);

Panel smooth(const Panel& panel, const SmoothingConfig& cfg);

}  // namespace clubconv
