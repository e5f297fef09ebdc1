#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace clubconv {

// Every failure the toolkit reports carries one of these kinds; the CLI prints
// the kind's name on stderr and exits nonzero.
enum class ErrorKind {
  MalformedInput,
  NonPositiveValue,
  MissingValue,
  EmptyPanel,
  MissingTarget,
  SmoothingBrokePositivity,
  DegenerateVariance,
  SampleTooSmall,
  BandwidthTooLarge,
  InvalidSubset,
  InvalidDesign,
  Separation,
  Singular,
  NoConvergence,
  DimensionMismatch,
  InvalidConfig,
  IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedInput: return "MalformedInput";
    case ErrorKind::NonPositiveValue: return "NonPositiveValue";
    case ErrorKind::MissingValue: return "MissingValue";
    case ErrorKind::EmptyPanel: return "EmptyPanel";
    case ErrorKind::MissingTarget: return "MissingTarget";
    case ErrorKind::SmoothingBrokePositivity: return "SmoothingBrokePositivity";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::SampleTooSmall: return "SampleTooSmall";
    case ErrorKind::BandwidthTooLarge: return "BandwidthTooLarge";
    case ErrorKind::InvalidSubset: return "InvalidSubset";
    case ErrorKind::InvalidDesign: return "InvalidDesign";
    case ErrorKind::Separation: return "Separation";
    case ErrorKind::Singular: return "Singular";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace clubconv
