#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace macrobell {

enum class Errc {
  // input validation
  NotHermitian,
  NotPositive,
  NotComplete,
  DuplicateOutcome,
  InvalidArgument,
  DegenerateOffDiagonal,
  OffLattice,
  CapExceeded,
  GridTooNarrow,
  InvalidP,
  SingularChannel,
  // numerical failures
  NegativeDensity,
  Divergent,
  NumericFailure,
};

constexpr std::string_view errc_name(Errc e) {
  switch (e) {
    case Errc::NotHermitian: return "NotHermitian";
    case Errc::NotPositive: return "NotPositive";
    case Errc::NotComplete: return "NotComplete";
    case Errc::DuplicateOutcome: return "DuplicateOutcome";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DegenerateOffDiagonal: return "DegenerateOffDiagonal";
    case Errc::OffLattice: return "OffLattice";
    case Errc::CapExceeded: return "CapExceeded";
    case Errc::GridTooNarrow: return "GridTooNarrow";
    case Errc::InvalidP: return "InvalidP";
    case Errc::SingularChannel: return "SingularChannel";
    case Errc::NegativeDensity: return "NegativeDensity";
    case Errc::Divergent: return "Divergent";
    case Errc::NumericFailure: return "NumericFailure";
  }
  return "Unknown";
}

/// True for errors caused by bad input rather than by the numerics.
constexpr bool is_validation_error(Errc e) {
  switch (e) {
    case Errc::NegativeDensity:
    case Errc::Divergent:
    case Errc::NumericFailure:
      return false;
    default:
      return true;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), index_(index) {}

  Errc code() const noexcept { return code_; }
  /// Offending item (effect index, grid index, ...) when one exists.
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  Errc code_;
  std::optional<std::size_t> index_;
};

}  // namespace macrobell
