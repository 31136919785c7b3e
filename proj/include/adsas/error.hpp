#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adsas {

enum class Errc {
  invalid_argument,
  empty_input,
  invalid_factor,
  insufficient_knots,
  non_monotonic_knots,
  query_out_of_range,
  too_short,
  degenerate_series,
  window_too_small,
  singular_local_fit,
  degenerate_after_differencing,
  all_fits_failed,
  out_of_order_timestamp,
  non_finite_value,
  irregular_sampling,
  label_out_of_range,
  parse_error,
  unsorted_timestamps,
  unknown_label_timestamp,
  spec_out_of_range,
  format_error,
};

constexpr std::string_view errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::empty_input: return "EmptyInput";
    case Errc::invalid_factor: return "InvalidFactor";
    case Errc::insufficient_knots: return "InsufficientKnots";
    case Errc::non_monotonic_knots: return "NonMonotonicKnots";
    case Errc::query_out_of_range: return "QueryOutOfRange";
    case Errc::too_short: return "TooShort";
    case Errc::degenerate_series: return "DegenerateSeries";
    case Errc::window_too_small: return "WindowTooSmall";
    case Errc::singular_local_fit: return "SingularLocalFit";
    case Errc::degenerate_after_differencing: return "DegenerateAfterDifferencing";
    case Errc::all_fits_failed: return "AllFitsFailed";
    case Errc::out_of_order_timestamp: return "OutOfOrderTimestamp";
    case Errc::non_finite_value: return "NonFiniteValue";
    case Errc::irregular_sampling: return "IrregularSampling";
    case Errc::label_out_of_range: return "LabelOutOfRange";
    case Errc::parse_error: return "ParseError";
    case Errc::unsorted_timestamps: return "UnsortedTimestamps";
    case Errc::unknown_label_timestamp: return "UnknownLabelTimestamp";
    case Errc::spec_out_of_range: return "SpecOutOfRange";
    case Errc::format_error: return "FormatError";
  }
  return "Unknown";
}

/// Exception type thrown by every adsas operation. The code identifies the
/// failure class; what() carries a human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& detail) { throw Error(code, detail); }

}  // namespace adsas
