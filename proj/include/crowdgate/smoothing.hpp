#pragma once

// Detection-jitter correction. A single left-to-right pass keeps the last
// accepted count; any frame that differs from it is replaced by the most
// frequent value in the window of `window_half_length` frames on either
// side (center included). Corrections are written back before the next
// frame is examined, so later windows see them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "crowdgate/counting.hpp"
#include "crowdgate/rational.hpp"

namespace crowdgate {

enum class TieBreak { PreferLastValue, PreferSmallest };

std::string_view to_string(TieBreak t);
std::optional<TieBreak> tie_break_from_string(std::string_view text);

struct SmoothingParams {
  std::size_t window_half_length = 1;
  std::uint32_t divisor = 3;
  TieBreak tie_break = TieBreak::PreferLastValue;

  /// Half-length derived from the frame rate: window_length(fps, divisor).
  static SmoothingParams for_fps(const Rational& fps, std::uint32_t divisor = 3,
                                 TieBreak tie_break = TieBreak::PreferLastValue);
};

/// max(1, floor(fps / divisor)).
std::size_t window_length(const Rational& fps, std::uint32_t divisor);

/// Value -> frequency over a window, kept sorted by value.
class WindowHistogram {
 public:
  using Entry = std::pair<Count, std::size_t>;

  WindowHistogram() = default;
  explicit WindowHistogram(std::span<const Count> window) { assign(window); }

  /// Rebuilds from the given values, reusing storage.
  void assign(std::span<const Count> window);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t total() const noexcept { return total_; }
  std::size_t frequency(Count value) const;
  /// Largest frequency in the window (the literal maximum of the counts).
  std::size_t max_frequency() const;

 private:
  std::vector<Entry> entries_;
  std::vector<Count> scratch_;
  std::size_t total_ = 0;
};

/// Histogram of series[max(0, center-half) ..= min(last, center+half)].
WindowHistogram window_histogram(std::span<const Count> series, std::size_t center, std::size_t half_length);
WindowHistogram window_histogram(const CountSeries& series, std::size_t center, std::size_t half_length);

/// The value with the highest frequency. Ties: PreferLastValue returns
/// `last_value` if it is tied, otherwise the smallest tied value;
/// PreferSmallest always returns the smallest tied value.
Count window_mode(const WindowHistogram& hist, Count last_value, TieBreak tie_break);

/// Throws InputError on an empty series.
CountSeries smooth_series(const CountSeries& series, const SmoothingParams& params);

}  // namespace crowdgate
