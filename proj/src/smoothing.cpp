#include "crowdgate/smoothing.hpp"

#include <algorithm>

#include "crowdgate/error.hpp"

namespace crowdgate {

std::string_view to_string(TieBreak t) {
  return t == TieBreak::PreferSmallest ? "prefer_smallest" : "prefer_last_value";
}

std::optional<TieBreak> tie_break_from_string(std::string_view text) {
  if (text == "prefer_last_value") return TieBreak::PreferLastValue;
  if (text == "prefer_smallest") return TieBreak::PreferSmallest;
  return std::nullopt;
}

std::size_t window_length(const Rational& fps, std::uint32_t divisor) {
  if (divisor == 0) throw ConfigError("smoothing divisor must be >= 1");
  const auto den = static_cast<std::uint64_t>(fps.den()) * divisor;
  return std::max<std::size_t>(1, static_cast<std::uint64_t>(fps.num()) / den);
}

SmoothingParams SmoothingParams::for_fps(const Rational& fps, std::uint32_t divisor, TieBreak tie_break) {
  return {window_length(fps, divisor), divisor, tie_break};
}

void WindowHistogram::assign(std::span<const Count> window) {
  scratch_.assign(window.begin(), window.end());
  std::sort(scratch_.begin(), scratch_.end());
  entries_.clear();
  for (const Count v : scratch_) {
    if (entries_.empty() || entries_.back().first != v)
      entries_.emplace_back(v, 1);
    else
      ++entries_.back().second;
  }
  total_ = window.size();
}

std::size_t WindowHistogram::frequency(Count value) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), value,
                                   [](const Entry& e, Count v) { return e.first < v; });
  return (it != entries_.end() && it->first == value) ? it->second : 0;
}

std::size_t WindowHistogram::max_frequency() const {
  std::size_t best = 0;
  for (const auto& [value, freq] : entries_) best = std::max(best, freq);
  return best;
}

WindowHistogram window_histogram(std::span<const Count> series, std::size_t center, std::size_t half_length) {
  if (center >= series.size())
    throw InputError("smooth", "window center " + std::to_string(center) + " outside a series of " +
                                   std::to_string(series.size()));
  const std::size_t lo = center > half_length ? center - half_length : 0;
  const std::size_t hi = std::min(series.size() - 1, center + half_length);
  return WindowHistogram(series.subspan(lo, hi - lo + 1));
}

WindowHistogram window_histogram(const CountSeries& series, std::size_t center, std::size_t half_length) {
  return window_histogram(std::span<const Count>(series.counts), center, half_length);
}

Count window_mode(const WindowHistogram& hist, Count last_value, TieBreak tie_break) {
  if (hist.empty()) throw InputError("smooth", "mode of an empty window");
  const std::size_t best = hist.max_frequency();
  if (tie_break == TieBreak::PreferLastValue && hist.frequency(last_value) == best) return last_value;
  // Entries are sorted by value, so the first maximal one is the smallest.
  for (const auto& [value, freq] : hist.entries())
    if (freq == best) return value;
  return hist.entries().front().first;
}

CountSeries smooth_series(const CountSeries& series, const SmoothingParams& params) {
  if (series.empty()) throw InputError("smooth", "cannot smooth an empty series");
  if (params.window_half_length < 1) throw ConfigError("window_half_length must be >= 1");
  series.validate();

  CountSeries out = series;
  std::vector<Count>& work = out.counts;
  const std::span<const Count> view(work);
  const std::size_t half = params.window_half_length;
  const std::size_t n = work.size();
  WindowHistogram hist;

  Count last_value = work[0];
  for (std::size_t x = 1; x < n; ++x) {
    if (work[x] != last_value) {
      const std::size_t lo = x > half ? x - half : 0;
      const std::size_t hi = std::min(n - 1, x + half);
      hist.assign(view.subspan(lo, hi - lo + 1));
      const Count r = window_mode(hist, last_value, params.tie_break);
      if (r != work[x]) {
        work[x] = r;
        out.provenance[x] = Provenance::Smoothed;
      }
    }
    last_value = work[x];
  }
  return out;
}

}  // namespace crowdgate
