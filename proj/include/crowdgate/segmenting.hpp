#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crowdgate/counting.hpp"

namespace crowdgate {

/// Inclusive frame range; end_ms is exclusive, at (end_frame + 1) / fps.
struct Segment {
  std::uint64_t start_frame = 0;
  std::uint64_t end_frame = 0;
  std::uint64_t start_ms = 0;
  std::uint64_t end_ms = 0;
  Count peak_count = 0;
  double mean_count = 0.0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct SegmentPolicy {
  Count abnormal_threshold = 1;
  std::size_t min_duration_frames = 1;
  std::size_t merge_gap_frames = 0;

  /// Duration and gap guards both set to the smoothing half-length.
  static SegmentPolicy with_defaults(Count abnormal_threshold, std::size_t window_half_length);
  void validate() const;
};

/// Runs of count > threshold, merged across gaps of at most
/// merge_gap_frames, then filtered by min_duration_frames.
std::vector<Segment> extract_segments(const CountSeries& series, const SegmentPolicy& policy);

struct CutList {
  std::string report_json;    // JSON array, one object per segment
  std::string command_sheet;  // one ffmpeg trim line per segment
};

/// Throws InputError when segments overlap or are out of order.
CutList emit_cutlist(std::span<const Segment> segments, std::string_view source_path);

/// "2.000" style seconds with millisecond precision.
std::string format_seconds(std::uint64_t ms);

std::vector<Segment> parse_segment_report(const std::string& json_text);

}  // namespace crowdgate
