#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "crowdgate/ingest.hpp"
#include "crowdgate/rational.hpp"

namespace crowdgate {

using Count = std::int64_t;

enum class Provenance { Detector, Density, Smoothed };

std::string_view to_string(Provenance p);
std::optional<Provenance> provenance_from_string(std::string_view text);

/// Per-frame person counts. `frame_indices` carries the source frame number
/// of each entry so gapped streams keep their original numbering.
struct CountSeries {
  std::vector<Count> counts;
  Rational fps;
  std::vector<Provenance> provenance;
  std::vector<std::uint64_t> frame_indices;

  /// Frames numbered 0..n-1, all tagged Detector.
  static CountSeries from_counts(std::vector<Count> counts, Rational fps);

  std::size_t size() const noexcept { return counts.size(); }
  bool empty() const noexcept { return counts.empty(); }

  /// Throws InputError on length mismatches or negative counts.
  void validate() const;

  friend bool operator==(const CountSeries&, const CountSeries&) = default;
};

struct RoutingPolicy {
  Count count_ceiling = 25;
  double min_score = 0.5;
  int person_class_id = 0;

  void validate() const;
};

/// Number of person boxes scoring at least min_score.
Count count_frame(const FrameDetections& frame, const RoutingPolicy& policy);

/// Detector counts for every record of a stream.
CountSeries count_stream(const DetectionStream& stream, const RoutingPolicy& policy);

/// Positions whose detector count is strictly above the ceiling.
std::vector<std::size_t> frames_over_ceiling(const CountSeries& series, const RoutingPolicy& policy);

/// The judge step. `density` is either empty (not supplied) or aligned with
/// `series`; an entry is only consulted for frames above the ceiling.
/// Throws MissingDensityError listing the frame indices that lack one.
CountSeries route_counts(const CountSeries& series, const RoutingPolicy& policy,
                         std::span<const std::optional<Count>> density = {});

}  // namespace crowdgate
