#include "crowdgate/counting.hpp"

#include <algorithm>

#include "crowdgate/error.hpp"

namespace crowdgate {

namespace {

std::string join_frames(const std::vector<std::uint64_t>& frames) {
  std::string out;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i == 8 && frames.size() > 10) {
      out += ", ... (" + std::to_string(frames.size()) + " frames)";
      break;
    }
    if (i) out += ", ";
    out += std::to_string(frames[i]);
  }
  return out;
}

}  // namespace

MissingDensityError::MissingDensityError(std::vector<std::uint64_t> frames)
    : StageError("count", "no density estimate for over-ceiling frame(s) " + join_frames(frames)),
      frames_(std::move(frames)) {}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Detector: return "Detector";
    case Provenance::Density: return "Density";
    case Provenance::Smoothed: return "Smoothed";
  }
  return "Detector";
}

std::optional<Provenance> provenance_from_string(std::string_view text) {
  if (text == "Detector") return Provenance::Detector;
  if (text == "Density") return Provenance::Density;
  if (text == "Smoothed") return Provenance::Smoothed;
  return std::nullopt;
}

CountSeries CountSeries::from_counts(std::vector<Count> counts, Rational fps) {
  CountSeries s;
  s.provenance.assign(counts.size(), Provenance::Detector);
  s.frame_indices.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) s.frame_indices[i] = i;
  s.counts = std::move(counts);
  s.fps = fps;
  return s;
}

void CountSeries::validate() const {
  if (provenance.size() != counts.size() || frame_indices.size() != counts.size())
    throw InputError("series", "count, provenance and frame index arrays differ in length");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0)
      throw InputError("series", "negative count at frame " + std::to_string(frame_indices[i]));
  }
}

void RoutingPolicy::validate() const {
  if (count_ceiling < 1) throw ConfigError("count_ceiling must be >= 1");
  if (!(min_score >= 0.0 && min_score <= 1.0)) throw ConfigError("min_score must lie in [0, 1]");
}

Count count_frame(const FrameDetections& frame, const RoutingPolicy& policy) {
  return static_cast<Count>(std::count_if(frame.boxes.begin(), frame.boxes.end(), [&](const BoundingBox& b) {
    return b.class_id == policy.person_class_id && b.score >= policy.min_score;
  }));
}

CountSeries count_stream(const DetectionStream& stream, const RoutingPolicy& policy) {
  CountSeries s;
  s.fps = stream.meta.fps;
  s.counts.reserve(stream.frames.size());
  s.frame_indices.reserve(stream.frames.size());
  for (const auto& frame : stream.frames) {
    s.counts.push_back(count_frame(frame, policy));
    s.frame_indices.push_back(frame.frame_index);
  }
  s.provenance.assign(s.counts.size(), Provenance::Detector);
  return s;
}

std::vector<std::size_t> frames_over_ceiling(const CountSeries& series, const RoutingPolicy& policy) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < series.size(); ++i)
    if (series.counts[i] > policy.count_ceiling) out.push_back(i);
  return out;
}

CountSeries route_counts(const CountSeries& series, const RoutingPolicy& policy,
                         std::span<const std::optional<Count>> density) {
  series.validate();
  if (!density.empty() && density.size() != series.size())
    throw InputError("count", "density counts cover " + std::to_string(density.size()) + " frames, series has " +
                                  std::to_string(series.size()));

  CountSeries out = series;
  out.provenance.assign(series.size(), Provenance::Detector);
  std::vector<std::uint64_t> missing;
  for (const std::size_t i : frames_over_ceiling(series, policy)) {
    if (density.empty() || !density[i]) {
      missing.push_back(series.frame_indices[i]);
      continue;
    }
    if (*density[i] < 0)
      throw InputError("count", "negative density count at frame " + std::to_string(series.frame_indices[i]));
    out.counts[i] = *density[i];
    out.provenance[i] = Provenance::Density;
  }
  if (!missing.empty()) throw MissingDensityError(std::move(missing));
  return out;
}

}  // namespace crowdgate
