#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "crowdgate/counting.hpp"
#include "crowdgate/rational.hpp"
#include "crowdgate/segmenting.hpp"
#include "crowdgate/smoothing.hpp"

namespace crowdgate {

struct PipelineConfig {
  std::optional<Rational> fps_override;
  Count count_ceiling = 25;
  double min_score = 0.5;
  int person_class_id = 0;
  std::uint32_t smoothing_divisor = 3;
  TieBreak tie_break = TieBreak::PreferLastValue;
  std::optional<Count> abnormal_threshold;  // falls back to count_ceiling
  std::optional<std::size_t> min_duration_frames;
  std::optional<std::size_t> merge_gap_frames;
  std::optional<std::string> density_model_path;
  std::string source_video = "input.mp4";

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  RoutingPolicy routing_policy() const;
  SmoothingParams smoothing_params(const Rational& fps) const;
  SegmentPolicy segment_policy(const Rational& fps) const;
  Count effective_abnormal_threshold() const { return abnormal_threshold.value_or(count_ceiling); }

  /// Every field, with defaults filled in.
  nlohmann::ordered_json to_json() const;
  /// Unknown keys and wrong types raise ConfigError.
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::string& path);
};

}  // namespace crowdgate
