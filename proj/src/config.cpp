#include "crowdgate/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "crowdgate/error.hpp"

namespace crowdgate {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "fps_override",      "count_ceiling",    "min_score",          "person_class_id",
      "smoothing_divisor", "tie_break",        "abnormal_threshold", "min_duration_frames",
      "merge_gap_frames",  "density_model_path", "source_video"};
  return keys;
}

template <typename T>
T get_integer(const json& v, const std::string& key, T lo, T hi) {
  if (!v.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  const auto wide = v.get<std::int64_t>();
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
    throw ConfigError("'" + key + "' out of range");
  if (wide < static_cast<std::int64_t>(lo) || (wide >= 0 && static_cast<std::uint64_t>(wide) > static_cast<std::uint64_t>(hi)))
    throw ConfigError("'" + key + "' out of range");
  return static_cast<T>(wide);
}

}  // namespace

void PipelineConfig::validate() const {
  routing_policy().validate();
  if (smoothing_divisor < 1) throw ConfigError("smoothing_divisor must be >= 1");
  if (effective_abnormal_threshold() < 1) throw ConfigError("abnormal_threshold must be >= 1");
}

RoutingPolicy PipelineConfig::routing_policy() const { return {count_ceiling, min_score, person_class_id}; }

SmoothingParams PipelineConfig::smoothing_params(const Rational& fps) const {
  return SmoothingParams::for_fps(fps, smoothing_divisor, tie_break);
}

SegmentPolicy PipelineConfig::segment_policy(const Rational& fps) const {
  const std::size_t half = smoothing_params(fps).window_half_length;
  SegmentPolicy p = SegmentPolicy::with_defaults(effective_abnormal_threshold(), half);
  if (min_duration_frames) p.min_duration_frames = *min_duration_frames;
  if (merge_gap_frames) p.merge_gap_frames = *merge_gap_frames;
  return p;
}

nlohmann::ordered_json PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["fps_override"] = fps_override ? nlohmann::ordered_json(fps_override->to_string()) : nlohmann::ordered_json(nullptr);
  j["count_ceiling"] = count_ceiling;
  j["min_score"] = min_score;
  j["person_class_id"] = person_class_id;
  j["smoothing_divisor"] = smoothing_divisor;
  j["tie_break"] = std::string(to_string(tie_break));
  j["abnormal_threshold"] = effective_abnormal_threshold();
  j["min_duration_frames"] = min_duration_frames ? nlohmann::ordered_json(*min_duration_frames) : nlohmann::ordered_json(nullptr);
  j["merge_gap_frames"] = merge_gap_frames ? nlohmann::ordered_json(*merge_gap_frames) : nlohmann::ordered_json(nullptr);
  j["density_model_path"] = density_model_path ? nlohmann::ordered_json(*density_model_path) : nlohmann::ordered_json(nullptr);
  j["source_video"] = source_video;
  return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");

  PipelineConfig c;
  auto present = [&](const char* key) -> const json* {
    const auto it = j.find(key);
    return (it == j.end() || it->is_null()) ? nullptr : &*it;
  };

  if (const json* v = present("fps_override")) {
    try {
      if (v->is_string())
        c.fps_override = Rational::parse(v->get<std::string>());
      else if (v->is_number_integer())
        c.fps_override = Rational(v->get<std::int64_t>(), 1);
      else if (v->is_number_float())
        c.fps_override = Rational::from_double(v->get<double>());
      else
        throw ConfigError("'fps_override' must be a number or \"num/den\"");
    } catch (const InputError& e) {
      throw ConfigError(std::string("'fps_override': ") + e.what());
    }
  }
  if (const json* v = present("count_ceiling")) c.count_ceiling = get_integer<Count>(*v, "count_ceiling", 1, std::numeric_limits<Count>::max());
  if (const json* v = present("min_score")) {
    if (!v->is_number()) throw ConfigError("'min_score' must be a number");
    c.min_score = v->get<double>();
  }
  if (const json* v = present("person_class_id"))
    c.person_class_id = get_integer<int>(*v, "person_class_id", std::numeric_limits<int>::min(), std::numeric_limits<int>::max());
  if (const json* v = present("smoothing_divisor"))
    c.smoothing_divisor = get_integer<std::uint32_t>(*v, "smoothing_divisor", 1, std::numeric_limits<std::uint32_t>::max());
  if (const json* v = present("tie_break")) {
    const auto t = v->is_string() ? tie_break_from_string(v->get<std::string>()) : std::nullopt;
    if (!t) throw ConfigError("'tie_break' must be \"prefer_last_value\" or \"prefer_smallest\"");
    c.tie_break = *t;
  }
  if (const json* v = present("abnormal_threshold"))
    c.abnormal_threshold = get_integer<Count>(*v, "abnormal_threshold", 1, std::numeric_limits<Count>::max());
  if (const json* v = present("min_duration_frames"))
    c.min_duration_frames = get_integer<std::size_t>(*v, "min_duration_frames", 0, std::numeric_limits<std::int64_t>::max());
  if (const json* v = present("merge_gap_frames"))
    c.merge_gap_frames = get_integer<std::size_t>(*v, "merge_gap_frames", 0, std::numeric_limits<std::int64_t>::max());
  if (const json* v = present("density_model_path")) {
    if (!v->is_string()) throw ConfigError("'density_model_path' must be a string");
    c.density_model_path = v->get<std::string>();
  }
  if (const json* v = present("source_video")) {
    if (!v->is_string()) throw ConfigError("'source_video' must be a string");
    c.source_video = v->get<std::string>();
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return from_json(json::parse(buf.str()));
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace crowdgate
