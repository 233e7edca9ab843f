#include "crowdgate/segmenting.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "crowdgate/error.hpp"

namespace crowdgate {

namespace {

struct Run {
  std::size_t first;
  std::size_t last;
};

std::string shell_quote(const std::string& s) {
  const bool safe = !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           std::string_view("._/-+:,@%=").find(c) != std::string_view::npos;
  });
  if (safe) return s;
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

}  // namespace

SegmentPolicy SegmentPolicy::with_defaults(Count abnormal_threshold, std::size_t window_half_length) {
  return {abnormal_threshold, window_half_length, window_half_length};
}

void SegmentPolicy::validate() const {
  if (abnormal_threshold < 1) throw ConfigError("abnormal_threshold must be >= 1");
}

std::vector<Segment> extract_segments(const CountSeries& series, const SegmentPolicy& policy) {
  policy.validate();
  series.validate();
  if (series.empty()) throw InputError("segment", "cannot segment an empty series");

  const auto& c = series.counts;
  std::vector<Run> runs;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] <= policy.abnormal_threshold) continue;
    if (!runs.empty() && runs.back().last + 1 == i)
      runs.back().last = i;
    else
      runs.push_back({i, i});
  }

  std::vector<Run> merged;
  for (const Run& r : runs) {
    if (!merged.empty() && r.first - merged.back().last - 1 <= policy.merge_gap_frames)
      merged.back().last = r.last;
    else
      merged.push_back(r);
  }

  std::vector<Segment> out;
  for (const Run& r : merged) {
    const std::size_t length = r.last - r.first + 1;
    if (length < policy.min_duration_frames) continue;
    Segment s;
    s.start_frame = series.frame_indices[r.first];
    s.end_frame = series.frame_indices[r.last];
    s.start_ms = frame_to_ms(s.start_frame, series.fps);
    s.end_ms = frame_to_ms(s.end_frame + 1, series.fps);
    double sum = 0.0;
    for (std::size_t i = r.first; i <= r.last; ++i) {
      s.peak_count = std::max(s.peak_count, c[i]);
      sum += static_cast<double>(c[i]);
    }
    s.mean_count = sum / static_cast<double>(length);
    out.push_back(s);
  }
  return out;
}

std::string format_seconds(std::uint64_t ms) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%llu.%03llu", static_cast<unsigned long long>(ms / 1000),
                static_cast<unsigned long long>(ms % 1000));
  return buf;
}

CutList emit_cutlist(std::span<const Segment> segments, std::string_view source_path) {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    if (s.start_frame > s.end_frame || s.start_ms > s.end_ms)
      throw InputError("segment", "segment " + std::to_string(i) + " ends before it starts");
    if (i > 0 && s.start_frame <= segments[i - 1].end_frame)
      throw InputError("segment", "segment " + std::to_string(i) + " (frames " + std::to_string(s.start_frame) + ".." +
                                      std::to_string(s.end_frame) + ") overlaps or precedes segment " +
                                      std::to_string(i - 1));
  }

  auto report = nlohmann::ordered_json::array();
  std::string sheet;
  const std::string source(source_path);
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const Segment& s = segments[k];
    report.push_back({{"start_frame", s.start_frame},
                      {"end_frame", s.end_frame},
                      {"start_ms", s.start_ms},
                      {"end_ms", s.end_ms},
                      {"peak_count", s.peak_count},
                      {"mean_count", s.mean_count}});
    sheet += "ffmpeg -i " + shell_quote(source) + " -ss " + format_seconds(s.start_ms) + " -to " +
             format_seconds(s.end_ms) + " -c copy " + shell_quote(source + "_seg" + std::to_string(k) + ".mp4") + "\n";
  }
  return {report.dump(2) + "\n", sheet};
}

std::vector<Segment> parse_segment_report(const std::string& json_text) {
  std::vector<Segment> out;
  try {
    const auto j = nlohmann::json::parse(json_text);
    if (!j.is_array()) throw InputError("segment", "segment report must be a JSON array");
    for (const auto& e : j) {
      Segment s;
      s.start_frame = e.at("start_frame").get<std::uint64_t>();
      s.end_frame = e.at("end_frame").get<std::uint64_t>();
      s.start_ms = e.at("start_ms").get<std::uint64_t>();
      s.end_ms = e.at("end_ms").get<std::uint64_t>();
      s.peak_count = e.at("peak_count").get<Count>();
      s.mean_count = e.at("mean_count").get<double>();
      out.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError("segment", std::string("bad segment report: ") + e.what());
  }
  return out;
}

}  // namespace crowdgate
