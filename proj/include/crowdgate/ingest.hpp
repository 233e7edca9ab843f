#pragma once

// Detection-file and raw gray-frame container I/O.
//
// Detections file (UTF-8, LF terminated):
//   {"fps": 30 | "30000/1001", "source_id": "cam1"}
//   {"frame_index": 0, "timestamp_ms": 0, "boxes": [{"x":..,"y":..,"w":..,"h":..,"score":..,"class_id":..}]}
//   ...
// Gray container: "CGRY", u32 LE width, u32 LE height, u32 LE frame count,
// then frame_count * width * height bytes, row-major.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "crowdgate/rational.hpp"

namespace crowdgate {

struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  double score = 0.0;
  int class_id = 0;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct FrameDetections {
  std::uint64_t frame_index = 0;
  std::uint64_t timestamp_ms = 0;
  std::vector<BoundingBox> boxes;

  friend bool operator==(const FrameDetections&, const FrameDetections&) = default;
};

/// A run of frame indices absent from a detections stream.
struct FrameGap {
  std::uint64_t first_missing = 0;
  std::uint64_t missing_count = 0;

  friend bool operator==(const FrameGap&, const FrameGap&) = default;
};

struct StreamMeta {
  Rational fps;
  std::uint64_t frame_count = 0;  // number of records
  std::string source_id;
  std::vector<FrameGap> gaps;

  friend bool operator==(const StreamMeta&, const StreamMeta&) = default;
};

struct DetectionStream {
  StreamMeta meta;
  std::vector<FrameDetections> frames;

  friend bool operator==(const DetectionStream&, const DetectionStream&) = default;
};

DetectionStream parse_detections(std::istream& in);
DetectionStream parse_detections_text(const std::string& text);
void serialize_detections(const DetectionStream& stream, std::ostream& out);
std::string serialize_detections_text(const DetectionStream& stream);

struct GrayFrame {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;
  std::uint64_t frame_index = 0;

  std::uint8_t at(std::uint32_t col, std::uint32_t row) const { return pixels[std::size_t{row} * width + col]; }

  friend bool operator==(const GrayFrame&, const GrayFrame&) = default;
};

/// Reads a whole gray container; frame_index is the position in the file.
std::vector<GrayFrame> load_gray_frames(std::istream& in);
void write_gray_frames(std::span<const GrayFrame> frames, std::ostream& out);

}  // namespace crowdgate
