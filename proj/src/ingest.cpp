#include "crowdgate/ingest.hpp"

#include <array>
#include <cmath>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "crowdgate/error.hpp"

namespace crowdgate {

namespace {

using nlohmann::json;

constexpr const char* kStage = "ingest";

struct RecordContext {
  std::optional<std::size_t> record;
  std::size_t line;

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(kStage, record, line, message); }
};

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n\f\v") == std::string::npos;
}

json parse_line(const std::string& line, const RecordContext& ctx) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) ctx.fail("expected a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    ctx.fail(std::string("malformed JSON: ") + e.what());
  }
}

const json& require(const json& obj, const char* field, const std::string& path, const RecordContext& ctx) {
  const auto it = obj.find(field);
  if (it == obj.end()) ctx.fail("missing field '" + path + field + "'");
  return *it;
}

std::uint64_t require_unsigned(const json& obj, const char* field, const RecordContext& ctx) {
  const json& v = require(obj, field, "", ctx);
  if (!v.is_number_integer()) ctx.fail("field '" + std::string(field) + "' must be an integer");
  if (!v.is_number_unsigned()) ctx.fail("field '" + std::string(field) + "' must be nonnegative");
  return v.get<std::uint64_t>();
}

double require_real(const json& obj, const char* field, const std::string& path, const RecordContext& ctx) {
  const json& v = require(obj, field, path, ctx);
  if (!v.is_number()) ctx.fail("field '" + path + field + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) ctx.fail("field '" + path + field + "' must be finite");
  return d;
}

BoundingBox parse_box(const json& j, std::size_t index, const RecordContext& ctx) {
  const std::string path = "boxes[" + std::to_string(index) + "].";
  if (!j.is_object()) ctx.fail("'" + path.substr(0, path.size() - 1) + "' must be an object");
  BoundingBox box;
  box.x = require_real(j, "x", path, ctx);
  box.y = require_real(j, "y", path, ctx);
  box.w = require_real(j, "w", path, ctx);
  box.h = require_real(j, "h", path, ctx);
  box.score = require_real(j, "score", path, ctx);
  const json& cls = require(j, "class_id", path, ctx);
  if (!cls.is_number_integer()) ctx.fail("field '" + path + "class_id' must be an integer");
  const auto cls_value = cls.get<std::int64_t>();
  if (cls_value < std::numeric_limits<int>::min() || cls_value > std::numeric_limits<int>::max())
    ctx.fail("field '" + path + "class_id' out of range");
  box.class_id = static_cast<int>(cls_value);

  if (!(box.w > 0.0)) ctx.fail("field '" + path + "w' must be > 0");
  if (!(box.h > 0.0)) ctx.fail("field '" + path + "h' must be > 0");
  if (box.score < 0.0 || box.score > 1.0) ctx.fail("field '" + path + "score' must lie in [0, 1]");
  return box;
}

StreamMeta parse_header(const json& j, const RecordContext& ctx) {
  StreamMeta meta;
  const auto fps = j.find("fps");
  if (fps == j.end()) ctx.fail("header is missing 'fps'");
  try {
    if (fps->is_string()) {
      meta.fps = Rational::parse(fps->get<std::string>());
    } else if (fps->is_number_integer()) {
      meta.fps = Rational(fps->get<std::int64_t>(), 1);
    } else if (fps->is_number_float()) {
      meta.fps = Rational::from_double(fps->get<double>());
    } else {
      ctx.fail("header 'fps' must be a number or \"num/den\"");
    }
  } catch (const InputError& e) {
    if (dynamic_cast<const ParseError*>(&e)) throw;
    ctx.fail(std::string("header 'fps' invalid: ") + e.what());
  }
  const json& source = require(j, "source_id", "", ctx);
  if (!source.is_string()) ctx.fail("header 'source_id' must be a string");
  meta.source_id = source.get<std::string>();
  return meta;
}

}  // namespace

DetectionStream parse_detections(std::istream& in) {
  DetectionStream stream;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t record = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    if (!have_header) {
      const RecordContext ctx{std::nullopt, line_no};
      stream.meta = parse_header(parse_line(line, ctx), ctx);
      have_header = true;
      continue;
    }

    const RecordContext ctx{record, line_no};
    const json j = parse_line(line, ctx);
    FrameDetections frame;
    frame.frame_index = require_unsigned(j, "frame_index", ctx);
    frame.timestamp_ms = require_unsigned(j, "timestamp_ms", ctx);
    const json& boxes = require(j, "boxes", "", ctx);
    if (!boxes.is_array()) ctx.fail("field 'boxes' must be an array");
    frame.boxes.reserve(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) frame.boxes.push_back(parse_box(boxes[i], i, ctx));

    const std::uint64_t expected = stream.frames.empty() ? 0 : stream.frames.back().frame_index + 1;
    if (!stream.frames.empty() && frame.frame_index < expected) {
      ctx.fail(frame.frame_index + 1 == expected
                   ? "duplicate frame_index " + std::to_string(frame.frame_index)
                   : "frame_index " + std::to_string(frame.frame_index) + " is not increasing (previous " +
                         std::to_string(expected - 1) + ")");
    }
    if (frame.frame_index > expected)
      stream.meta.gaps.push_back({expected, frame.frame_index - expected});

    stream.frames.push_back(std::move(frame));
    ++record;
  }
  if (in.bad()) throw InputError(kStage, "read failure");
  if (!have_header) throw ParseError(kStage, std::nullopt, std::nullopt, "missing header line");

  stream.meta.frame_count = stream.frames.size();
  return stream;
}

DetectionStream parse_detections_text(const std::string& text) {
  std::istringstream in(text);
  return parse_detections(in);
}

void serialize_detections(const DetectionStream& stream, std::ostream& out) {
  nlohmann::ordered_json header;
  if (stream.meta.fps.den() == 1)
    header["fps"] = stream.meta.fps.num();
  else
    header["fps"] = stream.meta.fps.to_string();
  header["source_id"] = stream.meta.source_id;
  out << header.dump() << '\n';

  for (const auto& frame : stream.frames) {
    nlohmann::ordered_json rec;
    rec["frame_index"] = frame.frame_index;
    rec["timestamp_ms"] = frame.timestamp_ms;
    auto boxes = nlohmann::ordered_json::array();
    for (const auto& b : frame.boxes) {
      boxes.push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}, {"score", b.score}, {"class_id", b.class_id}});
    }
    rec["boxes"] = std::move(boxes);
    out << rec.dump() << '\n';
  }
}

std::string serialize_detections_text(const DetectionStream& stream) {
  std::ostringstream out;
  serialize_detections(stream, out);
  return out.str();
}

// Gray container

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'G', 'R', 'Y'};
constexpr std::size_t kHeaderSize = 16;

std::uint32_t read_u32_le(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

}  // namespace

std::vector<GrayFrame> load_gray_frames(std::istream& in) {
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < kHeaderSize)
    throw ParseError(kStage, std::nullopt, std::nullopt, "gray container truncated: header needs 16 bytes");
  if (!std::equal(kMagic.begin(), kMagic.end(), data.begin()))
    throw ParseError(kStage, std::nullopt, std::nullopt, "gray container has bad magic (expected CGRY)");

  const auto* raw = reinterpret_cast<const unsigned char*>(data.data());
  const std::uint32_t width = read_u32_le(raw + 4);
  const std::uint32_t height = read_u32_le(raw + 8);
  const std::uint32_t count = read_u32_le(raw + 12);
  if (count > 0 && (width == 0 || height == 0))
    throw ParseError(kStage, std::nullopt, std::nullopt,
                     "gray container dimension mismatch: " + std::to_string(width) + "x" + std::to_string(height));

  const std::size_t frame_bytes = std::size_t{width} * height;
  const std::size_t payload = data.size() - kHeaderSize;
  if (count > 0 && frame_bytes > payload / count) {
    const std::size_t complete = frame_bytes == 0 ? 0 : payload / frame_bytes;
    throw ParseError(kStage, complete, std::nullopt,
                     "gray container truncated: header declares " + std::to_string(count) + " frames of " +
                         std::to_string(frame_bytes) + " bytes, payload holds " + std::to_string(payload) + " bytes");
  }
  if (payload != frame_bytes * count)
    throw ParseError(kStage, std::nullopt, std::nullopt,
                     "gray container dimension mismatch: " + std::to_string(payload - frame_bytes * count) +
                         " trailing bytes");

  std::vector<GrayFrame> frames;
  frames.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    GrayFrame f;
    f.width = width;
    f.height = height;
    f.frame_index = i;
    const auto* begin = raw + kHeaderSize + std::size_t{i} * frame_bytes;
    f.pixels.assign(begin, begin + frame_bytes);
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_gray_frames(std::span<const GrayFrame> frames, std::ostream& out) {
  const std::uint32_t width = frames.empty() ? 0 : frames.front().width;
  const std::uint32_t height = frames.empty() ? 0 : frames.front().height;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (f.width != width || f.height != height || f.pixels.size() != std::size_t{width} * height)
      throw InputError(kStage, "frame " + std::to_string(i) + " does not match the stream dimensions");
  }
  if (frames.size() > std::numeric_limits<std::uint32_t>::max())
    throw InputError(kStage, "too many frames for a gray container");

  out.write(kMagic.data(), kMagic.size());
  write_u32_le(out, width);
  write_u32_le(out, height);
  write_u32_le(out, static_cast<std::uint32_t>(frames.size()));
  for (const auto& f : frames)
    out.write(reinterpret_cast<const char*>(f.pixels.data()), static_cast<std::streamsize>(f.pixels.size()));
}

}  // namespace crowdgate
