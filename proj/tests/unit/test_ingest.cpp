#include <doctest.h>

#include <random>
#include <sstream>

#include "crowdgate/error.hpp"
#include "crowdgate/ingest.hpp"

using namespace crowdgate;

namespace {

const std::string kHeader = R"({"fps":30,"source_id":"cam1"})";

std::string record(std::uint64_t index, const std::string& boxes = "[]") {
  return R"({"frame_index":)" + std::to_string(index) + R"(,"timestamp_ms":)" + std::to_string(index * 33) +
         R"(,"boxes":)" + boxes + "}";
}

template <typename Fn>
ParseError capture_parse_error(Fn fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("expected ParseError");
  return ParseError("", std::nullopt, std::nullopt, "");
}

DetectionStream random_stream(std::mt19937_64& rng, std::size_t records) {
  std::uniform_real_distribution<double> coord(-50.0, 1920.0);
  std::uniform_real_distribution<double> size(0.001, 400.0);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  DetectionStream s;
  s.meta.fps = (rng() & 1) ? Rational(30000, 1001) : Rational(25, 1);
  s.meta.source_id = "cam \"" + std::to_string(rng() % 100) + "\" \xC3\xA9";
  std::uint64_t index = rng() % 3;
  if (index > 0) s.meta.gaps.push_back({0, index});
  for (std::size_t r = 0; r < records; ++r) {
    FrameDetections f;
    f.frame_index = index;
    f.timestamp_ms = index * 40;
    for (int b = 0, n = static_cast<int>(rng() % 5); b < n; ++b)
      f.boxes.push_back({coord(rng), coord(rng), size(rng), size(rng), score(rng), static_cast<int>(rng() % 4)});
    s.frames.push_back(std::move(f));
    const std::uint64_t step = (rng() % 20 == 0) ? 2 + rng() % 3 : 1;
    if (step > 1 && r + 1 < records) s.meta.gaps.push_back({index + 1, step - 1});
    index += step;
  }
  s.meta.frame_count = records;
  return s;
}

}  // namespace

TEST_CASE("parse_detections minimal input") {
  const auto s = parse_detections_text(kHeader + "\n" + record(0, R"([{"x":1,"y":2,"w":3,"h":4,"score":0.9,"class_id":0}])") +
                                       "\n" + record(1) + "\n");
  CHECK(s.frames.size() == 2);
  CHECK(s.meta.fps == Rational(30, 1));
  CHECK(s.meta.source_id == "cam1");
  CHECK(s.meta.frame_count == 2);
  CHECK(s.meta.gaps.empty());
  REQUIRE(s.frames[0].boxes.size() == 1);
  CHECK(s.frames[0].boxes[0] == BoundingBox{1, 2, 3, 4, 0.9, 0});
  CHECK(s.frames[1].boxes.empty());
}

TEST_CASE("parse_detections fps forms") {
  CHECK(parse_detections_text(R"({"fps":"30000/1001","source_id":"a"})").meta.fps == Rational(30000, 1001));
  CHECK(parse_detections_text(R"({"fps":29.97,"source_id":"a"})").meta.fps == Rational(2997, 100));
  CHECK_THROWS_AS(parse_detections_text(R"({"source_id":"a"})"), ParseError);
  CHECK_THROWS_AS(parse_detections_text(R"({"fps":0,"source_id":"a"})"), ParseError);
  CHECK_THROWS_AS(parse_detections_text(R"({"fps":-5,"source_id":"a"})"), ParseError);
  CHECK_THROWS_AS(parse_detections_text(R"({"fps":"abc","source_id":"a"})"), ParseError);
  CHECK_THROWS_AS(parse_detections_text(""), ParseError);
}

TEST_CASE("parse errors identify the record and field") {
  SUBCASE("zero width") {
    const auto e = capture_parse_error([] {
      parse_detections_text(kHeader + "\n" + record(0) + "\n" +
                            record(1, R"([{"x":1,"y":2,"w":0,"h":4,"score":0.9,"class_id":0}])") + "\n");
    });
    CHECK(e.record() == 1);
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("boxes[0].w") != std::string::npos);
  }
  SUBCASE("score out of range") {
    const auto e = capture_parse_error([] {
      parse_detections_text(kHeader + "\n" + record(0, R"([{"x":1,"y":2,"w":1,"h":4,"score":1.5,"class_id":0}])"));
    });
    CHECK(e.record() == 0);
    CHECK(std::string(e.what()).find("score") != std::string::npos);
  }
  SUBCASE("missing field") {
    const auto e = capture_parse_error(
        [] { parse_detections_text(kHeader + "\n" + R"({"frame_index":0,"boxes":[]})"); });
    CHECK(std::string(e.what()).find("timestamp_ms") != std::string::npos);
  }
  SUBCASE("malformed JSON") {
    const auto e = capture_parse_error([] { parse_detections_text(kHeader + "\n" + record(0) + "\n{nope\n"); });
    CHECK(e.record() == 1);
  }
  SUBCASE("duplicate frame index") {
    const auto e = capture_parse_error([] { parse_detections_text(kHeader + "\n" + record(4) + "\n" + record(4)); });
    CHECK(e.record() == 1);
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }
  SUBCASE("decreasing frame index") {
    const auto e = capture_parse_error([] { parse_detections_text(kHeader + "\n" + record(4) + "\n" + record(2)); });
    CHECK(e.record() == 1);
  }
  SUBCASE("negative frame index") {
    const auto e = capture_parse_error(
        [] { parse_detections_text(kHeader + "\n" + R"({"frame_index":-1,"timestamp_ms":0,"boxes":[]})"); });
    CHECK(e.record() == 0);
  }
}

TEST_CASE("parse_detections tolerates whitespace and records gaps") {
  const std::string text = "\n" + kHeader + "   \r\n\n" + record(0) + "  \n\n\n" + record(3) + "\t\n" + record(4) + "\n\n";
  const auto s = parse_detections_text(text);
  CHECK(s.frames.size() == 3);
  REQUIRE(s.meta.gaps.size() == 1);
  CHECK(s.meta.gaps[0] == FrameGap{1, 2});
}

TEST_CASE("detections round-trip through serialize and parse") {
  std::mt19937_64 rng(99);
  const DetectionStream original = random_stream(rng, 10000);
  const std::string text = serialize_detections_text(original);
  const DetectionStream parsed = parse_detections_text(text);
  CHECK(parsed == original);
  CHECK(serialize_detections_text(parsed) == text);

  for (int trial = 0; trial < 20; ++trial) {
    const DetectionStream s = random_stream(rng, rng() % 50);
    CHECK(parse_detections_text(serialize_detections_text(s)) == s);
  }
}

TEST_CASE("gray container") {
  auto container = [](std::uint32_t w, std::uint32_t h, std::uint32_t n, std::size_t payload) {
    std::string bytes = "CGRY";
    for (std::uint32_t v : {w, h, n})
      for (int k = 0; k < 4; ++k) bytes += static_cast<char>((v >> (8 * k)) & 0xff);
    for (std::size_t i = 0; i < payload; ++i) bytes += static_cast<char>(i & 0xff);
    return bytes;
  };

  SUBCASE("one 4x4 frame") {
    std::istringstream in(container(4, 4, 1, 16));
    const auto frames = load_gray_frames(in);
    REQUIRE(frames.size() == 1);
    CHECK(frames[0].width == 4);
    CHECK(frames[0].height == 4);
    CHECK(frames[0].pixels.size() == 16);
    CHECK(frames[0].at(3, 3) == 15);
  }
  SUBCASE("truncated payload") {
    std::istringstream in(container(4, 4, 2, 16));
    CHECK_THROWS_AS(load_gray_frames(in), ParseError);
  }
  SUBCASE("truncated header") {
    std::istringstream in(std::string("CGRY\x04\x00", 6));
    CHECK_THROWS_AS(load_gray_frames(in), ParseError);
  }
  SUBCASE("bad magic") {
    std::string bytes = container(1, 1, 1, 1);
    bytes[0] = 'X';
    std::istringstream in(bytes);
    CHECK_THROWS_AS(load_gray_frames(in), ParseError);
  }
  SUBCASE("zero dimension") {
    std::istringstream in(container(0, 4, 1, 0));
    CHECK_THROWS_AS(load_gray_frames(in), ParseError);
  }
  SUBCASE("trailing bytes") {
    std::istringstream in(container(2, 2, 1, 5));
    CHECK_THROWS_AS(load_gray_frames(in), ParseError);
  }
  SUBCASE("64x64x100 round-trips bit-exactly") {
    std::mt19937 rng(5);
    std::vector<GrayFrame> frames(100);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      frames[i] = {64, 64, std::vector<std::uint8_t>(64 * 64), i};
      for (auto& p : frames[i].pixels) p = static_cast<std::uint8_t>(rng());
    }
    std::ostringstream out;
    write_gray_frames(frames, out);
    const std::string bytes = out.str();
    CHECK(bytes.size() == 16 + 64 * 64 * 100);
    std::istringstream in(bytes);
    const auto back = load_gray_frames(in);
    CHECK(back == frames);
    std::ostringstream again;
    write_gray_frames(back, again);
    CHECK(again.str() == bytes);
  }
  SUBCASE("mismatched frames cannot be written") {
    std::vector<GrayFrame> frames = {{2, 2, std::vector<std::uint8_t>(4), 0}, {3, 2, std::vector<std::uint8_t>(6), 1}};
    std::ostringstream out;
    CHECK_THROWS_AS(write_gray_frames(frames, out), InputError);
  }
}
