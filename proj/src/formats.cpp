#include "crowdgate/formats.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <string_view>

#include <json.hpp>
#include <openssl/evp.h>

#include "crowdgate/error.hpp"

namespace crowdgate {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::string_view(" \t\r").find(s.front()) != std::string_view::npos) s.remove_prefix(1);
  while (!s.empty() && std::string_view(" \t\r").find(s.back()) != std::string_view::npos) s.remove_suffix(1);
  return s;
}

/// Splits CSV text into trimmed fields per non-blank line, checking the
/// header and column count. Calls row(fields, record, line) per data row.
template <typename RowFn>
void for_each_row(const std::string& text, const char* stage, std::string_view header, std::size_t columns, RowFn row) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t record = 0;
  bool seen_header = false;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    if (!seen_header) {
      if (t != header)
        throw ParseError(stage, std::nullopt, line_no, "expected header '" + std::string(header) + "'");
      seen_header = true;
      continue;
    }
    fields.clear();
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = t.find(',', start);
      fields.push_back(trim(t.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != columns)
      throw ParseError(stage, record, line_no,
                       "expected " + std::to_string(columns) + " columns, got " + std::to_string(fields.size()));
    row(fields, record, line_no);
    ++record;
  }
  if (!seen_header) throw ParseError(stage, std::nullopt, std::nullopt, "missing header '" + std::string(header) + "'");
}

template <typename T>
T parse_number(std::string_view field, const char* name, const char* stage, std::size_t record, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError(stage, record, line, std::string("field '") + name + "' is not a valid number: '" +
                                              std::string(field) + "'");
  return value;
}

Count parse_count(std::string_view field, const char* name, const char* stage, std::size_t record, std::size_t line) {
  const Count v = parse_number<Count>(field, name, stage, record, line);
  if (v < 0) throw ParseError(stage, record, line, std::string("field '") + name + "' must be nonnegative");
  return v;
}

}  // namespace

std::string write_count_csv(const CountSeries& series) {
  series.validate();
  std::string out = "frame_index,count,provenance\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += std::to_string(series.frame_indices[i]);
    out += ',';
    out += std::to_string(series.counts[i]);
    out += ',';
    out += to_string(series.provenance[i]);
    out += '\n';
  }
  return out;
}

CountSeries read_count_csv(const std::string& text, const Rational& fps) {
  constexpr const char* kStage = "counts";
  CountSeries s;
  s.fps = fps;
  for_each_row(text, kStage, "frame_index,count,provenance", 3, [&](const auto& f, std::size_t rec, std::size_t line) {
    const auto index = parse_number<std::uint64_t>(f[0], "frame_index", kStage, rec, line);
    if (!s.frame_indices.empty() && index <= s.frame_indices.back())
      throw ParseError(kStage, rec, line, "frame_index " + std::to_string(index) + " is not increasing");
    const auto prov = provenance_from_string(f[2]);
    if (!prov) throw ParseError(kStage, rec, line, "unknown provenance '" + std::string(f[2]) + "'");
    s.frame_indices.push_back(index);
    s.counts.push_back(parse_count(f[1], "count", kStage, rec, line));
    s.provenance.push_back(*prov);
  });
  return s;
}

std::string write_density_csv(const std::vector<DensityEstimate>& estimates) {
  std::string out = "frame_index,area,edge,density_count\n";
  for (const auto& e : estimates) {
    out += std::to_string(e.features.frame_index) + "," + std::to_string(e.features.area) + "," +
           std::to_string(e.features.edge) + "," + std::to_string(e.count) + "\n";
  }
  return out;
}

std::vector<DensityEstimate> read_density_csv(const std::string& text) {
  constexpr const char* kStage = "density";
  std::vector<DensityEstimate> out;
  for_each_row(text, kStage, "frame_index,area,edge,density_count", 4,
               [&](const auto& f, std::size_t rec, std::size_t line) {
                 DensityEstimate e;
                 e.features.frame_index = parse_number<std::uint64_t>(f[0], "frame_index", kStage, rec, line);
                 e.features.area = parse_number<std::uint64_t>(f[1], "area", kStage, rec, line);
                 e.features.edge = parse_number<std::uint64_t>(f[2], "edge", kStage, rec, line);
                 e.count = parse_count(f[3], "density_count", kStage, rec, line);
                 out.push_back(e);
               });
  return out;
}

std::vector<CalibrationSample> read_calibration_csv(const std::string& text) {
  constexpr const char* kStage = "calibration";
  std::vector<CalibrationSample> out;
  for_each_row(text, kStage, "frame_index,area,edge,true_count", 4,
               [&](const auto& f, std::size_t rec, std::size_t line) {
                 CalibrationSample s;
                 s.features.frame_index = parse_number<std::uint64_t>(f[0], "frame_index", kStage, rec, line);
                 s.features.area = parse_number<std::uint64_t>(f[1], "area", kStage, rec, line);
                 s.features.edge = parse_number<std::uint64_t>(f[2], "edge", kStage, rec, line);
                 if (s.features.edge > s.features.area)
                   throw ParseError(kStage, rec, line, "edge exceeds area");
                 s.true_count = parse_count(f[3], "true_count", kStage, rec, line);
                 out.push_back(s);
               });
  return out;
}

std::string write_calibration_csv(const std::vector<CalibrationSample>& samples) {
  std::string out = "frame_index,area,edge,true_count\n";
  for (const auto& s : samples) {
    out += std::to_string(s.features.frame_index) + "," + std::to_string(s.features.area) + "," +
           std::to_string(s.features.edge) + "," + std::to_string(s.true_count) + "\n";
  }
  return out;
}

std::string write_regressor_json(const DensityRegressor& r) {
  nlohmann::ordered_json j;
  j["coef_area"] = r.coef_area;
  j["coef_edge"] = r.coef_edge;
  j["intercept"] = r.intercept;
  j["fg_threshold"] = r.fg_threshold;
  return j.dump(2) + "\n";
}

DensityRegressor read_regressor_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    DensityRegressor r;
    r.coef_area = j.at("coef_area").get<double>();
    r.coef_edge = j.at("coef_edge").get<double>();
    r.intercept = j.at("intercept").get<double>();
    r.fg_threshold = j.value("fg_threshold", 25.0);
    if (!std::isfinite(r.coef_area) || !std::isfinite(r.coef_edge) || !std::isfinite(r.intercept) ||
        !(r.fg_threshold >= 0.0))
      throw InputError("density", "density model has non-finite or negative parameters");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("density", std::string("bad density model: ") + e.what());
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw StageError("hash", "SHA-256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

}  // namespace crowdgate
