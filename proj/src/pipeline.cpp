#include "crowdgate/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <spdlog/spdlog.h>

#include "crowdgate/counting.hpp"
#include "crowdgate/error.hpp"
#include "crowdgate/smoothing.hpp"

namespace crowdgate {

namespace {

constexpr const char* kVersion = "0.1.0";

std::vector<std::size_t> routed_positions(const DetectionStream& detections, const PipelineConfig& config) {
  const CountSeries series = count_stream(detections, config.routing_policy());
  std::vector<std::size_t> out;
  for (const std::size_t i : frames_over_ceiling(series, config.routing_policy()))
    out.push_back(static_cast<std::size_t>(series.frame_indices[i]));
  return out;
}

}  // namespace

Rational require_fps(const PipelineConfig& config) {
  if (!config.fps_override) throw ConfigError("this stage reads a count CSV and needs --fps (or fps_override)");
  return *config.fps_override;
}

std::string stage_ingest(const std::string& detections_text) {
  return serialize_detections_text(parse_detections_text(detections_text));
}

std::string stage_density_fit(const std::string& calibration_csv) {
  const auto samples = read_calibration_csv(calibration_csv);
  return write_regressor_json(fit_regressor(samples));
}

std::string stage_density_predict(std::span<const GrayFrame> frames, const DensityRegressor& regressor,
                                  const DetectionStream* detections, const PipelineConfig& config) {
  std::vector<std::size_t> wanted;
  if (detections) {
    wanted = routed_positions(*detections, config);
    for (const std::size_t f : wanted) {
      if (f >= frames.size())
        throw StageError("density", "frame " + std::to_string(f) + " exceeds the count ceiling but the gray stream has only " +
                                        std::to_string(frames.size()) + " frames");
    }
  } else {
    wanted.resize(frames.size());
    for (std::size_t i = 0; i < wanted.size(); ++i) wanted[i] = i;
  }
  spdlog::debug("density: estimating {} frame(s)", wanted.size());

  std::vector<DensityEstimate> estimates;
  for (const auto& f : density_features(frames, wanted, regressor.fg_threshold))
    estimates.push_back({f, predict_count(regressor, f)});
  return write_density_csv(estimates);
}

std::string stage_count(const DetectionStream& detections, const PipelineConfig& config,
                        const std::optional<std::string>& density_csv) {
  const RoutingPolicy policy = config.routing_policy();
  CountSeries series = count_stream(detections, policy);
  series.fps = config.fps_override.value_or(detections.meta.fps);

  std::vector<std::optional<Count>> density;
  if (density_csv) {
    std::map<std::uint64_t, Count> by_frame;
    for (const auto& e : read_density_csv(*density_csv)) by_frame[e.features.frame_index] = e.count;
    density.resize(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (const auto it = by_frame.find(series.frame_indices[i]); it != by_frame.end()) density[i] = it->second;
    }
  }
  const CountSeries routed = route_counts(series, policy, density);
  spdlog::info("count: {} frame(s), {} routed to density", routed.size(),
               std::count(routed.provenance.begin(), routed.provenance.end(), Provenance::Density));
  return write_count_csv(routed);
}

std::string stage_smooth(const std::string& counts_csv, const Rational& fps, const PipelineConfig& config) {
  const CountSeries series = read_count_csv(counts_csv, fps);
  const SmoothingParams params = config.smoothing_params(fps);
  const CountSeries smoothed = smooth_series(series, params);
  spdlog::info("smooth: window half-length {}, {} frame(s) corrected", params.window_half_length,
               std::count(smoothed.provenance.begin(), smoothed.provenance.end(), Provenance::Smoothed) -
                   std::count(series.provenance.begin(), series.provenance.end(), Provenance::Smoothed));
  return write_count_csv(smoothed);
}

CutList stage_segment(const std::string& smoothed_csv, const Rational& fps, const PipelineConfig& config) {
  const CountSeries series = read_count_csv(smoothed_csv, fps);
  const auto segments = extract_segments(series, config.segment_policy(fps));
  spdlog::info("segment: {} abnormal segment(s)", segments.size());
  return emit_cutlist(segments, config.source_video);
}

EvalArtifacts stage_eval(const std::string& truth_csv, const std::vector<std::pair<std::string, std::string>>& candidates,
                         const Rational& fps, const std::string& scene) {
  const CountSeries truth = read_count_csv(truth_csv, fps);
  std::vector<NamedSeries> named;
  for (const auto& [name, csv] : candidates) named.push_back({name, read_count_csv(csv, fps)});
  const ComparisonTable table = compare_methods(truth, named, scene);
  return {table.to_json(), table.render_text()};
}

std::vector<Artifact> run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config) {
  config.validate();
  const DetectionStream stream = parse_detections_text(inputs.detections_text);
  const Rational fps = config.fps_override.value_or(stream.meta.fps);
  spdlog::info("run: {} record(s) from '{}', fps {}", stream.frames.size(), stream.meta.source_id, fps.to_string());
  for (const auto& gap : stream.meta.gaps)
    spdlog::warn("ingest: {} frame(s) missing starting at frame {}", gap.missing_count, gap.first_missing);

  std::vector<Artifact> artifacts;
  std::vector<InputRecord> recorded = {{"detections", inputs.detections_text}};

  std::optional<std::string> density_csv;
  const auto routed = routed_positions(stream, config);
  if (!routed.empty()) {
    if (!inputs.gray_frames)
      throw MissingDensityError(std::vector<std::uint64_t>(routed.begin(), routed.end()));
    std::string model_json;
    if (inputs.model_json) {
      model_json = *inputs.model_json;
      recorded.push_back({"density_model", model_json});
    } else if (inputs.calibration_csv) {
      recorded.push_back({"calibration", *inputs.calibration_csv});
      model_json = stage_density_fit(*inputs.calibration_csv);
      artifacts.push_back({kModelFile, model_json});
    } else {
      throw StageError("density", "frame " + std::to_string(routed.front()) +
                                      " exceeds the count ceiling but no density model or calibration file was supplied");
    }
    if (inputs.gray_frames_bytes) recorded.push_back({"gray_frames", *inputs.gray_frames_bytes});
    density_csv = stage_density_predict(*inputs.gray_frames, read_regressor_json(model_json), &stream, config);
    artifacts.push_back({kDensityFile, *density_csv});
  }

  const std::string raw_csv = stage_count(stream, config, density_csv);
  artifacts.push_back({kRawCountsFile, raw_csv});
  const std::string smoothed_csv = stage_smooth(raw_csv, fps, config);
  artifacts.push_back({kSmoothedCountsFile, smoothed_csv});
  CutList cut = stage_segment(smoothed_csv, fps, config);
  artifacts.push_back({kSegmentsFile, std::move(cut.report_json)});
  artifacts.push_back({kCutlistFile, std::move(cut.command_sheet)});

  if (inputs.truth_csv) {
    recorded.push_back({"truth", *inputs.truth_csv});
    const std::string scene = stream.meta.source_id.empty() ? "scene" : stream.meta.source_id;
    EvalArtifacts ev = stage_eval(*inputs.truth_csv, {{"raw", raw_csv}, {"smoothed", smoothed_csv}}, fps, scene);
    artifacts.push_back({kEvalJsonFile, std::move(ev.json)});
    artifacts.push_back({kEvalTextFile, std::move(ev.text)});
  }

  std::string manifest = make_manifest("run", config, fps, recorded, artifacts);
  artifacts.push_back({kManifestFile, std::move(manifest)});
  return artifacts;
}

std::string make_manifest(const std::string& command, const PipelineConfig& config, const std::optional<Rational>& fps,
                          std::span<const InputRecord> inputs, std::span<const Artifact> outputs) {
  nlohmann::ordered_json j;
  j["tool"] = "crowdgate";
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = config.to_json();
  if (fps) {
    const SegmentPolicy seg = config.segment_policy(*fps);
    nlohmann::ordered_json eff;
    eff["fps"] = fps->to_string();
    eff["window_half_length"] = config.smoothing_params(*fps).window_half_length;
    eff["abnormal_threshold"] = seg.abnormal_threshold;
    eff["min_duration_frames"] = seg.min_duration_frames;
    eff["merge_gap_frames"] = seg.merge_gap_frames;
    j["effective"] = std::move(eff);
  }
  nlohmann::ordered_json in = nlohmann::ordered_json::object();
  for (const auto& r : inputs) in[r.name] = "sha256:" + sha256_hex(r.content);
  j["inputs"] = std::move(in);
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const auto& a : outputs) out[a.name] = "sha256:" + sha256_hex(a.content);
  j["outputs"] = std::move(out);
  return j.dump(2) + "\n";
}

void write_artifacts(const std::filesystem::path& dir, std::span<const Artifact> artifacts) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw StageError("output", "cannot create '" + dir.string() + "': " + ec.message());
  for (const auto& a : artifacts) {
    const auto path = dir / a.name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(a.content.data(), static_cast<std::streamsize>(a.content.size()));
    if (!out) throw StageError("output", "cannot write '" + path.string() + "'");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("input", "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace crowdgate
