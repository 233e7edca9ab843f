#pragma once

// Stage functions shared by the `run` command and the per-stage
// subcommands. Each stage consumes and produces the same bytes a
// subcommand reads from and writes to disk, so chaining subcommands
// reproduces a full run file for file.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "crowdgate/config.hpp"
#include "crowdgate/density.hpp"
#include "crowdgate/eval.hpp"
#include "crowdgate/formats.hpp"
#include "crowdgate/ingest.hpp"
#include "crowdgate/segmenting.hpp"

namespace crowdgate {

struct Artifact {
  std::string name;
  std::string content;
};

/// Named input bytes, hashed into the manifest.
struct InputRecord {
  std::string name;
  std::string content;
};

inline constexpr const char* kRawCountsFile = "counts_raw.csv";
inline constexpr const char* kSmoothedCountsFile = "counts_smoothed.csv";
inline constexpr const char* kSegmentsFile = "segments.json";
inline constexpr const char* kCutlistFile = "cutlist.txt";
inline constexpr const char* kEvalJsonFile = "eval.json";
inline constexpr const char* kEvalTextFile = "eval.txt";
inline constexpr const char* kDensityFile = "density.csv";
inline constexpr const char* kModelFile = "density_model.json";
inline constexpr const char* kManifestFile = "manifest.json";

std::string stage_ingest(const std::string& detections_text);

std::string stage_density_fit(const std::string& calibration_csv);

/// Density estimates for the frames the judge step routes (every frame when
/// `detections` is absent).
std::string stage_density_predict(std::span<const GrayFrame> frames, const DensityRegressor& regressor,
                                  const DetectionStream* detections, const PipelineConfig& config);

std::string stage_count(const DetectionStream& detections, const PipelineConfig& config,
                        const std::optional<std::string>& density_csv);

std::string stage_smooth(const std::string& counts_csv, const Rational& fps, const PipelineConfig& config);

CutList stage_segment(const std::string& smoothed_csv, const Rational& fps, const PipelineConfig& config);

struct EvalArtifacts {
  std::string json;
  std::string text;
};

/// Candidates are (name, counts CSV) pairs evaluated against `truth_csv`.
EvalArtifacts stage_eval(const std::string& truth_csv, const std::vector<std::pair<std::string, std::string>>& candidates,
                         const Rational& fps, const std::string& scene);

/// Frame rate for stages that read CSV: the override, else a ConfigError.
Rational require_fps(const PipelineConfig& config);

struct PipelineInputs {
  std::string detections_text;
  std::optional<std::vector<GrayFrame>> gray_frames;
  std::optional<std::string> gray_frames_bytes;  // hashed into the manifest
  std::optional<std::string> calibration_csv;
  std::optional<std::string> model_json;
  std::optional<std::string> truth_csv;
};

/// Whole judge/optimize/segment chain. Artifacts are returned in a fixed
/// order, manifest last.
std::vector<Artifact> run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config);

/// Provenance record: effective config (resolved against `fps` when known)
/// plus SHA-256 of every input and output.
std::string make_manifest(const std::string& command, const PipelineConfig& config,
                          const std::optional<Rational>& fps, std::span<const InputRecord> inputs,
                          std::span<const Artifact> outputs);

/// Writes each artifact under `dir` (created if needed), in order.
void write_artifacts(const std::filesystem::path& dir, std::span<const Artifact> artifacts);

std::string read_file(const std::filesystem::path& path);

}  // namespace crowdgate
