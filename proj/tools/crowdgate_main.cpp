// crowdgate: count stabilization, density routing and abnormal-segment
// extraction over per-frame detection files.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "crowdgate/config.hpp"
#include "crowdgate/error.hpp"
#include "crowdgate/eval.hpp"
#include "crowdgate/formats.hpp"
#include "crowdgate/ingest.hpp"
#include "crowdgate/pipeline.hpp"

namespace fs = std::filesystem;
using namespace crowdgate;

namespace {

enum ExitCode { kOk = 0, kInputError = 2, kConfigError = 3, kStageFailure = 4 };

struct Overrides {
  std::string config_path;
  std::optional<std::string> fps;
  std::optional<Count> ceiling;
  std::optional<Count> threshold;
  std::optional<double> min_score;
  std::optional<int> person_class;
  std::optional<std::uint32_t> divisor;
  std::optional<std::string> tie_break;
  std::optional<std::size_t> min_duration;
  std::optional<std::size_t> merge_gap;
  std::optional<std::string> source;
  std::string out_dir = ".";
};

void add_common_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file (flags take precedence)");
  cmd->add_option("--fps", o.fps, "Frame rate N or N/D");
  cmd->add_option("--ceiling", o.ceiling, "Detector count ceiling for density routing (default 25)");
  cmd->add_option("--threshold", o.threshold, "Abnormal count threshold (default: the ceiling)");
  cmd->add_option("--min-score", o.min_score, "Minimum detection score (default 0.5)");
  cmd->add_option("--person-class", o.person_class, "Person class id (default 0)");
  cmd->add_option("--divisor", o.divisor, "Smoothing window divisor of the frame rate (default 3)");
  cmd->add_option("--tie-break", o.tie_break, "prefer_last_value | prefer_smallest");
  cmd->add_option("--min-duration", o.min_duration, "Minimum segment length in frames");
  cmd->add_option("--merge-gap", o.merge_gap, "Largest below-threshold gap merged into a segment");
  cmd->add_option("--source", o.source, "Source video path used in the cut list");
  cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
}

PipelineConfig effective_config(const Overrides& o) {
  PipelineConfig c = o.config_path.empty() ? PipelineConfig{} : PipelineConfig::load(o.config_path);
  try {
    if (o.fps) c.fps_override = Rational::parse(*o.fps);
  } catch (const InputError& e) {
    throw ConfigError(std::string("--fps: ") + e.what());
  }
  if (o.ceiling) c.count_ceiling = *o.ceiling;
  if (o.threshold) c.abnormal_threshold = *o.threshold;
  if (o.min_score) c.min_score = *o.min_score;
  if (o.person_class) c.person_class_id = *o.person_class;
  if (o.divisor) c.smoothing_divisor = *o.divisor;
  if (o.tie_break) {
    const auto t = tie_break_from_string(*o.tie_break);
    if (!t) throw ConfigError("--tie-break must be prefer_last_value or prefer_smallest");
    c.tie_break = *t;
  }
  if (o.min_duration) c.min_duration_frames = *o.min_duration;
  if (o.merge_gap) c.merge_gap_frames = *o.merge_gap;
  if (o.source) c.source_video = *o.source;
  c.validate();
  return c;
}

void emit(const Overrides& o, const std::string& command, const PipelineConfig& config,
          const std::optional<Rational>& fps, const std::vector<InputRecord>& inputs, std::vector<Artifact> outputs) {
  const std::string manifest = make_manifest(command, config, fps, inputs, outputs);
  outputs.push_back({"manifest_" + command + ".json", manifest});
  write_artifacts(o.out_dir, outputs);
  for (const auto& a : outputs) spdlog::info("wrote {}", (fs::path(o.out_dir) / a.name).string());
}

std::vector<GrayFrame> load_frames(const std::string& bytes) {
  std::istringstream in(bytes);
  return load_gray_frames(in);
}

std::vector<ProfileRun> parse_profile(const std::string& text) {
  std::vector<ProfileRun> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument(item);
      std::size_t used = 0;
      const long long run = std::stoll(item.substr(0, colon), &used);
      const long long count = std::stoll(item.substr(colon + 1));
      if (run < 0 || count < 0) throw std::invalid_argument(item);
      out.push_back({static_cast<std::size_t>(run), count});
    } catch (const std::exception&) {
      throw ConfigError("--profile entries must look like RUN:COUNT, got '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--profile is empty");
  return out;
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("crowdgate");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("CROWDGATE_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"crowdgate - stabilize per-frame person counts and cut abnormal segments"};
  app.require_subcommand(1);

  // ingest
  Overrides ingest_o;
  std::string ingest_detections;
  auto* ingest = app.add_subcommand("ingest", "Validate and normalize a detections file");
  ingest->add_option("--detections", ingest_detections, "Detections file")->required();
  add_common_options(ingest, ingest_o);

  // count
  Overrides count_o;
  std::string count_detections;
  std::optional<std::string> count_density;
  auto* count = app.add_subcommand("count", "Per-frame counts with density routing");
  count->add_option("--detections", count_detections, "Detections file")->required();
  count->add_option("--density", count_density, "Density estimates CSV from density-predict");
  add_common_options(count, count_o);

  // density-fit
  Overrides fit_o;
  std::string fit_calibration;
  auto* fit = app.add_subcommand("density-fit", "Fit the area/edge regression from a calibration CSV");
  fit->add_option("--calibration", fit_calibration, "Calibration CSV")->required();
  add_common_options(fit, fit_o);

  // density-predict
  Overrides pred_o;
  std::string pred_frames;
  std::optional<std::string> pred_model;
  std::optional<std::string> pred_detections;
  auto* pred = app.add_subcommand("density-predict", "Estimate counts from raw gray frames");
  pred->add_option("--frames", pred_frames, "Gray frame container (CGRY)")->required();
  pred->add_option("--model", pred_model, "Fitted model JSON (or density_model_path in the config)");
  pred->add_option("--detections", pred_detections, "Only estimate frames this detections file routes");
  add_common_options(pred, pred_o);

  // smooth
  Overrides smooth_o;
  std::string smooth_counts;
  auto* smooth = app.add_subcommand("smooth", "Remove detection jitter from a count CSV");
  smooth->add_option("--counts", smooth_counts, "Count series CSV")->required();
  add_common_options(smooth, smooth_o);

  // segment
  Overrides seg_o;
  std::string seg_counts;
  auto* seg = app.add_subcommand("segment", "Extract abnormal segments and a cut list");
  seg->add_option("--counts", seg_counts, "Smoothed count series CSV")->required();
  add_common_options(seg, seg_o);

  // eval
  Overrides eval_o;
  std::string eval_truth;
  std::vector<std::string> eval_candidates;
  std::string eval_scene = "scene";
  auto* eval = app.add_subcommand("eval", "Compare count series against ground truth with AP_d");
  eval->add_option("--truth", eval_truth, "Ground-truth count CSV")->required();
  eval->add_option("--candidate", eval_candidates, "NAME=CSV, repeatable")->required();
  eval->add_option("--scene", eval_scene, "Scene label (column name)")->capture_default_str();
  add_common_options(eval, eval_o);

  // synth
  Overrides synth_o;
  std::string synth_profile;
  JitterSpec jitter;
  auto* synth = app.add_subcommand("synth", "Generate a seeded (truth, jittered) count pair");
  synth->add_option("--profile", synth_profile, "Piecewise-constant truth, RUN:COUNT[,RUN:COUNT...]")->required();
  synth->add_option("--seed", jitter.rng_seed, "RNG seed")->capture_default_str();
  synth->add_option("--spike-probability", jitter.spike_probability, "Per-frame spike onset probability")
      ->capture_default_str();
  synth->add_option("--magnitude", jitter.max_spike_magnitude, "Largest spike magnitude")->capture_default_str();
  synth->add_option("--run", jitter.max_spike_run, "Longest spike run")->capture_default_str();
  add_common_options(synth, synth_o);

  // run
  Overrides run_o;
  std::string run_detections;
  std::optional<std::string> run_frames, run_calibration, run_model, run_truth;
  auto* run = app.add_subcommand("run", "Full pipeline: count, judge, smooth, segment, evaluate");
  run->add_option("--detections", run_detections, "Detections file")->required();
  run->add_option("--frames", run_frames, "Gray frame container for density estimation");
  run->add_option("--calibration", run_calibration, "Calibration CSV to fit the density model");
  run->add_option("--model", run_model, "Fitted density model JSON");
  run->add_option("--truth", run_truth, "Ground-truth count CSV for evaluation");
  add_common_options(run, run_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*ingest) {
      const auto config = effective_config(ingest_o);
      const std::string text = read_file(ingest_detections);
      const DetectionStream stream = parse_detections_text(text);
      std::cout << "records " << stream.meta.frame_count << ", fps " << stream.meta.fps.to_string() << ", source '"
                << stream.meta.source_id << "', gaps " << stream.meta.gaps.size() << "\n";
      for (const auto& g : stream.meta.gaps)
        std::cout << "  missing " << g.missing_count << " frame(s) from " << g.first_missing << "\n";
      emit(ingest_o, "ingest", config, config.fps_override.value_or(stream.meta.fps), {{"detections", text}},
           {{"detections.jsonl", serialize_detections_text(stream)}});
    } else if (*count) {
      const auto config = effective_config(count_o);
      const std::string text = read_file(count_detections);
      std::vector<InputRecord> inputs = {{"detections", text}};
      std::optional<std::string> density;
      if (count_density) {
        density = read_file(*count_density);
        inputs.push_back({"density", *density});
      }
      const DetectionStream stream = parse_detections_text(text);
      emit(count_o, "count", config, config.fps_override.value_or(stream.meta.fps), inputs,
           {{kRawCountsFile, stage_count(stream, config, density)}});
    } else if (*fit) {
      const auto config = effective_config(fit_o);
      const std::string csv = read_file(fit_calibration);
      emit(fit_o, "density-fit", config, std::nullopt, {{"calibration", csv}}, {{kModelFile, stage_density_fit(csv)}});
    } else if (*pred) {
      const auto config = effective_config(pred_o);
      const std::optional<std::string> model_path = pred_model ? pred_model : config.density_model_path;
      if (!model_path) throw ConfigError("density-predict needs --model or density_model_path");
      const std::string model = read_file(*model_path);
      const std::string frames_bytes = read_file(pred_frames);
      std::vector<InputRecord> inputs = {{"gray_frames", frames_bytes}, {"density_model", model}};
      std::optional<DetectionStream> stream;
      if (pred_detections) {
        const std::string text = read_file(*pred_detections);
        inputs.push_back({"detections", text});
        stream = parse_detections_text(text);
      }
      const auto frames = load_frames(frames_bytes);
      emit(pred_o, "density-predict", config, std::nullopt, inputs,
           {{kDensityFile, stage_density_predict(frames, read_regressor_json(model), stream ? &*stream : nullptr, config)}});
    } else if (*smooth) {
      const auto config = effective_config(smooth_o);
      const Rational fps = require_fps(config);
      const std::string csv = read_file(smooth_counts);
      emit(smooth_o, "smooth", config, fps, {{"counts", csv}}, {{kSmoothedCountsFile, stage_smooth(csv, fps, config)}});
    } else if (*seg) {
      const auto config = effective_config(seg_o);
      const Rational fps = require_fps(config);
      const std::string csv = read_file(seg_counts);
      CutList cut = stage_segment(csv, fps, config);
      emit(seg_o, "segment", config, fps, {{"counts", csv}},
           {{kSegmentsFile, std::move(cut.report_json)}, {kCutlistFile, std::move(cut.command_sheet)}});
    } else if (*eval) {
      const auto config = effective_config(eval_o);
      const Rational fps = require_fps(config);
      const std::string truth = read_file(eval_truth);
      std::vector<InputRecord> inputs = {{"truth", truth}};
      std::vector<std::pair<std::string, std::string>> candidates;
      for (const auto& spec : eval_candidates) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--candidate must be NAME=CSV, got '" + spec + "'");
        candidates.emplace_back(spec.substr(0, eq), read_file(spec.substr(eq + 1)));
        inputs.push_back({"candidate:" + candidates.back().first, candidates.back().second});
      }
      EvalArtifacts ev = stage_eval(truth, candidates, fps, eval_scene);
      std::cout << ev.text;
      emit(eval_o, "eval", config, fps, inputs, {{kEvalJsonFile, std::move(ev.json)}, {kEvalTextFile, std::move(ev.text)}});
    } else if (*synth) {
      const auto config = effective_config(synth_o);
      const Rational fps = config.fps_override.value_or(Rational(30, 1));
      const SyntheticTrace trace = generate_synthetic(parse_profile(synth_profile), jitter, fps);
      std::cout << "frames " << trace.truth.size() << ", spikes " << trace.spikes << "\n";
      emit(synth_o, "synth", config, fps, {{"profile", synth_profile}},
           {{"truth.csv", write_count_csv(trace.truth)}, {"jittered.csv", write_count_csv(trace.jittered)}});
    } else if (*run) {
      const auto config = effective_config(run_o);
      PipelineInputs in;
      in.detections_text = read_file(run_detections);
      if (run_frames) {
        in.gray_frames_bytes = read_file(*run_frames);
        in.gray_frames = load_frames(*in.gray_frames_bytes);
      }
      if (run_calibration) in.calibration_csv = read_file(*run_calibration);
      if (run_model)
        in.model_json = read_file(*run_model);
      else if (config.density_model_path && !run_calibration)
        in.model_json = read_file(*config.density_model_path);
      if (run_truth) in.truth_csv = read_file(*run_truth);
      const auto artifacts = run_pipeline(in, config);
      write_artifacts(run_o.out_dir, artifacts);
      for (const auto& a : artifacts) spdlog::info("wrote {}", (fs::path(run_o.out_dir) / a.name).string());
    }
  } catch (const Error& e) {
    std::cerr << "crowdgate: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Input: return kInputError;
      case ErrorKind::Config: return kConfigError;
      case ErrorKind::Stage: return kStageFailure;
    }
  } catch (const std::exception& e) {
    std::cerr << "crowdgate: " << e.what() << "\n";
    return kStageFailure;
  }
  return kOk;
}
