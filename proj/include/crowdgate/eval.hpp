#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "crowdgate/counting.hpp"
#include "crowdgate/rational.hpp"

namespace crowdgate {

/// Frames at a given count value: m1 counts detected frames, m2 true frames.
struct CountFrequency {
  std::uint64_t detected_frames = 0;
  std::uint64_t true_frames = 0;

  friend bool operator==(const CountFrequency&, const CountFrequency&) = default;
};

struct ApdBreakdown {
  double per_value = 0.0;      // sum_c m1(c)*c / sum_c m2(c)*c
  double total_ratio = 0.0;    // total detected objects / total true objects
  double matched_frame = 0.0;  // diagnostic: objects on frames with detected == true, over total true
  std::map<Count, CountFrequency> per_count_table;
  std::uint64_t total_detected_objects = 0;
  std::uint64_t total_true_objects = 0;
};

/// Both algebraic forms of the metric; throws std::logic_error if they
/// disagree by more than 1e-12 (relative), InputError on bad input.
ApdBreakdown ap_d_breakdown(std::span<const Count> detected, std::span<const Count> truth);

double ap_d(const CountSeries& detected, const CountSeries& truth);

struct EvalReport {
  double ap_d_raw = 0.0;
  double ap_d_smoothed = 0.0;
  std::map<Count, CountFrequency> per_count_table;  // for the smoothed series
  std::uint64_t total_detected_objects = 0;         // smoothed
  std::uint64_t total_true_objects = 0;
};

EvalReport evaluate(const CountSeries& truth, const CountSeries& raw, const CountSeries& smoothed);

struct NamedSeries {
  std::string name;
  CountSeries series;
};

/// Methods as rows, scenes as columns; insertion order is preserved.
class ComparisonTable {
 public:
  void add_scene(const std::string& scene, const CountSeries& truth, std::span<const NamedSeries> candidates);

  const std::vector<std::string>& methods() const noexcept { return methods_; }
  const std::vector<std::string>& scenes() const noexcept { return scenes_; }
  /// NaN where a method was not evaluated on a scene.
  double cell(std::size_t method, std::size_t scene) const { return cells_.at(method).at(scene); }
  const ApdBreakdown& breakdown(std::size_t method, std::size_t scene) const;

  std::string render_text() const;
  std::string to_json() const;

 private:
  std::vector<std::string> methods_;
  std::vector<std::string> scenes_;
  std::vector<std::vector<double>> cells_;
  std::map<std::pair<std::size_t, std::size_t>, ApdBreakdown> details_;
};

/// Single-scene comparison; throws InputError naming a mismatched candidate.
ComparisonTable compare_methods(const CountSeries& truth, std::span<const NamedSeries> candidates,
                                const std::string& scene = "scene");

struct JitterSpec {
  double spike_probability = 0.1;
  Count max_spike_magnitude = 1;
  std::size_t max_spike_run = 1;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct ProfileRun {
  std::size_t run_length = 0;
  Count count = 0;
};

struct SyntheticTrace {
  CountSeries truth;
  CountSeries jittered;
  std::size_t spikes = 0;  // number of spike onsets drawn
};

/// Piecewise-constant truth plus independent short spikes. Each frame not
/// already covered by a spike starts one with probability
/// spike_probability; a spike shifts U{1..run} frames by the same
/// +/-U{1..magnitude}, clamped at zero.
SyntheticTrace generate_synthetic(std::span<const ProfileRun> profile, const JitterSpec& jitter,
                                  const Rational& fps = Rational(30, 1));

}  // namespace crowdgate
