#include "crowdgate/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "crowdgate/error.hpp"

namespace crowdgate {

namespace {

constexpr double kFormTolerance = 1e-12;

std::string format_cell(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

nlohmann::ordered_json number_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

}  // namespace

ApdBreakdown ap_d_breakdown(std::span<const Count> detected, std::span<const Count> truth) {
  if (detected.size() != truth.size())
    throw InputError("eval", "detected series has " + std::to_string(detected.size()) + " frames, truth has " +
                                 std::to_string(truth.size()));
  ApdBreakdown out;
  std::uint64_t matched_objects = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (detected[i] < 0 || truth[i] < 0) throw InputError("eval", "negative count at position " + std::to_string(i));
    ++out.per_count_table[detected[i]].detected_frames;
    ++out.per_count_table[truth[i]].true_frames;
    out.total_detected_objects += static_cast<std::uint64_t>(detected[i]);
    out.total_true_objects += static_cast<std::uint64_t>(truth[i]);
    if (detected[i] == truth[i]) matched_objects += static_cast<std::uint64_t>(truth[i]);
  }
  if (out.total_true_objects == 0) throw InputError("eval", "ground truth is all zero; AP_d is undefined");

  // Frame-count-weighted sums over distinct count values.
  double detected_sum = 0.0;
  double true_sum = 0.0;
  for (const auto& [value, freq] : out.per_count_table) {
    detected_sum += static_cast<double>(freq.detected_frames) * static_cast<double>(value);
    true_sum += static_cast<double>(freq.true_frames) * static_cast<double>(value);
  }
  out.per_value = detected_sum / true_sum;
  out.total_ratio = static_cast<double>(out.total_detected_objects) / static_cast<double>(out.total_true_objects);
  out.matched_frame = static_cast<double>(matched_objects) / static_cast<double>(out.total_true_objects);

  if (std::abs(out.per_value - out.total_ratio) > kFormTolerance * std::max(1.0, std::abs(out.total_ratio)))
    throw std::logic_error("AP_d forms disagree: per-value " + std::to_string(out.per_value) + " vs totals " +
                           std::to_string(out.total_ratio));
  return out;
}

double ap_d(const CountSeries& detected, const CountSeries& truth) {
  return ap_d_breakdown(detected.counts, truth.counts).per_value;
}

EvalReport evaluate(const CountSeries& truth, const CountSeries& raw, const CountSeries& smoothed) {
  const ApdBreakdown r = ap_d_breakdown(raw.counts, truth.counts);
  const ApdBreakdown s = ap_d_breakdown(smoothed.counts, truth.counts);
  return {r.per_value, s.per_value, s.per_count_table, s.total_detected_objects, s.total_true_objects};
}

void ComparisonTable::add_scene(const std::string& scene, const CountSeries& truth,
                                std::span<const NamedSeries> candidates) {
  for (const auto& c : candidates) {
    if (c.series.size() != truth.size())
      throw InputError("eval", "candidate '" + c.name + "' has " + std::to_string(c.series.size()) +
                                   " frames, truth has " + std::to_string(truth.size()));
  }
  std::vector<ApdBreakdown> results;
  results.reserve(candidates.size());
  for (const auto& c : candidates) {
    try {
      results.push_back(ap_d_breakdown(c.series.counts, truth.counts));
    } catch (const InputError& e) {
      throw InputError("eval", "candidate '" + c.name + "': " + e.what());
    }
  }

  const std::size_t col = scenes_.size();
  scenes_.push_back(scene);
  for (auto& row : cells_) row.push_back(std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    auto it = std::find(methods_.begin(), methods_.end(), candidates[k].name);
    std::size_t row = static_cast<std::size_t>(it - methods_.begin());
    if (it == methods_.end()) {
      methods_.push_back(candidates[k].name);
      cells_.emplace_back(scenes_.size(), std::numeric_limits<double>::quiet_NaN());
    }
    cells_[row][col] = results[k].per_value;
    details_[{row, col}] = std::move(results[k]);
  }
}

const ApdBreakdown& ComparisonTable::breakdown(std::size_t method, std::size_t scene) const {
  return details_.at({method, scene});
}

std::string ComparisonTable::render_text() const {
  std::size_t name_width = std::string("method").size();
  for (const auto& m : methods_) name_width = std::max(name_width, m.size());
  std::vector<std::size_t> widths;
  for (std::size_t s = 0; s < scenes_.size(); ++s) {
    std::size_t w = std::max<std::size_t>(scenes_[s].size(), 6);
    for (std::size_t m = 0; m < methods_.size(); ++m) w = std::max(w, format_cell(cells_[m][s]).size());
    widths.push_back(w);
  }

  auto pad_right = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
  auto pad_left = [](const std::string& s, std::size_t w) { return std::string(w - s.size(), ' ') + s; };

  std::string out = pad_right("method", name_width);
  for (std::size_t s = 0; s < scenes_.size(); ++s) out += "  " + pad_left(scenes_[s], widths[s]);
  out += "\n";
  for (std::size_t m = 0; m < methods_.size(); ++m) {
    out += pad_right(methods_[m], name_width);
    for (std::size_t s = 0; s < scenes_.size(); ++s) out += "  " + pad_left(format_cell(cells_[m][s]), widths[s]);
    out += "\n";
  }
  return out;
}

std::string ComparisonTable::to_json() const {
  nlohmann::ordered_json j;
  j["metric"] = "AP_d";
  j["scenes"] = scenes_;
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t m = 0; m < methods_.size(); ++m) {
    nlohmann::ordered_json row;
    row["method"] = methods_[m];
    nlohmann::ordered_json values;
    nlohmann::ordered_json details;
    for (std::size_t s = 0; s < scenes_.size(); ++s) {
      values[scenes_[s]] = number_or_null(cells_[m][s]);
      const auto it = details_.find({m, s});
      if (it == details_.end()) continue;
      const ApdBreakdown& b = it->second;
      nlohmann::ordered_json d;
      d["ap_d"] = b.per_value;
      d["ap_d_total_ratio"] = b.total_ratio;
      d["matched_frame_precision"] = b.matched_frame;
      d["total_detected_objects"] = b.total_detected_objects;
      d["total_true_objects"] = b.total_true_objects;
      auto table = nlohmann::ordered_json::array();
      for (const auto& [value, freq] : b.per_count_table)
        table.push_back({{"count", value}, {"detected_frames", freq.detected_frames}, {"true_frames", freq.true_frames}});
      d["per_count_table"] = std::move(table);
      details[scenes_[s]] = std::move(d);
    }
    row["ap_d"] = std::move(values);
    row["details"] = std::move(details);
    rows.push_back(std::move(row));
  }
  j["methods"] = std::move(rows);
  return j.dump(2) + "\n";
}

ComparisonTable compare_methods(const CountSeries& truth, std::span<const NamedSeries> candidates,
                                const std::string& scene) {
  ComparisonTable t;
  t.add_scene(scene, truth, candidates);
  return t;
}

void JitterSpec::validate() const {
  if (!(spike_probability >= 0.0 && spike_probability <= 1.0)) throw ConfigError("spike_probability must lie in [0, 1]");
  if (max_spike_magnitude < 1) throw ConfigError("max_spike_magnitude must be >= 1");
  if (max_spike_run < 1) throw ConfigError("max_spike_run must be >= 1");
}

SyntheticTrace generate_synthetic(std::span<const ProfileRun> profile, const JitterSpec& jitter, const Rational& fps) {
  jitter.validate();
  std::vector<Count> truth;
  for (const auto& run : profile) {
    if (run.count < 0) throw InputError("synth", "profile counts must be nonnegative");
    truth.insert(truth.end(), run.run_length, run.count);
  }
  if (truth.empty()) throw InputError("synth", "profile describes an empty series");

  std::mt19937_64 rng(jitter.rng_seed);
  std::bernoulli_distribution spike(jitter.spike_probability);
  std::bernoulli_distribution upward(0.5);
  std::uniform_int_distribution<Count> magnitude(1, jitter.max_spike_magnitude);
  std::uniform_int_distribution<std::size_t> run_length(1, jitter.max_spike_run);

  std::vector<Count> noisy = truth;
  std::size_t spikes = 0;
  for (std::size_t i = 0; i < noisy.size();) {
    if (!spike(rng)) {
      ++i;
      continue;
    }
    const Count delta = upward(rng) ? magnitude(rng) : -magnitude(rng);
    const std::size_t end = std::min(noisy.size(), i + run_length(rng));
    for (; i < end; ++i) noisy[i] = std::max<Count>(0, truth[i] + delta);
    ++spikes;
  }

  return {CountSeries::from_counts(std::move(truth), fps), CountSeries::from_counts(std::move(noisy), fps), spikes};
}

}  // namespace crowdgate
