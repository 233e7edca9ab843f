#include "crowdgate/density.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "crowdgate/error.hpp"

namespace crowdgate {

namespace {

constexpr const char* kStage = "density";
constexpr std::size_t kColumns = 3;
constexpr std::array<const char*, kColumns> kColumnNames = {"area", "edge", "intercept"};
// Relative tolerance on unit-norm design columns below which a column is
// treated as lying in the span of the others.
constexpr double kRankTolerance = 1e-10;

void check_dims(const BackgroundModel& model, const GrayFrame& frame) {
  if (frame.width != model.width || frame.height != model.height ||
      frame.pixels.size() != std::size_t{model.width} * model.height) {
    throw InputError(kStage, "frame " + std::to_string(frame.frame_index) + " is " + std::to_string(frame.width) +
                                 "x" + std::to_string(frame.height) + ", background is " +
                                 std::to_string(model.width) + "x" + std::to_string(model.height));
  }
}

using Column = std::vector<double>;

// Rank of the given unit-norm columns by modified Gram-Schmidt with one
// reorthogonalization pass.
std::size_t column_rank(std::vector<Column> cols) {
  std::vector<Column> basis;
  for (auto& c : cols) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis) {
        double dot = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) dot += q[i] * c[i];
        for (std::size_t i = 0; i < c.size(); ++i) c[i] -= dot * q[i];
      }
    }
    double norm = 0.0;
    for (double v : c) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > kRankTolerance) {
      for (double& v : c) v /= norm;
      basis.push_back(std::move(c));
    }
  }
  return basis.size();
}

}  // namespace

BackgroundModel BackgroundModel::from_frame(const GrayFrame& first, double motion_threshold, double learning_rate) {
  if (first.pixels.size() != std::size_t{first.width} * first.height)
    throw InputError(kStage, "frame " + std::to_string(first.frame_index) + " pixel buffer does not match its size");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate must lie in (0, 1]");
  if (!(motion_threshold >= 0.0)) throw ConfigError("motion_threshold must be nonnegative");
  BackgroundModel m;
  m.width = first.width;
  m.height = first.height;
  m.background.assign(first.pixels.begin(), first.pixels.end());
  m.motion_threshold = motion_threshold;
  m.learning_rate = learning_rate;
  return m;
}

BackgroundModel update_background(BackgroundModel model, const GrayFrame& prev, const GrayFrame& curr) {
  check_dims(model, prev);
  check_dims(model, curr);
  if (prev.frame_index + 1 != curr.frame_index)
    throw InputError(kStage, "background update needs consecutive frames, got " + std::to_string(prev.frame_index) +
                                 " then " + std::to_string(curr.frame_index));

  const double alpha = model.learning_rate;
  for (std::size_t p = 0; p < model.background.size(); ++p) {
    const int delta = std::abs(int{curr.pixels[p]} - int{prev.pixels[p]});
    if (delta < model.motion_threshold)
      model.background[p] = std::lerp(model.background[p], static_cast<double>(curr.pixels[p]), alpha);
  }
  return model;
}

Mask extract_foreground(const BackgroundModel& model, const GrayFrame& frame, double fg_threshold) {
  check_dims(model, frame);
  Mask mask(model.background.size());
  for (std::size_t p = 0; p < mask.size(); ++p)
    mask[p] = std::abs(frame.pixels[p] - model.background[p]) > fg_threshold ? 1 : 0;
  return mask;
}

ForegroundFeatures compute_features(std::span<const std::uint8_t> mask, std::uint32_t width, std::uint32_t height,
                                    std::uint64_t frame_index) {
  if (mask.size() != std::size_t{width} * height)
    throw InputError(kStage, "mask has " + std::to_string(mask.size()) + " entries for a " + std::to_string(width) +
                                 "x" + std::to_string(height) + " image");
  ForegroundFeatures f;
  f.frame_index = frame_index;
  for (std::uint32_t row = 0; row < height; ++row) {
    const std::size_t base = std::size_t{row} * width;
    for (std::uint32_t col = 0; col < width; ++col) {
      if (!mask[base + col]) continue;
      ++f.area;
      const bool interior = row > 0 && row + 1 < height && col > 0 && col + 1 < width && mask[base + col - 1] &&
                            mask[base + col + 1] && mask[base - width + col] && mask[base + width + col];
      if (!interior) ++f.edge;
    }
  }
  return f;
}

DensityRegressor fit_regressor(std::span<const CalibrationSample> samples, double fg_threshold) {
  const std::size_t n = samples.size();
  if (n < kColumns)
    throw InputError(kStage, "regression needs at least 3 calibration samples, got " + std::to_string(n));

  // Design columns scaled to unit norm; the scale is undone on the solution.
  std::array<Column, kColumns> cols;
  for (auto& c : cols) c.resize(n);
  Column y(n);
  for (std::size_t i = 0; i < n; ++i) {
    cols[0][i] = static_cast<double>(samples[i].features.area);
    cols[1][i] = static_cast<double>(samples[i].features.edge);
    cols[2][i] = 1.0;
    y[i] = static_cast<double>(samples[i].true_count);
  }
  std::array<double, kColumns> scale{};
  for (std::size_t j = 0; j < kColumns; ++j) {
    double norm = 0.0;
    for (double v : cols[j]) norm += v * v;
    scale[j] = std::sqrt(norm);
    if (scale[j] > 0.0)
      for (double& v : cols[j]) v /= scale[j];
  }

  const std::size_t rank = column_rank({cols.begin(), cols.end()});
  if (rank < kColumns) {
    // A column is degenerate when dropping it leaves the rank unchanged.
    std::string names;
    for (std::size_t j = 0; j < kColumns; ++j) {
      std::vector<Column> others;
      for (std::size_t k = 0; k < kColumns; ++k)
        if (k != j) others.push_back(cols[k]);
      if (scale[j] == 0.0 || column_rank(others) == rank) names += (names.empty() ? "" : ", ") + std::string(kColumnNames[j]);
    }
    throw InputError(kStage, "calibration design matrix is rank deficient (rank " + std::to_string(rank) +
                                 " of 3); degenerate column(s): " + names);
  }

  // Householder QR: A = QR, then R beta = Q^T y.
  for (std::size_t k = 0; k < kColumns; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < n; ++i) norm += cols[k][i] * cols[k][i];
    norm = std::sqrt(norm);
    const double alpha = cols[k][k] > 0.0 ? -norm : norm;
    Column v(cols[k].begin() + static_cast<std::ptrdiff_t>(k), cols[k].end());
    v[0] -= alpha;
    double vnorm2 = 0.0;
    for (double t : v) vnorm2 += t * t;
    if (vnorm2 == 0.0) continue;

    auto reflect = [&](Column& target) {
      double dot = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * target[k + i];
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = 0; i < v.size(); ++i) target[k + i] -= f * v[i];
    };
    for (std::size_t j = k; j < kColumns; ++j) reflect(cols[j]);
    reflect(y);
  }

  std::array<double, kColumns> beta{};
  for (std::size_t k = kColumns; k-- > 0;) {
    double acc = y[k];
    for (std::size_t j = k + 1; j < kColumns; ++j) acc -= cols[j][k] * beta[j];
    beta[k] = acc / cols[k][k];
  }

  DensityRegressor r;
  r.coef_area = beta[0] / scale[0];
  r.coef_edge = beta[1] / scale[1];
  r.intercept = beta[2] / scale[2];
  r.fg_threshold = fg_threshold;
  return r;
}

Count predict_count(const DensityRegressor& regressor, const ForegroundFeatures& features) {
  const double linear = regressor.coef_area * static_cast<double>(features.area) +
                        regressor.coef_edge * static_cast<double>(features.edge) + regressor.intercept;
  if (!(linear > 0.0)) return 0;  // also maps NaN to zero
  constexpr double kMax = static_cast<double>(std::numeric_limits<Count>::max() / 2);
  return static_cast<Count>(std::round(std::min(linear, kMax)));
}

std::vector<ForegroundFeatures> density_features(std::span<const GrayFrame> frames, std::span<const std::size_t> wanted,
                                                 double fg_threshold, double motion_threshold, double learning_rate) {
  std::vector<ForegroundFeatures> out;
  if (wanted.empty()) return out;
  if (frames.empty()) throw StageError(kStage, "no gray frames supplied");
  if (wanted.back() >= frames.size())
    throw StageError(kStage, "no gray frame for frame " + std::to_string(wanted.back()) + " (stream has " +
                                 std::to_string(frames.size()) + " frames)");

  BackgroundModel model = BackgroundModel::from_frame(frames.front(), motion_threshold, learning_rate);
  std::size_t next = 0;
  for (std::size_t k = 0; k <= wanted.back(); ++k) {
    if (k > 0) check_dims(model, frames[k]);
    while (next < wanted.size() && wanted[next] == k) {
      const Mask mask = extract_foreground(model, frames[k], fg_threshold);
      out.push_back(compute_features(mask, model.width, model.height, frames[k].frame_index));
      ++next;
    }
    if (k > 0) model = update_background(std::move(model), frames[k - 1], frames[k]);
  }
  return out;
}

}  // namespace crowdgate
