#pragma once

// Pixel-based count estimation for crowded frames: a motion-gated running
// background, thresholded foreground masks, and a linear model on the
// mask's area and boundary length.

#include <cstdint>
#include <span>
#include <vector>

#include "crowdgate/counting.hpp"
#include "crowdgate/ingest.hpp"

namespace crowdgate {

struct BackgroundModel {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<double> background;
  double motion_threshold = 15.0;
  double learning_rate = 0.05;

  /// Background initialized to `first` verbatim.
  static BackgroundModel from_frame(const GrayFrame& first, double motion_threshold = 15.0,
                                    double learning_rate = 0.05);
};

/// One byte per pixel, 0 or 1, row-major.
using Mask = std::vector<std::uint8_t>;

struct ForegroundFeatures {
  std::uint64_t area = 0;
  std::uint64_t edge = 0;
  std::uint64_t frame_index = 0;

  friend bool operator==(const ForegroundFeatures&, const ForegroundFeatures&) = default;
};

struct DensityRegressor {
  double coef_area = 0.0;
  double coef_edge = 0.0;
  double intercept = 0.0;
  double fg_threshold = 25.0;
};

struct CalibrationSample {
  ForegroundFeatures features;
  Count true_count = 0;
};

/// Pixels whose frame-to-frame change is below the motion threshold move
/// toward `curr` by the learning rate; all other pixels are left untouched.
BackgroundModel update_background(BackgroundModel model, const GrayFrame& prev, const GrayFrame& curr);

Mask extract_foreground(const BackgroundModel& model, const GrayFrame& frame, double fg_threshold = 25.0);

/// area = set pixels; edge = set pixels with an unset or out-of-image 4-neighbor.
ForegroundFeatures compute_features(std::span<const std::uint8_t> mask, std::uint32_t width,
                                    std::uint32_t height, std::uint64_t frame_index = 0);

/// Ordinary least squares on [area, edge, 1] via Householder QR.
/// Throws InputError when fewer than 3 samples are given or when a design
/// column is a linear combination of the others (the message names it).
DensityRegressor fit_regressor(std::span<const CalibrationSample> samples, double fg_threshold = 25.0);

/// round(max(0, linear output)), halves away from zero.
Count predict_count(const DensityRegressor& regressor, const ForegroundFeatures& features);

/// Sequential background pass over a frame stream. Features of frame k are
/// taken against the background accumulated from frames 0..k-1 (frame 0
/// against itself). Only positions listed in `wanted` (sorted) are returned;
/// the pass stops after the last wanted frame.
std::vector<ForegroundFeatures> density_features(std::span<const GrayFrame> frames,
                                                 std::span<const std::size_t> wanted,
                                                 double fg_threshold = 25.0,
                                                 double motion_threshold = 15.0,
                                                 double learning_rate = 0.05);

}  // namespace crowdgate
