#pragma once

// Text formats exchanged between stages.
//   count series:  frame_index,count,provenance
//   density:       frame_index,area,edge,density_count
//   calibration:   frame_index,area,edge,true_count
//   model:         {"coef_area":f,"coef_edge":f,"intercept":f,"fg_threshold":f}

#include <string>
#include <vector>

#include "crowdgate/counting.hpp"
#include "crowdgate/density.hpp"
#include "crowdgate/rational.hpp"

namespace crowdgate {

std::string write_count_csv(const CountSeries& series);
/// The CSV carries no frame rate; the caller supplies it.
CountSeries read_count_csv(const std::string& text, const Rational& fps);

struct DensityEstimate {
  ForegroundFeatures features;
  Count count = 0;
};

std::string write_density_csv(const std::vector<DensityEstimate>& estimates);
std::vector<DensityEstimate> read_density_csv(const std::string& text);

std::vector<CalibrationSample> read_calibration_csv(const std::string& text);
std::string write_calibration_csv(const std::vector<CalibrationSample>& samples);

std::string write_regressor_json(const DensityRegressor& regressor);
DensityRegressor read_regressor_json(const std::string& text);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(const std::string& bytes);

}  // namespace crowdgate
