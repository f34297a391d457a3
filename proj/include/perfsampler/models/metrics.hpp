#pragma once

#include <cmath>
#include <span>

#include "perfsampler/error.hpp"

namespace perfsampler::models {

inline double rmse(std::span<const double> predictions, std::span<const double> truth) {
  if (predictions.size() != truth.size()) throw Error(Errc::dimension_mismatch, "rmse: length mismatch");
  if (truth.empty()) throw Error(Errc::invalid_argument, "rmse of empty vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = predictions[i] - truth[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(truth.size()));
}

}  // namespace perfsampler::models
