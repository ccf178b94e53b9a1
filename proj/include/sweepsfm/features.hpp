#pragma once

#include <vector>

#include "sweepsfm/image.hpp"

namespace sweepsfm {

struct FeatureConfig {
  int channels = 32;
};

/// Quarter-resolution multi-channel descriptor grid, values in [-1, 1].
/// Layout is pixel-major: data[(y * width + x) * channels + c].
struct FeatureMap {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  FeatureMap() = default;
  FeatureMap(int width, int height, int channels);

  float at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  float& at(int x, int y, int c) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  const float* cell(int x, int y) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * channels;
  }

  bool operator==(const FeatureMap& other) const = default;
};

/// Deterministic per-pixel descriptors at 1/4 image resolution.
///
/// Channel layout on the 4x4-box-averaged grid: per-channel intensity
/// (1 or 3), x/y central-difference gradients of the luma (2), signed
/// 3x3 census of the luma (8, sign of neighbor minus center), box-filtered
/// luma means at radii 1/2/4 (3), then zero padding up to `channels`.
/// Every channel is affinely mapped into [-1, 1]. Throws when the image
/// dimensions are not divisible by 4.
FeatureMap extract_features(const Image& image, const FeatureConfig& config = {});

}  // namespace sweepsfm
