#pragma once

#include <cstdint>
#include <vector>

namespace sweepsfm {

/// Row-major interleaved intensity grid, values in [0, 1], 1 or 3 channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;

  Image() = default;
  Image(int width, int height, int channels);

  float at(int x, int y, int c = 0) const {
    return data[static_cast<size_t>(y * width + x) * channels + c];
  }
  float& at(int x, int y, int c = 0) {
    return data[static_cast<size_t>(y * width + x) * channels + c];
  }
  /// Mean over channels.
  float luma(int x, int y) const;
};

/// Per-pixel metric depth; entries <= 0 (or non-finite) mark missing pixels.
class DepthMap {
 public:
  static constexpr float kInvalid = 0.0f;

  DepthMap() = default;
  DepthMap(int width, int height, float fill = kInvalid);

  int width() const { return width_; }
  int height() const { return height_; }

  float at(int x, int y) const { return d_[static_cast<size_t>(y) * width_ + x]; }
  void set(int x, int y, float depth) { d_[static_cast<size_t>(y) * width_ + x] = depth; }
  void set_invalid(int x, int y) { set(x, y, kInvalid); }
  bool valid_at(int x, int y) const;

  int valid_count() const;
  /// Smallest valid depth; 0 when the map has no valid pixel.
  float min_valid() const;

  const std::vector<float>& values() const { return d_; }
  std::vector<float>& values() { return d_; }

  bool operator==(const DepthMap& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> d_;
};

/// Nearest-neighbor downsample by an integer factor (used to bring
/// image-resolution depth maps to the feature grid).
DepthMap downsample_depth(const DepthMap& src, int factor);

}  // namespace sweepsfm
