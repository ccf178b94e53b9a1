#include "sweepsfm/image.hpp"

#include <cmath>
#include <stdexcept>

namespace sweepsfm {

Image::Image(int width_, int height_, int channels_)
    : width(width_), height(height_), channels(channels_) {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) {
    throw std::invalid_argument("Image: bad dimensions or channel count");
  }
  data.assign(static_cast<size_t>(width) * height * channels, 0.0f);
}

float Image::luma(int x, int y) const {
  if (channels == 1) {
    return at(x, y, 0);
  }
  return (at(x, y, 0) + at(x, y, 1) + at(x, y, 2)) / 3.0f;
}

DepthMap::DepthMap(int width, int height, float fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("DepthMap: bad dimensions");
  }
  d_.assign(static_cast<size_t>(width) * height, fill);
}

bool DepthMap::valid_at(int x, int y) const {
  const float d = at(x, y);
  return d > 0.0f && std::isfinite(d);
}

int DepthMap::valid_count() const {
  int n = 0;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (valid_at(x, y)) ++n;
    }
  }
  return n;
}

float DepthMap::min_valid() const {
  float best = 0.0f;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (valid_at(x, y) && (best == 0.0f || at(x, y) < best)) {
        best = at(x, y);
      }
    }
  }
  return best;
}

DepthMap downsample_depth(const DepthMap& src, int factor) {
  if (factor < 1 || src.width() % factor != 0 || src.height() % factor != 0) {
    throw std::invalid_argument("downsample_depth: dimensions not divisible by factor");
  }
  DepthMap out(src.width() / factor, src.height() / factor);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      out.set(x, y, src.at(x * factor + factor / 2, y * factor + factor / 2));
    }
  }
  return out;
}

}  // namespace sweepsfm
