#include "sweepsfm/features.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace sweepsfm {

namespace {

constexpr std::array<int, 3> kBoxRadii = {1, 2, 4};

// 4x4 box average of one channel (or the luma for c < 0).
std::vector<float> downsample4(const Image& img, int c) {
  const int w = img.width / 4;
  const int h = img.height / 4;
  std::vector<float> out(static_cast<size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float sum = 0.0f;
      for (int dy = 0; dy < 4; ++dy) {
        for (int dx = 0; dx < 4; ++dx) {
          sum += c < 0 ? img.luma(4 * x + dx, 4 * y + dy)
                       : img.at(4 * x + dx, 4 * y + dy, c);
        }
      }
      out[static_cast<size_t>(y) * w + x] = sum / 16.0f;
    }
  }
  return out;
}

float grid_at(const std::vector<float>& g, int w, int h, int x, int y) {
  x = std::clamp(x, 0, w - 1);
  y = std::clamp(y, 0, h - 1);
  return g[static_cast<size_t>(y) * w + x];
}

}  // namespace

FeatureMap::FeatureMap(int width_, int height_, int channels_)
    : width(width_), height(height_), channels(channels_) {
  if (width <= 0 || height <= 0 || channels <= 0) {
    throw std::invalid_argument("FeatureMap: bad dimensions");
  }
  data.assign(static_cast<size_t>(width) * height * channels, 0.0f);
}

FeatureMap extract_features(const Image& image, const FeatureConfig& config) {
  if (image.width % 4 != 0 || image.height % 4 != 0) {
    throw std::invalid_argument("extract_features: image dimensions must be divisible by 4");
  }
  const int w = image.width / 4;
  const int h = image.height / 4;
  const int used = image.channels + 2 + 8 + static_cast<int>(kBoxRadii.size());
  if (config.channels < used) {
    throw std::invalid_argument("extract_features: channel budget too small for layout");
  }

  std::vector<std::vector<float>> intensity(image.channels);
  for (int c = 0; c < image.channels; ++c) {
    intensity[c] = downsample4(image, c);
  }
  const std::vector<float> luma = image.channels == 1 ? intensity[0] : downsample4(image, -1);

  FeatureMap out(w, h, config.channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int c = 0;
      for (int ic = 0; ic < image.channels; ++ic) {
        out.at(x, y, c++) = 2.0f * intensity[ic][static_cast<size_t>(y) * w + x] - 1.0f;
      }
      // Central differences of luma in [0,1] span [-0.5, 0.5]; scale by 2.
      out.at(x, y, c++) =
          grid_at(luma, w, h, x + 1, y) - grid_at(luma, w, h, x - 1, y);
      out.at(x, y, c++) =
          grid_at(luma, w, h, x, y + 1) - grid_at(luma, w, h, x, y - 1);
      // Signed census: sign of neighbor minus center, zero on ties, so a
      // structureless patch produces exactly-zero channels.
      const float center = grid_at(luma, w, h, x, y);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          float nb = center;
          if (x + dx >= 0 && x + dx < w && y + dy >= 0 && y + dy < h) {
            nb = grid_at(luma, w, h, x + dx, y + dy);
          }
          out.at(x, y, c++) = nb > center ? 1.0f : (nb < center ? -1.0f : 0.0f);
        }
      }
      for (int r : kBoxRadii) {
        float sum = 0.0f;
        int n = 0;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            if (x + dx < 0 || x + dx >= w || y + dy < 0 || y + dy >= h) continue;
            sum += grid_at(luma, w, h, x + dx, y + dy);
            ++n;
          }
        }
        out.at(x, y, c++) = 2.0f * (sum / static_cast<float>(n)) - 1.0f;
      }
      // Remaining channels stay zero-padded.
    }
  }
  return out;
}

}  // namespace sweepsfm
