#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "smoothrace/error.hpp"

namespace smoothrace {

/// Single-channel image, row-major, intensities nominally in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int w, int h, float fill = 0.0f)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
    if (w <= 0 || h <= 0) throw ShapeError("image dimensions must be positive");
  }

  std::size_t size() const { return pixels.size(); }
  float& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::span<const float> view() const { return pixels; }

  friend bool operator==(const Image&, const Image&) = default;
};

using Observation = Image;

}  // namespace smoothrace
