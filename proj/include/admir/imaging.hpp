#pragma once

#include <cstdint>
#include <vector>

#include "admir/common.hpp"

namespace admir::imaging {

/// Frame asset exists on disk but cannot be decoded (or written).
class AssetError : public Error {
 public:
  using Error::Error;
};

/// Packed 8-bit RGB image.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // width * height * 3, row-major

  bool empty() const { return width <= 0 || height <= 0; }
  size_t index(int x, int y) const {
    return (static_cast<size_t>(y) * static_cast<size_t>(width) + static_cast<size_t>(x)) * 3;
  }

  static Image solid(int w, int h, uint8_t r, uint8_t g, uint8_t b);
};

/// Decodes .ppm (P3/P6), .png, .jpg/.jpeg by extension.
Image load_image(const fs::path& path);

/// Encodes by extension; PPM is written as binary P6, JPEG at quality 92.
void save_image(const Image& img, const fs::path& path);

/// Nearest-neighbor resize. No-op when dimensions already match.
Image resize(const Image& img, int width, int height);

/// Mean RGB over an axis-aligned rectangle, each channel in [0, 255].
struct MeanColor {
  double r = 0, g = 0, b = 0;
};
MeanColor mean_color(const Image& img, int x0, int y0, int w, int h);

}  // namespace admir::imaging
