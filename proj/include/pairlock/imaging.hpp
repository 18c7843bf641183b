#ifndef PAIRLOCK_IMAGING_HPP
#define PAIRLOCK_IMAGING_HPP

#include <string>
#include <vector>

#include "pairlock/geometry.hpp"

namespace pairlock {

enum class ColorSpace { Gray, RGB, YCbCr };

const char* to_string(ColorSpace cs);

// Row-major, channel-interleaved raster with values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  ColorSpace color_space = ColorSpace::RGB;
  std::vector<double> data;

  static Image make(int w, int h, int c, ColorSpace cs, double fill = 0.0);

  double& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
  double at(int x, int y, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
  bool empty() const { return width == 0 || height == 0; }
};

Image convert_color(const Image& img, ColorSpace target);

// Aspect-preserving bilinear resize so that min(width, height) == target.
Image resize_shorter_side(const Image& img, int target);

// Rounds box coordinates to nearest integers, clips to image bounds.
// Throws std::invalid_argument when the clipped region is empty.
Image crop(const Image& img, const BoundingBox& box);

// Binary PPM (P6) / PGM (P5), maxval 255; values scaled to [0,1] on load.
Image read_pnm(const std::string& path);
void write_pnm(const Image& img, const std::string& path);

}  // namespace pairlock

#endif  // PAIRLOCK_IMAGING_HPP
