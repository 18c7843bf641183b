#include "pairlock/imaging.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace pairlock {

const char* to_string(ColorSpace cs) {
  switch (cs) {
    case ColorSpace::Gray: return "gray";
    case ColorSpace::RGB: return "rgb";
    case ColorSpace::YCbCr: return "ycbcr";
  }
  return "?";
}

Image Image::make(int w, int h, int c, ColorSpace cs, double fill) {
  if (w < 0 || h < 0 || (c != 1 && c != 3)) throw std::invalid_argument("Image::make: bad dims");
  if ((c == 1) != (cs == ColorSpace::Gray)) throw std::invalid_argument("Image::make: channels/color_space mismatch");
  Image img;
  img.width = w;
  img.height = h;
  img.channels = c;
  img.color_space = cs;
  img.data.assign(static_cast<size_t>(w) * h * c, fill);
  return img;
}

namespace {

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// BT.601 full-range luma/chroma, chroma offset +0.5 to stay in [0,1].
inline void rgb_to_ycbcr(double r, double g, double b, double& y, double& cb, double& cr) {
  y = 0.299 * r + 0.587 * g + 0.114 * b;
  cb = clamp01(0.5 + (b - y) / 1.772);
  cr = clamp01(0.5 + (r - y) / 1.402);
}

inline void ycbcr_to_rgb(double y, double cb, double cr, double& r, double& g, double& b) {
  r = clamp01(y + 1.402 * (cr - 0.5));
  b = clamp01(y + 1.772 * (cb - 0.5));
  g = clamp01((y - 0.299 * r - 0.114 * b) / 0.587);
}

}  // namespace

Image convert_color(const Image& img, ColorSpace target) {
  if (img.color_space == target) return img;
  const int n = img.width * img.height;
  if (img.color_space == ColorSpace::Gray) {
    // Lossy inverse: replicate luma, neutral chroma.
    Image out = Image::make(img.width, img.height, 3, target);
    for (int i = 0; i < n; ++i) {
      const double y = img.data[i];
      if (target == ColorSpace::RGB) {
        out.data[3 * i + 0] = out.data[3 * i + 1] = out.data[3 * i + 2] = y;
      } else {
        out.data[3 * i + 0] = y;
        out.data[3 * i + 1] = 0.5;
        out.data[3 * i + 2] = 0.5;
      }
    }
    return out;
  }
  if (target == ColorSpace::Gray) {
    Image out = Image::make(img.width, img.height, 1, ColorSpace::Gray);
    for (int i = 0; i < n; ++i) {
      if (img.color_space == ColorSpace::RGB) {
        out.data[i] = 0.299 * img.data[3 * i] + 0.587 * img.data[3 * i + 1] + 0.114 * img.data[3 * i + 2];
      } else {
        out.data[i] = img.data[3 * i];  // luma plane
      }
    }
    return out;
  }
  Image out = Image::make(img.width, img.height, 3, target);
  for (int i = 0; i < n; ++i) {
    const double a = img.data[3 * i], b = img.data[3 * i + 1], c = img.data[3 * i + 2];
    double o0, o1, o2;
    if (target == ColorSpace::YCbCr) {
      rgb_to_ycbcr(a, b, c, o0, o1, o2);
    } else {
      ycbcr_to_rgb(a, b, c, o0, o1, o2);
    }
    out.data[3 * i + 0] = o0;
    out.data[3 * i + 1] = o1;
    out.data[3 * i + 2] = o2;
  }
  return out;
}

Image resize_shorter_side(const Image& img, int target) {
  if (target < 1) throw std::invalid_argument("resize_shorter_side: target < 1");
  if (img.empty()) throw std::invalid_argument("resize_shorter_side: empty image");
  const double scale = static_cast<double>(target) / std::min(img.width, img.height);
  int out_w, out_h;
  if (img.width <= img.height) {
    out_w = target;
    out_h = std::max(1, static_cast<int>(std::lround(img.height * scale)));
  } else {
    out_h = target;
    out_w = std::max(1, static_cast<int>(std::lround(img.width * scale)));
  }
  if (out_w == img.width && out_h == img.height) return img;

  Image out = Image::make(out_w, out_h, img.channels, img.color_space);
  // Half-pixel-center sampling, edge clamped.
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  for (int oy = 0; oy < out_h; ++oy) {
    double fy = (oy + 0.5) * sy - 0.5;
    if (fy < 0) fy = 0;
    if (fy > img.height - 1) fy = img.height - 1;
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int ox = 0; ox < out_w; ++ox) {
      double fx = (ox + 0.5) * sx - 0.5;
      if (fx < 0) fx = 0;
      if (fx > img.width - 1) fx = img.width - 1;
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(x0, y0, c) * (1 - wx) + img.at(x1, y0, c) * wx;
        const double bot = img.at(x0, y1, c) * (1 - wx) + img.at(x1, y1, c) * wx;
        out.at(ox, oy, c) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

Image crop(const Image& img, const BoundingBox& box) {
  int x0 = static_cast<int>(std::lround(box.x_min));
  int y0 = static_cast<int>(std::lround(box.y_min));
  int x1 = static_cast<int>(std::lround(box.x_max));
  int y1 = static_cast<int>(std::lround(box.y_max));
  x0 = std::max(0, x0);
  y0 = std::max(0, y0);
  x1 = std::min(img.width, x1);
  y1 = std::min(img.height, y1);
  if (x1 <= x0 || y1 <= y0) throw std::invalid_argument("crop: empty region (degenerate PBB)");
  Image out = Image::make(x1 - x0, y1 - y0, img.channels, img.color_space);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(x - x0, y - y0, c) = img.at(x, y, c);
  return out;
}

Image read_pnm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_pnm: cannot open " + path);
  std::string magic;
  f >> magic;
  if (magic != "P5" && magic != "P6") throw std::runtime_error("read_pnm: unsupported format in " + path);
  auto next_int = [&f, &path]() {
    // Skip whitespace and '#' comments.
    int c = f.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
      if (c == '#')
        while (c != EOF && c != '\n') c = f.get();
      c = f.get();
    }
    int v = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
      v = v * 10 + (c - '0');
      any = true;
      c = f.get();
    }
    if (!any) throw std::runtime_error("read_pnm: malformed header in " + path);
    return v;
  };
  const int w = next_int(), h = next_int(), maxval = next_int();
  if (maxval != 255) throw std::runtime_error("read_pnm: only maxval 255 supported");
  const int ch = (magic == "P6") ? 3 : 1;
  Image img = Image::make(w, h, ch, ch == 3 ? ColorSpace::RGB : ColorSpace::Gray);
  std::vector<unsigned char> buf(static_cast<size_t>(w) * h * ch);
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (f.gcount() != static_cast<std::streamsize>(buf.size()))
    throw std::runtime_error("read_pnm: truncated pixel data in " + path);
  for (size_t i = 0; i < buf.size(); ++i) img.data[i] = buf[i] / 255.0;
  return img;
}

void write_pnm(const Image& img, const std::string& path) {
  if (img.channels == 3 && img.color_space != ColorSpace::RGB)
    throw std::invalid_argument("write_pnm: 3-channel images must be RGB");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_pnm: cannot open " + path);
  f << (img.channels == 3 ? "P6" : "P5") << "\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> buf(img.data.size());
  for (size_t i = 0; i < buf.size(); ++i) {
    const double v = clamp01(img.data[i]);
    buf[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw std::runtime_error("write_pnm: write failed for " + path);
}

}  // namespace pairlock
