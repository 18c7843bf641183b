#include "pairlock/masks.hpp"

#include <cmath>
#include <stdexcept>

namespace pairlock {

const char* to_string(AttentionMode m) {
  switch (m) {
    case AttentionMode::None: return "none";
    case AttentionMode::Merged: return "merged";
    case AttentionMode::Split: return "split";
  }
  return "?";
}

namespace {

// Rasterize one box (image coords) into a PBB-local plane, half-open.
Plane rasterize_box(const BoundingBox& pbb, const BoundingBox& box, int out_w, int out_h) {
  Plane plane = Plane::zeros(out_w, out_h);
  const BoundingBox clipped = intersect_box(box, pbb);
  if (area(clipped) <= 0.0 || area(pbb) <= 0.0) return plane;  // degenerate -> all zeros
  const double sx = out_w / pbb.width();
  const double sy = out_h / pbb.height();
  // PBB-local scaled box; a pixel is inside iff its center is in [lo, hi).
  const double x_lo = (clipped.x_min - pbb.x_min) * sx;
  const double x_hi = (clipped.x_max - pbb.x_min) * sx;
  const double y_lo = (clipped.y_min - pbb.y_min) * sy;
  const double y_hi = (clipped.y_max - pbb.y_min) * sy;
  for (int y = 0; y < out_h; ++y) {
    const double cy = y + 0.5;
    if (cy < y_lo || cy >= y_hi) continue;
    for (int x = 0; x < out_w; ++x) {
      const double cx = x + 0.5;
      if (cx >= x_lo && cx < x_hi) plane.at(x, y) = 1.0;
    }
  }
  return plane;
}

}  // namespace

std::array<Plane, 3> build_attention_channels(const BoundingBox& pbb, const BoundingBox& human,
                                              const BoundingBox& firearm, FirearmClass firearm_class,
                                              int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("build_attention_channels: bad output dims");
  std::array<Plane, 3> masks = {Plane::zeros(out_w, out_h), Plane::zeros(out_w, out_h),
                                Plane::zeros(out_w, out_h)};
  const int fidx = firearm_class == FirearmClass::Gun ? 0 : 1;
  masks[fidx] = rasterize_box(pbb, firearm, out_w, out_h);
  masks[2] = rasterize_box(pbb, human, out_w, out_h);
  return masks;
}

LocalityMap build_locality_target(int out_w, int out_h,
                                  const std::vector<std::pair<MapClass, BoundingBox>>& present,
                                  double sigma_factor, double eps) {
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("build_locality_target: bad output dims");
  LocalityMap map = LocalityMap::zeros(out_w, out_h);
  for (const auto& [cls, box] : present) {
    Plane& plane = map.planes[static_cast<int>(cls)];
    const double cx = box.center_x();
    const double cy = box.center_y();
    const double sx = std::max(box.width() * sigma_factor, eps);
    const double sy = std::max(box.height() * sigma_factor, eps);
    // Peak-normalize so the pixel center nearest (cx, cy) reads exactly 1.
    const double px = std::min(std::max(std::floor(cx), 0.0), out_w - 1.0) + 0.5;
    const double py = std::min(std::max(std::floor(cy), 0.0), out_h - 1.0) + 0.5;
    const double peak = std::exp(-((px - cx) * (px - cx) / (2 * sx * sx) + (py - cy) * (py - cy) / (2 * sy * sy)));
    for (int y = 0; y < out_h; ++y) {
      const double dy = (y + 0.5) - cy;
      for (int x = 0; x < out_w; ++x) {
        const double dx = (x + 0.5) - cx;
        const double g = std::exp(-(dx * dx / (2 * sx * sx) + dy * dy / (2 * sy * sy))) / peak;
        plane.at(x, y) = std::max(plane.at(x, y), std::min(g, 1.0));
      }
    }
  }
  return map;
}

AttentionStack assemble_apbb(const Image& crop, const std::array<Plane, 3>& masks, AttentionMode mode) {
  for (const Plane& m : masks)
    if (m.width != crop.width || m.height != crop.height)
      throw std::invalid_argument("assemble_apbb: mask/crop dimension mismatch");
  AttentionStack stack;
  stack.width = crop.width;
  stack.height = crop.height;
  stack.image_channels = crop.channels;
  for (int c = 0; c < crop.channels; ++c) {
    Plane p = Plane::zeros(crop.width, crop.height);
    for (int y = 0; y < crop.height; ++y)
      for (int x = 0; x < crop.width; ++x) p.at(x, y) = crop.at(x, y, c);
    stack.planes.push_back(std::move(p));
  }
  if (mode == AttentionMode::Split) {
    for (const Plane& m : masks) stack.planes.push_back(m);
  } else if (mode == AttentionMode::Merged) {
    Plane firearm = Plane::zeros(crop.width, crop.height);
    for (size_t i = 0; i < firearm.data.size(); ++i)
      firearm.data[i] = std::max(masks[0].data[i], masks[1].data[i]);
    stack.planes.push_back(std::move(firearm));
    stack.planes.push_back(masks[2]);
  }
  return stack;
}

}  // namespace pairlock
