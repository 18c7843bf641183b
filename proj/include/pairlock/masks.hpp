#ifndef PAIRLOCK_MASKS_HPP
#define PAIRLOCK_MASKS_HPP

#include <array>
#include <vector>

#include "pairlock/geometry.hpp"
#include "pairlock/imaging.hpp"

namespace pairlock {

enum class FirearmClass { Gun, Rifle };

// Single-channel real plane, row-major.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  static Plane zeros(int w, int h) { return {w, h, std::vector<double>(static_cast<size_t>(w) * h, 0.0)}; }
  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

// Attention channel layout controls the ablation ladder:
//   None   -> image channels only
//   Merged -> one firearm mask + human mask appended (2 extra channels)
//   Split  -> gun, rifle, human masks appended (3 extra channels)
enum class AttentionMode { None, Merged, Split };

const char* to_string(AttentionMode m);

// Image planes followed by attention planes, all PBB-local.
struct AttentionStack {
  int width = 0;
  int height = 0;
  int image_channels = 0;
  std::vector<Plane> planes;  // image channels first, then masks

  int channel_count() const { return static_cast<int>(planes.size()); }
};

// Per-class locality targets/outputs: planes for gun, rifle, human.
struct LocalityMap {
  int width = 0;
  int height = 0;
  std::array<Plane, 3> planes;  // [gun, rifle, human]

  static LocalityMap zeros(int w, int h) {
    return {w, h, {Plane::zeros(w, h), Plane::zeros(w, h), Plane::zeros(w, h)}};
  }
};

// Index into LocalityMap::planes and into the split attention channels.
enum class MapClass { Gun = 0, Rifle = 1, Human = 2 };

// Rasterizes binary masks [M_g, M_r, M_h] for a pair at out_w x out_h.
// Boxes are in image coordinates; they are mapped into PBB-local scaled
// coordinates before half-open rasterization. The absent firearm class
// yields an all-zero plane.
std::array<Plane, 3> build_attention_channels(const BoundingBox& pbb, const BoundingBox& human,
                                              const BoundingBox& firearm, FirearmClass firearm_class,
                                              int out_w, int out_h);

// Gaussian locality ground truth. Boxes in PBB-local pixel coordinates at
// the output resolution; sigma = side/4 (floored at eps) per axis and the
// peak is normalized to 1 at the pixel nearest the box center.
LocalityMap build_locality_target(int out_w, int out_h,
                                  const std::vector<std::pair<MapClass, BoundingBox>>& present,
                                  double sigma_factor = 0.25, double eps = 0.5);

// Concatenates crop channels with mask planes per the attention mode.
AttentionStack assemble_apbb(const Image& crop, const std::array<Plane, 3>& masks,
                             AttentionMode mode = AttentionMode::Split);

}  // namespace pairlock

#endif  // PAIRLOCK_MASKS_HPP
