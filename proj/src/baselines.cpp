#include "pairlock/baselines.hpp"

namespace pairlock {

bool hifd_classify(const Detection& /*firearm*/, const std::vector<Keypoint>& crop_keypoints,
                   double alpha) {
  int qualifying = 0;
  for (const Keypoint& kp : crop_keypoints)
    if (kp.confidence > alpha && ++qualifying >= 2) return true;
  return false;
}

bool hcfd_classify(const Detection& firearm, const std::vector<Keypoint>& body_keypoints,
                   double min_confidence) {
  int inside = 0;
  for (const Keypoint& kp : body_keypoints) {
    if (kp.kind != KeypointKind::Hand) continue;
    if (kp.confidence < min_confidence) continue;
    if (contains_point(firearm.box, kp.x, kp.y) && ++inside >= 2) return true;
  }
  return false;
}

std::vector<OhfdResult> ohfd_associate(const std::vector<Detection>& firearms,
                                       const std::vector<Detection>& humans, double beta) {
  std::vector<OhfdResult> out(firearms.size());
  for (size_t f = 0; f < firearms.size(); ++f) {
    double best = -1.0;
    int best_idx = -1;
    for (size_t h = 0; h < humans.size(); ++h) {
      const double v = iou(firearms[f].box, humans[h].box);
      if (v > best) {
        best = v;
        best_idx = static_cast<int>(h);
      }
    }
    if (best_idx >= 0 && best >= beta) out[f] = {true, best_idx};
  }
  return out;
}

}  // namespace pairlock
