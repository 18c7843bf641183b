#ifndef PAIRLOCK_BASELINES_HPP
#define PAIRLOCK_BASELINES_HPP

#include <vector>

#include "pairlock/pipeline.hpp"

namespace pairlock {

enum class KeypointKind { Hand, Other };

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
  KeypointKind kind = KeypointKind::Hand;
};

// Hands-in-firearm-detections rule: carried iff at least two keypoints
// (detected on the firearm crop) have confidence strictly above alpha.
bool hifd_classify(const Detection& firearm, const std::vector<Keypoint>& crop_keypoints,
                   double alpha = 0.3);

// Pose-conditioned rule: carried iff at least two hand keypoints (image
// coordinates) fall inside the firearm box. Optional confidence floor,
// default 0 (no filtering).
bool hcfd_classify(const Detection& firearm, const std::vector<Keypoint>& body_keypoints,
                   double min_confidence = 0.0);

struct OhfdResult {
  bool carried = false;
  int carrier_index = -1;  // index into humans, -1 when not carried
};

// IoU-overlap rule: carried by the human with the highest IoU when that
// IoU >= beta (inclusive); ties break toward the lowest human index.
std::vector<OhfdResult> ohfd_associate(const std::vector<Detection>& firearms,
                                       const std::vector<Detection>& humans, double beta = 0.5);

}  // namespace pairlock

#endif  // PAIRLOCK_BASELINES_HPP
