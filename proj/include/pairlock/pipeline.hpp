#ifndef PAIRLOCK_PIPELINE_HPP
#define PAIRLOCK_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "pairlock/geometry.hpp"
#include "pairlock/masks.hpp"

namespace pairlock {

enum class ObjectClass { Human, Gun, Rifle };

const char* to_string(ObjectClass c);
bool is_firearm(ObjectClass c);

struct Detection {
  ObjectClass cls = ObjectClass::Human;
  BoundingBox box;
  double score = 1.0;
};

enum class PairLabel { GunHuman = 0, RifleHuman = 1, NoInteraction = 2 };

struct PairInstance {
  Detection human;
  Detection firearm;
  int human_index = -1;    // index into the scene's human detection list
  int firearm_index = -1;  // index into the scene's firearm detection list
  BoundingBox pbb;
  std::optional<PairLabel> label;

  FirearmClass firearm_class() const {
    return firearm.cls == ObjectClass::Gun ? FirearmClass::Gun : FirearmClass::Rifle;
  }
};

struct ScoredPair {
  PairInstance pair;
  double hold_prob = 0.0;   // class-matched association probability
  double final_score = 0.0;
};

// Ground-truth scene: boxes plus the carry relation.
struct GroundTruthScene {
  std::string id;
  std::string image_path;
  std::vector<BoundingBox> humans;
  std::vector<std::pair<ObjectClass, BoundingBox>> firearms;  // Gun or Rifle
  std::vector<std::pair<int, int>> carry_pairs;               // (human idx, firearm idx)
};

// All human x firearm combinations, human index major, firearm index minor.
std::vector<PairInstance> enumerate_pairs(const std::vector<Detection>& humans,
                                          const std::vector<Detection>& firearms);

// Positive iff both members match a GT carry pair at IoU > iou_thr with
// agreeing firearm class; everything else is NoInteraction. Detections with
// score <= score_thr are dropped before pairing.
std::vector<PairInstance> assign_training_labels(const std::vector<Detection>& humans,
                                                 const std::vector<Detection>& firearms,
                                                 const GroundTruthScene& gt, double iou_thr = 0.5,
                                                 double score_thr = 0.5);

ScoredPair score_pair(const PairInstance& pair, double hold_prob, bool include_human_score = false);

enum class MaxoutKey { HoldProb, FinalScore };

// Per firearm, keep only the highest-probability pair; the rest become
// NoInteraction with zeroed final_score (hold_prob kept for audit).
// Ties break toward the lowest human index.
std::vector<ScoredPair> maxout(std::vector<ScoredPair> scored, MaxoutKey key = MaxoutKey::HoldProb);

}  // namespace pairlock

#endif  // PAIRLOCK_PIPELINE_HPP
