#ifndef PAIRLOCK_SAMPLES_HPP
#define PAIRLOCK_SAMPLES_HPP

#include <vector>

#include "pairlock/imaging.hpp"
#include "pairlock/model.hpp"
#include "pairlock/pipeline.hpp"

namespace pairlock {

// Crops the pair's union box out of the scene, converts colour, resizes the
// shorter side to config.resize_target, and appends the attention channels.
AttentionStack assemble_pair_input(const Image& scene, const PairInstance& pair,
                                   const ModelConfig& config);

// Gaussian locality target matching assemble_pair_input's output geometry
// (firearm plane by class plus the human plane).
LocalityMap locality_target_for_pair(const PairInstance& pair, const ModelConfig& config,
                                     int out_w, int out_h);

// Requires pair.label to be set.
TrainSample make_train_sample(const Image& scene, const PairInstance& pair,
                              const ModelConfig& config);

// Labeled samples for one scene: detections are filtered/paired/labeled
// against the ground truth, then each pair is assembled.
std::vector<TrainSample> scene_train_samples(const Image& scene_img,
                                             const std::vector<Detection>& humans,
                                             const std::vector<Detection>& firearms,
                                             const GroundTruthScene& gt, const ModelConfig& config);

}  // namespace pairlock

#endif  // PAIRLOCK_SAMPLES_HPP
