#include "pairlock/samples.hpp"

#include <stdexcept>

#include "pairlock/masks.hpp"

namespace pairlock {

namespace {

// Image-space box -> output-pixel coordinates local to the (resized) PBB.
BoundingBox to_local(const BoundingBox& box, const BoundingBox& pbb, int out_w, int out_h) {
  const BoundingBox clipped = intersect_box(box, pbb);
  const double sx = out_w / pbb.width();
  const double sy = out_h / pbb.height();
  return {(clipped.x_min - pbb.x_min) * sx, (clipped.y_min - pbb.y_min) * sy,
          (clipped.x_max - pbb.x_min) * sx, (clipped.y_max - pbb.y_min) * sy};
}

}  // namespace

AttentionStack assemble_pair_input(const Image& scene, const PairInstance& pair,
                                   const ModelConfig& config) {
  Image region = crop(scene, pair.pbb);
  region = convert_color(region, config.color_space);
  region = resize_shorter_side(region, config.resize_target);
  const auto masks = build_attention_channels(pair.pbb, pair.human.box, pair.firearm.box,
                                              pair.firearm_class(), region.width, region.height);
  return assemble_apbb(region, masks, config.attention_mode);
}

LocalityMap locality_target_for_pair(const PairInstance& pair, const ModelConfig& config,
                                     int out_w, int out_h) {
  (void)config;
  std::vector<std::pair<MapClass, BoundingBox>> present;
  const MapClass fc =
      pair.firearm_class() == FirearmClass::Gun ? MapClass::Gun : MapClass::Rifle;
  present.emplace_back(fc, to_local(pair.firearm.box, pair.pbb, out_w, out_h));
  present.emplace_back(MapClass::Human, to_local(pair.human.box, pair.pbb, out_w, out_h));
  return build_locality_target(out_w, out_h, present);
}

TrainSample make_train_sample(const Image& scene, const PairInstance& pair,
                              const ModelConfig& config) {
  if (!pair.label) throw std::invalid_argument("make_train_sample: pair has no label");
  TrainSample s;
  s.apbb = assemble_pair_input(scene, pair, config);
  s.label = static_cast<int>(*pair.label);
  if (config.locality_branch)
    s.g_map = locality_target_for_pair(pair, config, s.apbb.width, s.apbb.height);
  return s;
}

std::vector<TrainSample> scene_train_samples(const Image& scene_img,
                                             const std::vector<Detection>& humans,
                                             const std::vector<Detection>& firearms,
                                             const GroundTruthScene& gt,
                                             const ModelConfig& config) {
  std::vector<TrainSample> out;
  for (const PairInstance& pair : assign_training_labels(humans, firearms, gt))
    out.push_back(make_train_sample(scene_img, pair, config));
  return out;
}

}  // namespace pairlock
