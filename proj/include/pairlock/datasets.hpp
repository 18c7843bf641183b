#ifndef PAIRLOCK_DATASETS_HPP
#define PAIRLOCK_DATASETS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pairlock/baselines.hpp"
#include "pairlock/evaluation.hpp"
#include "pairlock/pipeline.hpp"

namespace pairlock {

// All file schemas carry a top-level {"v": 1} version field and use the
// half-open [min, max) pixel box convention as [x0, y0, x1, y1] arrays.

std::vector<GroundTruthScene> load_annotations(const std::string& path);
void save_annotations(const std::string& path, const std::vector<GroundTruthScene>& scenes);

struct SceneDetections {
  std::string id;
  std::vector<Detection> detections;

  std::vector<Detection> humans() const;
  std::vector<Detection> firearms() const;
};

std::vector<SceneDetections> load_detections(const std::string& path);
void save_detections(const std::string& path, const std::vector<SceneDetections>& scenes);

enum class KeypointFrame { Image, Crop };

struct SceneKeypoints {
  std::string id;
  KeypointFrame frame = KeypointFrame::Image;
  std::optional<int> crop_ref;  // firearm index when frame == Crop
  std::vector<Keypoint> keypoints;
};

std::vector<SceneKeypoints> load_keypoints(const std::string& path);
void save_keypoints(const std::string& path, const std::vector<SceneKeypoints>& scenes);

// Scored-pair predictions as written by inference and read by evaluation.
std::vector<ScenePredictions> load_predictions(const std::string& path);
void save_predictions(const std::string& path, const std::vector<ScenePredictions>& scenes);

struct SynthConfig {
  int scene_count = 20;
  int image_size = 96;
  int humans_min = 1, humans_max = 2;
  int firearms_min = 1, firearms_max = 2;
  double carry_probability = 0.6;
  double gun_ratio = 0.5;  // gun vs rifle
  int clutter_count = 6;
  double noise_amplitude = 0.03;
  // Fraction of non-carried firearms placed overlapping a non-carrier (the
  // IoU-fooling hard cases); assigned by quota so the rate is exact.
  double hard_case_rate = 0.1;
  uint64_t seed = 0;

  void validate() const;
};

// Deterministic per seed. Writes one PPM per scene under out_dir/images/
// and annotations to out_dir/annotations.json; returns the records with
// image paths relative to out_dir.
std::vector<GroundTruthScene> generate_synthetic(const SynthConfig& cfg, const std::string& out_dir);

// Detection lists copied from GT boxes (score 1.0), for GT-box protocols.
std::vector<SceneDetections> detections_from_ground_truth(const std::vector<GroundTruthScene>& scenes);

}  // namespace pairlock

#endif  // PAIRLOCK_DATASETS_HPP
