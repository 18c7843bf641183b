#ifndef PAIRLOCK_EVALUATION_HPP
#define PAIRLOCK_EVALUATION_HPP

#include <optional>
#include <string>
#include <vector>

#include "pairlock/pipeline.hpp"

namespace pairlock {

struct ScenePredictions {
  std::string scene_id;
  std::vector<ScoredPair> pairs;
};

struct MatchedPrediction {
  std::string scene_id;
  double score = 0.0;
  FirearmClass cls = FirearmClass::Gun;
  bool tp = false;
};

struct MatchResult {
  std::vector<MatchedPrediction> flags;  // descending score order
  int num_gt_gun = 0;
  int num_gt_rifle = 0;
};

// Greedy dual-IoU matching in global descending score order. A prediction
// is TP iff an unmatched GT carry pair in its scene matches both members at
// IoU > iou_thr with an agreeing firearm class; on multiple candidates the
// highest min-IoU GT is taken.
MatchResult match_pairs(const std::vector<ScenePredictions>& predictions,
                        const std::vector<GroundTruthScene>& gt, double iou_thr = 0.5);

// All-point interpolated AP (sum of precision at each TP / num_gt); the
// 11-point variant is available for comparison with older protocols.
double average_precision(const std::vector<bool>& tp_flags, int num_gt, bool eleven_point = false);

struct EvalReport {
  std::optional<double> ap_gun_hold;
  std::optional<double> ap_rifle_hold;
  std::optional<double> ap_hold;         // mean of the defined per-class APs
  std::optional<double> ap_hold_pooled;  // single ranking over both classes
  int tp_gun = 0, fp_gun = 0, num_gt_gun = 0;
  int tp_rifle = 0, fp_rifle = 0, num_gt_rifle = 0;
};

EvalReport evaluate_hold(const std::vector<ScenePredictions>& predictions,
                         const std::vector<GroundTruthScene>& gt, double iou_thr = 0.5,
                         bool eleven_point = false);

// Per-firearm carried/not-carried decision against a GT scene (GT-box
// protocol: the boxes are the ground truth ones, only the decision and the
// carrier index come from the method under test).
struct CarriedPrediction {
  std::string scene_id;
  int firearm_index = -1;
  bool carried = false;
  int carrier_index = -1;  // into the scene's GT human list; -1 = none
};

struct AccuracyReport {
  double accuracy_gun = 0.0;      // percent; 0/0 counts as 100
  double accuracy_rifle = 0.0;
  double accuracy_overall = 0.0;
  int correct_gun = 0, total_gun = 0;
  int correct_rifle = 0, total_rifle = 0;
};

// Unpredicted firearms count as not-carried. With carrier_aware, a carried
// prediction is only correct when its carrier matches the GT carrier at
// IoU > 0.5.
AccuracyReport carried_accuracy(const std::vector<CarriedPrediction>& predictions,
                                const std::vector<GroundTruthScene>& gt, bool carrier_aware);

std::string eval_report_to_json(const EvalReport& report);
std::string eval_report_table(const EvalReport& with_maxout, const EvalReport& without_maxout);
std::string accuracy_report_table(const std::string& method, const AccuracyReport& report,
                                  bool carrier_aware);

}  // namespace pairlock

#endif  // PAIRLOCK_EVALUATION_HPP
