#include "pairlock/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace pairlock {

MatchResult match_pairs(const std::vector<ScenePredictions>& predictions,
                        const std::vector<GroundTruthScene>& gt, double iou_thr) {
  std::map<std::string, const GroundTruthScene*> scenes;
  for (const GroundTruthScene& s : gt) scenes[s.id] = &s;

  MatchResult result;
  for (const GroundTruthScene& s : gt)
    for (const auto& [h, f] : s.carry_pairs) {
      (void)h;
      if (s.firearms[static_cast<size_t>(f)].first == ObjectClass::Gun)
        ++result.num_gt_gun;
      else
        ++result.num_gt_rifle;
    }

  struct Candidate {
    const ScoredPair* pair;
    const GroundTruthScene* scene;
    size_t scene_idx, pair_idx;
  };
  std::vector<Candidate> cands;
  for (size_t si = 0; si < predictions.size(); ++si) {
    const ScenePredictions& sp = predictions[si];
    auto it = scenes.find(sp.scene_id);
    if (it == scenes.end())
      throw std::invalid_argument("match_pairs: scene '" + sp.scene_id + "' absent from ground truth");
    for (size_t pi = 0; pi < sp.pairs.size(); ++pi) {
      const ScoredPair& p = sp.pairs[pi];
      if (p.pair.label == PairLabel::NoInteraction) continue;
      cands.push_back({&p, it->second, si, pi});
    }
  }
  // Descending score; deterministic tie-break on (scene, pair) position.
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.pair->final_score != b.pair->final_score) return a.pair->final_score > b.pair->final_score;
    if (a.scene_idx != b.scene_idx) return a.scene_idx < b.scene_idx;
    return a.pair_idx < b.pair_idx;
  });

  std::map<const GroundTruthScene*, std::vector<bool>> used;
  for (const Candidate& c : cands) {
    auto& flags = used[c.scene];
    if (flags.empty()) flags.assign(c.scene->carry_pairs.size(), false);
    const ObjectClass pred_cls = c.pair->pair.firearm.cls;
    int best = -1;
    double best_min_iou = iou_thr;
    for (size_t g = 0; g < c.scene->carry_pairs.size(); ++g) {
      if (flags[g]) continue;
      const auto& [gh, gf] = c.scene->carry_pairs[g];
      if (c.scene->firearms[static_cast<size_t>(gf)].first != pred_cls) continue;
      const double iou_h = iou(c.pair->pair.human.box, c.scene->humans[static_cast<size_t>(gh)]);
      const double iou_f = iou(c.pair->pair.firearm.box, c.scene->firearms[static_cast<size_t>(gf)].second);
      const double min_iou = std::min(iou_h, iou_f);
      if (min_iou > best_min_iou) {
        best_min_iou = min_iou;
        best = static_cast<int>(g);
      }
    }
    MatchedPrediction m;
    m.scene_id = c.scene->id;
    m.score = c.pair->final_score;
    m.cls = c.pair->pair.firearm_class();
    m.tp = best >= 0;
    if (best >= 0) flags[static_cast<size_t>(best)] = true;
    result.flags.push_back(m);
  }
  return result;
}

double average_precision(const std::vector<bool>& tp_flags, int num_gt, bool eleven_point) {
  if (num_gt < 0) throw std::invalid_argument("average_precision: negative num_gt");
  if (num_gt == 0) return 0.0;
  if (!eleven_point) {
    double ap = 0.0;
    int tp = 0;
    for (size_t i = 0; i < tp_flags.size(); ++i) {
      if (tp_flags[i]) {
        ++tp;
        ap += static_cast<double>(tp) / static_cast<double>(i + 1);
      }
    }
    return ap / num_gt;
  }
  // 11-point: mean of max precision at recall >= {0, 0.1, ..., 1.0}.
  std::vector<double> precisions, recalls;
  int tp = 0;
  for (size_t i = 0; i < tp_flags.size(); ++i) {
    if (tp_flags[i]) ++tp;
    precisions.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    recalls.push_back(static_cast<double>(tp) / num_gt);
  }
  double ap = 0.0;
  for (int r = 0; r <= 10; ++r) {
    const double rt = r / 10.0;
    double pmax = 0.0;
    for (size_t i = 0; i < recalls.size(); ++i)
      if (recalls[i] >= rt) pmax = std::max(pmax, precisions[i]);
    ap += pmax / 11.0;
  }
  return ap;
}

EvalReport evaluate_hold(const std::vector<ScenePredictions>& predictions,
                         const std::vector<GroundTruthScene>& gt, double iou_thr,
                         bool eleven_point) {
  const MatchResult match = match_pairs(predictions, gt, iou_thr);
  EvalReport r;
  r.num_gt_gun = match.num_gt_gun;
  r.num_gt_rifle = match.num_gt_rifle;

  std::vector<bool> gun_flags, rifle_flags, all_flags;
  for (const MatchedPrediction& m : match.flags) {
    all_flags.push_back(m.tp);
    if (m.cls == FirearmClass::Gun) {
      gun_flags.push_back(m.tp);
      m.tp ? ++r.tp_gun : ++r.fp_gun;
    } else {
      rifle_flags.push_back(m.tp);
      m.tp ? ++r.tp_rifle : ++r.fp_rifle;
    }
  }
  if (r.num_gt_gun > 0) r.ap_gun_hold = average_precision(gun_flags, r.num_gt_gun, eleven_point);
  if (r.num_gt_rifle > 0) r.ap_rifle_hold = average_precision(rifle_flags, r.num_gt_rifle, eleven_point);
  if (r.ap_gun_hold && r.ap_rifle_hold)
    r.ap_hold = 0.5 * (*r.ap_gun_hold + *r.ap_rifle_hold);
  else if (r.ap_gun_hold)
    r.ap_hold = r.ap_gun_hold;
  else if (r.ap_rifle_hold)
    r.ap_hold = r.ap_rifle_hold;
  if (r.num_gt_gun + r.num_gt_rifle > 0)
    r.ap_hold_pooled = average_precision(all_flags, r.num_gt_gun + r.num_gt_rifle, eleven_point);
  return r;
}

AccuracyReport carried_accuracy(const std::vector<CarriedPrediction>& predictions,
                                const std::vector<GroundTruthScene>& gt, bool carrier_aware) {
  std::map<std::pair<std::string, int>, const CarriedPrediction*> by_key;
  for (const CarriedPrediction& p : predictions) by_key[{p.scene_id, p.firearm_index}] = &p;

  AccuracyReport r;
  for (const GroundTruthScene& s : gt) {
    for (size_t f = 0; f < s.firearms.size(); ++f) {
      int gt_carrier = -1;
      for (const auto& [ch, cf] : s.carry_pairs)
        if (cf == static_cast<int>(f)) gt_carrier = ch;
      const bool gt_carried = gt_carrier >= 0;

      bool pred_carried = false;
      int pred_carrier = -1;
      auto it = by_key.find({s.id, static_cast<int>(f)});
      if (it != by_key.end()) {
        pred_carried = it->second->carried;
        pred_carrier = it->second->carrier_index;
      }

      bool correct = pred_carried == gt_carried;
      if (correct && carrier_aware && gt_carried) {
        correct = pred_carrier >= 0 && pred_carrier < static_cast<int>(s.humans.size()) &&
                  iou(s.humans[static_cast<size_t>(pred_carrier)],
                      s.humans[static_cast<size_t>(gt_carrier)]) > 0.5;
      }
      if (s.firearms[f].first == ObjectClass::Gun) {
        ++r.total_gun;
        if (correct) ++r.correct_gun;
      } else {
        ++r.total_rifle;
        if (correct) ++r.correct_rifle;
      }
    }
  }
  auto pct = [](int c, int t) { return t == 0 ? 100.0 : 100.0 * c / t; };
  r.accuracy_gun = pct(r.correct_gun, r.total_gun);
  r.accuracy_rifle = pct(r.correct_rifle, r.total_rifle);
  r.accuracy_overall = pct(r.correct_gun + r.correct_rifle, r.total_gun + r.total_rifle);
  return r;
}

std::string eval_report_to_json(const EvalReport& r) {
  nlohmann::json j;
  auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v)
      j[key] = *v;
    else
      j[key] = nullptr;
  };
  put("ap_gun_hold", r.ap_gun_hold);
  put("ap_rifle_hold", r.ap_rifle_hold);
  put("ap_hold", r.ap_hold);
  put("ap_hold_pooled", r.ap_hold_pooled);
  j["counts"] = {{"tp_gun", r.tp_gun},       {"fp_gun", r.fp_gun},
                 {"num_gt_gun", r.num_gt_gun}, {"tp_rifle", r.tp_rifle},
                 {"fp_rifle", r.fp_rifle},   {"num_gt_rifle", r.num_gt_rifle}};
  return j.dump(2);
}

namespace {

std::string fmt_ap(const std::optional<double>& v) {
  if (!v) return "   -  ";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%6.4f", *v);
  return buf;
}

}  // namespace

std::string eval_report_table(const EvalReport& with_maxout, const EvalReport& without_maxout) {
  std::ostringstream os;
  os << "            |  AP_Ghold  AP_Rhold  AP_hold\n";
  os << "------------+------------------------------\n";
  os << "no maxout   |   " << fmt_ap(without_maxout.ap_gun_hold) << "   " << fmt_ap(without_maxout.ap_rifle_hold)
     << "   " << fmt_ap(without_maxout.ap_hold) << "\n";
  os << "with maxout |   " << fmt_ap(with_maxout.ap_gun_hold) << "   " << fmt_ap(with_maxout.ap_rifle_hold)
     << "   " << fmt_ap(with_maxout.ap_hold) << "\n";
  return os.str();
}

std::string accuracy_report_table(const std::string& method, const AccuracyReport& r,
                                  bool carrier_aware) {
  std::ostringstream os;
  os << "Method | Carrier Id. |   Gun  |  Rifle | Overall\n";
  os << "-------+-------------+--------+--------+--------\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-6s |     %-3s     | %6.2f | %6.2f | %6.2f\n", method.c_str(),
                carrier_aware ? "yes" : "no", r.accuracy_gun, r.accuracy_rifle, r.accuracy_overall);
  os << buf;
  return os.str();
}

}  // namespace pairlock
