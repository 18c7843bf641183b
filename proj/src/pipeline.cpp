#include "pairlock/pipeline.hpp"

#include <map>
#include <stdexcept>

namespace pairlock {

const char* to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::Human: return "human";
    case ObjectClass::Gun: return "gun";
    case ObjectClass::Rifle: return "rifle";
  }
  return "?";
}

bool is_firearm(ObjectClass c) { return c != ObjectClass::Human; }

std::vector<PairInstance> enumerate_pairs(const std::vector<Detection>& humans,
                                          const std::vector<Detection>& firearms) {
  std::vector<PairInstance> pairs;
  pairs.reserve(humans.size() * firearms.size());
  for (size_t h = 0; h < humans.size(); ++h) {
    if (humans[h].cls != ObjectClass::Human)
      throw std::invalid_argument("enumerate_pairs: non-human in human list");
    for (size_t f = 0; f < firearms.size(); ++f) {
      if (!is_firearm(firearms[f].cls))
        throw std::invalid_argument("enumerate_pairs: human in firearm list");
      PairInstance p;
      p.human = humans[h];
      p.firearm = firearms[f];
      p.human_index = static_cast<int>(h);
      p.firearm_index = static_cast<int>(f);
      p.pbb = union_box(humans[h].box, firearms[f].box);
      pairs.push_back(p);
    }
  }
  return pairs;
}

namespace {

// Best GT index by IoU, or -1 when no GT exceeds thr (strict >).
int best_match(const BoundingBox& box, const std::vector<BoundingBox>& gts, double thr) {
  int best = -1;
  double best_iou = thr;
  for (size_t i = 0; i < gts.size(); ++i) {
    const double v = iou(box, gts[i]);
    if (v > best_iou) {
      best_iou = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

std::vector<PairInstance> assign_training_labels(const std::vector<Detection>& humans,
                                                 const std::vector<Detection>& firearms,
                                                 const GroundTruthScene& gt, double iou_thr,
                                                 double score_thr) {
  std::vector<Detection> kept_h, kept_f;
  for (const Detection& d : humans)
    if (d.score > score_thr) kept_h.push_back(d);
  for (const Detection& d : firearms)
    if (d.score > score_thr) kept_f.push_back(d);

  // Class-aware firearm matching: a detection only matches GT boxes of its
  // own class, so overlapping gun/rifle GT never steal each other's pairs.
  auto best_firearm_match = [&gt, iou_thr](const Detection& d) {
    int best = -1;
    double best_iou = iou_thr;
    for (size_t i = 0; i < gt.firearms.size(); ++i) {
      if (gt.firearms[i].first != d.cls) continue;
      const double v = iou(d.box, gt.firearms[i].second);
      if (v > best_iou) {
        best_iou = v;
        best = static_cast<int>(i);
      }
    }
    return best;
  };

  std::vector<PairInstance> pairs = enumerate_pairs(kept_h, kept_f);
  for (PairInstance& p : pairs) {
    p.label = PairLabel::NoInteraction;
    const int gh = best_match(p.human.box, gt.humans, iou_thr);
    const int gf = best_firearm_match(p.firearm);
    if (gh < 0 || gf < 0) continue;
    for (const auto& [ch, cf] : gt.carry_pairs) {
      if (ch == gh && cf == gf) {
        p.label = p.firearm.cls == ObjectClass::Gun ? PairLabel::GunHuman : PairLabel::RifleHuman;
        break;
      }
    }
  }
  return pairs;
}

ScoredPair score_pair(const PairInstance& pair, double hold_prob, bool include_human_score) {
  if (hold_prob < 0.0 || hold_prob > 1.0) throw std::invalid_argument("score_pair: hold_prob out of range");
  ScoredPair s;
  s.pair = pair;
  s.hold_prob = hold_prob;
  s.final_score = pair.firearm.score * hold_prob;
  if (include_human_score) s.final_score *= pair.human.score;
  return s;
}

std::vector<ScoredPair> maxout(std::vector<ScoredPair> scored, MaxoutKey key) {
  // Winner per firearm identity.
  std::map<int, size_t> winner;
  auto value = [key](const ScoredPair& s) {
    return key == MaxoutKey::HoldProb ? s.hold_prob : s.final_score;
  };
  for (size_t i = 0; i < scored.size(); ++i) {
    const ScoredPair& s = scored[i];
    if (s.pair.label == PairLabel::NoInteraction) continue;
    auto it = winner.find(s.pair.firearm_index);
    if (it == winner.end()) {
      winner[s.pair.firearm_index] = i;
      continue;
    }
    const ScoredPair& cur = scored[it->second];
    if (value(s) > value(cur) ||
        (value(s) == value(cur) && s.pair.human_index < cur.pair.human_index)) {
      it->second = i;
    }
  }
  for (size_t i = 0; i < scored.size(); ++i) {
    ScoredPair& s = scored[i];
    if (s.pair.label == PairLabel::NoInteraction) continue;
    auto it = winner.find(s.pair.firearm_index);
    if (it != winner.end() && it->second != i) {
      s.pair.label = PairLabel::NoInteraction;
      s.final_score = 0.0;  // hold_prob retained for audit
    }
  }
  return scored;
}

}  // namespace pairlock
