#include "pairlock/evaluation.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"

using namespace pairlock;

namespace {

ScoredPair make_pred(const BoundingBox& human, ObjectClass fcls, const BoundingBox& firearm,
                     double score) {
  ScoredPair p;
  p.pair.human = {ObjectClass::Human, human, 1.0};
  p.pair.firearm = {fcls, firearm, 1.0};
  p.pair.pbb = union_box(human, firearm);
  p.pair.label = fcls == ObjectClass::Gun ? PairLabel::GunHuman : PairLabel::RifleHuman;
  p.hold_prob = score;
  p.final_score = score;
  return p;
}

// Independent oracle: greedy-match (same protocol, written separately), then
// integrate the PR curve as sum of (recall step) x precision.
double oracle_ap_for_class(const std::vector<ScenePredictions>& preds,
                           const std::vector<GroundTruthScene>& gt, ObjectClass cls) {
  struct Item {
    double score;
    size_t scene, pair;
  };
  std::vector<Item> items;
  for (size_t s = 0; s < preds.size(); ++s)
    for (size_t p = 0; p < preds[s].pairs.size(); ++p) {
      const ScoredPair& sp = preds[s].pairs[p];
      if (sp.pair.label == PairLabel::NoInteraction) continue;
      items.push_back({sp.final_score, s, p});
    }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.scene != b.scene) return a.scene < b.scene;
    return a.pair < b.pair;
  });

  std::map<std::string, const GroundTruthScene*> by_id;
  int num_gt = 0;
  for (const GroundTruthScene& s : gt) {
    by_id[s.id] = &s;
    for (const auto& [h, f] : s.carry_pairs)
      if (s.firearms[static_cast<size_t>(f)].first == cls) ++num_gt;
  }
  if (num_gt == 0) return -1.0;

  std::map<const GroundTruthScene*, std::vector<bool>> used;
  std::vector<bool> flags;
  for (const Item& it : items) {
    const ScoredPair& sp = preds[it.scene].pairs[it.pair];
    const GroundTruthScene* scene = by_id.at(preds[it.scene].scene_id);
    auto& u = used[scene];
    if (u.empty()) u.assign(scene->carry_pairs.size(), false);
    int best = -1;
    double best_min = 0.5;
    for (size_t g = 0; g < scene->carry_pairs.size(); ++g) {
      if (u[g]) continue;
      const auto& [gh, gf] = scene->carry_pairs[g];
      if (scene->firearms[static_cast<size_t>(gf)].first != sp.pair.firearm.cls) continue;
      const double mi = std::min(iou(sp.pair.human.box, scene->humans[static_cast<size_t>(gh)]),
                                 iou(sp.pair.firearm.box, scene->firearms[static_cast<size_t>(gf)].second));
      if (mi > best_min) {
        best_min = mi;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) u[static_cast<size_t>(best)] = true;
    if (sp.pair.firearm.cls == cls) flags.push_back(best >= 0);
  }

  double ap = 0.0;
  int tp = 0, seen = 0;
  double prev_recall = 0.0;
  for (bool f : flags) {
    ++seen;
    if (!f) continue;
    ++tp;
    const double recall = static_cast<double>(tp) / num_gt;
    const double precision = static_cast<double>(tp) / seen;
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

}  // namespace

TEST_CASE("average_precision examples") {
  CHECK(average_precision({true}, 1) == 1.0);
  CHECK(average_precision({false}, 1) == 0.0);
  CHECK(average_precision({true, false}, 2) == 0.5);
  CHECK(average_precision({}, 0) == 0.0);
  CHECK(average_precision({false, true}, 1) == 0.5);
  CHECK_THROWS_AS((void)average_precision({true}, -1), std::invalid_argument);
}

TEST_CASE("eleven point variant") {
  // single TP of one GT: precision 1 at every recall level
  CHECK(average_precision({true}, 1, true) == doctest::Approx(1.0).epsilon(1e-12));
  // [FP, TP] of one GT: p(r>=0)=0.5 ... all eleven levels see max precision 0.5
  CHECK(average_precision({false, true}, 1, true) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("match_pairs basics") {
  GroundTruthScene gt;
  gt.id = "a";
  gt.humans = {{0, 0, 10, 20}};
  gt.firearms = {{ObjectClass::Gun, {2, 2, 6, 6}}};
  gt.carry_pairs = {{0, 0}};

  ScenePredictions sp;
  sp.scene_id = "a";
  sp.pairs = {make_pred({0, 0, 10, 20}, ObjectClass::Gun, {2, 2, 6, 6}, 0.9)};
  const MatchResult exact = match_pairs({sp}, {gt});
  REQUIRE(exact.flags.size() == 1);
  CHECK(exact.flags[0].tp);
  CHECK(exact.num_gt_gun == 1);
  CHECK(exact.num_gt_rifle == 0);

  // firearm IoU below threshold -> FP
  sp.pairs = {make_pred({0, 0, 10, 20}, ObjectClass::Gun, {4, 4, 8, 8}, 0.9)};
  CHECK_FALSE(match_pairs({sp}, {gt}).flags[0].tp);

  // double prediction on one GT: higher score TP, other FP
  sp.pairs = {make_pred({0, 0, 10, 20}, ObjectClass::Gun, {2, 2, 6, 6}, 0.6),
              make_pred({0, 0, 10, 20}, ObjectClass::Gun, {2, 2, 6, 6}, 0.8)};
  const MatchResult dup = match_pairs({sp}, {gt});
  REQUIRE(dup.flags.size() == 2);
  CHECK(dup.flags[0].score == 0.8);
  CHECK(dup.flags[0].tp);
  CHECK_FALSE(dup.flags[1].tp);

  // unknown scene id -> error
  ScenePredictions bad;
  bad.scene_id = "nope";
  CHECK_THROWS_AS((void)match_pairs({bad}, {gt}), std::invalid_argument);
}

TEST_CASE("evaluate_hold per-class split") {
  GroundTruthScene gt;
  gt.id = "a";
  gt.humans = {{0, 0, 10, 20}};
  gt.firearms = {{ObjectClass::Gun, {2, 2, 6, 6}}};
  gt.carry_pairs = {{0, 0}};

  ScenePredictions sp;
  sp.scene_id = "a";
  sp.pairs = {make_pred({0, 0, 10, 20}, ObjectClass::Gun, {2, 2, 6, 6}, 0.9)};
  const EvalReport r = evaluate_hold({sp}, {gt});
  REQUIRE(r.ap_gun_hold.has_value());
  CHECK(*r.ap_gun_hold == 1.0);
  CHECK_FALSE(r.ap_rifle_hold.has_value());
  CHECK(*r.ap_hold == *r.ap_gun_hold);  // mean over defined classes only
  CHECK(r.tp_gun == 1);
  CHECK(r.fp_gun == 0);

  // empty predictions keep the GT counts
  const EvalReport empty = evaluate_hold({}, {gt});
  CHECK(empty.num_gt_gun == 1);
  CHECK(*empty.ap_gun_hold == 0.0);
}

TEST_CASE("evaluate_hold equals the brute-force oracle on randomized instances") {
  Rng rng(2024);
  for (int iter = 0; iter < 1000; ++iter) {
    std::vector<GroundTruthScene> gts;
    const int scenes = 1 + static_cast<int>(rng.below(3));
    for (int s = 0; s < scenes; ++s) {
      GroundTruthScene gt;
      gt.id = "s" + std::to_string(s);
      const int nh = 1 + static_cast<int>(rng.below(3));
      for (int h = 0; h < nh; ++h) {
        const double x = 40.0 * h;
        gt.humans.push_back({x, 0, x + 20, 40});
      }
      const int nf = static_cast<int>(rng.below(4));
      for (int f = 0; f < nf && static_cast<int>(gt.carry_pairs.size()) < 8; ++f) {
        const int carrier = static_cast<int>(rng.below(static_cast<uint64_t>(nh)));
        const double x = gt.humans[static_cast<size_t>(carrier)].x_min + rng.uniform(0, 8);
        gt.firearms.push_back({rng.uniform() < 0.5 ? ObjectClass::Gun : ObjectClass::Rifle,
                               {x, rng.uniform(0, 20), x + 8, rng.uniform(22, 40)}});
        if (rng.uniform() < 0.7) gt.carry_pairs.push_back({carrier, f});
      }
      gts.push_back(std::move(gt));
    }

    std::vector<ScenePredictions> preds;
    for (const GroundTruthScene& gt : gts) {
      ScenePredictions sp;
      sp.scene_id = gt.id;
      const int np = static_cast<int>(rng.below(8));
      for (int p = 0; p < np; ++p) {
        // jittered copies of random GT geometry plus pure noise
        BoundingBox h = gt.humans[rng.below(gt.humans.size())];
        ObjectClass cls = rng.uniform() < 0.5 ? ObjectClass::Gun : ObjectClass::Rifle;
        BoundingBox f{rng.uniform(0, 100), rng.uniform(0, 30), 0, 0};
        f.x_max = f.x_min + rng.uniform(4, 12);
        f.y_max = f.y_min + rng.uniform(4, 12);
        if (!gt.firearms.empty() && rng.uniform() < 0.6) {
          const auto& [gcls, gbox] = gt.firearms[rng.below(gt.firearms.size())];
          cls = rng.uniform() < 0.8 ? gcls : cls;
          const double jit = rng.uniform(0, 3);
          f = {gbox.x_min + jit, gbox.y_min, gbox.x_max + jit, gbox.y_max};
        }
        const double jh = rng.uniform(0, 6);
        h = {h.x_min + jh, h.y_min, h.x_max + jh, h.y_max};
        sp.pairs.push_back(make_pred(h, cls, f, rng.uniform()));
      }
      preds.push_back(std::move(sp));
    }

    const EvalReport r = evaluate_hold(preds, gts);
    const double og = oracle_ap_for_class(preds, gts, ObjectClass::Gun);
    const double orf = oracle_ap_for_class(preds, gts, ObjectClass::Rifle);
    if (og < 0.0) {
      CHECK_FALSE(r.ap_gun_hold.has_value());
    } else {
      REQUIRE(r.ap_gun_hold.has_value());
      CHECK(*r.ap_gun_hold == doctest::Approx(og).epsilon(1e-12));
    }
    if (orf < 0.0) {
      CHECK_FALSE(r.ap_rifle_hold.has_value());
    } else {
      REQUIRE(r.ap_rifle_hold.has_value());
      CHECK(*r.ap_rifle_hold == doctest::Approx(orf).epsilon(1e-12));
    }
    if (og >= 0.0 && orf >= 0.0)
      CHECK(*r.ap_hold == doctest::Approx(0.5 * (og + orf)).epsilon(1e-12));
  }
}

TEST_CASE("ap invariants") {
  Rng rng(5);
  for (int iter = 0; iter < 500; ++iter) {
    const int n = 1 + static_cast<int>(rng.below(12));
    std::vector<bool> flags;
    int tp = 0;
    for (int i = 0; i < n; ++i) {
      flags.push_back(rng.uniform() < 0.5);
      tp += flags.back();
    }
    const int num_gt = tp + static_cast<int>(rng.below(4));
    if (num_gt == 0) continue;
    const double ap = average_precision(flags, num_gt);
    CHECK(ap >= 0.0);
    CHECK(ap <= 1.0);
    // a trailing FP never increases AP
    std::vector<bool> more = flags;
    more.push_back(false);
    CHECK(average_precision(more, num_gt) <= ap + 1e-15);
  }
  // AP = 1 iff all TPs precede FPs and recall reaches 1
  CHECK(average_precision({true, true, false}, 2) == 1.0);
  CHECK(average_precision({true, false, true}, 2) < 1.0);
}

TEST_CASE("carried accuracy") {
  GroundTruthScene gt;
  gt.id = "a";
  gt.humans = {{0, 0, 10, 20}, {30, 0, 40, 20}};
  gt.firearms = {{ObjectClass::Gun, {2, 2, 6, 6}},
                 {ObjectClass::Gun, {31, 2, 35, 6}},
                 {ObjectClass::Rifle, {60, 2, 70, 5}}};
  gt.carry_pairs = {{0, 0}, {1, 1}};

  // all correct, carrier-aware
  std::vector<CarriedPrediction> good = {{"a", 0, true, 0}, {"a", 1, true, 1}, {"a", 2, false, -1}};
  const AccuracyReport r = carried_accuracy(good, {gt}, true);
  CHECK(r.accuracy_overall == 100.0);
  CHECK(r.accuracy_gun == 100.0);
  CHECK(r.accuracy_rifle == 100.0);

  // wrong carrier counts as incorrect only in carrier-aware mode
  std::vector<CarriedPrediction> swapped = {{"a", 0, true, 1}, {"a", 1, true, 1}, {"a", 2, false, -1}};
  CHECK(carried_accuracy(swapped, {gt}, true).accuracy_gun == 50.0);
  CHECK(carried_accuracy(swapped, {gt}, false).accuracy_gun == 100.0);

  // unpredicted firearms default to not-carried
  std::vector<CarriedPrediction> partial = {{"a", 0, true, 0}};
  const AccuracyReport p = carried_accuracy(partial, {gt}, false);
  CHECK(p.accuracy_gun == 50.0);   // firearm 1 defaulted to not-carried, wrong
  CHECK(p.accuracy_rifle == 100.0);
}

TEST_CASE("report serialization") {
  GroundTruthScene gt;
  gt.id = "a";
  gt.humans = {{0, 0, 10, 20}};
  gt.firearms = {{ObjectClass::Gun, {2, 2, 6, 6}}};
  gt.carry_pairs = {{0, 0}};
  ScenePredictions sp;
  sp.scene_id = "a";
  sp.pairs = {make_pred({0, 0, 10, 20}, ObjectClass::Gun, {2, 2, 6, 6}, 0.9)};
  const EvalReport r = evaluate_hold({sp}, {gt});
  const std::string j = eval_report_to_json(r);
  CHECK(j.find("ap_gun_hold") != std::string::npos);
  CHECK(j.find("num_gt_gun") != std::string::npos);
  const std::string table = eval_report_table(r, r);
  CHECK(table.find("AP_hold") != std::string::npos);
  CHECK(table.find("maxout") != std::string::npos);
}
