#include "pairlock/datasets.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "pairlock/imaging.hpp"

using namespace pairlock;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("pairlock_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string write_text(const TempDir& dir, const std::string& name, const std::string& text) {
  const std::string p = dir.file(name);
  std::ofstream f(p);
  f << text;
  return p;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

GroundTruthScene sample_scene() {
  GroundTruthScene s;
  s.id = "s0";
  s.image_path = "images/s0.ppm";
  s.humans = {{0, 0, 10, 20}, {30, 0, 40, 20}};
  s.firearms = {{ObjectClass::Gun, {2, 2, 6, 6}}, {ObjectClass::Rifle, {50, 1, 60, 4}}};
  s.carry_pairs = {{0, 0}};
  return s;
}

}  // namespace

TEST_CASE("annotations round trip") {
  TempDir dir("ann");
  const std::string p = dir.file("ann.json");
  save_annotations(p, {sample_scene()});
  const auto back = load_annotations(p);
  REQUIRE(back.size() == 1);
  CHECK(back[0].id == "s0");
  CHECK(back[0].image_path == "images/s0.ppm");
  CHECK(back[0].humans.size() == 2);
  CHECK(back[0].humans[1].x_min == 30);
  CHECK(back[0].firearms[1].first == ObjectClass::Rifle);
  CHECK(back[0].firearms[1].second.x_max == 60);
  CHECK(back[0].carry_pairs == std::vector<std::pair<int, int>>{{0, 0}});
}

TEST_CASE("annotation validation errors are specific") {
  TempDir dir("annerr");
  // malformed JSON
  CHECK_THROWS_WITH_AS((void)load_annotations(write_text(dir, "bad.json", "{not json")),
                       doctest::Contains("malformed JSON"), std::invalid_argument);
  // missing schema version
  CHECK_THROWS_WITH_AS((void)load_annotations(write_text(dir, "nov.json", R"({"scenes": []})")),
                       doctest::Contains("schema version"), std::invalid_argument);
  // carry index out of range names the scene
  const std::string oob = R"({"v":1,"scenes":[{"id":"sx","humans":[[0,0,5,5]],
      "firearms":[{"class":"gun","box":[1,1,2,2]}],"carry_pairs":[[1,0]]}]})";
  CHECK_THROWS_WITH_AS((void)load_annotations(write_text(dir, "oob.json", oob)),
                       doctest::Contains("'sx'"), std::invalid_argument);
  // one firearm in two carry pairs
  const std::string dup = R"({"v":1,"scenes":[{"id":"sd","humans":[[0,0,5,5],[9,0,14,5]],
      "firearms":[{"class":"gun","box":[1,1,2,2]}],"carry_pairs":[[0,0],[1,0]]}]})";
  CHECK_THROWS_WITH_AS((void)load_annotations(write_text(dir, "dup.json", dup)),
                       doctest::Contains("two carry pairs"), std::invalid_argument);
  // unknown class
  const std::string cls = R"({"v":1,"scenes":[{"id":"sc","humans":[],
      "firearms":[{"class":"sword","box":[1,1,2,2]}],"carry_pairs":[]}]})";
  CHECK_THROWS_WITH_AS((void)load_annotations(write_text(dir, "cls.json", cls)),
                       doctest::Contains("unknown class 'sword'"), std::invalid_argument);
  // inverted box
  const std::string inv = R"({"v":1,"scenes":[{"id":"si","humans":[[5,0,0,5]],
      "firearms":[],"carry_pairs":[]}]})";
  CHECK_THROWS_WITH_AS((void)load_annotations(write_text(dir, "inv.json", inv)),
                       doctest::Contains("invalid box"), std::invalid_argument);
  // missing file
  CHECK_THROWS_AS((void)load_annotations(dir.file("absent.json")), std::runtime_error);
}

TEST_CASE("class aliases accepted on load") {
  TempDir dir("alias");
  const std::string text = R"({"v":1,"scenes":[{"id":"a","detections":[
      {"class":"person","box":[0,0,5,9],"score":0.9},
      {"class":"pistol","box":[1,1,2,2],"score":0.8},
      {"class":"handgun","box":[3,1,4,2],"score":0.7},
      {"class":"rifle","box":[0,6,5,7],"score":0.6}]}]})";
  const auto scenes = load_detections(write_text(dir, "det.json", text));
  REQUIRE(scenes.size() == 1);
  CHECK(scenes[0].humans().size() == 1);
  CHECK(scenes[0].firearms().size() == 3);
  CHECK(scenes[0].detections[1].cls == ObjectClass::Gun);
  CHECK(scenes[0].detections[2].cls == ObjectClass::Gun);
  CHECK(scenes[0].detections[3].cls == ObjectClass::Rifle);
}

TEST_CASE("detections round trip and score range check") {
  TempDir dir("det");
  SceneDetections s;
  s.id = "d";
  s.detections = {{ObjectClass::Human, {0, 0, 5, 9}, 0.75}, {ObjectClass::Gun, {1, 1, 2, 2}, 1.0}};
  const std::string p = dir.file("det.json");
  save_detections(p, {s});
  const auto back = load_detections(p);
  CHECK(back[0].detections[0].score == 0.75);
  CHECK(back[0].detections[1].cls == ObjectClass::Gun);

  const std::string bad = R"({"v":1,"scenes":[{"id":"d","detections":[
      {"class":"gun","box":[1,1,2,2],"score":1.5}]}]})";
  CHECK_THROWS_WITH_AS((void)load_detections(write_text(dir, "bad.json", bad)),
                       doctest::Contains("outside [0,1]"), std::invalid_argument);
}

TEST_CASE("keypoints round trip, frames, and validation") {
  TempDir dir("kp");
  SceneKeypoints s;
  s.id = "k";
  s.frame = KeypointFrame::Crop;
  s.crop_ref = 2;
  s.keypoints = {{1.5, 2.5, 0.9, KeypointKind::Hand}, {3.0, 4.0, 0.4, KeypointKind::Other}};
  const std::string p = dir.file("kp.json");
  save_keypoints(p, {s});
  const auto back = load_keypoints(p);
  REQUIRE(back.size() == 1);
  CHECK(back[0].frame == KeypointFrame::Crop);
  CHECK(back[0].crop_ref == 2);
  CHECK(back[0].keypoints[0].kind == KeypointKind::Hand);
  CHECK(back[0].keypoints[1].confidence == 0.4);

  // crop frame without crop_ref
  const std::string noref = R"({"v":1,"scenes":[{"id":"k","frame":"crop","keypoints":[]}]})";
  CHECK_THROWS_WITH_AS((void)load_keypoints(write_text(dir, "noref.json", noref)),
                       doctest::Contains("crop_ref"), std::invalid_argument);
  const std::string badframe = R"({"v":1,"scenes":[{"id":"k","frame":"world","keypoints":[]}]})";
  CHECK_THROWS_WITH_AS((void)load_keypoints(write_text(dir, "badframe.json", badframe)),
                       doctest::Contains("frame"), std::invalid_argument);
  const std::string badkind = R"({"v":1,"scenes":[{"id":"k","frame":"image",
      "keypoints":[{"x":1,"y":1,"confidence":0.5,"kind":"elbow"}]}]})";
  CHECK_THROWS_WITH_AS((void)load_keypoints(write_text(dir, "badkind.json", badkind)),
                       doctest::Contains("elbow"), std::invalid_argument);
}

TEST_CASE("predictions round trip") {
  TempDir dir("pred");
  ScenePredictions s;
  s.scene_id = "p";
  ScoredPair sp;
  sp.pair.human = {ObjectClass::Human, {0, 0, 10, 20}, 1.0};
  sp.pair.firearm = {ObjectClass::Rifle, {2, 2, 8, 4}, 1.0};
  sp.pair.human_index = 0;
  sp.pair.firearm_index = 1;
  sp.pair.pbb = union_box(sp.pair.human.box, sp.pair.firearm.box);
  sp.pair.label = PairLabel::RifleHuman;
  sp.hold_prob = 0.625;
  sp.final_score = 0.5;
  s.pairs = {sp};
  const std::string p = dir.file("pred.json");
  save_predictions(p, {s});
  const auto back = load_predictions(p);
  REQUIRE(back.size() == 1);
  REQUIRE(back[0].pairs.size() == 1);
  const ScoredPair& b = back[0].pairs[0];
  CHECK(b.pair.label == PairLabel::RifleHuman);
  CHECK(b.pair.firearm_index == 1);
  CHECK(b.hold_prob == 0.625);
  CHECK(b.final_score == 0.5);
  CHECK(b.pair.pbb.x_max == 10);

  const std::string badlabel = R"({"v":1,"scenes":[{"id":"p","pairs":[
      {"human_index":0,"firearm_index":0,"human_box":[0,0,1,1],"firearm_box":[0,0,1,1],
       "firearm_class":"gun","label":"friendship","hold_prob":0.5,"final_score":0.5}]}]})";
  CHECK_THROWS_WITH_AS((void)load_predictions(write_text(dir, "bad.json", badlabel)),
                       doctest::Contains("friendship"), std::invalid_argument);
}

TEST_CASE("synthetic generation is deterministic per seed") {
  TempDir a("syn_a"), b("syn_b"), c("syn_c");
  SynthConfig cfg;
  cfg.scene_count = 4;
  cfg.image_size = 64;
  cfg.seed = 11;
  const auto sa = generate_synthetic(cfg, a.path.string());
  const auto sb = generate_synthetic(cfg, b.path.string());
  cfg.seed = 12;
  const auto sc = generate_synthetic(cfg, c.path.string());

  CHECK(slurp(a.file("annotations.json")) == slurp(b.file("annotations.json")));
  CHECK(slurp(a.file("annotations.json")) != slurp(c.file("annotations.json")));
  REQUIRE(sa.size() == 4);
  for (size_t i = 0; i < sa.size(); ++i) {
    CHECK(slurp((a.path / sa[i].image_path).string()) == slurp((b.path / sb[i].image_path).string()));
  }
}

TEST_CASE("synthetic geometry invariants") {
  TempDir dir("syn_inv");
  SynthConfig cfg;
  cfg.scene_count = 20;
  cfg.image_size = 96;
  cfg.humans_max = 3;
  cfg.firearms_max = 2;
  cfg.hard_case_rate = 0.3;
  cfg.seed = 5;
  const auto scenes = generate_synthetic(cfg, dir.path.string());
  REQUIRE(scenes.size() == 20);
  int hard_total = 0, noncarried_total = 0;
  for (const GroundTruthScene& s : scenes) {
    const Image img = read_pnm((dir.path / s.image_path).string());
    CHECK(img.width == 96);
    CHECK(img.height == 96);
    // humans pairwise disjoint and in frame
    for (size_t i = 0; i < s.humans.size(); ++i) {
      CHECK(s.humans[i].x_min >= 0);
      CHECK(s.humans[i].y_max <= 96);
      for (size_t j = i + 1; j < s.humans.size(); ++j) CHECK(iou(s.humans[i], s.humans[j]) == 0.0);
    }
    std::set<int> carried;
    for (const auto& [h, f] : s.carry_pairs) {
      carried.insert(f);
      // carried firearms sit fully inside their carrier with a large
      // area share, so box-overlap association can recover them
      const BoundingBox& hu = s.humans[static_cast<size_t>(h)];
      const BoundingBox& fb = s.firearms[static_cast<size_t>(f)].second;
      CHECK(intersect_box(fb, hu).x_min == fb.x_min);
      CHECK(area(intersect_box(fb, hu)) == doctest::Approx(area(fb)));
      CHECK(area(fb) / area(hu) >= 0.58);
      CHECK(iou(fb, hu) >= 0.5);
    }
    for (size_t f = 0; f < s.firearms.size(); ++f) {
      if (carried.count(static_cast<int>(f))) continue;
      // non-carried: either an IoU-fooling hard case inside some human or
      // well clear of every human (gap >= half the human's width)
      bool inside = false, far = true;
      for (const BoundingBox& hu : s.humans) {
        const BoundingBox& fb = s.firearms[f].second;
        if (area(intersect_box(fb, hu)) == doctest::Approx(area(fb))) inside = true;
        const double gx = std::max({0.0, hu.x_min - fb.x_max, fb.x_min - hu.x_max});
        const double gy = std::max({0.0, hu.y_min - fb.y_max, fb.y_min - hu.y_max});
        if (std::max(gx, gy) < 0.5 * hu.width()) far = false;
      }
      CHECK((inside || far));
      if (inside) ++hard_total;
      ++noncarried_total;
    }
  }
  // the quota keeps the realized hard-case rate at or below the configured one
  CHECK(hard_total <= cfg.hard_case_rate * noncarried_total + 1e-9);
}

TEST_CASE("carry_probability one carries every firearm up to host capacity") {
  TempDir dir("syn_all");
  SynthConfig cfg;
  cfg.scene_count = 6;
  cfg.image_size = 64;
  cfg.carry_probability = 1.0;
  cfg.seed = 3;
  // a host can hold only one firearm, so the carried count saturates at
  // the human count
  const auto scenes = generate_synthetic(cfg, dir.path.string());
  for (const GroundTruthScene& s : scenes)
    CHECK(s.carry_pairs.size() == std::min(s.firearms.size(), s.humans.size()));
}

TEST_CASE("synth config validation") {
  SynthConfig bad;
  bad.scene_count = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  SynthConfig bad2;
  bad2.image_size = 16;
  CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
  SynthConfig bad3;
  bad3.carry_probability = 1.5;
  CHECK_THROWS_AS(bad3.validate(), std::invalid_argument);
  SynthConfig bad4;
  bad4.humans_min = 2;
  bad4.humans_max = 1;
  CHECK_THROWS_AS(bad4.validate(), std::invalid_argument);
}

TEST_CASE("detections_from_ground_truth copies boxes at score one") {
  const auto dets = detections_from_ground_truth({sample_scene()});
  REQUIRE(dets.size() == 1);
  REQUIRE(dets[0].detections.size() == 4);
  CHECK(dets[0].id == "s0");
  CHECK(dets[0].humans().size() == 2);
  CHECK(dets[0].firearms().size() == 2);
  for (const Detection& d : dets[0].detections) CHECK(d.score == 1.0);
  CHECK(dets[0].detections[3].cls == ObjectClass::Rifle);
}
