#include "pairlock/datasets.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "pairlock/imaging.hpp"
#include "pairlock/rng.hpp"

namespace pairlock {

namespace {

using nlohmann::json;

json box_to_json(const BoundingBox& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

BoundingBox box_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4)
    throw std::invalid_argument(where + ": box must be [x0, y0, x1, y1]");
  BoundingBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.valid()) throw std::invalid_argument(where + ": invalid box");
  return b;
}

ObjectClass class_from_string(const std::string& s, const std::string& where) {
  // Alias table for common detector label vocabularies.
  if (s == "human" || s == "person") return ObjectClass::Human;
  if (s == "gun" || s == "pistol" || s == "handgun") return ObjectClass::Gun;
  if (s == "rifle") return ObjectClass::Rifle;
  throw std::invalid_argument(where + ": unknown class '" + s + "'");
}

json load_versioned(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": malformed JSON: " + e.what());
  }
  if (!j.contains("v") || j["v"].get<int>() != 1)
    throw std::invalid_argument(path + ": missing or unsupported schema version (need \"v\": 1)");
  return j;
}

void dump_to(const std::string& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << j.dump(2) << "\n";
}

double checked_unit(double v, const std::string& where) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(where + ": value " + std::to_string(v) + " outside [0,1]");
  return v;
}

}  // namespace

std::vector<GroundTruthScene> load_annotations(const std::string& path) {
  const json j = load_versioned(path);
  std::vector<GroundTruthScene> scenes;
  for (const json& js : j.at("scenes")) {
    GroundTruthScene s;
    s.id = js.at("id").get<std::string>();
    const std::string where = path + " scene '" + s.id + "'";
    if (js.contains("image")) s.image_path = js["image"].get<std::string>();
    for (const json& hb : js.at("humans")) s.humans.push_back(box_from_json(hb, where));
    for (const json& fb : js.at("firearms")) {
      const ObjectClass cls = class_from_string(fb.at("class").get<std::string>(), where);
      if (!is_firearm(cls)) throw std::invalid_argument(where + ": firearm entry with class human");
      s.firearms.emplace_back(cls, box_from_json(fb.at("box"), where));
    }
    std::set<int> carried;
    for (const json& cp : js.at("carry_pairs")) {
      const int h = cp.at(0).get<int>();
      const int f = cp.at(1).get<int>();
      if (h < 0 || h >= static_cast<int>(s.humans.size()))
        throw std::invalid_argument(where + ": carry pair human index " + std::to_string(h) + " out of range");
      if (f < 0 || f >= static_cast<int>(s.firearms.size()))
        throw std::invalid_argument(where + ": carry pair firearm index " + std::to_string(f) + " out of range");
      if (!carried.insert(f).second)
        throw std::invalid_argument(where + ": firearm " + std::to_string(f) + " in two carry pairs");
      s.carry_pairs.emplace_back(h, f);
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

void save_annotations(const std::string& path, const std::vector<GroundTruthScene>& scenes) {
  json j;
  j["v"] = 1;
  j["scenes"] = json::array();
  for (const GroundTruthScene& s : scenes) {
    json js;
    js["id"] = s.id;
    js["image"] = s.image_path;
    js["humans"] = json::array();
    for (const BoundingBox& b : s.humans) js["humans"].push_back(box_to_json(b));
    js["firearms"] = json::array();
    for (const auto& [cls, box] : s.firearms)
      js["firearms"].push_back({{"class", to_string(cls)}, {"box", box_to_json(box)}});
    js["carry_pairs"] = json::array();
    for (const auto& [h, f] : s.carry_pairs) js["carry_pairs"].push_back({h, f});
    j["scenes"].push_back(std::move(js));
  }
  dump_to(path, j);
}

std::vector<Detection> SceneDetections::humans() const {
  std::vector<Detection> out;
  for (const Detection& d : detections)
    if (d.cls == ObjectClass::Human) out.push_back(d);
  return out;
}

std::vector<Detection> SceneDetections::firearms() const {
  std::vector<Detection> out;
  for (const Detection& d : detections)
    if (is_firearm(d.cls)) out.push_back(d);
  return out;
}

std::vector<SceneDetections> load_detections(const std::string& path) {
  const json j = load_versioned(path);
  std::vector<SceneDetections> scenes;
  for (const json& js : j.at("scenes")) {
    SceneDetections s;
    s.id = js.at("id").get<std::string>();
    const std::string where = path + " scene '" + s.id + "'";
    for (const json& jd : js.at("detections")) {
      Detection d;
      d.cls = class_from_string(jd.at("class").get<std::string>(), where);
      d.box = box_from_json(jd.at("box"), where);
      d.score = checked_unit(jd.at("score").get<double>(), where + " score");
      s.detections.push_back(d);
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

void save_detections(const std::string& path, const std::vector<SceneDetections>& scenes) {
  json j;
  j["v"] = 1;
  j["scenes"] = json::array();
  for (const SceneDetections& s : scenes) {
    json js;
    js["id"] = s.id;
    js["detections"] = json::array();
    for (const Detection& d : s.detections)
      js["detections"].push_back(
          {{"class", to_string(d.cls)}, {"box", box_to_json(d.box)}, {"score", d.score}});
    j["scenes"].push_back(std::move(js));
  }
  dump_to(path, j);
}

std::vector<SceneKeypoints> load_keypoints(const std::string& path) {
  const json j = load_versioned(path);
  std::vector<SceneKeypoints> scenes;
  for (const json& js : j.at("scenes")) {
    SceneKeypoints s;
    s.id = js.at("id").get<std::string>();
    const std::string where = path + " scene '" + s.id + "'";
    const std::string frame = js.at("frame").get<std::string>();
    if (frame == "image")
      s.frame = KeypointFrame::Image;
    else if (frame == "crop")
      s.frame = KeypointFrame::Crop;
    else
      throw std::invalid_argument(where + ": frame must be 'image' or 'crop'");
    if (js.contains("crop_ref") && !js["crop_ref"].is_null()) s.crop_ref = js["crop_ref"].get<int>();
    if (s.frame == KeypointFrame::Crop && !s.crop_ref)
      throw std::invalid_argument(where + ": crop frame requires crop_ref");
    for (const json& jk : js.at("keypoints")) {
      Keypoint k;
      k.x = jk.at("x").get<double>();
      k.y = jk.at("y").get<double>();
      k.confidence = checked_unit(jk.at("confidence").get<double>(), where + " confidence");
      const std::string kind = jk.at("kind").get<std::string>();
      if (kind == "hand")
        k.kind = KeypointKind::Hand;
      else if (kind == "other")
        k.kind = KeypointKind::Other;
      else
        throw std::invalid_argument(where + ": unknown keypoint kind '" + kind + "'");
      s.keypoints.push_back(k);
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

void save_keypoints(const std::string& path, const std::vector<SceneKeypoints>& scenes) {
  json j;
  j["v"] = 1;
  j["scenes"] = json::array();
  for (const SceneKeypoints& s : scenes) {
    json js;
    js["id"] = s.id;
    js["frame"] = s.frame == KeypointFrame::Image ? "image" : "crop";
    if (s.crop_ref)
      js["crop_ref"] = *s.crop_ref;
    else
      js["crop_ref"] = nullptr;
    js["keypoints"] = json::array();
    for (const Keypoint& k : s.keypoints)
      js["keypoints"].push_back({{"x", k.x},
                                 {"y", k.y},
                                 {"confidence", k.confidence},
                                 {"kind", k.kind == KeypointKind::Hand ? "hand" : "other"}});
    j["scenes"].push_back(std::move(js));
  }
  dump_to(path, j);
}

std::vector<ScenePredictions> load_predictions(const std::string& path) {
  const json j = load_versioned(path);
  std::vector<ScenePredictions> scenes;
  for (const json& js : j.at("scenes")) {
    ScenePredictions s;
    s.scene_id = js.at("id").get<std::string>();
    const std::string where = path + " scene '" + s.scene_id + "'";
    for (const json& jp : js.at("pairs")) {
      ScoredPair p;
      p.pair.human_index = jp.at("human_index").get<int>();
      p.pair.firearm_index = jp.at("firearm_index").get<int>();
      p.pair.human.cls = ObjectClass::Human;
      p.pair.human.box = box_from_json(jp.at("human_box"), where);
      p.pair.firearm.cls = class_from_string(jp.at("firearm_class").get<std::string>(), where);
      if (!is_firearm(p.pair.firearm.cls)) throw std::invalid_argument(where + ": pair firearm class");
      p.pair.firearm.box = box_from_json(jp.at("firearm_box"), where);
      p.pair.pbb = union_box(p.pair.human.box, p.pair.firearm.box);
      const std::string label = jp.at("label").get<std::string>();
      if (label == "gun-human")
        p.pair.label = PairLabel::GunHuman;
      else if (label == "rifle-human")
        p.pair.label = PairLabel::RifleHuman;
      else if (label == "no-interaction")
        p.pair.label = PairLabel::NoInteraction;
      else
        throw std::invalid_argument(where + ": unknown pair label '" + label + "'");
      p.hold_prob = checked_unit(jp.at("hold_prob").get<double>(), where + " hold_prob");
      p.final_score = checked_unit(jp.at("final_score").get<double>(), where + " final_score");
      s.pairs.push_back(std::move(p));
    }
    scenes.push_back(std::move(s));
  }
  return scenes;
}

void save_predictions(const std::string& path, const std::vector<ScenePredictions>& scenes) {
  json j;
  j["v"] = 1;
  j["scenes"] = json::array();
  for (const ScenePredictions& s : scenes) {
    json js;
    js["id"] = s.scene_id;
    js["pairs"] = json::array();
    for (const ScoredPair& p : s.pairs) {
      const char* label = "no-interaction";
      if (p.pair.label == PairLabel::GunHuman) label = "gun-human";
      if (p.pair.label == PairLabel::RifleHuman) label = "rifle-human";
      js["pairs"].push_back({{"human_index", p.pair.human_index},
                             {"firearm_index", p.pair.firearm_index},
                             {"human_box", box_to_json(p.pair.human.box)},
                             {"firearm_box", box_to_json(p.pair.firearm.box)},
                             {"firearm_class", to_string(p.pair.firearm.cls)},
                             {"label", label},
                             {"hold_prob", p.hold_prob},
                             {"final_score", p.final_score}});
    }
    j["scenes"].push_back(std::move(js));
  }
  dump_to(path, j);
}

void SynthConfig::validate() const {
  if (scene_count < 1) throw std::invalid_argument("SynthConfig: scene_count < 1");
  if (image_size < 48) throw std::invalid_argument("SynthConfig: image_size < 48");
  if (humans_min < 1 || humans_max < humans_min) throw std::invalid_argument("SynthConfig: bad humans range");
  if (firearms_min < 0 || firearms_max < firearms_min)
    throw std::invalid_argument("SynthConfig: bad firearms range");
  for (double p : {carry_probability, gun_ratio, hard_case_rate})
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("SynthConfig: probability outside [0,1]");
  if (noise_amplitude < 0.0 || clutter_count < 0) throw std::invalid_argument("SynthConfig: bad noise/clutter");
}

namespace {

struct IntBox {
  int x0, y0, x1, y1;  // half-open

  BoundingBox to_bbox() const {
    return {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1),
            static_cast<double>(y1)};
  }
  int w() const { return x1 - x0; }
  int h() const { return y1 - y0; }
};

bool boxes_overlap(const IntBox& a, const IntBox& b) {
  return a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1;
}

// Chebyshev gap between boxes (0 when touching or overlapping).
double box_gap(const IntBox& a, const IntBox& b) {
  const double dx = std::max({0, a.x0 - b.x1, b.x0 - a.x1});
  const double dy = std::max({0, a.y0 - b.y1, b.y0 - a.y1});
  return std::max(dx, dy);
}

void fill_rect(Image& img, const IntBox& b, double r, double g, double bl) {
  for (int y = std::max(0, b.y0); y < std::min(img.height, b.y1); ++y)
    for (int x = std::max(0, b.x0); x < std::min(img.width, b.x1); ++x) {
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = bl;
    }
}

struct PlacedFirearm {
  IntBox box;
  ObjectClass cls = ObjectClass::Gun;
  int carrier = -1;  // -1 = not carried
  bool hard_case = false;
};

}  // namespace

std::vector<GroundTruthScene> generate_synthetic(const SynthConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "images");

  std::vector<GroundTruthScene> scenes;
  int noncarried_seen = 0, hard_emitted = 0;

  // Rejection sampling can dead-end (e.g. three large humans drawn into a
  // small frame), so each scene gets a bounded number of fresh attempts on
  // independent derived streams; the result stays deterministic per seed.
  constexpr int kSceneRetries = 64;

  for (int scene_idx = 0; scene_idx < cfg.scene_count; ++scene_idx) {
    const int saved_noncarried = noncarried_seen, saved_hard = hard_emitted;
    int scene_try = 0;
  retry_scene:
    noncarried_seen = saved_noncarried;
    hard_emitted = saved_hard;
    Rng rng = Rng::derive(cfg.seed,
                          static_cast<uint64_t>(scene_idx) * kSceneRetries +
                              static_cast<uint64_t>(scene_try));
    const int S = cfg.image_size;
    Image img = Image::make(S, S, 3, ColorSpace::RGB, 0.25);

    // Clutter first; foreground objects draw over it.
    for (int i = 0; i < cfg.clutter_count; ++i) {
      const int w = 4 + static_cast<int>(rng.below(static_cast<uint64_t>(S / 4)));
      const int h = 4 + static_cast<int>(rng.below(static_cast<uint64_t>(S / 4)));
      const int x = static_cast<int>(rng.below(static_cast<uint64_t>(S - w)));
      const int y = static_cast<int>(rng.below(static_cast<uint64_t>(S - h)));
      fill_rect(img, {x, y, x + w, y + h}, rng.uniform(), rng.uniform(), rng.uniform());
    }

    // Humans: tall striped rectangles, mutually non-overlapping.
    const int n_h = cfg.humans_min + static_cast<int>(rng.below(static_cast<uint64_t>(
                                          cfg.humans_max - cfg.humans_min + 1)));
    std::vector<IntBox> humans;
    for (int h = 0; h < n_h; ++h) {
      bool placed = false;
      for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        const int w = static_cast<int>(S * rng.uniform(0.26, 0.34));
        const int hh = std::min(static_cast<int>(w * rng.uniform(1.5, 1.8)), S - 2);
        const int x = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(S - w - 1)));
        const int y = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(S - hh - 1)));
        IntBox box{x, y, x + w, y + hh};
        bool ok = true;
        for (const IntBox& other : humans)
          if (boxes_overlap({box.x0 - 2, box.y0 - 2, box.x1 + 2, box.y1 + 2}, other)) ok = false;
        if (!ok) continue;
        humans.push_back(box);
        placed = true;
      }
      if (!placed) {
        if (++scene_try < kSceneRetries) goto retry_scene;
        throw std::runtime_error("generate_synthetic: could not place human after " +
                                 std::to_string(kSceneRetries) + " scene attempts (scene " +
                                 std::to_string(scene_idx) + ")");
      }
    }

    // Firearms.
    const int n_f = cfg.firearms_min + static_cast<int>(rng.below(static_cast<uint64_t>(
                                            cfg.firearms_max - cfg.firearms_min + 1)));
    std::vector<PlacedFirearm> firearms;
    // One firearm per host at most: the inside-a-human placements claim most
    // of the host's area, so two would always collide.
    std::vector<bool> occupied(humans.size(), false);
    const auto free_hosts = [&occupied] {
      std::vector<int> out;
      for (size_t i = 0; i < occupied.size(); ++i)
        if (!occupied[i]) out.push_back(static_cast<int>(i));
      return out;
    };
    for (int f = 0; f < n_f; ++f) {
      PlacedFirearm pf;
      pf.cls = rng.uniform() < cfg.gun_ratio ? ObjectClass::Gun : ObjectClass::Rifle;
      const bool carried = rng.uniform() < cfg.carry_probability && !free_hosts().empty();
      bool hard = false;
      if (!carried) {
        // Quota assignment keeps the realized hard-case rate at most the
        // configured rate regardless of sampling noise.
        ++noncarried_seen;
        if (hard_emitted + 1 <= cfg.hard_case_rate * noncarried_seen && !free_hosts().empty()) {
          hard = true;
          ++hard_emitted;
        }
      }
      bool placed = false;
      for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        IntBox box{0, 0, 0, 0};
        int carrier = -1;
        if (carried || hard) {
          // Inside a host human with area ratio >= 0.58 so the IoU rule
          // separates carried (upper-third band) from everything placed
          // at distance; hard cases sit in the lower two-thirds.
          const std::vector<int> hosts = free_hosts();
          carrier = hosts[rng.below(hosts.size())];
          const IntBox& host = humans[static_cast<size_t>(carrier)];
          const double ratio = rng.uniform(0.60, hard ? 0.66 : 0.80);
          double fw_frac;
          if (hard) {
            fw_frac = std::max(pf.cls == ObjectClass::Gun ? 0.92 : 0.85, ratio / 0.62);
          } else {
            fw_frac = pf.cls == ObjectClass::Gun ? rng.uniform(0.88, 0.95) : rng.uniform(0.72, 0.8);
          }
          fw_frac = std::min(fw_frac, 1.0);
          int fw = std::max(2, static_cast<int>(std::lround(host.w() * fw_frac)));
          int fh = std::max(2, static_cast<int>(std::lround(ratio * host.w() * host.h() / fw)));
          fh = std::min(fh, hard ? (2 * host.h()) / 3 - 1 : host.h());
          const int band = host.h() / 3;
          int y0;
          if (hard) {
            const int lo = host.y0 + band;
            const int hi = host.y1 - fh;
            if (hi < lo) continue;
            y0 = lo + static_cast<int>(rng.below(static_cast<uint64_t>(hi - lo + 1)));
          } else {
            const int hi = std::min(host.y0 + band - 1, host.y1 - fh);
            if (hi < host.y0) continue;
            y0 = host.y0 + static_cast<int>(rng.below(static_cast<uint64_t>(hi - host.y0 + 1)));
          }
          const int x0 = host.x0 + static_cast<int>(rng.below(static_cast<uint64_t>(host.w() - fw + 1)));
          box = {x0, y0, x0 + fw, y0 + fh};
        } else {
          // Far from every human: gap >= 0.5 x human width.
          int fw, fh;
          if (pf.cls == ObjectClass::Gun) {
            fw = fh = std::max(4, static_cast<int>(S * rng.uniform(0.1, 0.16)));
          } else {
            fw = std::max(6, static_cast<int>(S * rng.uniform(0.25, 0.38)));
            fh = std::max(3, static_cast<int>(S * rng.uniform(0.05, 0.09)));
          }
          if (fw >= S - 2 || fh >= S - 2) continue;
          const int x = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(S - fw - 1)));
          const int y = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(S - fh - 1)));
          box = {x, y, x + fw, y + fh};
          bool ok = true;
          for (const IntBox& hu : humans)
            if (box_gap(box, hu) < 0.5 * hu.w()) ok = false;
          if (!ok) continue;
        }
        bool ok = true;
        for (const PlacedFirearm& other : firearms)
          if (boxes_overlap(box, other.box)) ok = false;
        if (!ok) continue;
        pf.box = box;
        pf.carrier = carried ? carrier : -1;
        pf.hard_case = hard;
        if (carrier >= 0) occupied[static_cast<size_t>(carrier)] = true;
        firearms.push_back(pf);
        placed = true;
      }
      if (!placed) {
        if (++scene_try < kSceneRetries) goto retry_scene;
        throw std::runtime_error("generate_synthetic: could not place firearm after " +
                                 std::to_string(kSceneRetries) + " scene attempts (scene " +
                                 std::to_string(scene_idx) + ")");
      }
    }

    // Render humans (per-identity colour, horizontal stripes), then firearms.
    for (const IntBox& hu : humans) {
      const double r = rng.uniform(0.05, 0.25), g = rng.uniform(0.3, 0.6), b = rng.uniform(0.6, 0.95);
      fill_rect(img, hu, r, g, b);
      for (int y = hu.y0; y < hu.y1; ++y)
        if ((y - hu.y0) % 4 < 2)
          for (int x = hu.x0; x < hu.x1; ++x) {
            img.at(x, y, 0) *= 0.7;
            img.at(x, y, 1) *= 0.7;
            img.at(x, y, 2) *= 0.7;
          }
    }
    for (const PlacedFirearm& pf : firearms) {
      if (pf.cls == ObjectClass::Gun)
        fill_rect(img, pf.box, rng.uniform(0.7, 0.95), rng.uniform(0.05, 0.25), rng.uniform(0.05, 0.25));
      else
        fill_rect(img, pf.box, rng.uniform(0.8, 0.95), rng.uniform(0.6, 0.8), rng.uniform(0.05, 0.2));
    }
    for (double& v : img.data) {
      v += rng.uniform(-cfg.noise_amplitude, cfg.noise_amplitude);
      v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }

    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "scene_%04d", scene_idx);
    GroundTruthScene rec;
    rec.id = id_buf;
    rec.image_path = std::string("images/") + id_buf + ".ppm";
    for (const IntBox& hu : humans) rec.humans.push_back(hu.to_bbox());
    for (size_t f = 0; f < firearms.size(); ++f) {
      rec.firearms.emplace_back(firearms[f].cls, firearms[f].box.to_bbox());
      if (firearms[f].carrier >= 0)
        rec.carry_pairs.emplace_back(firearms[f].carrier, static_cast<int>(f));
    }
    write_pnm(img, (fs::path(out_dir) / rec.image_path).string());
    scenes.push_back(std::move(rec));
  }

  save_annotations((fs::path(out_dir) / "annotations.json").string(), scenes);
  return scenes;
}

std::vector<SceneDetections> detections_from_ground_truth(const std::vector<GroundTruthScene>& scenes) {
  std::vector<SceneDetections> out;
  for (const GroundTruthScene& s : scenes) {
    SceneDetections d;
    d.id = s.id;
    for (const BoundingBox& b : s.humans) d.detections.push_back({ObjectClass::Human, b, 1.0});
    for (const auto& [cls, box] : s.firearms) d.detections.push_back({cls, box, 1.0});
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace pairlock
