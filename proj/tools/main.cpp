// pairlock: synth | train | infer | eval | baseline | gradcheck
//
// Exit codes: 0 success, 1 validation/config error (including a failed
// gradient check), 2 runtime failure. Data goes to stdout or the requested
// output file; diagnostics go to stderr.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "pairlock/baselines.hpp"
#include "pairlock/datasets.hpp"
#include "pairlock/evaluation.hpp"
#include "pairlock/gradcheck.hpp"
#include "pairlock/imaging.hpp"
#include "pairlock/model.hpp"
#include "pairlock/pipeline.hpp"
#include "pairlock/samples.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pairlock;

namespace {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  SynthConfig synth;
  double eval_iou = 0.5;
  bool eleven_point = false;
  std::optional<uint64_t> seed;
};

void reject_unknown(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const std::string& a : allowed)
      if (key == a) ok = true;
    if (!ok) throw std::invalid_argument(where + ": unknown key '" + key + "'");
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file " + path);
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": malformed JSON: " + e.what());
  }
  reject_unknown(j, {"seed", "model", "train", "synth", "eval"}, path);
  RunConfig cfg;
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  if (j.contains("model")) cfg.model = model_config_from_json(j["model"].dump());
  if (j.contains("train")) {
    const json& jt = j["train"];
    reject_unknown(jt, {"learning_rate", "momentum", "epochs"}, path + " train");
    if (jt.contains("learning_rate")) cfg.train.learning_rate = jt["learning_rate"].get<double>();
    if (jt.contains("momentum")) cfg.train.momentum = jt["momentum"].get<double>();
    if (jt.contains("epochs")) cfg.train.epochs = jt["epochs"].get<int>();
  }
  if (j.contains("synth")) {
    const json& js = j["synth"];
    reject_unknown(js,
                   {"scene_count", "image_size", "humans_min", "humans_max", "firearms_min",
                    "firearms_max", "carry_probability", "gun_ratio", "clutter_count",
                    "noise_amplitude", "hard_case_rate"},
                   path + " synth");
    auto get = [&js](const char* k, auto& slot) {
      if (js.contains(k)) slot = js[k].get<std::decay_t<decltype(slot)>>();
    };
    get("scene_count", cfg.synth.scene_count);
    get("image_size", cfg.synth.image_size);
    get("humans_min", cfg.synth.humans_min);
    get("humans_max", cfg.synth.humans_max);
    get("firearms_min", cfg.synth.firearms_min);
    get("firearms_max", cfg.synth.firearms_max);
    get("carry_probability", cfg.synth.carry_probability);
    get("gun_ratio", cfg.synth.gun_ratio);
    get("clutter_count", cfg.synth.clutter_count);
    get("noise_amplitude", cfg.synth.noise_amplitude);
    get("hard_case_rate", cfg.synth.hard_case_rate);
  }
  if (j.contains("eval")) {
    const json& je = j["eval"];
    reject_unknown(je, {"iou_threshold", "eleven_point"}, path + " eval");
    if (je.contains("iou_threshold")) cfg.eval_iou = je["iou_threshold"].get<double>();
    if (je.contains("eleven_point")) cfg.eleven_point = je["eleven_point"].get<bool>();
  }
  return cfg;
}

uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw std::invalid_argument("seed is mandatory: pass --seed or put \"seed\" in the config");
  return *cfg.seed;
}

int worker_count(size_t jobs) {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("PAIRLOCK_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && static_cast<unsigned>(v) < n) n = static_cast<unsigned>(v);
  }
  return static_cast<int>(std::min<size_t>(n, jobs == 0 ? 1 : jobs));
}

Image load_scene_image(const std::string& images_root, const std::string& scene_id) {
  for (const fs::path cand : {fs::path(images_root) / (scene_id + ".ppm"),
                              fs::path(images_root) / "images" / (scene_id + ".ppm"),
                              fs::path(images_root) / (scene_id + ".pgm")})
    if (fs::exists(cand)) return read_pnm(cand.string());
  throw std::runtime_error("no image for scene '" + scene_id + "' under " + images_root);
}

std::optional<ColorSpace> parse_color(const std::string& s) {
  if (s == "gray") return ColorSpace::Gray;
  if (s == "rgb") return ColorSpace::RGB;
  if (s == "ycbcr") return ColorSpace::YCbCr;
  return std::nullopt;
}

std::optional<AttentionMode> parse_attention(const std::string& s) {
  if (s == "none") return AttentionMode::None;
  if (s == "merged") return AttentionMode::Merged;
  if (s == "split") return AttentionMode::Split;
  return std::nullopt;
}

// ---- commands -------------------------------------------------------------

int cmd_synth(const RunConfig& run, const std::string& out_dir) {
  SynthConfig cfg = run.synth;
  cfg.seed = require_seed(run);
  const auto scenes = generate_synthetic(cfg, out_dir);
  size_t pairs = 0;
  for (const GroundTruthScene& s : scenes) pairs += s.humans.size() * s.firearms.size();
  std::cout << "scenes: " << scenes.size() << "\npairs: " << pairs << "\n";
  return 0;
}

int cmd_train(const RunConfig& run, const std::string& annotations, std::string images_root,
              const std::string& out_ckpt, const std::string& log_path) {
  const auto scenes = load_annotations(annotations);
  if (images_root.empty()) images_root = fs::path(annotations).parent_path().string();

  ModelConfig mcfg = run.model;
  mcfg.validate();
  TrainConfig tcfg = run.train;
  tcfg.seed = require_seed(run);

  std::vector<TrainSample> dataset;
  for (const GroundTruthScene& s : scenes) {
    const Image img = read_pnm((fs::path(images_root) / s.image_path).string());
    std::vector<Detection> humans, firearms;
    for (const BoundingBox& b : s.humans) humans.push_back({ObjectClass::Human, b, 1.0});
    for (const auto& [cls, box] : s.firearms) firearms.push_back({cls, box, 1.0});
    for (TrainSample& t : scene_train_samples(img, humans, firearms, s, mcfg))
      dataset.push_back(std::move(t));
  }
  std::cerr << "training on " << dataset.size() << " pair instances from " << scenes.size()
            << " scenes\n";

  CarrierNet net = init_model(mcfg, tcfg.seed);
  const auto log = train(net, dataset, tcfg);

  std::ofstream log_file;
  std::ostream* os = &std::cout;
  if (!log_path.empty()) {
    log_file.open(log_path);
    if (!log_file) throw std::runtime_error("cannot open log file " + log_path);
    os = &log_file;
  }
  for (const EpochRecord& e : log) {
    json j = {{"epoch", e.epoch}, {"l_c", e.mean_l_c}, {"l_p", e.mean_l_p}, {"accuracy", e.accuracy}};
    *os << j.dump() << "\n";
  }
  save_model(out_ckpt, net);
  return 0;
}

std::vector<ScenePredictions> run_inference(const CarrierNet& net,
                                            const std::vector<SceneDetections>& scenes,
                                            const std::string& images_root, bool use_maxout) {
  std::vector<ScenePredictions> out(scenes.size());
  const int workers = worker_count(scenes.size());
  std::vector<std::thread> pool;
  std::atomic<size_t> next{0};
  auto body = [&] {
    for (size_t i = next.fetch_add(1); i < scenes.size(); i = next.fetch_add(1)) {
      const SceneDetections& s = scenes[i];
      const Image img = load_scene_image(images_root, s.id);
      ScenePredictions sp;
      sp.scene_id = s.id;
      for (PairInstance pair : enumerate_pairs(s.humans(), s.firearms())) {
        pair.label = pair.firearm_class() == FirearmClass::Gun ? PairLabel::GunHuman
                                                               : PairLabel::RifleHuman;
        const Tensor probs = predict_pair(net, assemble_pair_input(img, pair, net.config));
        sp.pairs.push_back(score_pair(pair, probs[static_cast<size_t>(*pair.label)]));
      }
      if (use_maxout) sp.pairs = maxout(sp.pairs);
      out[i] = std::move(sp);
    }
  };
  if (workers <= 1) {
    body();
  } else {
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (std::thread& t : pool) t.join();
  }
  return out;
}

int cmd_infer(const std::string& checkpoint, const std::string& detections,
              const std::string& images_root, const std::string& out_path, bool no_maxout) {
  const CarrierNet net = load_model(checkpoint);
  const auto scenes = load_detections(detections);
  const auto preds = run_inference(net, scenes, images_root, !no_maxout);
  save_predictions(out_path, preds);
  std::cerr << "wrote predictions for " << preds.size() << " scenes to " << out_path << "\n";
  return 0;
}

int cmd_eval(const RunConfig& run, const std::string& predictions, const std::string& annotations,
             const std::string& out_path) {
  const auto preds = load_predictions(predictions);
  const auto gt = load_annotations(annotations);
  const EvalReport report = evaluate_hold(preds, gt, run.eval_iou, run.eleven_point);
  const std::string text = eval_report_to_json(report);
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw std::runtime_error("cannot open " + out_path + " for writing");
    f << text << "\n";
  }
  std::cout << text << "\n";
  return 0;
}

int cmd_baseline(const std::string& method, const std::string& detections,
                 const std::string& annotations, const std::string& keypoints_path, double alpha,
                 double beta, bool carrier_aware) {
  const auto gt = load_annotations(annotations);
  const auto det_scenes = load_detections(detections);
  std::vector<SceneKeypoints> keypoints;
  if (method != "ohfd") {
    if (keypoints_path.empty())
      throw std::invalid_argument("baseline " + method + " requires --keypoints");
    keypoints = load_keypoints(keypoints_path);
  }
  if (carrier_aware && method != "ohfd")
    throw std::invalid_argument("only ohfd produces carrier identities; drop --carrier-aware");

  std::vector<CarriedPrediction> preds;
  for (const SceneDetections& s : det_scenes) {
    const auto firearms = s.firearms();
    const auto humans = s.humans();
    if (method == "ohfd") {
      const auto res = ohfd_associate(firearms, humans, beta);
      for (size_t f = 0; f < res.size(); ++f)
        preds.push_back({s.id, static_cast<int>(f), res[f].carried, res[f].carrier_index});
    } else if (method == "hifd") {
      for (size_t f = 0; f < firearms.size(); ++f) {
        bool carried = false;
        for (const SceneKeypoints& k : keypoints)
          if (k.id == s.id && k.frame == KeypointFrame::Crop && k.crop_ref &&
              *k.crop_ref == static_cast<int>(f))
            carried = carried || hifd_classify(firearms[f], k.keypoints, alpha);
        preds.push_back({s.id, static_cast<int>(f), carried, -1});
      }
    } else {  // hcfd
      std::vector<Keypoint> scene_kps;
      for (const SceneKeypoints& k : keypoints)
        if (k.id == s.id && k.frame == KeypointFrame::Image)
          scene_kps.insert(scene_kps.end(), k.keypoints.begin(), k.keypoints.end());
      for (size_t f = 0; f < firearms.size(); ++f)
        preds.push_back({s.id, static_cast<int>(f), hcfd_classify(firearms[f], scene_kps), -1});
    }
  }
  const AccuracyReport report = carried_accuracy(preds, gt, carrier_aware);
  std::cout << accuracy_report_table(method, report, carrier_aware);
  return 0;
}

int cmd_gradcheck(const RunConfig& run, double h, double threshold) {
  const uint64_t seed = run.seed.value_or(0);

  // Compact check configuration: two encoder blocks over a 16x16 stack with
  // split attention (six channels in YCbCr) and the locality branch on.
  ModelConfig mcfg = run.model;
  mcfg.encoder = {{8, 1}, {16, 1}};
  mcfg.aap_h = mcfg.aap_w = 4;
  mcfg.fc_dims = {32, 16, kNumClasses};
  mcfg.validate();

  const int side = 16;
  Rng rng = Rng::derive(seed, 17);
  TrainSample sample;
  sample.apbb.width = sample.apbb.height = side;
  sample.apbb.image_channels = mcfg.image_channels();
  for (int c = 0; c < mcfg.input_channels(); ++c) {
    Plane p = Plane::zeros(side, side);
    const bool mask = c >= mcfg.image_channels();
    for (double& v : p.data) v = mask ? (rng.uniform() < 0.4 ? 1.0 : 0.0) : rng.uniform();
    sample.apbb.planes.push_back(std::move(p));
  }
  sample.label = static_cast<int>(rng.below(static_cast<uint64_t>(kNumClasses)));

  // Condition the check point for central differences at h: double the init
  // scale so no live gradient coordinate is vanishingly small, and place the
  // locality target near the decoder's output so the total loss stays O(1)
  // (the f64 noise floor of the difference quotient is ~eps*|loss|/2h).
  CarrierNet net = init_model(mcfg, seed);
  for (const std::string& name : net.params.names()) {
    Param& p = net.params.at(name);
    for (size_t i = 0; i < p.value.numel(); ++i) p.value[i] *= 2.0;
  }
  sample.g_map = LocalityMap::zeros(side, side);
  if (net.config.locality_branch) {
    const ForwardResult fr = forward(net, sample.apbb, false, nullptr);
    for (size_t pl = 0; pl < sample.g_map.planes.size(); ++pl)
      for (size_t i = 0; i < sample.g_map.planes[pl].data.size(); ++i)
        sample.g_map.planes[pl].data[i] = std::clamp(
            fr.p_map.planes[pl].data[i] + rng.uniform(-0.05, 0.05), 0.0, 1.0);
  }
  net.params.zero_grads();
  Rng unused = Rng::derive(seed, 99);
  accumulate_gradients(net, sample, /*use_dropout=*/false, unused);
  const GradCheckReport report =
      gradient_check([&net, &sample] { return evaluate_loss(net, sample); }, net.params, h);

  bool ok = true;
  for (const auto& [name, err] : report.per_param) {
    std::cout << name << " " << err << "\n";
    if (!(err <= threshold)) ok = false;
  }
  std::cout << "end-to-end " << report.max_rel_error << "\n";
  if (!(report.max_rel_error <= threshold)) ok = false;
  if (!ok) std::cerr << "gradient check FAILED (threshold " << threshold << ")\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"paired-box human-firearm carrier association pipeline"};
  app.require_subcommand(1);

  std::string config_path, out_dir, annotations, images_root, checkpoint, detections, predictions,
      keypoints, out_path, log_path, method;
  std::optional<uint64_t> seed_flag;
  std::optional<std::string> attention_flag, color_flag;
  std::optional<double> lambda_flag, lr_flag;
  std::optional<int> epochs_flag, scenes_flag, image_size_flag;
  bool no_maxout = false, eleven_point = false, carrier_aware = false;
  double alpha = 0.3, beta = 0.5, iou_thr = -1.0, gc_h = 1e-6, gc_threshold = 1e-4;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--scenes", scenes_flag, "scene count override");
  synth->add_option("--image-size", image_size_flag, "square image side override");

  auto* tr = app.add_subcommand("train", "train a carrier-association model");
  tr->add_option("--annotations", annotations, "ground-truth annotations JSON")->required();
  tr->add_option("--images", images_root, "image root (default: annotations directory)");
  tr->add_option("--out", out_path, "checkpoint output path")->required();
  tr->add_option("--log", log_path, "epoch log path (JSON lines; default stdout)");
  tr->add_option("--attention", attention_flag, "none|merged|split");
  tr->add_option("--color", color_flag, "gray|rgb|ycbcr");
  tr->add_option("--lambda", lambda_flag, "locality loss weight");
  tr->add_option("--epochs", epochs_flag, "epoch count override");
  tr->add_option("--lr", lr_flag, "learning rate override");

  auto* inf = app.add_subcommand("infer", "score pairs with a trained model");
  inf->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  inf->add_option("--detections", detections, "detections JSON")->required();
  inf->add_option("--images", images_root, "image root")->required();
  inf->add_option("--out", out_path, "predictions output JSON")->required();
  inf->add_flag("--no-maxout", no_maxout, "keep all pairs (skip maxout)");

  auto* ev = app.add_subcommand("eval", "evaluate predictions against ground truth");
  ev->add_option("--predictions", predictions, "predictions JSON")->required();
  ev->add_option("--annotations", annotations, "ground-truth annotations JSON")->required();
  ev->add_option("--out", out_path, "also write the report JSON here");
  ev->add_option("--iou", iou_thr, "IoU threshold (default 0.5)");
  ev->add_flag("--eleven-point", eleven_point, "11-point interpolated AP");

  auto* base = app.add_subcommand("baseline", "run a rule-based baseline");
  base->add_option("--method", method, "hifd|hcfd|ohfd")->required();
  base->add_option("--detections", detections, "detections JSON")->required();
  base->add_option("--annotations", annotations, "ground-truth annotations JSON")->required();
  base->add_option("--keypoints", keypoints, "keypoints JSON (hifd/hcfd)");
  base->add_option("--alpha", alpha, "hifd confidence threshold");
  base->add_option("--beta", beta, "ohfd IoU threshold");
  base->add_flag("--carrier-aware", carrier_aware, "require the carrier identity to match");

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient audit");
  gc->add_option("--step", gc_h, "finite-difference step");
  gc->add_option("--threshold", gc_threshold, "max tolerated relative error");

  for (CLI::App* sub : {synth, tr, inf, ev, base, gc}) {
    sub->add_option("--config", config_path, "run config JSON");
    sub->add_option("--seed", seed_flag, "RNG seed (overrides config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig run;
    if (!config_path.empty()) run = load_run_config(config_path);
    if (seed_flag) run.seed = *seed_flag;
    if (scenes_flag) run.synth.scene_count = *scenes_flag;
    if (image_size_flag) run.synth.image_size = *image_size_flag;
    if (attention_flag) {
      const auto m = parse_attention(*attention_flag);
      if (!m) throw std::invalid_argument("bad --attention value '" + *attention_flag + "'");
      run.model.attention_mode = *m;
    }
    if (color_flag) {
      const auto c = parse_color(*color_flag);
      if (!c) throw std::invalid_argument("bad --color value '" + *color_flag + "'");
      run.model.color_space = *c;
    }
    if (lambda_flag) run.model.lambda = *lambda_flag;
    if (epochs_flag) run.train.epochs = *epochs_flag;
    if (lr_flag) run.train.learning_rate = *lr_flag;
    if (iou_thr >= 0.0) run.eval_iou = iou_thr;
    if (eleven_point) run.eleven_point = true;

    if (synth->parsed()) return cmd_synth(run, out_dir);
    if (tr->parsed()) return cmd_train(run, annotations, images_root, out_path, log_path);
    if (inf->parsed()) return cmd_infer(checkpoint, detections, images_root, out_path, no_maxout);
    if (ev->parsed()) return cmd_eval(run, predictions, annotations, out_path);
    if (base->parsed())
      return cmd_baseline(method, detections, annotations, keypoints, alpha, beta, carrier_aware);
    if (gc->parsed()) return cmd_gradcheck(run, gc_h, gc_threshold);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
