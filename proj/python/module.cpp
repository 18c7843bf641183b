#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pairlock/baselines.hpp"
#include "pairlock/datasets.hpp"
#include "pairlock/evaluation.hpp"
#include "pairlock/imaging.hpp"
#include "pairlock/model.hpp"
#include "pairlock/pipeline.hpp"
#include "pairlock/samples.hpp"

namespace py = pybind11;
using namespace pairlock;

PYBIND11_MODULE(_pairlock, m) {
  m.doc() = "paired-box human-firearm carrier association pipeline";

  // geometry
  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<>())
      .def(py::init([](double x0, double y0, double x1, double y1) {
             return BoundingBox{x0, y0, x1, y1};
           }),
           py::arg("x_min"), py::arg("y_min"), py::arg("x_max"), py::arg("y_max"))
      .def_readwrite("x_min", &BoundingBox::x_min)
      .def_readwrite("y_min", &BoundingBox::y_min)
      .def_readwrite("x_max", &BoundingBox::x_max)
      .def_readwrite("y_max", &BoundingBox::y_max)
      .def("width", &BoundingBox::width)
      .def("height", &BoundingBox::height)
      .def("valid", &BoundingBox::valid)
      .def("__repr__", [](const BoundingBox& b) {
        return "BoundingBox(" + std::to_string(b.x_min) + ", " + std::to_string(b.y_min) + ", " +
               std::to_string(b.x_max) + ", " + std::to_string(b.y_max) + ")";
      });
  m.def("iou", &iou);
  m.def("union_box", &union_box);
  m.def("intersect_box", &intersect_box);

  // imaging
  py::enum_<ColorSpace>(m, "ColorSpace")
      .value("Gray", ColorSpace::Gray)
      .value("RGB", ColorSpace::RGB)
      .value("YCbCr", ColorSpace::YCbCr);
  py::class_<Image>(m, "Image")
      .def_readonly("width", &Image::width)
      .def_readonly("height", &Image::height)
      .def_readonly("channels", &Image::channels)
      .def_readonly("color_space", &Image::color_space)
      .def_readonly("data", &Image::data);
  m.def("read_pnm", &read_pnm);
  m.def("write_pnm", &write_pnm);

  // pipeline
  py::enum_<ObjectClass>(m, "ObjectClass")
      .value("Human", ObjectClass::Human)
      .value("Gun", ObjectClass::Gun)
      .value("Rifle", ObjectClass::Rifle);
  py::enum_<PairLabel>(m, "PairLabel")
      .value("GunHuman", PairLabel::GunHuman)
      .value("RifleHuman", PairLabel::RifleHuman)
      .value("NoInteraction", PairLabel::NoInteraction);
  py::class_<Detection>(m, "Detection")
      .def(py::init([](ObjectClass cls, const BoundingBox& box, double score) {
             return Detection{cls, box, score};
           }),
           py::arg("cls"), py::arg("box"), py::arg("score") = 1.0)
      .def_readwrite("cls", &Detection::cls)
      .def_readwrite("box", &Detection::box)
      .def_readwrite("score", &Detection::score);
  py::class_<PairInstance>(m, "PairInstance")
      .def_readwrite("human", &PairInstance::human)
      .def_readwrite("firearm", &PairInstance::firearm)
      .def_readwrite("human_index", &PairInstance::human_index)
      .def_readwrite("firearm_index", &PairInstance::firearm_index)
      .def_readwrite("pbb", &PairInstance::pbb)
      .def_readwrite("label", &PairInstance::label);
  py::class_<ScoredPair>(m, "ScoredPair")
      .def_readwrite("pair", &ScoredPair::pair)
      .def_readwrite("hold_prob", &ScoredPair::hold_prob)
      .def_readwrite("final_score", &ScoredPair::final_score);
  py::class_<GroundTruthScene>(m, "GroundTruthScene")
      .def(py::init<>())
      .def_readwrite("id", &GroundTruthScene::id)
      .def_readwrite("image_path", &GroundTruthScene::image_path)
      .def_readwrite("humans", &GroundTruthScene::humans)
      .def_readwrite("firearms", &GroundTruthScene::firearms)
      .def_readwrite("carry_pairs", &GroundTruthScene::carry_pairs);
  m.def("enumerate_pairs", &enumerate_pairs);
  m.def("assign_training_labels", &assign_training_labels, py::arg("humans"), py::arg("firearms"),
        py::arg("gt"), py::arg("iou_thr") = 0.5, py::arg("score_thr") = 0.5);
  m.def("score_pair", &score_pair, py::arg("pair"), py::arg("hold_prob"),
        py::arg("include_human_score") = false);
  m.def("maxout", [](std::vector<ScoredPair> scored) { return maxout(std::move(scored)); });

  // model
  py::enum_<AttentionMode>(m, "AttentionMode")
      .value("Nothing", AttentionMode::None)
      .value("Merged", AttentionMode::Merged)
      .value("Split", AttentionMode::Split);
  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("color_space", &ModelConfig::color_space)
      .def_readwrite("attention_mode", &ModelConfig::attention_mode)
      .def_readwrite("aap_h", &ModelConfig::aap_h)
      .def_readwrite("aap_w", &ModelConfig::aap_w)
      .def_readwrite("fc_dims", &ModelConfig::fc_dims)
      .def_readwrite("dropout_rate", &ModelConfig::dropout_rate)
      .def_readwrite("lambda_", &ModelConfig::lambda)
      .def_readwrite("locality_branch", &ModelConfig::locality_branch)
      .def_readwrite("resize_target", &ModelConfig::resize_target)
      .def("validate", &ModelConfig::validate)
      .def("input_channels", &ModelConfig::input_channels);
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("momentum", &TrainConfig::momentum)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("seed", &TrainConfig::seed);
  py::class_<AttentionStack>(m, "AttentionStack")
      .def_readonly("width", &AttentionStack::width)
      .def_readonly("height", &AttentionStack::height)
      .def("channel_count", &AttentionStack::channel_count);
  py::class_<TrainSample>(m, "TrainSample")
      .def_readwrite("apbb", &TrainSample::apbb)
      .def_readwrite("label", &TrainSample::label);
  py::class_<EpochRecord>(m, "EpochRecord")
      .def_readonly("epoch", &EpochRecord::epoch)
      .def_readonly("mean_l_c", &EpochRecord::mean_l_c)
      .def_readonly("mean_l_p", &EpochRecord::mean_l_p)
      .def_readonly("accuracy", &EpochRecord::accuracy);
  py::class_<CarrierNet>(m, "CarrierNet").def_readonly("config", &CarrierNet::config);
  m.def("init_model", &init_model, py::arg("config"), py::arg("seed"));
  m.def("train", &train, py::arg("net"), py::arg("dataset"), py::arg("train_config"));
  m.def("predict_pair", [](const CarrierNet& net, const AttentionStack& apbb) {
    const Tensor probs = predict_pair(net, apbb);
    return probs.data;
  });
  m.def("save_model", &save_model);
  m.def("load_model", &load_model);
  m.def("assemble_pair_input", &assemble_pair_input);
  m.def("make_train_sample", &make_train_sample);

  // baselines
  py::enum_<KeypointKind>(m, "KeypointKind")
      .value("Hand", KeypointKind::Hand)
      .value("Other", KeypointKind::Other);
  py::class_<Keypoint>(m, "Keypoint")
      .def(py::init([](double x, double y, double confidence, KeypointKind kind) {
             return Keypoint{x, y, confidence, kind};
           }),
           py::arg("x"), py::arg("y"), py::arg("confidence"), py::arg("kind") = KeypointKind::Other)
      .def_readwrite("x", &Keypoint::x)
      .def_readwrite("y", &Keypoint::y)
      .def_readwrite("confidence", &Keypoint::confidence)
      .def_readwrite("kind", &Keypoint::kind);
  py::class_<OhfdResult>(m, "OhfdResult")
      .def_readonly("carried", &OhfdResult::carried)
      .def_readonly("carrier_index", &OhfdResult::carrier_index);
  m.def("hifd_classify", &hifd_classify, py::arg("firearm"), py::arg("crop_keypoints"),
        py::arg("alpha") = 0.3);
  m.def("hcfd_classify", &hcfd_classify, py::arg("firearm"), py::arg("body_keypoints"),
        py::arg("min_confidence") = 0.0);
  m.def("ohfd_associate", &ohfd_associate, py::arg("firearms"), py::arg("humans"),
        py::arg("beta") = 0.5);

  // evaluation
  py::class_<ScenePredictions>(m, "ScenePredictions")
      .def(py::init<>())
      .def_readwrite("scene_id", &ScenePredictions::scene_id)
      .def_readwrite("pairs", &ScenePredictions::pairs);
  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("ap_gun_hold", &EvalReport::ap_gun_hold)
      .def_readonly("ap_rifle_hold", &EvalReport::ap_rifle_hold)
      .def_readonly("ap_hold", &EvalReport::ap_hold)
      .def_readonly("ap_hold_pooled", &EvalReport::ap_hold_pooled)
      .def_readonly("num_gt_gun", &EvalReport::num_gt_gun)
      .def_readonly("num_gt_rifle", &EvalReport::num_gt_rifle);
  m.def("evaluate_hold", &evaluate_hold, py::arg("predictions"), py::arg("gt"),
        py::arg("iou_thr") = 0.5, py::arg("eleven_point") = false);
  m.def("average_precision", &average_precision, py::arg("tp_flags"), py::arg("num_gt"),
        py::arg("eleven_point") = false);

  // datasets
  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("scene_count", &SynthConfig::scene_count)
      .def_readwrite("image_size", &SynthConfig::image_size)
      .def_readwrite("carry_probability", &SynthConfig::carry_probability)
      .def_readwrite("gun_ratio", &SynthConfig::gun_ratio)
      .def_readwrite("hard_case_rate", &SynthConfig::hard_case_rate)
      .def_readwrite("seed", &SynthConfig::seed);
  py::class_<SceneDetections>(m, "SceneDetections")
      .def_readwrite("id", &SceneDetections::id)
      .def_readwrite("detections", &SceneDetections::detections)
      .def("humans", &SceneDetections::humans)
      .def("firearms", &SceneDetections::firearms);
  m.def("generate_synthetic", &generate_synthetic, py::arg("config"), py::arg("out_dir"));
  m.def("load_annotations", &load_annotations);
  m.def("save_annotations", &save_annotations);
  m.def("load_detections", &load_detections);
  m.def("save_detections", &save_detections);
  m.def("load_predictions", &load_predictions);
  m.def("save_predictions", &save_predictions);
  m.def("detections_from_ground_truth", &detections_from_ground_truth);
}
