#ifndef PAIRLOCK_MODEL_HPP
#define PAIRLOCK_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pairlock/masks.hpp"
#include "pairlock/rng.hpp"
#include "pairlock/tensor.hpp"

namespace pairlock {

struct EncoderBlock {
  int out_channels = 0;
  int conv_count = 1;
};

// Pair classes: 0 = gun-human, 1 = rifle-human, 2 = no interaction.
constexpr int kNumClasses = 3;

struct ModelConfig {
  ColorSpace color_space = ColorSpace::YCbCr;
  AttentionMode attention_mode = AttentionMode::Split;
  std::vector<EncoderBlock> encoder = {{16, 1}, {32, 1}, {64, 1}};
  int aap_h = 7;
  int aap_w = 7;
  std::vector<int> fc_dims = {256, 64, kNumClasses};  // widths, last must be 3
  double dropout_rate = 0.5;
  double lambda = 1.0;
  bool locality_branch = true;
  bool decoder_transposed = false;  // transposed conv instead of upsample+conv
  int resize_target = 64;

  int image_channels() const { return color_space == ColorSpace::Gray ? 1 : 3; }
  int mask_channels() const;
  int input_channels() const { return image_channels() + mask_channels(); }
  int feature_channels() const { return encoder.back().out_channels; }
  // Smallest accepted input side: one halving per encoder block.
  int min_input_size() const { return 1 << encoder.size(); }
  void validate() const;
};

struct TrainConfig {
  double learning_rate = 1e-5;
  double momentum = 0.9;
  int epochs = 30;
  int batch_size = 1;  // fixed; the trainer steps per instance
  uint64_t seed = 0;
};

struct CarrierNet {
  ModelConfig config;
  ParamSet params;
};

struct ForwardResult {
  Tensor class_probs;  // [3], sums to 1
  LocalityMap p_map;   // sigmoid outputs at crop resolution; empty when branch off
};

// One labeled training instance (already cropped/assembled).
struct TrainSample {
  AttentionStack apbb;
  int label = 2;        // class index
  LocalityMap g_map;    // ignored when lambda == 0 or branch off
};

struct LossParts {
  double total = 0.0;
  double l_c = 0.0;
  double l_p = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  double mean_l_c = 0.0;
  double mean_l_p = 0.0;
  double accuracy = 0.0;  // training accuracy in [0,1]
};

// Fan-in scaled uniform init (bound = sqrt(1/fan_in)), zero biases,
// deterministic per seed.
CarrierNet init_model(const ModelConfig& config, uint64_t seed);

ForwardResult forward(const CarrierNet& net, const AttentionStack& apbb, bool training, Rng* dropout_rng);

LossParts compute_loss(const Tensor& class_logits, const Tensor& label_one_hot,
                       const LocalityMap& p_map, const LocalityMap& g_map, double lambda);

struct StepResult {
  LossParts loss;
  int predicted = 2;
};

// Forward + backward on one sample; accumulates gradients into net.params
// without applying an optimizer step.
StepResult accumulate_gradients(CarrierNet& net, const TrainSample& sample, bool use_dropout,
                                Rng& dropout_rng);

// Deterministic (dropout-free) scalar loss; the finite-difference target.
double evaluate_loss(const CarrierNet& net, const TrainSample& sample);

std::vector<EpochRecord> train(CarrierNet& net, const std::vector<TrainSample>& dataset,
                               const TrainConfig& tcfg);

// Probabilities (gun-human, rifle-human, no interaction); dropout off.
Tensor predict_pair(const CarrierNet& net, const AttentionStack& apbb);

// Checkpoint plus sidecar JSON (path + ".json") holding the ModelConfig.
void save_model(const std::string& path, const CarrierNet& net);
CarrierNet load_model(const std::string& path);

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace pairlock

#endif  // PAIRLOCK_MODEL_HPP
