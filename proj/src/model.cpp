#include "pairlock/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "pairlock/layers.hpp"

namespace pairlock {

namespace {

Tensor tensor_from_stack(const AttentionStack& stack) {
  const int k = stack.channel_count();
  Tensor t({k, stack.height, stack.width});
  for (int c = 0; c < k; ++c)
    std::copy(stack.planes[c].data.begin(), stack.planes[c].data.end(),
              t.data.begin() + static_cast<size_t>(c) * stack.height * stack.width);
  return t;
}

LocalityMap locality_from_tensor(const Tensor& t) {
  LocalityMap map = LocalityMap::zeros(t.dim(2), t.dim(1));
  const size_t plane = static_cast<size_t>(t.dim(1)) * t.dim(2);
  for (int c = 0; c < 3; ++c)
    std::copy(t.data.begin() + c * plane, t.data.begin() + (c + 1) * plane,
              map.planes[c].data.begin());
  return map;
}

Tensor tensor_from_locality(const LocalityMap& map) {
  Tensor t({3, map.height, map.width});
  const size_t plane = static_cast<size_t>(map.height) * map.width;
  for (int c = 0; c < 3; ++c)
    std::copy(map.planes[c].data.begin(), map.planes[c].data.end(), t.data.begin() + c * plane);
  return t;
}

std::vector<int> decoder_channels(const ModelConfig& cfg) {
  std::vector<int> chans;
  int ch = cfg.feature_channels();
  for (size_t i = 0; i < cfg.encoder.size(); ++i) {
    ch = std::max(ch / 2, 8);
    chans.push_back(ch);
  }
  return chans;
}

void fill_uniform(Tensor& t, double bound, Rng& rng) {
  for (double& v : t.data) v = rng.uniform(-bound, bound);
}

void accumulate(Tensor& dst, const Tensor& src) {
  for (size_t i = 0; i < dst.numel(); ++i) dst.data[i] += src.data[i];
}

// Everything the backward pass needs from one forward run.
struct Trace {
  Tensor input;
  std::vector<Tensor> conv_in, conv_pre;  // encoder convs, in order
  std::vector<Tensor> pool_in;
  std::vector<MaxPoolResult> pools;
  Tensor feature;
  Tensor aap_out;
  std::vector<Tensor> fc_in, fc_pre;
  std::vector<DropoutResult> drops;
  Tensor logits;
  std::vector<Tensor> dec_in, dec_pre;       // per stage (conv input after upsample)
  std::vector<std::vector<int>> dec_up_in;   // pre-upsample shapes
  Tensor dec_out_in, dec_out_pre;
  Tensor pmap_sig;  // [3, H, W]
};

void run_forward(const CarrierNet& net, const Tensor& input, bool training, Rng* dropout_rng,
                 Trace& tr) {
  const ModelConfig& cfg = net.config;
  const ParamSet& P = net.params;
  const int h = input.dim(1), w = input.dim(2);
  if (input.dim(0) != cfg.input_channels())
    throw std::invalid_argument("forward: input has " + std::to_string(input.dim(0)) +
                                " channels, config expects " + std::to_string(cfg.input_channels()));
  if (h < cfg.min_input_size() || w < cfg.min_input_size())
    throw std::invalid_argument("forward: input " + std::to_string(w) + "x" + std::to_string(h) +
                                " below encoder minimum of " + std::to_string(cfg.min_input_size()) +
                                " px per side");
  tr.input = input;

  // Encoder: per block conv3x3(pad 1) + relu repeated, then maxpool 2.
  Tensor z = input;
  for (size_t b = 0; b < cfg.encoder.size(); ++b) {
    for (int c = 0; c < cfg.encoder[b].conv_count; ++c) {
      const std::string base = "enc" + std::to_string(b) + ".conv" + std::to_string(c);
      tr.conv_in.push_back(z);
      Tensor pre = conv2d_forward(z, P.at(base + ".w").value, P.at(base + ".b").value, 1, 1);
      tr.conv_pre.push_back(pre);
      z = relu_forward(pre);
    }
    tr.pool_in.push_back(z);
    tr.pools.push_back(max_pool2d_forward(z, 2, 2));
    z = tr.pools.back().y;
  }
  tr.feature = z;

  // Classifier: AAP -> flatten -> FC/relu/dropout x2 -> FC3.
  tr.aap_out = adaptive_average_pool2d_forward(z, cfg.aap_h, cfg.aap_w);
  Tensor flat({static_cast<int>(tr.aap_out.numel())}, tr.aap_out.data);
  Rng dummy(0);
  Rng& drng = dropout_rng ? *dropout_rng : dummy;
  Tensor cur = flat;
  for (int i = 0; i < 3; ++i) {
    const std::string base = "fc" + std::to_string(i + 1);
    tr.fc_in.push_back(cur);
    Tensor pre = fully_connected_forward(cur, P.at(base + ".w").value, P.at(base + ".b").value);
    tr.fc_pre.push_back(pre);
    if (i < 2) {
      Tensor act = relu_forward(pre);
      tr.drops.push_back(dropout_forward(act, cfg.dropout_rate, training, drng));
      cur = tr.drops.back().y;
    } else {
      cur = pre;
    }
  }
  tr.logits = cur;

  // Locality decoder: upsample stages back to crop resolution, 1x1 to 3
  // planes, bilinear snap to exact dims, sigmoid.
  if (cfg.locality_branch) {
    Tensor d = tr.feature;
    const std::vector<int> chans = decoder_channels(cfg);
    for (size_t s = 0; s < chans.size(); ++s) {
      const std::string base = "dec" + std::to_string(s) + ".conv";
      tr.dec_up_in.push_back(d.shape);
      Tensor pre;
      if (cfg.decoder_transposed) {
        tr.dec_in.push_back(d);
        pre = transposed_conv2d_forward(d, P.at(base + ".w").value, P.at(base + ".b").value, 2);
      } else {
        Tensor up = upsample_nearest2_forward(d);
        tr.dec_in.push_back(up);
        pre = conv2d_forward(tr.dec_in.back(), P.at(base + ".w").value, P.at(base + ".b").value, 1, 1);
      }
      tr.dec_pre.push_back(pre);
      d = relu_forward(pre);
    }
    tr.dec_out_in = d;
    tr.dec_out_pre = conv2d_forward(d, P.at("dec.out.w").value, P.at("dec.out.b").value, 1, 0);
    Tensor resized = resize_bilinear_forward(tr.dec_out_pre, h, w);
    tr.pmap_sig = sigmoid_forward(resized);
  }
}

// Backpropagates d(logits) and d(p_map sigmoid output) into parameter grads.
void run_backward(CarrierNet& net, const Trace& tr, const Tensor& dlogits, const Tensor* dpmap) {
  const ModelConfig& cfg = net.config;
  ParamSet& P = net.params;

  // Classifier.
  Tensor g = dlogits;
  for (int i = 2; i >= 0; --i) {
    const std::string base = "fc" + std::to_string(i + 1);
    if (i < 2) g = relu_backward(tr.fc_pre[i], dropout_backward(tr.drops[i], g));
    ConvGrads fg = fully_connected_backward(tr.fc_in[i], P.at(base + ".w").value, g);
    accumulate(P.at(base + ".w").grad, fg.dw);
    accumulate(P.at(base + ".b").grad, fg.db);
    g = fg.dx;
  }
  Tensor d_aap(tr.aap_out.shape, g.data);
  Tensor d_feature = adaptive_average_pool2d_backward(tr.feature.shape, d_aap);

  // Decoder.
  if (cfg.locality_branch && dpmap != nullptr) {
    Tensor dsig = sigmoid_backward(tr.pmap_sig, *dpmap);
    Tensor dresize = resize_bilinear_backward(tr.dec_out_pre.shape, dsig);
    ConvGrads og = conv2d_backward(tr.dec_out_in, P.at("dec.out.w").value, 1, 0, dresize);
    accumulate(P.at("dec.out.w").grad, og.dw);
    accumulate(P.at("dec.out.b").grad, og.db);
    Tensor dd = og.dx;
    for (int s = static_cast<int>(tr.dec_pre.size()) - 1; s >= 0; --s) {
      const std::string base = "dec" + std::to_string(s) + ".conv";
      dd = relu_backward(tr.dec_pre[s], dd);
      if (cfg.decoder_transposed) {
        ConvGrads cg = transposed_conv2d_backward(tr.dec_in[s], P.at(base + ".w").value, 2, dd);
        accumulate(P.at(base + ".w").grad, cg.dw);
        accumulate(P.at(base + ".b").grad, cg.db);
        dd = cg.dx;
      } else {
        ConvGrads cg = conv2d_backward(tr.dec_in[s], P.at(base + ".w").value, 1, 1, dd);
        accumulate(P.at(base + ".w").grad, cg.dw);
        accumulate(P.at(base + ".b").grad, cg.db);
        dd = upsample_nearest2_backward(tr.dec_up_in[s], cg.dx);
      }
    }
    accumulate(d_feature, dd);
  }

  // Encoder, reversed.
  Tensor dz = d_feature;
  int conv_idx = static_cast<int>(tr.conv_in.size());
  for (int b = static_cast<int>(cfg.encoder.size()) - 1; b >= 0; --b) {
    dz = max_pool2d_backward(tr.pool_in[b], tr.pools[b], dz);
    for (int c = cfg.encoder[b].conv_count - 1; c >= 0; --c) {
      --conv_idx;
      const std::string base = "enc" + std::to_string(b) + ".conv" + std::to_string(c);
      dz = relu_backward(tr.conv_pre[conv_idx], dz);
      ConvGrads cg = conv2d_backward(tr.conv_in[conv_idx], P.at(base + ".w").value, 1, 1, dz);
      accumulate(P.at(base + ".w").grad, cg.dw);
      accumulate(P.at(base + ".b").grad, cg.db);
      dz = cg.dx;
    }
  }
}

Tensor one_hot(int label) {
  Tensor t({kNumClasses});
  t.data[label] = 1.0;
  return t;
}

}  // namespace

int ModelConfig::mask_channels() const {
  switch (attention_mode) {
    case AttentionMode::None: return 0;
    case AttentionMode::Merged: return 2;
    case AttentionMode::Split: return 3;
  }
  return 0;
}

void ModelConfig::validate() const {
  if (encoder.empty()) throw std::invalid_argument("ModelConfig: empty encoder");
  for (const auto& b : encoder)
    if (b.out_channels < 1 || b.conv_count < 1) throw std::invalid_argument("ModelConfig: bad encoder block");
  if (fc_dims.size() != 3 || fc_dims.back() != kNumClasses)
    throw std::invalid_argument("ModelConfig: fc_dims must be three widths ending at 3");
  if (aap_h < 1 || aap_w < 1) throw std::invalid_argument("ModelConfig: bad aap size");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw std::invalid_argument("ModelConfig: bad dropout rate");
  if (lambda < 0.0) throw std::invalid_argument("ModelConfig: lambda must be >= 0");
  if (resize_target < min_input_size())
    throw std::invalid_argument("ModelConfig: resize_target below encoder minimum");
}

CarrierNet init_model(const ModelConfig& config, uint64_t seed) {
  config.validate();
  CarrierNet net;
  net.config = config;
  Rng rng(seed);

  auto add_conv = [&](const std::string& name, int co, int ci, int kh, int kw) {
    Tensor w({co, ci, kh, kw});
    fill_uniform(w, std::sqrt(1.0 / (ci * kh * kw)), rng);
    net.params.add(name + ".w", std::move(w));
    net.params.add(name + ".b", Tensor({co}));
  };

  int ci = config.input_channels();
  for (size_t b = 0; b < config.encoder.size(); ++b) {
    for (int c = 0; c < config.encoder[b].conv_count; ++c) {
      add_conv("enc" + std::to_string(b) + ".conv" + std::to_string(c), config.encoder[b].out_channels,
               ci, 3, 3);
      ci = config.encoder[b].out_channels;
    }
  }

  int n = config.feature_channels() * config.aap_h * config.aap_w;
  for (int i = 0; i < 3; ++i) {
    const int m = config.fc_dims[i];
    Tensor w({m, n});
    fill_uniform(w, std::sqrt(1.0 / n), rng);
    net.params.add("fc" + std::to_string(i + 1) + ".w", std::move(w));
    net.params.add("fc" + std::to_string(i + 1) + ".b", Tensor({m}));
    n = m;
  }

  if (config.locality_branch) {
    int dc = config.feature_channels();
    const std::vector<int> chans = decoder_channels(config);
    for (size_t s = 0; s < chans.size(); ++s) {
      const std::string name = "dec" + std::to_string(s) + ".conv";
      if (config.decoder_transposed) {
        Tensor w({dc, chans[s], 2, 2});
        fill_uniform(w, std::sqrt(1.0 / dc), rng);
        net.params.add(name + ".w", std::move(w));
        net.params.add(name + ".b", Tensor({chans[s]}));
      } else {
        add_conv(name, chans[s], dc, 3, 3);
      }
      dc = chans[s];
    }
    add_conv("dec.out", 3, dc, 1, 1);
  }
  return net;
}

ForwardResult forward(const CarrierNet& net, const AttentionStack& apbb, bool training,
                      Rng* dropout_rng) {
  Trace tr;
  run_forward(net, tensor_from_stack(apbb), training, dropout_rng, tr);
  ForwardResult r;
  r.class_probs = softmax_cross_entropy(tr.logits, one_hot(0)).probs;
  if (net.config.locality_branch) r.p_map = locality_from_tensor(tr.pmap_sig);
  return r;
}

LossParts compute_loss(const Tensor& class_logits, const Tensor& label_one_hot,
                       const LocalityMap& p_map, const LocalityMap& g_map, double lambda) {
  LossParts parts;
  parts.l_c = softmax_cross_entropy(class_logits, label_one_hot).loss;
  if (lambda > 0.0 && p_map.width > 0)
    parts.l_p = frobenius_loss(tensor_from_locality(p_map), tensor_from_locality(g_map)).loss;
  parts.total = parts.l_c + lambda * parts.l_p;
  return parts;
}

StepResult accumulate_gradients(CarrierNet& net, const TrainSample& sample, bool use_dropout,
                                Rng& dropout_rng) {
  Trace tr;
  run_forward(net, tensor_from_stack(sample.apbb), use_dropout, &dropout_rng, tr);
  StepResult r;
  const SoftmaxXentResult xent = softmax_cross_entropy(tr.logits, one_hot(sample.label));
  r.loss.l_c = xent.loss;
  r.predicted = static_cast<int>(
      std::max_element(tr.logits.data.begin(), tr.logits.data.end()) - tr.logits.data.begin());

  const double lambda = net.config.lambda;
  if (net.config.locality_branch && lambda > 0.0) {
    const Tensor target = tensor_from_locality(sample.g_map);
    if (target.shape != tr.pmap_sig.shape)
      throw std::invalid_argument("accumulate_gradients: g_map/crop dimension mismatch");
    FrobeniusResult frob = frobenius_loss(tr.pmap_sig, target);
    r.loss.l_p = frob.loss;
    for (double& v : frob.dpred.data) v *= lambda;
    run_backward(net, tr, xent.dlogits, &frob.dpred);
  } else {
    run_backward(net, tr, xent.dlogits, nullptr);
  }
  r.loss.total = r.loss.l_c + lambda * r.loss.l_p;
  return r;
}

double evaluate_loss(const CarrierNet& net, const TrainSample& sample) {
  Trace tr;
  run_forward(net, tensor_from_stack(sample.apbb), false, nullptr, tr);
  const double l_c = softmax_cross_entropy(tr.logits, one_hot(sample.label)).loss;
  double l_p = 0.0;
  if (net.config.locality_branch && net.config.lambda > 0.0)
    l_p = frobenius_loss(tr.pmap_sig, tensor_from_locality(sample.g_map)).loss;
  return l_c + net.config.lambda * l_p;
}

std::vector<EpochRecord> train(CarrierNet& net, const std::vector<TrainSample>& dataset,
                               const TrainConfig& tcfg) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (tcfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  for (const TrainSample& s : dataset)
    if (s.apbb.channel_count() != net.config.input_channels())
      throw std::invalid_argument("train: instance channel count mismatch");

  Rng shuffle_rng = Rng::derive(tcfg.seed, 1);
  Rng dropout_rng = Rng::derive(tcfg.seed, 2);
  std::vector<size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), size_t{0});

  std::vector<EpochRecord> log;
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    EpochRecord rec;
    rec.epoch = epoch;
    int correct = 0;
    for (size_t idx : order) {
      const StepResult step = accumulate_gradients(net, dataset[idx], true, dropout_rng);
      if (tcfg.learning_rate > 0.0) {
        sgd_momentum_step(net.params, tcfg.learning_rate, tcfg.momentum);
      } else {
        net.params.zero_grads();
      }
      rec.mean_l_c += step.loss.l_c;
      rec.mean_l_p += step.loss.l_p;
      if (step.predicted == dataset[idx].label) ++correct;
    }
    rec.mean_l_c /= static_cast<double>(dataset.size());
    rec.mean_l_p /= static_cast<double>(dataset.size());
    rec.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
    log.push_back(rec);
  }
  return log;
}

Tensor predict_pair(const CarrierNet& net, const AttentionStack& apbb) {
  Trace tr;
  run_forward(net, tensor_from_stack(apbb), false, nullptr, tr);
  return softmax_cross_entropy(tr.logits, one_hot(0)).probs;
}

namespace {

using nlohmann::json;

const char* color_space_key(ColorSpace cs) { return to_string(cs); }

ColorSpace color_space_from(const std::string& s) {
  if (s == "gray") return ColorSpace::Gray;
  if (s == "rgb") return ColorSpace::RGB;
  if (s == "ycbcr") return ColorSpace::YCbCr;
  throw std::invalid_argument("unknown color space: " + s);
}

AttentionMode attention_from(const std::string& s) {
  if (s == "none") return AttentionMode::None;
  if (s == "merged") return AttentionMode::Merged;
  if (s == "split") return AttentionMode::Split;
  throw std::invalid_argument("unknown attention mode: " + s);
}

}  // namespace

std::string model_config_to_json(const ModelConfig& c) {
  json j;
  j["color_space"] = color_space_key(c.color_space);
  j["attention"] = to_string(c.attention_mode);
  json enc = json::array();
  for (const auto& b : c.encoder) enc.push_back({b.out_channels, b.conv_count});
  j["encoder"] = enc;
  j["aap"] = {c.aap_h, c.aap_w};
  j["fc_dims"] = c.fc_dims;
  j["dropout_rate"] = c.dropout_rate;
  j["lambda"] = c.lambda;
  j["locality_branch"] = c.locality_branch;
  j["decoder_transposed"] = c.decoder_transposed;
  j["resize_target"] = c.resize_target;
  return j.dump(2);
}

ModelConfig model_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  static const std::set<std::string> known = {"color_space",   "attention",     "encoder",
                                             "aap",           "fc_dims",       "dropout_rate",
                                             "lambda",        "locality_branch", "decoder_transposed",
                                             "resize_target"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw std::invalid_argument("model config: unknown key '" + it.key() + "'");
  ModelConfig c;
  if (j.contains("color_space")) c.color_space = color_space_from(j["color_space"].get<std::string>());
  if (j.contains("attention")) c.attention_mode = attention_from(j["attention"].get<std::string>());
  if (j.contains("encoder")) {
    c.encoder.clear();
    for (const auto& b : j["encoder"]) c.encoder.push_back({b.at(0).get<int>(), b.at(1).get<int>()});
  }
  if (j.contains("aap")) {
    c.aap_h = j["aap"].at(0).get<int>();
    c.aap_w = j["aap"].at(1).get<int>();
  }
  if (j.contains("fc_dims")) c.fc_dims = j["fc_dims"].get<std::vector<int>>();
  if (j.contains("dropout_rate")) c.dropout_rate = j["dropout_rate"].get<double>();
  if (j.contains("lambda")) c.lambda = j["lambda"].get<double>();
  if (j.contains("locality_branch")) c.locality_branch = j["locality_branch"].get<bool>();
  if (j.contains("decoder_transposed")) c.decoder_transposed = j["decoder_transposed"].get<bool>();
  if (j.contains("resize_target")) c.resize_target = j["resize_target"].get<int>();
  c.validate();
  return c;
}

void save_model(const std::string& path, const CarrierNet& net) {
  save_checkpoint(path, net.params);
  std::ofstream f(path + ".json");
  if (!f) throw std::runtime_error("save_model: cannot open " + path + ".json");
  f << model_config_to_json(net.config) << "\n";
}

CarrierNet load_model(const std::string& path) {
  std::ifstream f(path + ".json");
  if (!f) throw std::runtime_error("load_model: missing sidecar " + path + ".json");
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  CarrierNet net = init_model(model_config_from_json(text), 0);
  load_checkpoint(path, net.params);
  return net;
}

}  // namespace pairlock
