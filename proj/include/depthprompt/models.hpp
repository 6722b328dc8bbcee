#pragma once

#include <array>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "depthprompt/nn/graph.hpp"
#include "depthprompt/rng.hpp"
#include "depthprompt/scale_align.hpp"

namespace dp {

// Architecture of the desk-scale stack: a small convolutional
// encoder-decoder as the frozen relative-depth backbone, a two-channel
// prompt encoder over the sparse map, and a U-shaped affinity decoder
// emitting stencil^2 channels at full resolution.
struct ModelConfig {
  std::array<int, 4> foundation_channels = {16, 24, 32, 48};
  std::array<int, 4> prompt_channels = {16, 24, 32, 48};
  std::array<int, 4> decoder_channels = {16, 24, 32, 48};
  int stencil = 7;
  bool use_prompt = true;  // ablation: affinity from image features only
  bool use_ls = true;      // ablation: skip the scale fit (p_hat = 1)
  bool use_spn = true;     // ablation: output the scaled initial map directly
  float depth_floor = 1e-3f;
  float lrelu_slope = 0.1f;
};

template <typename S>
struct FeaturePyramid {
  std::vector<nn::Tensor<S>> levels;  // scales 1/1, 1/2, 1/4, 1/8
};

template <typename S>
struct ConvLayer {
  nn::Param<S> w, b;

  void init(const std::string& name, int cin, int cout, int k, Rng& rng) {
    w.name = name + ".w";
    b.name = name + ".b";
    w.value.resize(cout, cin * k * k);
    const double limit = std::sqrt(6.0 / (cin * k * k));
    for (Eigen::Index i = 0; i < w.value.size(); ++i)
      w.value.data()[i] = static_cast<S>(rng.uniform(-limit, limit));
    b.value = nn::Mat<S>::Zero(cout, 1);
    w.zero_grad();
    b.zero_grad();
  }
};

// Frozen monocular backbone: image -> (relative depth, feature pyramid).
// Weights freeze after pretraining; bias terms stay tunable.
template <typename S>
class FoundationModel {
 public:
  using Node = typename nn::Graph<S>::Node;

  explicit FoundationModel(const ModelConfig& cfg, std::uint64_t init_seed = 0)
      : cfg_(cfg) {
    Rng rng(derive_seed(init_seed, 0x0f00));
    const auto& ch = cfg.foundation_channels;
    enc0_.init("foundation.enc0", 3, ch[0], 3, rng);
    enc1_.init("foundation.enc1", ch[0], ch[1], 3, rng);
    enc2_.init("foundation.enc2", ch[1], ch[2], 3, rng);
    enc3_.init("foundation.enc3", ch[2], ch[3], 3, rng);
    mid_.init("foundation.mid", ch[3], ch[3], 3, rng);
    dec2_.init("foundation.dec2", ch[3] + ch[2], ch[2], 3, rng);
    dec1_.init("foundation.dec1", ch[2] + ch[1], ch[1], 3, rng);
    dec0_.init("foundation.dec0", ch[1] + ch[0], ch[0], 3, rng);
    head_.init("foundation.head", ch[0], 1, 3, rng);
  }

  struct Out {
    Node* relative;               // strictly positive, softplus + floor
    std::array<Node*, 4> feats;   // encoder features, scales 1/1 .. 1/8
  };

  Out forward(nn::Graph<S>& g, Node* image) {
    const S sl = static_cast<S>(cfg_.lrelu_slope);
    Node* e0 = g.leaky_relu(g.conv2d(image, enc0_.w, enc0_.b, 1), sl);
    Node* e1 = g.leaky_relu(g.conv2d(e0, enc1_.w, enc1_.b, 2), sl);
    Node* e2 = g.leaky_relu(g.conv2d(e1, enc2_.w, enc2_.b, 2), sl);
    Node* e3 = g.leaky_relu(g.conv2d(e2, enc3_.w, enc3_.b, 2), sl);
    Node* m = g.leaky_relu(g.conv2d(e3, mid_.w, mid_.b, 1), sl);
    Node* u2 = g.leaky_relu(
        g.conv2d(g.concat({g.upsample_nearest(m, e2->value.height, e2->value.width), e2}),
                 dec2_.w, dec2_.b, 1),
        sl);
    Node* u1 = g.leaky_relu(
        g.conv2d(g.concat({g.upsample_nearest(u2, e1->value.height, e1->value.width), e1}),
                 dec1_.w, dec1_.b, 1),
        sl);
    Node* u0 = g.leaky_relu(
        g.conv2d(g.concat({g.upsample_nearest(u1, e0->value.height, e0->value.width), e0}),
                 dec0_.w, dec0_.b, 1),
        sl);
    Node* rel = g.softplus(g.conv2d(u0, head_.w, head_.b, 1),
                           static_cast<S>(cfg_.depth_floor));
    return {rel, {e0, e1, e2, e3}};
  }

  std::vector<nn::Param<S>*> parameters() {
    std::vector<nn::Param<S>*> out;
    for (ConvLayer<S>* l : layers()) {
      out.push_back(&l->w);
      out.push_back(&l->b);
    }
    return out;
  }

  const ModelConfig& config() const { return cfg_; }

  std::vector<ConvLayer<S>*> layers() {
    return {&enc0_, &enc1_, &enc2_, &enc3_, &mid_, &dec2_, &dec1_, &dec0_, &head_};
  }

 private:
  ModelConfig cfg_;
  ConvLayer<S> enc0_, enc1_, enc2_, enc3_, mid_, dec2_, dec1_, dec0_, head_;
};

// Prompt encoder over (masked depth, validity) plus the fusion decoder that
// emits the raw stencil^2 affinity channels.
template <typename S>
class PromptModule {
 public:
  using Node = typename nn::Graph<S>::Node;

  explicit PromptModule(const ModelConfig& cfg, std::uint64_t init_seed = 0)
      : cfg_(cfg) {
    Rng rng(derive_seed(init_seed, 0x9a0e));
    const auto& pc = cfg.prompt_channels;
    const auto& fc = cfg.foundation_channels;
    const auto& dc = cfg.decoder_channels;
    if (cfg.use_prompt) {
      enc0_.init("prompt.enc0", 2, pc[0], 3, rng);
      enc1_.init("prompt.enc1", pc[0], pc[1], 3, rng);
      enc2_.init("prompt.enc2", pc[1], pc[2], 3, rng);
      enc3_.init("prompt.enc3", pc[2], pc[3], 3, rng);
    }
    const int p3 = cfg.use_prompt ? pc[3] : 0;
    const int p2 = cfg.use_prompt ? pc[2] : 0;
    const int p1 = cfg.use_prompt ? pc[1] : 0;
    const int p0 = cfg.use_prompt ? pc[0] : 0;
    bott_.init("decoder.bott", p3 + fc[3], dc[3], 3, rng);
    l2_.init("decoder.l2", dc[3] + p2 + fc[2], dc[2], 3, rng);
    l1_.init("decoder.l1", dc[2] + p1 + fc[1], dc[1], 3, rng);
    l0_.init("decoder.l0", dc[1] + p0 + fc[0], dc[0], 3, rng);
    head_.init("decoder.head", dc[0], cfg.stencil * cfg.stencil, 3, rng);
  }

  // Sparse map -> multi-scale prompt features; the deepest level is the
  // prompt embedding.
  std::array<Node*, 4> encode(nn::Graph<S>& g, Node* sparse_2ch) {
    const S sl = static_cast<S>(cfg_.lrelu_slope);
    Node* d0 = g.leaky_relu(g.conv2d(sparse_2ch, enc0_.w, enc0_.b, 1), sl);
    Node* d1 = g.leaky_relu(g.conv2d(d0, enc1_.w, enc1_.b, 2), sl);
    Node* d2 = g.leaky_relu(g.conv2d(d1, enc2_.w, enc2_.b, 2), sl);
    Node* d3 = g.leaky_relu(g.conv2d(d2, enc3_.w, enc3_.b, 2), sl);
    return {d0, d1, d2, d3};
  }

  // Fuses prompt and image pyramids by concatenation at matching scales and
  // decodes the raw affinity at full resolution.
  Node* decode(nn::Graph<S>& g, const std::array<Node*, 4>* prompt_feats,
               const std::array<Node*, 4>& image_feats) {
    if (cfg_.use_prompt && !prompt_feats)
      throw ContractError("decode: prompt features required by this config");
    const S sl = static_cast<S>(cfg_.lrelu_slope);
    auto fuse = [&](Node* up, int level) {
      std::vector<Node*> parts;
      if (up) parts.push_back(up);
      if (cfg_.use_prompt) parts.push_back((*prompt_feats)[level]);
      parts.push_back(image_feats[level]);
      return g.concat(parts);
    };
    Node* x = g.leaky_relu(g.conv2d(fuse(nullptr, 3), bott_.w, bott_.b, 1), sl);
    x = g.upsample_nearest(x, image_feats[2]->value.height, image_feats[2]->value.width);
    x = g.leaky_relu(g.conv2d(fuse(x, 2), l2_.w, l2_.b, 1), sl);
    x = g.upsample_nearest(x, image_feats[1]->value.height, image_feats[1]->value.width);
    x = g.leaky_relu(g.conv2d(fuse(x, 1), l1_.w, l1_.b, 1), sl);
    x = g.upsample_nearest(x, image_feats[0]->value.height, image_feats[0]->value.width);
    x = g.leaky_relu(g.conv2d(fuse(x, 0), l0_.w, l0_.b, 1), sl);
    return g.conv2d(x, head_.w, head_.b, 1);  // raw affinity, stencil^2 ch
  }

  std::vector<nn::Param<S>*> parameters() {
    std::vector<nn::Param<S>*> out;
    if (cfg_.use_prompt)
      for (ConvLayer<S>* l : {&enc0_, &enc1_, &enc2_, &enc3_}) {
        out.push_back(&l->w);
        out.push_back(&l->b);
      }
    for (ConvLayer<S>* l : {&bott_, &l2_, &l1_, &l0_, &head_}) {
      out.push_back(&l->w);
      out.push_back(&l->b);
    }
    return out;
  }

  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
  ConvLayer<S> enc0_, enc1_, enc2_, enc3_;       // unused when !use_prompt
  ConvLayer<S> bott_, l2_, l1_, l0_, head_;
};

// Input encodings ------------------------------------------------------

// Sparse depth enters the network as (value, validity); the validity channel
// gates stored garbage at invalid pixels. The value channel is normalized by
// the mean valid measurement so the prompt embedding depends on the seed
// layout and relative structure, not on the sensor's absolute scan range —
// propagation itself is scale-equivariant, so the affinity has no use for
// absolute scale anyway.
template <typename S>
nn::Tensor<S> sparse_input_tensor(const SparseDepth& sparse) {
  nn::Tensor<S> t(2, static_cast<int>(sparse.rows()),
                  static_cast<int>(sparse.cols()));
  double sum = 0.0;
  long n = 0;
  for (int r = 0; r < t.height; ++r)
    for (int c = 0; c < t.width; ++c)
      if (sparse(r, c) > 0.0f) {
        sum += sparse(r, c);
        ++n;
      }
  const S inv_mean = n > 0 ? static_cast<S>(n / sum) : S(1);
  for (int r = 0; r < t.height; ++r)
    for (int c = 0; c < t.width; ++c) {
      const bool valid = sparse(r, c) > 0.0f;
      t.at(0, r, c) = valid ? static_cast<S>(sparse(r, c)) * inv_mean : S(0);
      t.at(1, r, c) = valid ? S(1) : S(0);
    }
  return t;
}

template <typename S>
nn::Tensor<S> image_input_tensor(const Image& image) {
  nn::Tensor<S> t(3, image.height(), image.width());
  for (int ch = 0; ch < 3; ++ch) {
    const auto& plane = image.planes[image.channels() == 3 ? ch : 0];
    for (int r = 0; r < t.height; ++r)
      for (int c = 0; c < t.width; ++c)
        t.at(ch, r, c) = static_cast<S>(plane(r, c));
  }
  return t;
}

// Bias tuning -----------------------------------------------------------

struct BiasTuningReport {
  long n_weight_values = 0;
  long n_bias_values = 0;
  double trainable_fraction = 0.0;
};

// Freezes every foundation weight; bias terms remain the only
// optimizer-visible foundation parameters.
template <typename S>
BiasTuningReport apply_bias_tuning(FoundationModel<S>& model) {
  BiasTuningReport rep;
  for (ConvLayer<S>* l : model.layers()) {
    l->w.trainable = false;
    l->b.trainable = true;
    rep.n_weight_values += l->w.size();
    rep.n_bias_values += l->b.size();
  }
  if (rep.n_bias_values == 0)
    throw ConfigError("apply_bias_tuning: model has no bias terms");
  rep.trainable_fraction =
      static_cast<double>(rep.n_bias_values) /
      static_cast<double>(rep.n_bias_values + rep.n_weight_values);
  return rep;
}

// Pipeline --------------------------------------------------------------

template <typename S>
struct PipelineNodes {
  typename nn::Graph<S>::Node* relative = nullptr;
  typename nn::Graph<S>::Node* initial_metric = nullptr;
  typename nn::Graph<S>::Node* final = nullptr;
  typename nn::Graph<S>::ScaleAlignInfo scale{};
};

// Composes backbone -> scale fit -> affinity decoding -> propagation on the
// given graph, honouring the config's ablation switches.
template <typename S>
PipelineNodes<S> build_pipeline(nn::Graph<S>& g, FoundationModel<S>& foundation,
                                PromptModule<S>& prompt, const Image& image,
                                const SparseDepth& sparse,
                                const PropagationConfig& prop_cfg) {
  const ModelConfig& cfg = prompt.config();
  PipelineNodes<S> out;

  auto* image_node = g.input(image_input_tensor<S>(image));
  auto found = foundation.forward(g, image_node);
  out.relative = found.relative;

  if (cfg.use_ls) {
    out.initial_metric = g.scale_align(found.relative, sparse, &out.scale);
  } else {
    out.initial_metric = found.relative;
    out.scale.p_hat = 1.0;
    out.scale.fallback = true;
  }

  if (!cfg.use_spn) {
    out.final = out.initial_metric;
    return out;
  }

  std::array<typename nn::Graph<S>::Node*, 4> prompt_feats{};
  if (cfg.use_prompt) {
    auto* sparse_node = g.input(sparse_input_tensor<S>(sparse));
    prompt_feats = prompt.encode(g, sparse_node);
  }
  auto* raw_aff = prompt.decode(g, cfg.use_prompt ? &prompt_feats : nullptr,
                                found.feats);
  auto* norm_aff = g.normalize_stencil(raw_aff);
  out.final = g.propagate(out.initial_metric, norm_aff, sparse, prop_cfg);
  return out;
}

// Convenience inference wrappers (pure given fixed parameters) -----------

template <typename S>
std::pair<DepthMap, FeaturePyramid<S>> predict_relative(
    const Image& image, FoundationModel<S>& model) {
  nn::Graph<S> g;
  auto* x = g.input(image_input_tensor<S>(image));
  auto out = model.forward(g, x);
  FeaturePyramid<S> pyr;
  for (auto* f : out.feats) pyr.levels.push_back(f->value);
  Raster<S> rel = nn::raster_from_tensor(out.relative->value, 0);
  return {rel.template cast<float>(), std::move(pyr)};
}

template <typename S>
FeaturePyramid<S> encode_prompt(const SparseDepth& sparse,
                                PromptModule<S>& module) {
  nn::Graph<S> g;
  auto* x = g.input(sparse_input_tensor<S>(sparse));
  auto feats = module.encode(g, x);
  FeaturePyramid<S> pyr;
  for (auto* f : feats) pyr.levels.push_back(f->value);
  return pyr;
}

// Raw affinity (caller normalizes via normalize_affinity).
template <typename S>
AffinityField decode_affinity(const FeaturePyramid<S>& prompt_pyr,
                              const FeaturePyramid<S>& image_pyr,
                              PromptModule<S>& module) {
  nn::Graph<S> g;
  std::array<typename nn::Graph<S>::Node*, 4> pf{}, imf{};
  for (int i = 0; i < 4; ++i) {
    if (module.config().use_prompt) pf[i] = g.input(prompt_pyr.levels[i]);
    imf[i] = g.input(image_pyr.levels[i]);
  }
  auto* raw = module.decode(g, module.config().use_prompt ? &pf : nullptr, imf);
  AffinityField field(module.config().stencil, raw->value.height,
                      raw->value.width);
  for (int k = 0; k < raw->value.channels; ++k)
    field.weights[k] =
        nn::raster_from_tensor(raw->value, k).template cast<float>();
  return field;
}

struct PipelineResult {
  DepthMap final;
  DepthMap initial_metric;
  ScaleFit fit;
  bool ls_fallback = false;
};

template <typename S>
PipelineResult forward_pipeline(const Image& image, const SparseDepth& sparse,
                                FoundationModel<S>& foundation,
                                PromptModule<S>& prompt,
                                const PropagationConfig& prop_cfg) {
  nn::Graph<S> g;
  auto nodes = build_pipeline(g, foundation, prompt, image, sparse, prop_cfg);
  PipelineResult out;
  out.final = nn::raster_from_tensor(nodes.final->value, 0).template cast<float>();
  out.initial_metric =
      nn::raster_from_tensor(nodes.initial_metric->value, 0).template cast<float>();
  out.fit.p_hat = nodes.scale.p_hat;
  out.fit.n_support = nodes.scale.n_support;
  out.fit.residual_norm = nodes.scale.residual_norm;
  out.ls_fallback = nodes.scale.fallback;
  return out;
}

}  // namespace dp
