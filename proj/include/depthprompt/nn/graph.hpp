#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "depthprompt/nn/tensor.hpp"
#include "depthprompt/propagation.hpp"

namespace dp::nn {

// Reverse-mode tape over channel-major tensors. Ops append nodes in
// topological order; backward() replays the closures in reverse. Nodes and
// their gradients live until the graph is destroyed, so one Graph instance
// should wrap exactly one forward/backward pass.
template <typename S>
class Graph {
 public:
  struct Node {
    Tensor<S> value;
    Tensor<S> grad;
    std::function<void()> backward;
  };

  Node* input(Tensor<S> v) { return make(std::move(v)); }

  // 3x3 (zero padding 1) or 1x1 convolution; stride 1 or 2.
  Node* conv2d(Node* x, Param<S>& w, Param<S>& b, int stride = 1) {
    const int cin = x->value.channels;
    const int cout = static_cast<int>(w.value.rows());
    const int k2 = static_cast<int>(w.value.cols()) / cin;
    if (k2 * cin != w.value.cols() || (k2 != 9 && k2 != 1))
      throw ContractError("conv2d: weight shape does not match input channels");
    const int k = k2 == 9 ? 3 : 1;
    const int pad = k == 3 ? 1 : 0;
    const int h = x->value.height, wd = x->value.width;
    const int ho = (h + 2 * pad - k) / stride + 1;
    const int wo = (wd + 2 * pad - k) / stride + 1;
    const int np = ho * wo;

    // Patch index per (tap, output pixel); -1 marks zero padding.
    auto indices = std::make_shared<std::vector<int>>(
        static_cast<std::size_t>(k2) * np);
    for (int ro = 0; ro < ho; ++ro)
      for (int co = 0; co < wo; ++co) {
        const int p = ro * wo + co;
        for (int ti = 0; ti < k; ++ti)
          for (int tj = 0; tj < k; ++tj) {
            const int ri = ro * stride + ti - pad;
            const int ci = co * stride + tj - pad;
            (*indices)[static_cast<std::size_t>(ti * k + tj) * np + p] =
                (ri >= 0 && ri < h && ci >= 0 && ci < wd) ? ri * wd + ci : -1;
          }
      }

    auto patches = std::make_shared<Mat<S>>(Mat<S>::Zero(cin * k2, np));
    for (int t = 0; t < k2; ++t)
      for (int p = 0; p < np; ++p) {
        const int idx = (*indices)[static_cast<std::size_t>(t) * np + p];
        if (idx >= 0) patches->block(t * cin, p, cin, 1) = x->value.data.col(idx);
      }

    Node* out = make(Tensor<S>(cout, ho, wo));
    out->value.data = w.value * (*patches);
    out->value.data.colwise() += b.value.col(0);

    Node* xn = x;
    Param<S>* wp = &w;
    Param<S>* bp = &b;
    out->backward = [this, out, xn, wp, bp, patches, indices, cin, k2, np]() {
      const Mat<S>& dy = out->grad.data;
      wp->grad.noalias() += dy * patches->transpose();
      bp->grad.col(0).noalias() += dy.rowwise().sum();
      Mat<S> dpatch = wp->value.transpose() * dy;
      for (int t = 0; t < k2; ++t)
        for (int p = 0; p < np; ++p) {
          const int idx = (*indices)[static_cast<std::size_t>(t) * np + p];
          if (idx >= 0)
            xn->grad.data.col(idx) += dpatch.block(t * cin, p, cin, 1);
        }
    };
    return out;
  }

  Node* leaky_relu(Node* x, S slope) {
    Node* out = make(Tensor<S>(x->value.channels, x->value.height, x->value.width));
    out->value.data =
        (x->value.data.array() > S(0))
            .select(x->value.data.array(), x->value.data.array() * slope);
    Node* xn = x;
    out->backward = [out, xn, slope]() {
      xn->grad.data.array() +=
          out->grad.data.array() *
          (xn->value.data.array() > S(0))
              .select(Mat<S>::Ones(xn->value.data.rows(), xn->value.data.cols()).array(),
                      Mat<S>::Constant(xn->value.data.rows(), xn->value.data.cols(), slope).array());
    };
    return out;
  }

  // softplus(x) + floor: strictly positive output, smooth gradient.
  Node* softplus(Node* x, S floor) {
    Node* out = make(Tensor<S>(x->value.channels, x->value.height, x->value.width));
    out->value.data = x->value.data.unaryExpr([floor](S v) {
      S sp = v > S(0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
      return sp + floor;
    });
    Node* xn = x;
    out->backward = [out, xn]() {
      Mat<S> sig = xn->value.data.unaryExpr(
          [](S v) { return S(1) / (S(1) + std::exp(-v)); });
      xn->grad.data.array() += out->grad.data.array() * sig.array();
    };
    return out;
  }

  // Nearest-neighbour upsample to (hi, wi); source must be the ceil-half.
  Node* upsample_nearest(Node* x, int hi, int wi) {
    if (x->value.height != (hi + 1) / 2 || x->value.width != (wi + 1) / 2)
      throw ContractError("upsample_nearest: source is not the ceil-half of target");
    Node* out = make(Tensor<S>(x->value.channels, hi, wi));
    const int ws = x->value.width;
    for (int r = 0; r < hi; ++r)
      for (int c = 0; c < wi; ++c)
        out->value.data.col(r * wi + c) =
            x->value.data.col((r / 2) * ws + (c / 2));
    Node* xn = x;
    out->backward = [out, xn, hi, wi, ws]() {
      for (int r = 0; r < hi; ++r)
        for (int c = 0; c < wi; ++c)
          xn->grad.data.col((r / 2) * ws + (c / 2)) +=
              out->grad.data.col(r * wi + c);
    };
    return out;
  }

  Node* concat(const std::vector<Node*>& xs) {
    if (xs.empty()) throw ContractError("concat: no inputs");
    int ctotal = 0;
    for (Node* x : xs) {
      if (x->value.height != xs[0]->value.height ||
          x->value.width != xs[0]->value.width)
        throw ContractError("concat: spatial shape mismatch");
      ctotal += x->value.channels;
    }
    Node* out = make(Tensor<S>(ctotal, xs[0]->value.height, xs[0]->value.width));
    int row = 0;
    for (Node* x : xs) {
      out->value.data.middleRows(row, x->value.channels) = x->value.data;
      row += x->value.channels;
    }
    std::vector<Node*> parents = xs;
    out->backward = [out, parents]() {
      int row = 0;
      for (Node* x : parents) {
        x->grad.data += out->grad.data.middleRows(row, x->value.channels);
        row += x->value.channels;
      }
    };
    return out;
  }

  // Per-pixel stencil normalization: w_k = |r_k| / sum |r|; all-zero pixels
  // become a one-hot center. Matches dp::normalize_affinity bit for bit when
  // S = float.
  Node* normalize_stencil(Node* x) {
    const int planes = x->value.channels;
    const int stencil = static_cast<int>(std::lround(std::sqrt(double(planes))));
    if (stencil * stencil != planes || stencil % 2 == 0 || stencil < 3)
      throw ContractError("normalize_stencil: channel count is not an odd stencil^2");
    const int center = (planes - 1) / 2;
    const int np = x->value.pixels();

    Node* out = make(Tensor<S>(planes, x->value.height, x->value.width));
    auto sums = std::make_shared<std::vector<double>>(np, 0.0);
    for (int p = 0; p < np; ++p) {
      double sum = 0.0;
      for (int k = 0; k < planes; ++k)
        sum += std::abs(static_cast<double>(x->value.data(k, p)));
      (*sums)[p] = sum;
      if (sum == 0.0) {
        out->value.data(center, p) = S(1);
      } else {
        for (int k = 0; k < planes; ++k)
          out->value.data(k, p) = static_cast<S>(
              std::abs(static_cast<double>(x->value.data(k, p))) / sum);
      }
    }
    Node* xn = x;
    out->backward = [out, xn, sums, planes, np]() {
      for (int p = 0; p < np; ++p) {
        const double sum = (*sums)[p];
        if (sum == 0.0) continue;
        S dot = out->grad.data.col(p).dot(out->value.data.col(p));
        for (int k = 0; k < planes; ++k) {
          S r = xn->value.data(k, p);
          S sgn = r > S(0) ? S(1) : (r < S(0) ? S(-1) : S(0));
          xn->grad.data(k, p) +=
              sgn * (out->grad.data(k, p) - dot) / static_cast<S>(sum);
        }
      }
    };
    return out;
  }

  struct ScaleAlignInfo {
    double p_hat = 1.0;
    bool fallback = false;
    long n_support = 0;
    double residual_norm = 0.0;
  };

  // Least-squares scale to the seed set, then multiply. Falls back to
  // p_hat = 1 (treated as a constant in the backward pass) when the support
  // is empty, degenerate, or yields a non-positive scale.
  Node* scale_align(Node* rel, const Raster<float>& sparse, ScaleAlignInfo* info) {
    if (rel->value.channels != 1)
      throw ContractError("scale_align: expects a single-channel tensor");
    const int np = rel->value.pixels();
    if (static_cast<int>(sparse.size()) != np)
      throw ContractError("scale_align: sparse shape mismatch");
    const int width = rel->value.width;

    auto support = std::make_shared<std::vector<int>>();
    double num = 0.0, den = 0.0;
    for (int r = 0; r < static_cast<int>(sparse.rows()); ++r)
      for (int c = 0; c < static_cast<int>(sparse.cols()); ++c)
        if (sparse(r, c) > 0.0f) {
          const int p = r * width + c;
          support->push_back(p);
          double d = rel->value.data(0, p);
          num += d * sparse(r, c);
          den += d * d;
        }
    ScaleAlignInfo local;
    local.n_support = static_cast<long>(support->size());
    if (!support->empty() && den > 0.0) {
      double p = num / den;
      if (p > 0.0)
        local.p_hat = p;
      else
        local.fallback = true;
    } else {
      local.fallback = true;
    }
    {
      double res = 0.0;
      for (int p : *support) {
        int r = p / width, c = p % width;
        double e = local.p_hat * rel->value.data(0, p) - sparse(r, c);
        res += e * e;
      }
      local.residual_norm = std::sqrt(res);
    }
    if (info) *info = local;

    Node* out = make(Tensor<S>(1, rel->value.height, rel->value.width));
    out->value.data = rel->value.data * static_cast<S>(local.p_hat);

    Node* xn = rel;
    auto sp = std::make_shared<Raster<float>>(sparse);
    out->backward = [out, xn, sp, support, local, den, width]() {
      const S p_hat = static_cast<S>(local.p_hat);
      xn->grad.data += out->grad.data * p_hat;
      if (local.fallback) return;
      double cg = 0.0;
      for (int p = 0; p < xn->value.pixels(); ++p)
        cg += static_cast<double>(out->grad.data(0, p)) * xn->value.data(0, p);
      for (int p : *support) {
        int r = p / width, c = p % width;
        double d = xn->value.data(0, p);
        double dpdd = ((*sp)(r, c) - 2.0 * d * local.p_hat) / den;
        xn->grad.data(0, p) += static_cast<S>(cg * dpdd);
      }
    };
    return out;
  }

  // Unrolled spatial propagation (see dp::propagate_kernel). Gradients flow
  // into the initial map and the normalized affinity; seeds are constants.
  // The hull clamp is treated as identity in the backward pass.
  Node* propagate(Node* init, Node* affinity, const Raster<float>& seeds,
                  const PropagationConfig& cfg) {
    if (init->value.channels != 1)
      throw ContractError("propagate: initial map must have one channel");
    const int planes = affinity->value.channels;
    const int stencil = static_cast<int>(std::lround(std::sqrt(double(planes))));
    if (stencil * stencil != planes)
      throw ContractError("propagate: affinity channels must be a square");
    const int h = init->value.height, w = init->value.width;
    if (affinity->value.height != h || affinity->value.width != w)
      throw ContractError("propagate: affinity shape mismatch");

    auto weights = std::make_shared<std::vector<Raster<S>>>();
    weights->reserve(planes);
    for (int k = 0; k < planes; ++k)
      weights->push_back(raster_from_tensor(affinity->value, k));

    Raster<S> seeds_s = seeds.size() > 0 ? Raster<S>(seeds.cast<S>())
                                         : Raster<S>();
    Raster<S> init_r = raster_from_tensor(init->value, 0);
    auto trace = std::make_shared<std::vector<Raster<S>>>();
    Raster<S> final_r = propagate_kernel<S>(init_r, seeds_s, *weights, stencil,
                                            cfg.n_steps, cfg.seed_reinjection,
                                            trace.get());
    Node* out = make(tensor_from_raster(final_r));

    Node* in = init;
    Node* an = affinity;
    auto seeds_keep = std::make_shared<Raster<S>>(std::move(seeds_s));
    out->backward = [this, out, in, an, weights, trace, seeds_keep, cfg,
                     stencil, planes, h, w]() {
      const int radius = (stencil - 1) / 2;
      const int center = (planes - 1) / 2;
      const bool reinject = cfg.seed_reinjection && seeds_keep->size() > 0;
      const Raster<S>& d0 = (*trace)[0];

      Raster<S> g = raster_from_tensor(out->grad, 0);
      Raster<S> g_init = Raster<S>::Zero(h, w);
      std::vector<Raster<S>> g_w(planes, Raster<S>::Zero(h, w));

      for (int t = cfg.n_steps; t >= 1; --t) {
        if (reinject)
          g = (*seeds_keep > S(0)).select(Raster<S>::Zero(h, w), g);
        const Raster<S>& prev = (*trace)[t - 1];
        g_init += g * (*weights)[center];
        g_w[center] += g * d0;
        Raster<S> g_prev = Raster<S>::Zero(h, w);
        for (int k = 0; k < planes; ++k) {
          if (k == center) continue;
          const int dr = k / stencil - radius, dc = k % stencil - radius;
          g_w[k] += g * shift_clamp(prev, dr, dc);
          for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
              int rr = std::clamp(r + dr, 0, h - 1);
              int cc = std::clamp(c + dc, 0, w - 1);
              g_prev(rr, cc) += g(r, c) * (*weights)[k](r, c);
            }
        }
        g = std::move(g_prev);
      }
      g_init += g;  // D^0 is the initial map itself

      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) in->grad.data(0, r * w + c) += g_init(r, c);
      for (int k = 0; k < planes; ++k)
        for (int r = 0; r < h; ++r)
          for (int c = 0; c < w; ++c)
            an->grad.data(k, r * w + c) += g_w[k](r, c);
    };
    return out;
  }

  // Seeds dL/dnode for the backward sweep.
  void seed_gradient(Node* node, const Raster<double>& grad, int channel = 0) {
    for (int r = 0; r < node->value.height; ++r)
      for (int c = 0; c < node->value.width; ++c)
        node->grad.data(channel, r * node->value.width + c) +=
            static_cast<S>(grad(r, c));
  }

  void backward() {
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
      if ((*it)->backward) (*it)->backward();
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  Node* make(Tensor<S> value) {
    auto node = std::make_unique<Node>();
    node->value = std::move(value);
    node->grad = Tensor<S>(node->value.channels, node->value.height,
                           node->value.width);
    nodes_.push_back(std::move(node));
    return nodes_.back().get();
  }

  std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace dp::nn
