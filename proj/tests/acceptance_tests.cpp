// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line. Criterion 6 trains the bias-study variants over five seeds and is the
// long pole; everything else runs in seconds.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <thread>

#include "depthprompt/checkpoint.hpp"
#include "depthprompt/harness/bias_study.hpp"
#include "depthprompt/harness/evaluate.hpp"
#include "depthprompt/harness/train.hpp"
#include "depthprompt/nn/adam.hpp"
#include "test_util.hpp"

using namespace dp;

namespace {

struct Criterion {
  std::string name;
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }

  ~Criterion() {
    std::printf("[acceptance] %s: %s%s%s\n", name.c_str(),
                ok ? "PASS" : "FAIL", detail.empty() ? "" : " -- ",
                detail.c_str());
    std::fflush(stdout);
  }
};

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("criterion 1: least-squares scale solver optimality") {
  Criterion crit{"criterion 1 (LS solver: orthogonality + grid optimality)"};
  const double t0 = now_seconds();
  Rng rng(101);
  for (int i = 0; i < 1000 && crit.ok; ++i) {
    const int h = 4 + rng.uniform_int(13), w = 4 + rng.uniform_int(13);
    DepthMap rel = dptest::random_depth(h, w, rng, 0.05, 8.0);
    SparseDepth sparse = SparseDepth::Zero(h, w);
    const int n = 1 + rng.uniform_int(h * w / 2);
    for (int k = 0; k < n; ++k)
      sparse(rng.uniform_int(h), rng.uniform_int(w)) =
          static_cast<float>(rng.uniform(0.05, 12.0));

    ScaleFit fit = fit_scale(rel, sparse);

    double dot = 0, nd = 0, ns = 0, best = 0;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c)
        if (sparse(r, c) > 0.0f) {
          const double d = rel(r, c), s = sparse(r, c);
          dot += d * (fit.p_hat * d - s);
          nd += d * d;
          ns += s * s;
          const double e = fit.p_hat * d - s;
          best += e * e;
        }
    crit.require(std::abs(dot) <= 1e-9 * std::sqrt(nd) * std::sqrt(ns) + 1e-18,
                 "orthogonality violated at instance " + std::to_string(i));

    const double lo = fit.p_hat / 2.0, hi = fit.p_hat * 2.0;
    for (int gidx = 0; gidx <= 10000; ++gidx) {
      const double p = lo + gidx * (hi - lo) / 10000.0;
      double res = 0;
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
          if (sparse(r, c) > 0.0f) {
            const double e = p * rel(r, c) - sparse(r, c);
            res += e * e;
          }
      if (best > res + 1e-12) {
        crit.require(false, "grid point beats the closed form at instance " +
                                std::to_string(i));
        break;
      }
    }
  }
  const double elapsed = now_seconds() - t0;
  crit.require(elapsed < 10.0,
               "runtime " + std::to_string(elapsed) + "s exceeds 10s");
  CHECK_MESSAGE(crit.ok, crit.detail);
}

TEST_CASE("criterion 2: propagation convexity and reference agreement") {
  Criterion crit{"criterion 2 (propagation convexity + bitwise oracle)"};
  const double t0 = now_seconds();
  Rng rng(202);
  for (int i = 0; i < 200 && crit.ok; ++i) {
    const int h = 3 + rng.uniform_int(30), w = 3 + rng.uniform_int(30);
    const int stencil = rng.uniform() < 0.5 ? 3 : 7;
    const int radius = (stencil - 1) / 2;
    DepthMap initial = dptest::random_depth(h, w, rng, 0.1, 9.5);
    AffinityField raw(stencil, h, w);
    for (auto& plane : raw.weights)
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
          plane(r, c) = static_cast<float>(rng.uniform(-1.0, 1.0));
    AffinityField aff = normalize_affinity(raw);

    PropagationConfig cfg;
    cfg.n_steps = 1 + rng.uniform_int(6);
    cfg.seed_reinjection = false;

    std::vector<Raster<float>> trace;
    DepthMap out = propagate_kernel<float>(initial, SparseDepth(), aff.weights,
                                           stencil, cfg.n_steps, false, &trace);
    DepthMap ref = propagate_reference(initial, SparseDepth(), aff, cfg);
    crit.require((out == ref).all(),
                 "reference mismatch at instance " + std::to_string(i));

    for (std::size_t t = 1; t < trace.size() && crit.ok; ++t) {
      const auto& prev = trace[t - 1];
      const auto& next = trace[t];
      for (int r = 0; r < h && crit.ok; ++r)
        for (int c = 0; c < w; ++c) {
          float lo = initial(r, c), hi = initial(r, c);
          for (int dr = -radius; dr <= radius; ++dr)
            for (int dc = -radius; dc <= radius; ++dc) {
              if (dr == 0 && dc == 0) continue;
              lo = std::min(lo, prev(std::clamp(r + dr, 0, h - 1),
                                     std::clamp(c + dc, 0, w - 1)));
              hi = std::max(hi, prev(std::clamp(r + dr, 0, h - 1),
                                     std::clamp(c + dc, 0, w - 1)));
            }
          if (!(next(r, c) >= lo && next(r, c) <= hi)) {
            crit.require(false, "hull violated at instance " + std::to_string(i));
            break;
          }
        }
      crit.require(next.minCoeff() >=
                       std::min(initial.minCoeff(), prev.minCoeff()),
                   "global min not monotone");
      crit.require(next.maxCoeff() <=
                       std::max(initial.maxCoeff(), prev.maxCoeff()),
                   "global max not monotone");
    }
  }
  const double elapsed = now_seconds() - t0;
  crit.require(elapsed < 60.0,
               "runtime " + std::to_string(elapsed) + "s exceeds 60s");
  CHECK_MESSAGE(crit.ok, crit.detail);
}

TEST_CASE("criterion 3: loss gradients against finite differences") {
  Criterion crit{"criterion 3 (loss gradient checks + SI scale invariance)"};
  Rng rng(303);

  auto fd_check = [&](auto value_fn, const Raster<double>& analytic,
                      Raster<double>& pred) {
    double worst = 0.0;
    for (int r = 0; r < pred.rows(); ++r)
      for (int c = 0; c < pred.cols(); ++c) {
        const double keep = pred(r, c);
        const double step = 1e-5;
        pred(r, c) = keep + step;
        const double up = value_fn();
        pred(r, c) = keep - step;
        const double down = value_fn();
        pred(r, c) = keep;
        const double num = (up - down) / (2 * step);
        const double ref = analytic(r, c);
        const double denom = std::max({std::abs(num), std::abs(ref), 1e-8});
        worst = std::max(worst, std::abs(num - ref) / denom);
      }
    return worst;
  };

  for (int i = 0; i < 50 && crit.ok; ++i) {
    Raster<double> gt(8, 8), pred(8, 8);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        gt(r, c) = rng.uniform() < 0.15 ? 0.0 : rng.uniform(0.3, 7.0);
        pred(r, c) = rng.uniform(0.3, 7.0);
      }
    if ((gt > 0.0).count() == 0) continue;

    for (double lambda : {0.85, 1.0}) {
      LossResult si = loss_si(pred, gt, lambda);
      const double worst = fd_check(
          [&]() { return loss_si(pred, gt, lambda).value; }, si.grad, pred);
      crit.require(worst < 1e-4, "SI gradient error " + std::to_string(worst));
    }
    LossResult comb = loss_comb(pred, gt);
    const double worst = fd_check([&]() { return loss_comb(pred, gt).value; },
                                  comb.grad, pred);
    crit.require(worst < 1e-4, "comb gradient error " + std::to_string(worst));

    const double base = loss_si(pred, gt, 1.0).value;
    for (double c : {0.31, 3.7}) {
      const double scaled = loss_si((pred * c).eval(), gt, 1.0).value;
      crit.require(std::abs(scaled - base) <= 1e-10,
                   "SI not scale invariant at lambda=1");
    }
  }
  CHECK_MESSAGE(crit.ok, crit.detail);
}

TEST_CASE("criterion 4: bias tuning freezes the backbone") {
  Criterion crit{"criterion 4 (bias tuning: frozen weights + <1% trainable)"};
  ModelConfig cfg;  // default desk-scale model
  FoundationModel<float> model(cfg, 404);
  PromptModule<float> prompt(cfg, 405);
  BiasTuningReport rep = apply_bias_tuning(model);
  crit.require(rep.trainable_fraction < 0.01,
               "trainable fraction " + std::to_string(rep.trainable_fraction));

  std::vector<nn::Mat<float>> before;
  for (auto* l : model.layers()) before.push_back(l->w.value);

  SceneSpec scene;
  scene.height = 32;
  scene.width = 32;
  scene.rng_seed = 11;
  auto [image, gt] = generate_scene(scene);
  SparseDepth sparse = sample_random(gt, 100, 5);

  std::vector<nn::Param<float>*> params = model.parameters();
  for (auto* p : prompt.parameters()) params.push_back(p);
  nn::Adam<float> adam(params);
  for (auto* p : params) p->zero_grad();

  PropagationConfig prop;
  for (int step = 0; step < 10; ++step) {
    nn::Graph<float> g;
    auto nodes = build_pipeline(g, model, prompt, image, sparse, prop);
    Raster<double> final_d =
        nn::raster_from_tensor(nodes.final->value, 0).cast<double>();
    Raster<double> init_d =
        nn::raster_from_tensor(nodes.initial_metric->value, 0).cast<double>();
    Raster<double> gt_d = gt.cast<double>();
    LossResult comb = loss_comb(final_d, gt_d);
    LossResult si = loss_si(init_d, gt_d, 0.85);
    g.seed_gradient(nodes.final, comb.grad);
    g.seed_gradient(nodes.initial_metric, (si.grad * 0.1).eval());
    g.backward();
    adam.step(2e-3);
    for (auto* p : params) p->zero_grad();
  }

  auto layers = model.layers();
  for (std::size_t i = 0; i < layers.size(); ++i)
    crit.require((layers[i]->w.value.array() == before[i].array()).all(),
                 "frozen weight " + layers[i]->w.name + " changed");
  CHECK_MESSAGE(crit.ok, crit.detail);
}

TEST_CASE("criterion 5: hand-computed fixtures") {
  Criterion crit{"criterion 5 (hand-computed fixtures + metrics oracle)"};

  {  // SI single-pixel case
    Raster<double> gt(1, 1), pred(1, 1);
    gt << 1.0;
    pred << 2.0;
    const double expect = 0.15 * std::log(2.0) * std::log(2.0);
    crit.require(std::abs(loss_si(pred, gt, 0.85).value - expect) <= 1e-9,
                 "SI single-pixel fixture");
  }
  {  // comb constant-error case
    Raster<double> gt = Raster<double>::Constant(3, 3, 2.0);
    Raster<double> pred = gt + 0.5;
    crit.require(std::abs(loss_comb(pred, gt).value - 0.75) <= 1e-12,
                 "comb constant-error fixture");
  }
  {  // grid sampler enumeration
    DepthMap gt = DepthMap::Constant(4, 4, 3.0f);
    SparseDepth s = sample_grid(gt, 2, {0, 0});
    bool exact = valid_count(s) == 4 && s(0, 0) == 3.0f && s(0, 2) == 3.0f &&
                 s(2, 0) == 3.0f && s(2, 2) == 3.0f;
    crit.require(exact, "grid 4x4 stride-2 enumeration");
  }
  {  // metrics vs brute force
    Rng rng(505);
    for (int i = 0; i < 100 && crit.ok; ++i) {
      const int h = 2 + rng.uniform_int(14), w = 2 + rng.uniform_int(14);
      DepthMap gt = dptest::random_depth(h, w, rng, 0.1, 9.0, 0.25);
      DepthMap pred = dptest::random_depth(h, w, rng, 0.1, 9.0, 0.0);
      if (valid_count(gt) == 0) continue;
      MetricReport m = compute_metrics(pred, gt, 1e-6);
      double sse = 0, sae = 0;
      long n = 0, inl = 0;
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const double g = gt(r, c), p = pred(r, c);
          if (!(g > 0.0) || g < 1e-6) continue;
          sse += (p - g) * (p - g);
          sae += std::abs(p - g);
          if (std::max(p / g, g / p) < 1.25) ++inl;
          ++n;
        }
      crit.require(m.n_valid == n, "metrics count mismatch");
      crit.require(std::abs(m.rmse - std::sqrt(sse / n)) <= 1e-9, "rmse oracle");
      crit.require(std::abs(m.mae - sae / n) <= 1e-9, "mae oracle");
      crit.require(std::abs(m.delta1 - double(inl) / n) <= 1e-12, "delta1 oracle");
    }
  }
  CHECK_MESSAGE(crit.ok, crit.detail);
}

TEST_CASE("criterion 7: bitwise determinism of samplers, checkpoints, reports") {
  Criterion crit{"criterion 7 (bitwise determinism)"};
  setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
  auto dir = dptest::scratch_dir("acceptance7");

  {  // samplers
    Rng rng(707);
    DepthMap gt = dptest::random_depth(24, 24, rng, 0.5, 9.0, 0.1);
    crit.require(dptest::bitwise_equal(sample_random(gt, 50, 9),
                                       sample_random(gt, 50, 9)),
                 "sample_random not deterministic");
    crit.require(dptest::bitwise_equal(sample_lines(gt, 3, 11),
                                       sample_lines(gt, 3, 11)),
                 "sample_lines not deterministic");
    BiasSpec spec;
    spec.sample_count = 120;
    crit.require(dptest::bitwise_equal(rda_sample(gt, {spec}, 13),
                                       rda_sample(gt, {spec}, 13)),
                 "rda_sample not deterministic");
  }

  {  // training twice from one config -> identical parameter blobs
    CorpusSpec cs;
    cs.scene.height = 24;
    cs.scene.width = 32;
    cs.scene.rng_seed = 70;
    cs.count = 10;
    Corpus corpus = generate_corpus(cs, dir / "corpus");

    RunConfig cfg;
    cfg.corpus = corpus.dir;
    cfg.split = {3, 8, 0, 2};
    cfg.stage = "foundation";
    cfg.model.foundation_channels = {6, 8, 10, 12};
    cfg.model.prompt_channels = {6, 8, 10, 12};
    cfg.model.decoder_channels = {6, 8, 10, 12};
    cfg.model.stencil = 3;
    cfg.epochs = 1;
    cfg.train_bias.sample_count = 40;
    cfg.test_bias.sample_count = 40;
    cfg.seed = 77;

    cfg.checkpoint_out = dir / "a.ckpt";
    train(cfg);
    cfg.checkpoint_out = dir / "b.ckpt";
    train(cfg);
    Checkpoint a = load_checkpoint(dir / "a.ckpt");
    Checkpoint b = load_checkpoint(dir / "b.ckpt");
    for (const auto& [name, m] : a.tensors)
      crit.require((m.array() == b.tensors.at(name).array()).all(),
                   "parameter blob differs: " + name);

    // Study runner twice -> byte-identical JSON.
    StudyConfig sc;
    sc.corpus = corpus.dir;
    sc.base = cfg;
    sc.base.stage = "prompt";
    sc.base.foundation_checkpoint = dir / "a.ckpt";
    StudyCondition cond;
    cond.axis = "sparsity";
    cond.train = cfg.train_bias;
    cond.tests = {cfg.train_bias};
    cond.variants = {"full"};
    sc.conditions = {cond};
    sc.train_missing = true;
    sc.write_plots = false;

    sc.checkpoint_dir = dir / "study_ck";
    sc.out_dir = dir / "study_out";
    run_bias_study(sc);
    std::string j1 = file_bytes(sc.out_dir / "study.json");
    // Full rerun of the identical config from scratch.
    std::filesystem::remove_all(sc.checkpoint_dir);
    std::filesystem::remove_all(sc.out_dir);
    run_bias_study(sc);
    std::string j2 = file_bytes(sc.out_dir / "study.json");
    crit.require(!j1.empty() && j1 == j2, "StudyReport JSON differs");
  }

  unsetenv("SOURCE_DATE_EPOCH");
  CHECK_MESSAGE(crit.ok, crit.detail);
}
