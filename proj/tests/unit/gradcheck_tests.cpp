#include <doctest.h>

#include "geotr/encoder.hpp"
#include "geotr/gradcheck.hpp"
#include "geotr/loss.hpp"
#include "geotr/lstm.hpp"
#include "geotr/model.hpp"
#include "geotr/projection.hpp"
#include "geotr/rng.hpp"
#include "geotr/tcn.hpp"

using namespace geotr;

namespace {

void randomize(DTensor& t, Rng& rng, double scale = 0.5) {
  for (double& v : t.data) v = rng.uniform(-scale, scale);
}

// Loss: weighted sum of the output against a fixed sheet, so the gradient
// check exercises a generic upstream signal and not just all-ones.
DTensor weight_sheet(const std::vector<int>& shape, Rng& rng) {
  DTensor up(shape);
  randomize(up, rng, 1.0);
  return up;
}

double dot(const DTensor& a, const DTensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

}  // namespace

TEST_SUITE("gradcheck") {

TEST_CASE("harness sanity on a quadratic") {
  DTensor w({3});
  w.data = {1.0, -2.0, 0.5};
  GradCheckProblem p;
  p.params = {&w};
  p.value = [&]() {
    return 0.5 * (w.data[0] * w.data[0] + 3.0 * w.data[1] * w.data[1]) +
           w.data[2] * w.data[0];
  };
  p.analytic = [&]() {
    DTensor g({3});
    g.data = {w.data[0] + w.data[2], 3.0 * w.data[1], w.data[0]};
    return std::vector<DTensor>{g};
  };
  CHECK(grad_check(p) < 1e-7);
}

TEST_CASE("harness flags a wrong gradient") {
  DTensor w({1});
  w.data = {2.0};
  GradCheckProblem p;
  p.params = {&w};
  p.value = [&]() { return w.data[0] * w.data[0]; };
  p.analytic = [&]() {
    DTensor g({1});
    g.data = {3.0 * w.data[0]};  // deliberately off by 1.5x
    return std::vector<DTensor>{g};
  };
  CHECK(grad_check(p) > 0.1);
}

TEST_CASE("lstm sequence backward") {
  Rng rng(41);
  const int input = 3, hidden = 4, steps = 5;
  BasicLstmParams<double> lstm(input, hidden);
  randomize(lstm.wx, rng);
  randomize(lstm.wh, rng);
  randomize(lstm.b, rng);
  DTensor xt({steps, input});
  randomize(xt, rng);
  DTensor up = weight_sheet({steps, hidden}, rng);

  GradCheckProblem p;
  p.params = {&lstm.wx, &lstm.wh, &lstm.b, &xt};
  p.value = [&]() {
    LstmCache<double> cache;
    return dot(lstm_seq_forward(xt, lstm, &cache), up);
  };
  p.analytic = [&]() {
    LstmCache<double> cache;
    lstm_seq_forward(xt, lstm, &cache);
    BasicLstmParams<double> grads(input, hidden);
    grads.wx.fill(0.0);
    grads.wh.fill(0.0);
    grads.b.fill(0.0);
    DTensor dxt(xt.shape);
    lstm_seq_backward(lstm, cache, up, grads, &dxt);
    return std::vector<DTensor>{grads.wx, grads.wh, grads.b, dxt};
  };
  CHECK(grad_check(p) < 1e-4);
}

TEST_CASE("tcn stack backward") {
  Rng rng(43);
  EncoderConfig cfg;
  cfg.kind = "tcn";
  cfg.image_height = 3;
  cfg.tcn_kernel = 3;
  cfg.tcn_levels = {{4, 1}, {5, 2}};
  BasicEncoderParams<double> enc(cfg);
  Rng init_rng(7);
  init_encoder(enc, cfg, init_rng);
  for (auto& blk : enc.blocks) {
    randomize(blk.w, rng);
    randomize(blk.b, rng);
    if (blk.has_projection()) {
      randomize(blk.wr, rng);
      randomize(blk.br, rng);
    }
  }
  DTensor x({3, 9});
  randomize(x, rng);
  DTensor up = weight_sheet({5, 9}, rng);

  std::vector<DTensor*> params = {&x};
  for (auto& blk : enc.blocks) {
    params.push_back(&blk.w);
    params.push_back(&blk.b);
    if (blk.has_projection()) {
      params.push_back(&blk.wr);
      params.push_back(&blk.br);
    }
  }

  GradCheckProblem p;
  p.params = params;
  p.value = [&]() { return dot(tcn_forward(x, enc.blocks), up); };
  p.analytic = [&]() {
    TcnCache<double> caches;
    tcn_forward(x, enc.blocks, &caches);
    BasicEncoderParams<double> grads(cfg);
    for (auto& blk : grads.blocks) {
      blk.w.fill(0.0);
      blk.b.fill(0.0);
      if (blk.has_projection()) {
        blk.wr.fill(0.0);
        blk.br.fill(0.0);
      }
    }
    DTensor dx(x.shape);
    tcn_backward(enc.blocks, caches, up, grads.blocks, &dx);
    std::vector<DTensor> out = {dx};
    for (auto& blk : grads.blocks) {
      out.push_back(blk.w);
      out.push_back(blk.b);
      if (blk.has_projection()) {
        out.push_back(blk.wr);
        out.push_back(blk.br);
      }
    }
    return out;
  };
  // ReLU kinks can sit arbitrarily close to a sampled point; the random
  // draw here keeps pre-activations away from zero in practice.
  CHECK(grad_check(p) < 1e-4);
}

TEST_CASE("projection head backward") {
  Rng rng(47);
  const int classes = 3, features = 4, width = 6, slots = 2;
  BasicProjectionParams<double> proj(classes, features, 3, slots, width, 1);
  randomize(proj.class_w, rng);
  randomize(proj.class_b, rng);
  randomize(proj.slot_w, rng);
  randomize(proj.slot_b, rng);
  DTensor latent({features, width});
  randomize(latent, rng);
  DTensor up = weight_sheet({slots, classes}, rng);

  GradCheckProblem p;
  p.params = {&proj.class_w, &proj.class_b, &proj.slot_w, &proj.slot_b,
              &latent};
  p.value = [&]() { return dot(project(latent, proj), up); };
  p.analytic = [&]() {
    ProjectionCache<double> cache;
    project(latent, proj, &cache);
    BasicProjectionParams<double> grads(classes, features, 3, slots, width, 1);
    grads.class_w.fill(0.0);
    grads.class_b.fill(0.0);
    grads.slot_w.fill(0.0);
    grads.slot_b.fill(0.0);
    DTensor dlatent(latent.shape);
    project_backward(proj, cache, up, grads, &dlatent);
    return std::vector<DTensor>{grads.class_w, grads.class_b, grads.slot_w,
                                grads.slot_b, dlatent};
  };
  CHECK(grad_check(p) < 1e-4);
}

TEST_CASE("full model backward through the loss, both encoders") {
  for (const char* kind : {"bilstm", "tcn"}) {
    CAPTURE(kind);
    ModelConfig cfg;
    cfg.width = 12;
    cfg.height = 6;
    cfg.slots = 2;
    cfg.classes = 3;
    cfg.labels = "abc";
    cfg.encoder.kind = kind;
    cfg.encoder.hidden_per_dir = 4;
    cfg.encoder.second_width = 5;
    cfg.encoder.tcn_levels = {{4, 1}, {5, 2}};
    BasicModel<double> model(cfg);
    model.init(3);

    Rng rng(53);
    DTensor img({6, 12});
    for (double& v : img.data) v = rng.uniform(0.0, 1.0);
    const std::vector<int> labels = {1, 2};

    std::vector<DTensor*> params;
    model.for_each_param(
        [&](const std::string&, DTensor& t) { params.push_back(&t); });
    params.push_back(&img);

    GradCheckProblem p;
    p.params = params;
    p.value = [&]() { return cce_loss(model.forward(img), labels); };
    p.analytic = [&]() {
      ModelCache<double> cache;
      DTensor probs = model.forward(img, &cache);
      DTensor grad_probs = cce_backward(probs, labels);
      BasicModel<double> grads(cfg);
      grads.zero_params();
      DTensor dimg(img.shape);
      model.backward(cache, grad_probs, grads, &dimg);
      std::vector<DTensor> out;
      grads.for_each_param(
          [&](const std::string&, const DTensor& t) { out.push_back(t); });
      out.push_back(dimg);
      return out;
    };
    CHECK(grad_check(p) < 1e-4);
  }
}

}  // TEST_SUITE
