#include "geotr/train.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numeric>

#include "geotr/loss.hpp"
#include "geotr/optimizer.hpp"
#include "geotr/threading.hpp"

namespace geotr {
namespace {

using nlohmann::json;

std::vector<Tensor*> flat_params(Model& m) {
  std::vector<Tensor*> out;
  m.for_each_param(
      [&](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

int argmax_row(const Tensor& probs, int row) {
  const float* r = probs.row(row);
  int best = 0;
  for (int c = 1; c < probs.dim(1); ++c)
    if (r[c] > r[best]) best = c;
  return best;
}

void check_labels(const DatasetHandle& data, int classes, const char* which) {
  for (const auto& lab : data.labels)
    for (int y : lab)
      if (y < 0 || y >= classes)
        throw DimensionError(std::string("train: ") + which +
                             " label outside the model's class range");
}

}  // namespace

double exact_match_accuracy(const Model& model, const DatasetHandle& data) {
  const int n = data.count();
  std::vector<char> ok(n, 0);
  parallel_for(n, [&](int i) {
    const Tensor probs = model.forward(data.image(i));
    bool all = true;
    for (int m = 0; m < probs.dim(0) && all; ++m)
      all = argmax_row(probs, m) == data.labels[i][m];
    ok[i] = all;
  });
  long long hits = 0;
  for (char c : ok) hits += c;
  return n > 0 ? static_cast<double>(hits) / n : 0.0;
}

History train(Model& model, const DatasetHandle& train_set,
              const DatasetHandle& val_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.count() == 0 || val_set.count() == 0)
    throw DimensionError("train: empty dataset");
  train_set.require_shape(model.cfg.height, model.cfg.width, model.cfg.slots);
  val_set.require_shape(model.cfg.height, model.cfg.width, model.cfg.slots);
  check_labels(train_set, model.cfg.classes, "train");
  check_labels(val_set, model.cfg.classes, "val");

  std::ofstream history_out;
  if (!cfg.history_path.empty()) {
    history_out.open(cfg.history_path, std::ios::trunc);
    if (!history_out)
      throw IoError("cannot open history sink: " + cfg.history_path);
  }

  const AdamConfig adam{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps};
  std::vector<Tensor*> params = flat_params(model);
  AdamState state;
  state.reset(params);

  Model batch_grads(model.cfg);
  std::vector<Tensor*> grad_tensors = flat_params(batch_grads);
  std::vector<const Tensor*> grad_view(grad_tensors.begin(),
                                       grad_tensors.end());

  // One gradient buffer per batch lane keeps the cross-thread reduction in
  // index order, so results are independent of the worker count.
  std::vector<Model> lane_grads;
  for (int k = 0; k < cfg.batch; ++k) lane_grads.emplace_back(model.cfg);
  std::vector<std::vector<Tensor*>> lane_tensors;
  for (Model& lane : lane_grads) lane_tensors.push_back(flat_params(lane));
  std::vector<double> lane_loss(cfg.batch, 0.0);
  std::vector<char> lane_hit(cfg.batch, 0);

  const int n = train_set.count();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(cfg.seed);

  History history;
  double best_val = -1.0;
  std::vector<std::vector<float>> best_params;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle) shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    long long epoch_hits = 0;

    for (int start = 0; start < n; start += cfg.batch) {
      const int bs = std::min(cfg.batch, n - start);
      const int batch_index = start / cfg.batch;

      auto compute_batch = [&]() {
        parallel_for(bs, [&](int k) {
          const int i = order[start + k];
          const Tensor img = train_set.image(i);
          ModelCache<float> cache;
          const Tensor probs = model.forward(img, &cache);
          lane_loss[k] = cce_loss(probs, train_set.labels[i]);
          bool all = true;
          for (int m = 0; m < probs.dim(0) && all; ++m)
            all = argmax_row(probs, m) == train_set.labels[i][m];
          lane_hit[k] = all;
          lane_grads[k].zero_params();
          const Tensor grad_probs = cce_backward(probs, train_set.labels[i]);
          model.backward(cache, grad_probs, lane_grads[k]);
        });
        batch_grads.zero_params();
        for (int k = 0; k < bs; ++k) {
          for (std::size_t p = 0; p < grad_tensors.size(); ++p) {
            float* dst = grad_tensors[p]->data.data();
            const float* src = lane_tensors[k][p]->data.data();
            for (std::size_t e = 0; e < grad_tensors[p]->data.size(); ++e)
              dst[e] += src[e];
          }
        }
        const float inv = 1.0f / bs;
        for (Tensor* g : grad_tensors)
          for (float& v : g->data) v *= inv;
        double sum = 0.0;
        for (int k = 0; k < bs; ++k) sum += lane_loss[k];
        if (!std::isfinite(sum))
          throw NumericError("non-finite loss (sum " + std::to_string(sum) +
                             ")");
        return sum;
      };

      try {
        const double batch_loss_sum = compute_batch();
        epoch_loss += batch_loss_sum;
        for (int k = 0; k < bs; ++k) epoch_hits += lane_hit[k];

        if (cfg.sam) {
          sam_step(params, grad_view, state, adam, cfg.rho,
                   [&]() { compute_batch(); });
        } else {
          adam_step(params, grad_view, state, adam);
        }
      } catch (const NumericError& e) {
        throw NumericError("train: epoch " + std::to_string(epoch) +
                           " batch " + std::to_string(batch_index) + ": " +
                           e.what());
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / n;
    stats.train_acc = static_cast<double>(epoch_hits) / n;
    stats.val_acc = exact_match_accuracy(model, val_set);
    history.push_back(stats);

    if (history_out) {
      const json line{{"epoch", stats.epoch},
                      {"train_loss", stats.train_loss},
                      {"train_acc", stats.train_acc},
                      {"val_acc", stats.val_acc}};
      history_out << line.dump() << "\n" << std::flush;
    }

    if (stats.val_acc > best_val) {
      best_val = stats.val_acc;
      best_params.clear();
      for (const Tensor* p : params) best_params.push_back(p->data);
    }

    if (cfg.stop_loss > 0 && stats.train_loss < cfg.stop_loss) break;
  }

  for (std::size_t k = 0; k < params.size(); ++k)
    params[k]->data = best_params[k];
  return history;
}

}  // namespace geotr
