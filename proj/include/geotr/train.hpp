#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geotr/datasets.hpp"
#include "geotr/model.hpp"

namespace geotr {

struct TrainConfig {
  int epochs = 10;
  int batch = 32;
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-7f;
  bool sam = false;
  float rho = 0.05f;
  std::uint64_t seed = 0;
  bool shuffle = true;
  double stop_loss = 0;      // >0: stop once epoch train loss falls below
  std::string history_path;  // JSONL sink, one record per epoch; "" skips

  void validate() const {
    if (epochs < 1 || batch < 1) throw DimensionError("train: epochs/batch < 1");
    if (lr <= 0) throw DimensionError("train: lr must be positive");
    if (rho < 0) throw DimensionError("train: rho must be non-negative");
  }
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0;
  double train_acc = 0;
  double val_acc = 0;
};

using History = std::vector<EpochStats>;

// Mini-batch loop with seeded shuffling and deterministic index-ordered
// gradient reduction. The model is left holding the parameters of the
// best-validation epoch (ties to the earlier epoch). A non-finite loss
// aborts with epoch/batch diagnostics.
History train(Model& model, const DatasetHandle& train_set,
              const DatasetHandle& val_set, const TrainConfig& cfg);

// Exact-match accuracy only, parallel over samples.
double exact_match_accuracy(const Model& model, const DatasetHandle& data);

}  // namespace geotr
