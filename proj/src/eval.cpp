#include "geotr/eval.hpp"

#include <json.hpp>

#include <chrono>

namespace geotr {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

int argmax_row(const Tensor& probs, int row) {
  const float* r = probs.row(row);
  int best = 0;
  for (int c = 1; c < probs.dim(1); ++c)
    if (r[c] > r[best]) best = c;
  return best;
}

}  // namespace

EvalReport evaluate(const Model& model, const DatasetHandle& data) {
  if (data.count() == 0) throw DimensionError("evaluate: empty dataset");
  data.require_shape(model.cfg.height, model.cfg.width, model.cfg.slots);
  const int n = data.count(), slots = model.cfg.slots,
            classes = model.cfg.classes;

  EvalReport rep;
  rep.confusion.assign(classes, std::vector<long long>(classes, 0));
  long long exact = 0, char_hits = 0;
  double elapsed_ms = 0.0;

  (void)model.forward(data.image(0));  // warm-up
  for (int i = 0; i < n; ++i) {
    const Tensor img = data.image(i);
    const auto t0 = Clock::now();
    const Tensor probs = model.forward(img);
    const auto t1 = Clock::now();
    elapsed_ms +=
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    bool all = true;
    for (int m = 0; m < slots; ++m) {
      const int truth = data.labels[i][m];
      if (truth < 0 || truth >= classes)
        throw DimensionError("evaluate: label outside the model's classes");
      const int pred = argmax_row(probs, m);
      rep.confusion[truth][pred] += 1;
      if (pred == truth)
        ++char_hits;
      else
        all = false;
    }
    exact += all;
  }

  rep.exact_match = static_cast<double>(exact) / n;
  rep.per_char = static_cast<double>(char_hits) / (static_cast<double>(n) * slots);
  rep.mean_latency_ms = elapsed_ms / n;

  double precision_sum = 0.0, recall_sum = 0.0;
  for (int c = 0; c < classes; ++c) {
    long long tp = rep.confusion[c][c], truth_total = 0, pred_total = 0;
    for (int k = 0; k < classes; ++k) {
      truth_total += rep.confusion[c][k];
      pred_total += rep.confusion[k][c];
    }
    // A class nothing was predicted as is perfect only if it also never
    // occurred; the recall convention mirrors that for absent classes.
    precision_sum += pred_total > 0
                         ? static_cast<double>(tp) / pred_total
                         : (truth_total == 0 ? 1.0 : 0.0);
    recall_sum += truth_total > 0 ? static_cast<double>(tp) / truth_total
                                  : (pred_total == 0 ? 1.0 : 0.0);
  }
  rep.map = precision_sum / classes;
  rep.mdp = recall_sum / classes;
  return rep;
}

std::string eval_report_to_json(const EvalReport& report) {
  const json j{{"exact_match_accuracy", report.exact_match},
               {"per_char_accuracy", report.per_char},
               {"mAP", report.map},
               {"mDP", report.mdp},
               {"mean_latency_ms", report.mean_latency_ms},
               {"confusion", report.confusion}};
  return j.dump();
}

double measure_latency_ms(const Model& model, const Tensor& image, int runs) {
  if (runs < 1) throw DimensionError("measure_latency_ms: runs < 1");
  (void)model.forward(image);  // warm-up
  const auto t0 = Clock::now();
  for (int r = 0; r < runs; ++r) (void)model.forward(image);
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / runs;
}

}  // namespace geotr
