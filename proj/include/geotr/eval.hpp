#pragma once

#include <string>
#include <vector>

#include "geotr/datasets.hpp"
#include "geotr/model.hpp"

namespace geotr {

struct EvalReport {
  double exact_match = 0;
  double per_char = 0;
  double map = 0;  // macro precision over classes
  double mdp = 0;  // macro recall over classes
  double mean_latency_ms = 0;
  std::vector<std::vector<long long>> confusion;  // [truth][prediction]
};

// Single-threaded sweep; latency is averaged over the per-sample forward
// passes after one warm-up. Classes with no predictions score precision 1
// when they also have no ground truth, else 0; recall mirrors that for
// classes with no ground truth.
EvalReport evaluate(const Model& model, const DatasetHandle& data);

std::string eval_report_to_json(const EvalReport& report);

// Mean wall time of runs repeated single-image forwards after one warm-up.
double measure_latency_ms(const Model& model, const Tensor& image, int runs);

}  // namespace geotr
