#include "geotr/adversarial.hpp"

#include <json.hpp>

#include "geotr/threading.hpp"
#include "geotr/train.hpp"

namespace geotr {
namespace {

using nlohmann::json;

}  // namespace

Tensor fgsm(const Model& model, const Tensor& image,
            const std::vector<int>& true_labels, float epsilon) {
  if (epsilon < 0) throw DimensionError("fgsm: epsilon must be >= 0");
  const Tensor grad = model.input_gradient(image, true_labels);
  Tensor adv(image.shape);
  for (std::size_t i = 0; i < adv.data.size(); ++i) {
    const float g = grad.data[i];
    const float step = g > 0 ? epsilon : (g < 0 ? -epsilon : 0.0f);
    adv.data[i] = std::min(1.0f, std::max(0.0f, image.data[i] + step));
  }
  return adv;
}

AttackReport attack_eval(const Model& model, const DatasetHandle& data,
                         const std::vector<double>& epsilons) {
  if (data.count() == 0 || epsilons.empty())
    throw DimensionError("attack_eval: empty dataset or epsilon list");
  data.require_shape(model.cfg.height, model.cfg.width, model.cfg.slots);

  AttackReport report;
  report.clean_accuracy = exact_match_accuracy(model, data);

  const int n = data.count();
  for (double eps : epsilons) {
    std::vector<char> ok(n, 0);
    parallel_for(n, [&](int i) {
      const Tensor adv =
          fgsm(model, data.image(i), data.labels[i], static_cast<float>(eps));
      const auto [labels, conf] = model.predict(adv);
      ok[i] = labels == data.labels[i];
    });
    long long hits = 0;
    for (char c : ok) hits += c;
    const double acc = static_cast<double>(hits) / n;
    report.entries.push_back({eps, acc, report.clean_accuracy - acc});
  }
  return report;
}

std::string attack_report_to_json(const AttackReport& report) {
  json entries = json::array();
  for (const AttackEntry& e : report.entries)
    entries.push_back({{"epsilon", e.epsilon},
                       {"adversarial_accuracy", e.adversarial_accuracy},
                       {"drop", e.drop}});
  const json j{{"clean_accuracy", report.clean_accuracy},
               {"entries", entries}};
  return j.dump();
}

}  // namespace geotr
