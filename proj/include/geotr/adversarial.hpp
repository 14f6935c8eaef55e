#pragma once

#include <string>
#include <vector>

#include "geotr/datasets.hpp"
#include "geotr/model.hpp"

namespace geotr {

// adv = clamp(image + epsilon * sign(dLoss/dImage), 0, 1) with sign(0) = 0;
// untargeted ascent against the true labels.
Tensor fgsm(const Model& model, const Tensor& image,
            const std::vector<int>& true_labels, float epsilon);

struct AttackEntry {
  double epsilon = 0;
  double adversarial_accuracy = 0;
  double drop = 0;  // clean - adversarial
};

struct AttackReport {
  double clean_accuracy = 0;
  std::vector<AttackEntry> entries;
};

AttackReport attack_eval(const Model& model, const DatasetHandle& data,
                         const std::vector<double>& epsilons);

std::string attack_report_to_json(const AttackReport& report);

}  // namespace geotr
