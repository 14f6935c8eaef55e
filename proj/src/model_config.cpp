#include <json.hpp>

#include "geotr/model.hpp"

namespace geotr {

using nlohmann::json;

ModelConfig model_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::Header,
                      std::string("model config: ") + e.what());
  }
  ModelConfig cfg;
  try {
    cfg.width = j.value("width", cfg.width);
    cfg.height = j.value("height", cfg.height);
    cfg.slots = j.value("slots", cfg.slots);
    cfg.classes = j.value("classes", cfg.classes);
    cfg.k1 = j.value("k1", cfg.k1);
    cfg.k2 = j.value("k2", cfg.k2);
    cfg.labels = j.value("labels", cfg.labels);
    if (j.contains("encoder")) {
      const json& e = j.at("encoder");
      cfg.encoder.kind = e.value("kind", cfg.encoder.kind);
      cfg.encoder.hidden_per_dir =
          e.value("hidden_per_dir", cfg.encoder.hidden_per_dir);
      cfg.encoder.second_width =
          e.value("second_width", cfg.encoder.second_width);
      cfg.encoder.tcn_kernel = e.value("tcn_kernel", cfg.encoder.tcn_kernel);
      if (e.contains("tcn_levels")) {
        cfg.encoder.tcn_levels.clear();
        for (const json& lvl : e.at("tcn_levels"))
          cfg.encoder.tcn_levels.push_back(
              {lvl.at("channels").get<int>(), lvl.at("dilation").get<int>()});
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::Header,
                      std::string("model config: ") + e.what());
  }
  cfg.normalize();
  cfg.validate();
  return cfg;
}

std::string model_config_to_json(const ModelConfig& cfg) {
  json levels = json::array();
  for (const auto& lvl : cfg.encoder.tcn_levels)
    levels.push_back({{"channels", lvl.channels}, {"dilation", lvl.dilation}});
  json j{{"width", cfg.width},
         {"height", cfg.height},
         {"slots", cfg.slots},
         {"classes", cfg.classes},
         {"k1", cfg.k1},
         {"k2", cfg.k2},
         {"labels", cfg.labels},
         {"encoder",
          {{"kind", cfg.encoder.kind},
           {"hidden_per_dir", cfg.encoder.hidden_per_dir},
           {"second_width", cfg.encoder.second_width},
           {"tcn_kernel", cfg.encoder.tcn_kernel},
           {"tcn_levels", levels}}}};
  return j.dump();
}

}  // namespace geotr
