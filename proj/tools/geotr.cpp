#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "geotr/adversarial.hpp"
#include "geotr/datasets.hpp"
#include "geotr/digitgen.hpp"
#include "geotr/eval.hpp"
#include "geotr/pgm.hpp"
#include "geotr/serialize.hpp"
#include "geotr/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace geotr;

namespace {

// Every run announces its fully resolved configuration on stderr so stdout
// stays reserved for the command's own output.
void log_config(json j, const std::string& subcommand) {
  j["subcommand"] = subcommand;
  std::cerr << j.dump() << "\n";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// Model geometry and label table inferred from a dataset when no explicit
// config file is given.
ModelConfig config_for_dataset(const DatasetHandle& ds) {
  ModelConfig cfg;
  cfg.width = ds.width;
  cfg.height = ds.height;
  cfg.slots = ds.slots;
  cfg.classes = static_cast<int>(ds.category_names.size());
  cfg.labels.clear();
  for (const std::string& name : ds.category_names) {
    if (name.size() != 1)
      throw FormatError(FormatError::Kind::Header,
                        "category '" + name +
                            "' is not a single character; pass --config");
    cfg.labels += name;
  }
  cfg.normalize();
  cfg.validate();
  return cfg;
}

Tensor load_input_image(const Model& model, const std::string& path) {
  Tensor img = read_image(path);
  if (img.dim(0) != model.cfg.height || img.dim(1) != model.cfg.width)
    img = resize_bilinear(img, model.cfg.height, model.cfg.width);
  return img;
}

void write_csv(const Tensor& matrix, const std::string& path) {
  if (matrix.rank() != 2) throw DimensionError("csv export needs rank 2");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  char buf[32];
  for (int r = 0; r < matrix.dim(0); ++r) {
    for (int c = 0; c < matrix.dim(1); ++c) {
      std::snprintf(buf, sizeof buf, "%.6g", matrix.at(r, c));
      out << (c ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_norm_pgm(const Tensor& matrix, const std::string& path) {
  float lo = matrix.data[0], hi = matrix.data[0];
  for (float v : matrix.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Tensor norm(matrix.shape);
  if (hi > lo)
    for (std::size_t i = 0; i < norm.data.size(); ++i)
      norm.data[i] = (matrix.data[i] - lo) / (hi - lo);
  write_pgm(norm, path);
}

void export_matrix(const Tensor& matrix, const std::string& dir,
                   const std::string& stem) {
  write_csv(matrix, dir + "/" + stem + ".csv");
  write_norm_pgm(matrix, dir + "/" + stem + ".pgm");
}

struct GenerateOpts {
  std::string kind = "digitgen";
  std::string out;
  int count = 0;
  std::uint64_t seed = 0;
  bool random_spacing = false, space_class = false, dynamic_background = false,
       dynamic_width = false, noise = false, shadows = false, bursts = false;
  std::string atlas;
  std::string mnist_images, mnist_labels;
  bool gaps = false, no_invert = false;
  int out_width = 244, out_height = 48;
};

int run_generate(const GenerateOpts& o, const CLI::App& sub) {
  log_config({{"kind", o.kind},
              {"count", o.count},
              {"out", o.out},
              {"seed", o.seed},
              {"random_spacing", o.random_spacing},
              {"space_class", o.space_class},
              {"dynamic_background", o.dynamic_background},
              {"dynamic_width", o.dynamic_width},
              {"noise", o.noise},
              {"shadows", o.shadows},
              {"bursts", o.bursts},
              {"atlas", o.atlas},
              {"mnist_images", o.mnist_images},
              {"mnist_labels", o.mnist_labels},
              {"gaps", o.gaps},
              {"invert", !o.no_invert},
              {"out_width", o.out_width},
              {"out_height", o.out_height}},
             "generate");
  if (o.kind == "digitgen") {
    GenSpec spec;
    spec.master_seed = o.seed;
    spec.random_spacing = o.random_spacing;
    spec.space_class = o.space_class;
    spec.dynamic_background = o.dynamic_background;
    spec.dynamic_width = o.dynamic_width;
    spec.noise = o.noise;
    spec.shadow_patches = o.shadows;
    spec.light_bursts = o.bursts;
    if (!o.atlas.empty()) spec.atlas = GlyphAtlas::from_directory(o.atlas);
    const std::string manifest = generate_dataset(spec, o.count, o.out);
    std::cout << manifest << "\n";
    return 0;
  }
  if (o.mnist_images.empty() || o.mnist_labels.empty()) {
    std::cerr << "generate: --kind mnist requires --mnist-images and "
                 "--mnist-labels\n"
              << sub.help();
    return 2;
  }
  const IdxArray images = read_idx(o.mnist_images);
  const IdxArray labels = read_idx(o.mnist_labels);
  MnistComposeSpec spec;
  spec.count = o.count;
  spec.seed = o.seed;
  spec.random_gaps = o.gaps;
  spec.invert = !o.no_invert;
  spec.out_width = o.out_width;
  spec.out_height = o.out_height;
  std::cout << compose_mnist_stickers(images, labels, spec, o.out) << "\n";
  return 0;
}

struct TrainOpts {
  std::string data, val, out, config, history;
  int epochs = 10, batch = 32;
  double lr = 1e-3, rho = 0.05, stop_loss = 0;
  bool sam = false, no_shuffle = false;
  std::uint64_t seed = 0;
};

int run_train(const TrainOpts& o) {
  log_config({{"data", o.data},
              {"val", o.val},
              {"out", o.out},
              {"config", o.config},
              {"history", o.history},
              {"epochs", o.epochs},
              {"batch", o.batch},
              {"lr", o.lr},
              {"rho", o.rho},
              {"sam", o.sam},
              {"shuffle", !o.no_shuffle},
              {"stop_loss", o.stop_loss},
              {"seed", o.seed}},
             "train");
  const DatasetHandle train_set = load_manifest(o.data);
  const DatasetHandle val_set = load_manifest(o.val);
  const ModelConfig cfg = o.config.empty()
                              ? config_for_dataset(train_set)
                              : model_config_from_json(slurp(o.config));
  Model model(cfg);
  model.init(o.seed);
  std::cerr << "parameters: " << model.param_count() << "\n";

  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch = o.batch;
  tc.lr = static_cast<float>(o.lr);
  tc.sam = o.sam;
  tc.rho = static_cast<float>(o.rho);
  tc.seed = o.seed;
  tc.shuffle = !o.no_shuffle;
  tc.stop_loss = o.stop_loss;
  tc.history_path = o.history.empty() ? o.out + ".history.jsonl" : o.history;

  const History history = train(model, train_set, val_set, tc);
  save_model(model, o.out);
  const json summary{{"model", o.out},
                     {"epochs", static_cast<int>(history.size())},
                     {"final_train_loss", history.back().train_loss},
                     {"best_val_acc", [&] {
                        double best = 0;
                        for (const auto& e : history)
                          best = std::max(best, e.val_acc);
                        return best;
                      }()}};
  std::cout << summary.dump() << "\n";
  return 0;
}

struct EvalOpts {
  std::string model, data, json_out;
};

int run_eval(const EvalOpts& o) {
  log_config({{"model", o.model}, {"data", o.data}, {"json", o.json_out}},
             "eval");
  const Model model = load_model(o.model);
  const DatasetHandle data = load_manifest(o.data);
  const EvalReport report = evaluate(model, data);
  const std::string text = eval_report_to_json(report);
  std::cout << text << "\n";
  if (!o.json_out.empty()) {
    std::ofstream out(o.json_out, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + o.json_out);
    out << text << "\n";
  }
  return 0;
}

struct InferOpts {
  std::string model, image;
};

int run_infer(const InferOpts& o) {
  log_config({{"model", o.model}, {"image", o.image}}, "infer");
  const Model model = load_model(o.model);
  const Tensor img = load_input_image(model, o.image);
  const auto [labels, confidences] = model.predict(img);
  std::cout << model.decode(labels) << "\n";
  for (std::size_t m = 0; m < labels.size(); ++m)
    std::cout << "slot " << m << ": '" << model.cfg.labels[labels[m]]
              << "' confidence " << confidences[m] << "\n";
  return 0;
}

struct AttackOpts {
  std::string model, data, json_out;
  std::vector<double> epsilons;
};

int run_attack(const AttackOpts& o) {
  log_config({{"model", o.model},
              {"data", o.data},
              {"epsilons", o.epsilons},
              {"json", o.json_out}},
             "attack");
  const Model model = load_model(o.model);
  const DatasetHandle data = load_manifest(o.data);
  const AttackReport report = attack_eval(model, data, o.epsilons);
  const std::string text = attack_report_to_json(report);
  std::cout << text << "\n";
  if (!o.json_out.empty()) {
    std::ofstream out(o.json_out, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + o.json_out);
    out << text << "\n";
  }
  return 0;
}

struct InspectOpts {
  std::string model, image, out;
};

int run_inspect(const InspectOpts& o) {
  log_config({{"model", o.model}, {"image", o.image}, {"out", o.out}},
             "inspect");
  const Model model = load_model(o.model);
  const Tensor img = load_input_image(model, o.image);
  ModelCache<float> cache;
  (void)model.forward(img, &cache);
  fs::create_directories(o.out);

  export_matrix(cache.projection.latent, o.out, "latent");
  export_matrix(cache.projection.class_out, o.out, "class_map");
  const Tensor& sw = model.projection.slot_w;
  Tensor slot_weights({sw.dim(0), sw.dim(1) * sw.dim(2)});
  slot_weights.data = sw.data;
  export_matrix(slot_weights, o.out, "slot_weights");
  export_matrix(cache.projection.logits, o.out, "logits");
  std::cout << "wrote 8 artifacts to " << o.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed-slot text recognizer: dataset generation, training, "
               "evaluation, inference, attacks, and inspection"};
  app.require_subcommand(1);

  GenerateOpts gen;
  CLI::App* gen_cmd =
      app.add_subcommand("generate", "Emit a sticker dataset with a COCO "
                                     "manifest");
  gen_cmd->add_option("--kind", gen.kind, "digitgen or mnist")
      ->check(CLI::IsMember({"digitgen", "mnist"}))
      ->capture_default_str();
  gen_cmd->add_option("--count", gen.count, "Number of stickers")->required();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Master seed")
      ->capture_default_str();
  gen_cmd->add_flag("--random-spacing", gen.random_spacing,
                    "Randomize inter-digit spacing");
  gen_cmd->add_flag("--space-class", gen.space_class,
                    "Add a space class (11 classes total)");
  gen_cmd->add_flag("--dynamic-background", gen.dynamic_background,
                    "Randomize background/foreground intensity");
  gen_cmd->add_flag("--dynamic-width", gen.dynamic_width,
                    "Randomize per-glyph width");
  gen_cmd->add_flag("--noise", gen.noise, "Additive Gaussian noise");
  gen_cmd->add_flag("--shadows", gen.shadows, "Multiplicative shadow patches");
  gen_cmd->add_flag("--bursts", gen.bursts, "Additive radial light bursts");
  gen_cmd->add_option("--atlas", gen.atlas,
                      "Directory of 0.pgm..9.pgm glyphs replacing the "
                      "embedded font");
  gen_cmd->add_option("--mnist-images", gen.mnist_images,
                      "IDX image file (required for --kind mnist)");
  gen_cmd->add_option("--mnist-labels", gen.mnist_labels,
                      "IDX label file (required for --kind mnist)");
  gen_cmd->add_flag("--gaps", gen.gaps,
                    "Random inter-patch gaps (mnist kind)");
  gen_cmd->add_flag("--no-invert", gen.no_invert,
                    "Keep MNIST's light-on-dark polarity");
  gen_cmd->add_option("--out-width", gen.out_width, "Sticker width (mnist)")
      ->capture_default_str();
  gen_cmd->add_option("--out-height", gen.out_height, "Sticker height (mnist)")
      ->capture_default_str();

  TrainOpts tr;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--data", tr.data, "Training dataset directory")
      ->required();
  train_cmd->add_option("--val", tr.val, "Validation dataset directory")
      ->required();
  train_cmd->add_option("--out", tr.out, "Output weight file")->required();
  train_cmd->add_option("--config", tr.config, "Model config JSON file");
  train_cmd->add_option("--history", tr.history,
                        "History JSONL path (default <out>.history.jsonl)");
  train_cmd->add_option("--epochs", tr.epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "Batch size")
      ->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  train_cmd->add_flag("--sam", tr.sam, "Sharpness-aware minimization");
  train_cmd->add_option("--rho", tr.rho, "SAM neighborhood radius")
      ->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "Init/shuffle seed")
      ->capture_default_str();
  train_cmd->add_option("--stop-loss", tr.stop_loss,
                        "Stop early once epoch train loss falls below this");
  train_cmd->add_flag("--no-shuffle", tr.no_shuffle,
                      "Keep sample order fixed across epochs");

  EvalOpts ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a trained model");
  eval_cmd->add_option("--model", ev.model, "Weight file")->required();
  eval_cmd->add_option("--data", ev.data, "Dataset directory")->required();
  eval_cmd->add_option("--json", ev.json_out, "Also write the report here");

  InferOpts inf;
  CLI::App* infer_cmd =
      app.add_subcommand("infer", "Decode a single image");
  infer_cmd->add_option("--model", inf.model, "Weight file")->required();
  infer_cmd->add_option("--image", inf.image, "PGM/PPM image")->required();

  AttackOpts at;
  CLI::App* attack_cmd =
      app.add_subcommand("attack", "FGSM robustness sweep");
  attack_cmd->add_option("--model", at.model, "Weight file")->required();
  attack_cmd->add_option("--data", at.data, "Dataset directory")->required();
  attack_cmd->add_option("--epsilons", at.epsilons, "Perturbation budgets")
      ->required()
      ->delimiter(',');
  attack_cmd->add_option("--json", at.json_out, "Also write the report here");

  InspectOpts ins;
  CLI::App* inspect_cmd = app.add_subcommand(
      "inspect", "Export latent/projection matrices as CSV and PGM");
  inspect_cmd->add_option("--model", ins.model, "Weight file")->required();
  inspect_cmd->add_option("--image", ins.image, "PGM/PPM image")->required();
  inspect_cmd->add_option("--out", ins.out, "Artifact directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen_cmd->parsed()) return run_generate(gen, *gen_cmd);
    if (train_cmd->parsed()) return run_train(tr);
    if (eval_cmd->parsed()) return run_eval(ev);
    if (infer_cmd->parsed()) return run_infer(inf);
    if (attack_cmd->parsed()) return run_attack(at);
    if (inspect_cmd->parsed()) return run_inspect(ins);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
