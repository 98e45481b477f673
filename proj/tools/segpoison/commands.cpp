#include "segpoison/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "segpoison/attack.hpp"
#include "segpoison/dataset_io.hpp"
#include "segpoison/errors.hpp"
#include "segpoison/metrics.hpp"
#include "segpoison/poison_config_io.hpp"
#include "segpoison/report_io.hpp"
#include "segpoison/run_manifest.hpp"
#include "segpoison/synthdata.hpp"
#include "segpoison/toymodel.hpp"

namespace segpoison::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestFile = "run_manifest.json";

struct GenSynthOptions {
  fs::path out;
  synth::SceneSpec spec;
  std::size_t n_train = 200;
  std::size_t n_test = 50;
  unsigned threads = 1;
};

struct PoisonOptions {
  fs::path dataset;
  fs::path config;
  fs::path out;
  unsigned threads = 1;
};

struct MakeAttackedOptions {
  fs::path dataset;
  fs::path config;
  fs::path out;
  bool all_images = false;
};

struct TrainOptions {
  fs::path dataset;
  fs::path model_out;
  TrainConfig train;
  FeatureLayout layout;
  bool no_global_context = false;
};

struct PredictOptions {
  fs::path model;
  fs::path dataset;
  fs::path out;
  unsigned threads = 1;
};

struct EvaluateOptions {
  fs::path benign_preds;
  fs::path attacked_preds;
  fs::path dataset;
  fs::path config;
  fs::path out;
  std::string model_tag = "model";
  std::string attack_tag;
  bool all_images = false;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

Dataset load_valid_dataset(const fs::path& dir) {
  Dataset d = load_dataset(dir);
  const auto violations = validate_dataset(d);
  if (!violations.empty()) {
    std::ostringstream msg;
    msg << dir.string() << ": " << violations.size() << " invariant violation(s); first: ["
        << violations.front().sample_id << "] " << to_string(violations.front().kind) << ": "
        << violations.front().detail;
    throw InputError(msg.str());
  }
  return d;
}

// Predictions reordered to follow `ids`; InputError if the id sets differ.
std::vector<LabelMask> align_predictions(const MaskSet& preds, const std::vector<std::string>& ids,
                                         int num_classes, const char* what) {
  if (preds.num_classes != num_classes) {
    throw InputError(std::string(what) + " predictions are for " +
                     std::to_string(preds.num_classes) + " classes, dataset has " +
                     std::to_string(num_classes));
  }
  if (preds.ids.size() != ids.size()) {
    throw InputError(std::string(what) + " predictions cover " + std::to_string(preds.ids.size()) +
                     " samples, expected " + std::to_string(ids.size()));
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < preds.ids.size(); ++i) index[preds.ids[i]] = i;
  std::vector<LabelMask> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) {
      throw InputError(std::string(what) + " predictions are missing sample " + id);
    }
    out.push_back(preds.masks[it->second]);
  }
  return out;
}

std::string default_attack_tag(const PoisonConfig& cfg) {
  std::string tag;
  if (const auto* fg = std::get_if<FineGrainedMode>(&cfg.mode)) {
    const auto sources = fg->matrix.source_classes();
    if (static_cast<int>(sources.size()) >= fg->matrix.k() - 1 && !sources.empty()) {
      tag = "N-to-1";
    } else if (sources.size() == 1) {
      tag = "1-to-1";
    } else {
      tag = "fine-grained";
    }
  } else {
    tag = "badnets";
  }
  tag += cfg.trigger.kind == TriggerKind::kSemantic ? "/sem" : "/non-sem";
  return tag;
}

// ---- subcommands ----------------------------------------------------------

void gen_synth(const GenSynthOptions& o, RunManifest& m, std::ostream& out) {
  m.set_seed(o.spec.seed);
  json cfg = synth::scene_spec_to_json(o.spec);
  cfg["n_train"] = o.n_train;
  cfg["n_test"] = o.n_test;
  m.set_config(cfg);
  synth::validate_scene_spec(o.spec);
  if (o.n_train < 1 || o.n_test < 1) throw ConfigError("--n-train and --n-test must be >= 1");

  const Dataset train = synth::generate_dataset(o.spec, o.n_train, Split::kTrain, o.threads);
  const Dataset test = synth::generate_dataset(o.spec, o.n_test, Split::kTest, o.threads);
  ensure_dir(o.out);
  save_dataset(train, o.out / "train");
  save_dataset(test, o.out / "test");
  write_json_file(o.out / "scene_spec.json", synth::scene_spec_to_json(o.spec));
  m.add_output("train", o.out / "train");
  m.add_output("test", o.out / "test");
  m.add_output("scene_spec", o.out / "scene_spec.json");
  out << "wrote " << train.size() << " train and " << test.size() << " test scenes (K="
      << o.spec.num_classes << ") to " << o.out.string() << "\n";
}

void poison(const PoisonOptions& o, RunManifest& m, std::ostream& out) {
  m.add_input("dataset", o.dataset);
  m.add_input("config", o.config);
  const json normalized = normalize_config_document(read_json_file(o.config));
  m.set_config(normalized);
  m.set_seed(normalized["seed"].get<std::uint64_t>());

  const Dataset d = load_valid_dataset(o.dataset);
  const PoisonConfig cfg = build_poison_config(normalized, d, o.config.parent_path());
  const PoisonedDataset poisoned = poison_dataset(d, cfg, o.threads);
  ensure_dir(o.out);
  save_dataset(poisoned.dataset, o.out);
  write_json_file(o.out / "poison_record.json", make_poison_record(poisoned, normalized));
  m.add_output("dataset", o.out);
  m.add_output("poison_record", o.out / "poison_record.json");
  out << "poisoned " << poisoned.modified_ids.size() << " of " << d.size()
      << " samples (effective rate " << poisoned.effective_rate() << ") -> " << o.out.string()
      << "\n";
}

void make_attacked(const MakeAttackedOptions& o, RunManifest& m, std::ostream& out) {
  m.add_input("dataset", o.dataset);
  m.add_input("config", o.config);
  json normalized = normalize_config_document(read_json_file(o.config));
  if (o.all_images) normalized["restrict_attacked_to_source"] = false;
  m.set_config(normalized);
  m.set_seed(normalized["seed"].get<std::uint64_t>());

  const Dataset d = load_valid_dataset(o.dataset);
  const PoisonConfig cfg = build_poison_config(normalized, d, o.config.parent_path());
  const AttackedTestSet attacked = make_attacked_test_set(d, cfg);
  ensure_dir(o.out);
  save_dataset(attacked.as_dataset(), o.out);
  save_mask_set({d.num_classes, Split::kTest, attacked.ids, attacked.targets}, o.out / "targets");
  m.add_output("attacked", o.out);
  m.add_output("targets", o.out / "targets");
  out << "attacked test set: " << attacked.size() << " of " << d.size() << " images -> "
      << o.out.string() << "\n";
}

void train_cmd(TrainOptions o, RunManifest& m, std::ostream& out) {
  if (o.no_global_context) o.layout.global_context = false;
  m.add_input("dataset", o.dataset);
  m.set_seed(o.train.seed);
  m.set_config({{"epochs", o.train.epochs},
                {"learning_rate", o.train.learning_rate},
                {"batch_size", o.train.batch_size},
                {"pixel_sample_rate", o.train.pixel_sample_rate},
                {"seed", o.train.seed},
                {"patch_radius", o.layout.patch_radius},
                {"global_context", o.layout.global_context}});
  validate_train_config(o.train);
  if (o.layout.patch_radius < 0) throw ConfigError("--patch-radius must be >= 0");

  const Dataset d = load_valid_dataset(o.dataset);
  const TrainResult result = train(d, o.train, o.layout);
  if (o.model_out.has_parent_path()) ensure_dir(o.model_out.parent_path());
  write_json_file(o.model_out, model_to_json(result.model));
  std::ostringstream loss;
  loss << "step,loss\n";
  loss.precision(17);
  for (std::size_t i = 0; i < result.loss_trajectory.size(); ++i) {
    loss << i << ',' << result.loss_trajectory[i] << '\n';
  }
  const fs::path loss_path = fs::path(o.model_out.string() + ".loss.csv");
  write_text(loss_path, loss.str());
  m.add_output("model", o.model_out);
  m.add_output("loss_trajectory", loss_path);
  out << "trained " << result.loss_trajectory.size() << " steps";
  if (!result.loss_trajectory.empty()) out << ", final batch loss " << result.loss_trajectory.back();
  out << " -> " << o.model_out.string() << "\n";
}

void predict_cmd(const PredictOptions& o, RunManifest& m, std::ostream& out) {
  m.add_input("model", o.model);
  m.add_input("dataset", o.dataset);
  const PatchModel model = model_from_json(read_json_file(o.model));
  const Dataset d = load_valid_dataset(o.dataset);
  if (model.num_classes != d.num_classes) {
    throw InputError("model predicts " + std::to_string(model.num_classes) +
                     " classes but the dataset has " + std::to_string(d.num_classes));
  }
  MaskSet preds{d.num_classes, d.split, {}, {}};
  for (const Sample& s : d.samples) {
    preds.ids.push_back(s.id);
    preds.masks.push_back(predict(model, s.image, o.threads));
  }
  save_mask_set(preds, o.out);
  m.add_output("predictions", o.out);
  out << "wrote " << preds.ids.size() << " prediction masks to " << o.out.string() << "\n";
}

void evaluate_cmd(const EvaluateOptions& o, RunManifest& m, std::ostream& out) {
  m.add_input("benign_predictions", o.benign_preds);
  m.add_input("attacked_predictions", o.attacked_preds);
  m.add_input("dataset", o.dataset);
  m.add_input("config", o.config);
  json normalized = normalize_config_document(read_json_file(o.config));
  if (o.all_images) normalized["restrict_attacked_to_source"] = false;
  m.set_config({{"poison_config", normalized},
                {"model_tag", o.model_tag},
                {"attack_tag", o.attack_tag}});
  m.set_seed(normalized["seed"].get<std::uint64_t>());

  const Dataset d = load_valid_dataset(o.dataset);
  const PoisonConfig cfg = build_poison_config(normalized, d, o.config.parent_path());
  const AttackedTestSet attacked = make_attacked_test_set(d, cfg);

  std::vector<std::string> ids;
  std::vector<LabelMask> benign_truth;
  for (const Sample& s : d.samples) {
    ids.push_back(s.id);
    benign_truth.push_back(s.mask);
  }
  const auto benign_preds = align_predictions(load_mask_set(o.benign_preds), ids, d.num_classes,
                                              "benign");
  const auto attacked_preds = align_predictions(load_mask_set(o.attacked_preds), attacked.ids,
                                                d.num_classes, "attacked");
  const MetricsReport report = evaluate(d.num_classes, benign_preds, benign_truth, attacked_preds,
                                        attacked.ground_truth, attacked.targets);

  const std::string attack_tag = o.attack_tag.empty() ? default_attack_tag(cfg) : o.attack_tag;
  ensure_dir(o.out);
  json j = report_to_json(report);
  j["model_tag"] = o.model_tag;
  j["attack_tag"] = attack_tag;
  write_json_file(o.out / "report.json", j);
  write_text(o.out / "report.csv", report_to_csv(report, o.model_tag, attack_tag));
  m.add_output("report_json", o.out / "report.json");
  m.add_output("report_csv", o.out / "report.csv");
  out << report_table(report, o.model_tag, attack_tag);
}

// ---- plumbing --------------------------------------------------------------

struct ErrorInfo {
  std::string type;
  std::string message;
  int code;
};

ErrorInfo classify(std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const IoError& e) {
    return {"io_error", e.what(), kExitIoError};
  } catch (const fs::filesystem_error& e) {
    return {"io_error", e.what(), kExitIoError};
  } catch (const ConfigError& e) {
    return {"config_error", e.what(), kExitInputError};
  } catch (const RangeError& e) {
    return {"range_error", e.what(), kExitInputError};
  } catch (const PlacementError& e) {
    return {"placement_error", e.what(), kExitInputError};
  } catch (const SelectionError& e) {
    return {"selection_error", e.what(), kExitInputError};
  } catch (const InputError& e) {
    return {"input_error", e.what(), kExitInputError};
  } catch (const TrainingError& e) {
    return {"training_error", e.what(), kExitInputError};
  } catch (const nlohmann::json::exception& e) {
    return {"config_error", e.what(), kExitInputError};
  } catch (const std::exception& e) {
    return {"error", e.what(), kExitInputError};
  }
}

int execute(RunManifest& manifest, const fs::path& manifest_path,
            const std::function<void()>& body, std::ostream& err) {
  int code = kExitOk;
  try {
    body();
  } catch (...) {
    const ErrorInfo info = classify(std::current_exception());
    manifest.set_error(info.type, info.message, info.code);
    err << "error: " << info.message << "\n";
    code = info.code;
  }
  try {
    if (manifest_path.has_parent_path()) ensure_dir(manifest_path.parent_path());
    write_json_file(manifest_path, manifest.to_json());
  } catch (const std::exception&) {
    // Output location unusable: emit the manifest on stderr instead.
    err << manifest.to_json().dump(2) << "\n";
    if (code == kExitOk) code = kExitIoError;
  }
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"segpoison: backdoor-poisoned segmentation datasets and their evaluation", "segpoison"};
  app.require_subcommand(1);
  app.set_version_flag("--version", toolkit_version());

  GenSynthOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "Generate synthetic train/test scene datasets");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--n-train", gen.n_train, "Training scenes");
  gen_cmd->add_option("--n-test", gen.n_test, "Test scenes");
  gen_cmd->add_option("--classes", gen.spec.num_classes, "Class count K (>= 3)");
  gen_cmd->add_option("--width", gen.spec.width, "Image width");
  gen_cmd->add_option("--height", gen.spec.height, "Image height");
  gen_cmd->add_option("--min-shapes", gen.spec.min_shapes, "Minimum shapes per scene");
  gen_cmd->add_option("--max-shapes", gen.spec.max_shapes, "Maximum shapes per scene");
  gen_cmd->add_option("--noise-std", gen.spec.noise_std, "Per-pixel noise std (intensity units)");
  gen_cmd->add_option("--seed", gen.spec.seed, "Scene seed");
  gen_cmd->add_option("--threads", gen.threads, "Worker threads (output is identical)");

  PoisonOptions po;
  auto* poison_cmd = app.add_subcommand("poison", "Apply a poison config to a dataset");
  poison_cmd->add_option("--dataset", po.dataset, "Input dataset directory")->required();
  poison_cmd->add_option("--config", po.config, "PoisonConfig JSON file")->required();
  poison_cmd->add_option("--out", po.out, "Output dataset directory")->required();
  poison_cmd->add_option("--threads", po.threads, "Worker threads (output is identical)");

  MakeAttackedOptions ma;
  auto* attacked_cmd =
      app.add_subcommand("make-attacked", "Build the attacked test set (triggered images, targets)");
  attacked_cmd->add_option("--dataset", ma.dataset, "Test dataset directory")->required();
  attacked_cmd->add_option("--config", ma.config, "PoisonConfig JSON file")->required();
  attacked_cmd->add_option("--out", ma.out, "Output directory")->required();
  attacked_cmd->add_flag("--all-images", ma.all_images,
                         "Keep images without source-class pixels");

  TrainOptions tr;
  auto* train_sub = app.add_subcommand("train", "Train the patch classifier");
  train_sub->add_option("--dataset", tr.dataset, "Training dataset directory")->required();
  train_sub->add_option("--model-out", tr.model_out, "Model file to write")->required();
  train_sub->add_option("--epochs", tr.train.epochs, "Epochs");
  train_sub->add_option("--lr", tr.train.learning_rate, "SGD learning rate");
  train_sub->add_option("--batch-size", tr.train.batch_size, "Pixels per SGD step");
  train_sub->add_option("--pixel-sample-rate", tr.train.pixel_sample_rate,
                        "Fraction of pixels sampled per image per epoch");
  train_sub->add_option("--patch-radius", tr.layout.patch_radius, "Patch radius r");
  train_sub->add_flag("--no-global-context", tr.no_global_context,
                      "Use patch features only (no image-level pooled features)");
  train_sub->add_option("--seed", tr.train.seed, "Training seed");

  PredictOptions pr;
  auto* predict_sub = app.add_subcommand("predict", "Predict masks for every image of a dataset");
  predict_sub->add_option("--model", pr.model, "Model file")->required();
  predict_sub->add_option("--dataset", pr.dataset, "Dataset directory")->required();
  predict_sub->add_option("--out", pr.out, "Prediction directory")->required();
  predict_sub->add_option("--threads", pr.threads, "Worker threads (output is identical)");

  EvaluateOptions ev;
  auto* eval_sub = app.add_subcommand("evaluate", "Score benign and attacked predictions");
  eval_sub->add_option("--benign-preds", ev.benign_preds, "Predictions on the clean test set")
      ->required();
  eval_sub->add_option("--attacked-preds", ev.attacked_preds,
                       "Predictions on the attacked test set")
      ->required();
  eval_sub->add_option("--dataset", ev.dataset, "Clean test dataset directory")->required();
  eval_sub->add_option("--config", ev.config, "PoisonConfig JSON file")->required();
  eval_sub->add_option("--out", ev.out, "Report directory")->required();
  eval_sub->add_option("--model-tag", ev.model_tag, "Model label for the report");
  eval_sub->add_option("--attack-tag", ev.attack_tag, "Attack label for the report");
  eval_sub->add_flag("--all-images", ev.all_images, "Keep images without source-class pixels");

  std::string replay_path;
  auto* replay_sub = app.add_subcommand("replay", "Re-run the command recorded in a run manifest");
  replay_sub->add_option("--manifest", replay_path, "run manifest JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << toolkit_version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  RunManifest manifest(app.get_subcommands().front()->get_name(), args);
  if (*gen_cmd) {
    return execute(manifest, gen.out / kManifestFile, [&] { gen_synth(gen, manifest, out); }, err);
  }
  if (*poison_cmd) {
    return execute(manifest, po.out / kManifestFile, [&] { poison(po, manifest, out); }, err);
  }
  if (*attacked_cmd) {
    return execute(manifest, ma.out / kManifestFile, [&] { make_attacked(ma, manifest, out); },
                   err);
  }
  if (*train_sub) {
    return execute(manifest, fs::path(tr.model_out.string() + ".manifest.json"),
                   [&] { train_cmd(tr, manifest, out); }, err);
  }
  if (*predict_sub) {
    return execute(manifest, pr.out / kManifestFile, [&] { predict_cmd(pr, manifest, out); },
                   err);
  }
  if (*eval_sub) {
    return execute(manifest, ev.out / kManifestFile, [&] { evaluate_cmd(ev, manifest, out); },
                   err);
  }
  // replay
  json recorded;
  try {
    recorded = read_json_file(replay_path);
    if (recorded.value("format", "") != "segpoison-run-manifest") {
      throw InputError(replay_path + " is not a run manifest");
    }
  } catch (...) {
    const ErrorInfo info = classify(std::current_exception());
    err << "error: " << info.message << "\n";
    return info.code;
  }
  const auto argv = recorded.at("argv").get<std::vector<std::string>>();
  if (!argv.empty() && argv.front() == "replay") {
    err << "error: refusing to replay a replay manifest\n";
    return kExitInputError;
  }
  return run(argv, out, err);
}

}  // namespace segpoison::cli
