#include "segpoison/poison_config_io.hpp"

#include <fstream>

#include "segpoison/dataset_io.hpp"
#include "segpoison/errors.hpp"

namespace segpoison {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T field(const json& obj, const char* key, const char* where) {
  if (!obj.contains(key)) {
    throw ConfigError(std::string(where) + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& obj, const char* key, T fallback, const char* where) {
  return obj.contains(key) ? field<T>(obj, key, where) : fallback;
}

Rgb parse_color(const json& trigger) {
  const auto c = field_or<std::vector<int>>(trigger, "color", {0, 0, 0}, "trigger");
  if (c.size() != 3) throw ConfigError("trigger: color needs three components");
  Rgb out{};
  for (int i = 0; i < 3; ++i) {
    if (c[i] < 0 || c[i] > 255) throw ConfigError("trigger: color component outside [0, 255]");
    out[i] = static_cast<std::uint8_t>(c[i]);
  }
  return out;
}

json normalize_trigger(const json& t) {
  if (!t.is_object()) throw ConfigError("trigger must be an object");
  json out;
  const auto kind = field_or<std::string>(t, "kind", "non_semantic", "trigger");
  out["kind"] = kind;
  if (kind == "semantic") {
    out["trigger_class"] = field<int>(t, "trigger_class", "trigger");
    return out;
  }
  if (kind != "non_semantic") throw ConfigError("trigger: unknown kind '" + kind + "'");
  const auto shape = field_or<std::string>(t, "shape", "line", "trigger");
  out["shape"] = shape;
  const Rgb color = parse_color(t);
  out["color"] = {color[0], color[1], color[2]};
  out["alpha"] = field_or<double>(t, "alpha", 1.0, "trigger");
  if (shape == "line") {
    out["width_px"] = field_or<int>(t, "width_px", 8, "trigger");
    out["row_offset"] = field_or<int>(t, "row_offset", 0, "trigger");
  } else if (shape == "patch") {
    out["size_px"] = field<int>(t, "size_px", "trigger");
    out["row"] = field_or<int>(t, "row", 0, "trigger");
    out["col"] = field_or<int>(t, "col", 0, "trigger");
  } else {
    throw ConfigError("trigger: unknown shape '" + shape + "'");
  }
  return out;
}

}  // namespace

json normalize_config_document(const json& doc) {
  if (!doc.is_object()) throw ConfigError("poison config must be a JSON object");
  json out;
  const auto mode = field<std::string>(doc, "mode", "config");
  out["mode"] = mode;
  if (mode == "fine_grained") {
    if (doc.contains("all_to") && doc.contains("mapping")) {
      throw ConfigError("config: give either 'mapping' or 'all_to', not both");
    }
    if (doc.contains("all_to")) {
      out["all_to"] = field<int>(doc, "all_to", "config");
    } else {
      const auto pairs = field_or<std::vector<std::vector<int>>>(doc, "mapping", {}, "config");
      for (const auto& p : pairs) {
        if (p.size() != 2) throw ConfigError("config: mapping entries are [source, target]");
      }
      out["mapping"] = pairs;
    }
  } else if (mode == "badnets") {
    const json target = field<json>(doc, "target_mask", "config");
    if (!target.is_object() || (target.contains("sample_id") == target.contains("file"))) {
      throw ConfigError("config: target_mask needs exactly one of 'sample_id' or 'file'");
    }
    out["target_mask"] = target.contains("sample_id")
                             ? json{{"sample_id", field<std::string>(target, "sample_id", "target_mask")}}
                             : json{{"file", field<std::string>(target, "file", "target_mask")}};
  } else {
    throw ConfigError("config: unknown mode '" + mode + "'");
  }
  if (doc.contains("num_classes")) out["num_classes"] = field<int>(doc, "num_classes", "config");

  out["trigger"] = normalize_trigger(field<json>(doc, "trigger", "config"));

  const double rate = field_or<double>(doc, "poisoning_rate", 0.1, "config");
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("config: poisoning_rate outside [0, 1]");
  out["poisoning_rate"] = rate;

  const json sel = field_or<json>(doc, "selection", json{{"rule", "random"}}, "config");
  const auto rule = field_or<std::string>(sel, "rule", "random", "selection");
  if (rule == "random") {
    out["selection"] = {{"rule", "random"}};
  } else if (rule == "requires_classes") {
    out["selection"] = {{"rule", rule},
                        {"classes", field<std::vector<int>>(sel, "classes", "selection")},
                        {"enforce_rate", field_or<bool>(sel, "enforce_rate", false, "selection")}};
  } else {
    throw ConfigError("selection: unknown rule '" + rule + "'");
  }

  out["seed"] = field_or<std::uint64_t>(doc, "seed", 0, "config");
  out["restrict_attacked_to_source"] =
      field_or<bool>(doc, "restrict_attacked_to_source", true, "config");
  return out;
}

PoisonConfig build_poison_config(const json& doc, const Dataset& dataset,
                                 const fs::path& base_dir) {
  const json n = normalize_config_document(doc);
  const int k = dataset.num_classes;
  if (n.contains("num_classes") && n["num_classes"].get<int>() != k) {
    throw ConfigError("config is for " + std::to_string(n["num_classes"].get<int>()) +
                      " classes but the dataset has " + std::to_string(k));
  }

  PoisonConfig cfg;
  if (n["mode"] == "fine_grained") {
    if (n.contains("all_to")) {
      cfg.mode = FineGrainedMode{make_all_to_one_matrix(k, n["all_to"].get<int>())};
    } else {
      std::vector<std::pair<int, int>> mapping;
      for (const auto& p : n["mapping"]) mapping.emplace_back(p[0].get<int>(), p[1].get<int>());
      cfg.mode = FineGrainedMode{make_attack_matrix(k, mapping)};
    }
  } else {
    const json& t = n["target_mask"];
    BadNetsMode bn;
    if (t.contains("sample_id")) {
      const auto id = t["sample_id"].get<std::string>();
      auto it = std::find_if(dataset.samples.begin(), dataset.samples.end(),
                             [&](const Sample& s) { return s.id == id; });
      if (it == dataset.samples.end()) {
        throw ConfigError("badnets target sample '" + id + "' is not in the dataset");
      }
      bn.target = it->mask;
      bn.target_origin = "sample:" + id;
    } else {
      fs::path file = t["file"].get<std::string>();
      if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
      bn.target = read_png_mask(file);
      bn.target_origin = "file:" + t["file"].get<std::string>();
    }
    cfg.mode = std::move(bn);
  }

  const json& t = n["trigger"];
  if (t["kind"] == "semantic") {
    const int c = t["trigger_class"].get<int>();
    if (c < 0 || c >= k) throw RangeError("semantic trigger class outside the dataset's classes");
    cfg.trigger = TriggerSpec::semantic(static_cast<ClassId>(c));
  } else {
    const Rgb color = parse_color(t);
    const auto alpha = static_cast<float>(t["alpha"].get<double>());
    if (t["shape"] == "line") {
      if (dataset.samples.empty()) throw ConfigError("line trigger needs a non-empty dataset");
      const int w = dataset.samples.front().image.width;
      const int h = dataset.samples.front().image.height;
      for (const Sample& s : dataset.samples) {
        if (!s.image.same_shape(w, h)) {
          throw ConfigError("line triggers need equally sized images; sample " + s.id + " differs");
        }
      }
      cfg.trigger = make_line_trigger(t["width_px"].get<int>(), color,
                                      t["row_offset"].get<int>(), w, h, alpha);
    } else {
      cfg.trigger = make_patch_trigger(t["size_px"].get<int>(), color, t["row"].get<int>(),
                                       t["col"].get<int>(), alpha);
    }
  }

  cfg.poisoning_rate = n["poisoning_rate"].get<double>();
  const json& sel = n["selection"];
  if (sel["rule"] == "random") {
    cfg.selection = RandomSelection{};
  } else {
    RequiresClassesSelection rc;
    for (int c : sel["classes"].get<std::vector<int>>()) {
      if (c < 0 || c >= k) throw RangeError("selection class outside the dataset's classes");
      rc.classes.push_back(static_cast<ClassId>(c));
    }
    rc.enforce_rate = sel["enforce_rate"].get<bool>();
    cfg.selection = std::move(rc);
  }
  cfg.seed = n["seed"].get<std::uint64_t>();
  cfg.restrict_attacked_to_source = n["restrict_attacked_to_source"].get<bool>();
  validate_config(cfg, dataset);
  return cfg;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& value) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << value.dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

json make_poison_record(const PoisonedDataset& poisoned, const json& normalized_config) {
  json record;
  record["modified_ids"] = poisoned.modified_ids;  // std::set: sorted
  record["num_samples"] = poisoned.dataset.samples.size();
  record["num_modified"] = poisoned.modified_ids.size();
  record["effective_rate"] = poisoned.effective_rate();
  record["config"] = normalized_config;
  if (const auto* fg = std::get_if<FineGrainedMode>(&poisoned.config.mode)) {
    json pairs = json::array();
    for (const auto& [s, t] : fg->matrix.mapping()) pairs.push_back({s, t});
    record["resolved_mapping"] = pairs;
  } else {
    record["resolved_target"] = std::get<BadNetsMode>(poisoned.config.mode).target_origin;
  }
  return record;
}

}  // namespace segpoison
