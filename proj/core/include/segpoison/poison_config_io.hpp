#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "segpoison/attack.hpp"

namespace segpoison {

// PoisonConfig documents are JSON:
//
//   {
//     "mode": "fine_grained",            // or "badnets"
//     "mapping": [[3, 5]],               // fine_grained: source -> target pairs
//     "all_to": 1,                       // fine_grained shorthand for N-to-1
//     "target_mask": {"sample_id": "train_000017"},   // badnets; or {"file": "y_t.png"}
//     "trigger": {"kind": "non_semantic", "shape": "line", "width_px": 8,
//                 "color": [0, 0, 0], "row_offset": 0, "alpha": 1.0},
//     "poisoning_rate": 0.1,
//     "selection": {"rule": "random"},   // or {"rule": "requires_classes", "classes": [1, 3]}
//     "seed": 0,
//     "restrict_attacked_to_source": true
//   }
//
// Semantic triggers are {"kind": "semantic", "trigger_class": 1}; patch
// triggers use "shape": "patch" with "size_px", "row", "col".

// Fills defaults and checks field types. The result is what gets recorded in
// poison_record.json and run manifests. Throws ConfigError.
nlohmann::json normalize_config_document(const nlohmann::json& document);

// Resolves a normalized document against the dataset it will be applied to:
// image dimensions for line triggers, K for the matrix, and the constant
// target mask for badnets. Relative files resolve against `base_dir`.
PoisonConfig build_poison_config(const nlohmann::json& normalized, const Dataset& dataset,
                                 const std::filesystem::path& base_dir = {});

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& value);

// {modified_ids, effective_rate, num_samples, config} next to a poisoned
// dataset.
nlohmann::json make_poison_record(const PoisonedDataset& poisoned,
                                  const nlohmann::json& normalized_config);

}  // namespace segpoison
