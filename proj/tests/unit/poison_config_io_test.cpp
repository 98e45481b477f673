#include <gtest/gtest.h>

#include <fstream>

#include "segpoison/dataset_io.hpp"
#include "segpoison/errors.hpp"
#include "segpoison/poison_config_io.hpp"
#include "support/generators.hpp"
#include "support/temp_dir.hpp"

namespace segpoison {
namespace {

using nlohmann::json;

Dataset small_dataset() { return testing::Gen(11).dataset(6, 8, 16, 16); }

TEST(PoisonConfigIo, DefaultsAreFilled) {
  const json n = normalize_config_document(
      json{{"mode", "fine_grained"}, {"all_to", 1}, {"trigger", json::object()}});
  EXPECT_EQ(n["trigger"]["kind"], "non_semantic");
  EXPECT_EQ(n["trigger"]["shape"], "line");
  EXPECT_EQ(n["trigger"]["width_px"], 8);
  EXPECT_EQ(n["trigger"]["color"], json::array({0, 0, 0}));
  EXPECT_DOUBLE_EQ(n["poisoning_rate"].get<double>(), 0.1);
  EXPECT_EQ(n["selection"]["rule"], "random");
  EXPECT_EQ(n["seed"], 0);
  EXPECT_EQ(n["restrict_attacked_to_source"], true);
  EXPECT_EQ(normalize_config_document(n), n);
}

TEST(PoisonConfigIo, AllToBuildsNToOneMatrix) {
  const Dataset d = small_dataset();
  const PoisonConfig cfg = build_poison_config(
      json{{"mode", "fine_grained"}, {"all_to", 1}, {"trigger", {{"width_px", 3}}}}, d);
  EXPECT_EQ(std::get<FineGrainedMode>(cfg.mode).matrix, make_all_to_one_matrix(8, 1));
  EXPECT_EQ(cfg.trigger, make_line_trigger(3, {0, 0, 0}, 0, 16, 16));
}

TEST(PoisonConfigIo, MappingAndSemanticTrigger) {
  const Dataset d = small_dataset();
  const PoisonConfig cfg = build_poison_config(
      json{{"mode", "fine_grained"},
           {"mapping", {{3, 5}}},
           {"trigger", {{"kind", "semantic"}, {"trigger_class", 1}}},
           {"poisoning_rate", 0.5},
           {"seed", 9}},
      d);
  EXPECT_EQ(std::get<FineGrainedMode>(cfg.mode).matrix, make_attack_matrix(8, {{3, 5}}));
  EXPECT_EQ(cfg.trigger, TriggerSpec::semantic(1));
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_DOUBLE_EQ(cfg.poisoning_rate, 0.5);
}

TEST(PoisonConfigIo, BadnetsTargetFromSampleAndFile) {
  const Dataset d = small_dataset();
  const json trigger = {{"shape", "patch"}, {"size_px", 4}, {"row", 0}, {"col", 0}};
  const PoisonConfig from_sample = build_poison_config(
      json{{"mode", "badnets"}, {"target_mask", {{"sample_id", d.samples[2].id}}}, {"trigger", trigger}},
      d);
  EXPECT_EQ(std::get<BadNetsMode>(from_sample.mode).target, d.samples[2].mask);

  testing::TempDir dir;
  write_png(dir.path() / "yt.png", d.samples[4].mask);
  const PoisonConfig from_file = build_poison_config(
      json{{"mode", "badnets"}, {"target_mask", {{"file", "yt.png"}}}, {"trigger", trigger}}, d,
      dir.path());
  EXPECT_EQ(std::get<BadNetsMode>(from_file.mode).target, d.samples[4].mask);
}

TEST(PoisonConfigIo, RequiresClassesSelection) {
  const Dataset d = small_dataset();
  const PoisonConfig cfg = build_poison_config(
      json{{"mode", "fine_grained"},
           {"mapping", {{3, 5}}},
           {"trigger", json::object()},
           {"selection", {{"rule", "requires_classes"}, {"classes", {3}}, {"enforce_rate", true}}}},
      d);
  const auto& rc = std::get<RequiresClassesSelection>(cfg.selection);
  EXPECT_EQ(rc.classes, std::vector<ClassId>{3});
  EXPECT_TRUE(rc.enforce_rate);
}

TEST(PoisonConfigIo, Rejections) {
  const Dataset d = small_dataset();
  const json ok = {{"mode", "fine_grained"}, {"all_to", 1}, {"trigger", json::object()}};
  auto with = [&](const char* key, json value) {
    json doc = ok;
    doc[key] = std::move(value);
    return doc;
  };
  EXPECT_THROW(normalize_config_document(json::array()), ConfigError);
  EXPECT_THROW(normalize_config_document(with("mode", "other")), ConfigError);
  EXPECT_THROW(normalize_config_document(with("mapping", {{1, 2}})), ConfigError);
  EXPECT_THROW(normalize_config_document(with("poisoning_rate", 1.5)), ConfigError);
  EXPECT_THROW(normalize_config_document(with("seed", "x")), ConfigError);
  EXPECT_THROW(normalize_config_document(with("trigger", {{"kind", "sound"}})), ConfigError);
  EXPECT_THROW(normalize_config_document(with("trigger", {{"color", {1, 2}}})), ConfigError);
  EXPECT_THROW(normalize_config_document(with("selection", {{"rule", "all"}})), ConfigError);
  EXPECT_THROW(build_poison_config(with("all_to", 8), d), RangeError);
  EXPECT_THROW(build_poison_config(with("num_classes", 19), d), ConfigError);
  EXPECT_THROW(build_poison_config(with("trigger", {{"width_px", 17}}), d), PlacementError);
  EXPECT_THROW(build_poison_config(with("trigger", {{"kind", "semantic"}, {"trigger_class", 8}}), d),
               RangeError);
  EXPECT_THROW(build_poison_config(json{{"mode", "badnets"},
                                        {"target_mask", {{"sample_id", "nope"}}},
                                        {"trigger", json::object()}},
                                   d),
               ConfigError);
}

TEST(PoisonConfigIo, JsonFileRoundTripAndErrors) {
  testing::TempDir dir;
  const json value = {{"a", 1}, {"b", {1, 2, 3}}};
  write_json_file(dir.path() / "x.json", value);
  EXPECT_EQ(read_json_file(dir.path() / "x.json"), value);
  EXPECT_THROW(read_json_file(dir.path() / "missing.json"), IoError);
  std::ofstream(dir.path() / "bad.json") << "{not json";
  EXPECT_THROW(read_json_file(dir.path() / "bad.json"), ConfigError);
}

TEST(PoisonConfigIo, PoisonRecordListsModifiedIds) {
  const Dataset d = small_dataset();
  const json doc = normalize_config_document(
      json{{"mode", "fine_grained"}, {"all_to", 1}, {"trigger", {{"width_px", 2}}}, {"poisoning_rate", 0.5}});
  const PoisonedDataset p = poison_dataset(d, build_poison_config(doc, d));
  const json record = make_poison_record(p, doc);
  EXPECT_EQ(record["modified_ids"].size(), 3u);
  EXPECT_DOUBLE_EQ(record["effective_rate"].get<double>(), 0.5);
  EXPECT_EQ(record["num_samples"], 6);
  EXPECT_EQ(record["config"], doc);
}

}  // namespace
}  // namespace segpoison
