#include "segpoison/report_io.hpp"

#include <cstdio>
#include <sstream>

#include "segpoison/errors.hpp"

namespace segpoison {
using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

json opt_list(const std::vector<std::optional<double>>& values) {
  json out = json::array();
  for (const auto& v : values) out.push_back(opt(v));
  return out;
}

struct Column {
  const char* name;
  std::optional<double> MetricsReport::*field;
};

constexpr Column kColumns[] = {
    {"mIOU-B", &MetricsReport::miou_b}, {"PA-B", &MetricsReport::pa_b},
    {"mIOU-A", &MetricsReport::miou_a}, {"PA-A", &MetricsReport::pa_a},
    {"ASR", &MetricsReport::asr},
};

}  // namespace

json report_to_json(const MetricsReport& r) {
  json j;
  j["miou_b"] = opt(r.miou_b);
  j["pa_b"] = opt(r.pa_b);
  j["miou_a"] = opt(r.miou_a);
  j["pa_a"] = opt(r.pa_a);
  j["asr"] = opt(r.asr);
  j["per_class_iou_b"] = opt_list(r.per_class_iou_b);
  j["per_class_iou_a"] = opt_list(r.per_class_iou_a);
  j["pixel_counts"] = {
      {"benign_scored", r.counts.benign_scored},     {"benign_correct", r.counts.benign_correct},
      {"attacked_scored", r.counts.attacked_scored}, {"attacked_correct", r.counts.attacked_correct},
      {"asr_qualifying", r.counts.asr_qualifying},   {"asr_hits", r.counts.asr_hits},
  };
  j["benign_samples"] = r.benign_samples;
  j["attacked_samples"] = r.attacked_samples;
  return j;
}

MetricsReport report_from_json(const json& j) {
  try {
    MetricsReport r;
    r.miou_b = opt_from(j.at("miou_b"));
    r.pa_b = opt_from(j.at("pa_b"));
    r.miou_a = opt_from(j.at("miou_a"));
    r.pa_a = opt_from(j.at("pa_a"));
    r.asr = opt_from(j.at("asr"));
    for (const auto& v : j.at("per_class_iou_b")) r.per_class_iou_b.push_back(opt_from(v));
    for (const auto& v : j.at("per_class_iou_a")) r.per_class_iou_a.push_back(opt_from(v));
    const json& c = j.at("pixel_counts");
    r.counts.benign_scored = c.at("benign_scored");
    r.counts.benign_correct = c.at("benign_correct");
    r.counts.attacked_scored = c.at("attacked_scored");
    r.counts.attacked_correct = c.at("attacked_correct");
    r.counts.asr_qualifying = c.at("asr_qualifying");
    r.counts.asr_hits = c.at("asr_hits");
    r.benign_samples = j.at("benign_samples");
    r.attacked_samples = j.at("attacked_samples");
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed report: ") + e.what());
  }
}

std::string format_percent(const std::optional<double>& value) {
  if (!value) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *value);
  return buf;
}

std::string report_to_csv(const MetricsReport& r, const std::string& model_tag,
                          const std::string& attack_tag) {
  std::ostringstream out;
  out << "model,attack,metric,value\n";
  for (const Column& c : kColumns) {
    out << model_tag << ',' << attack_tag << ',' << c.name << ',';
    if (r.*c.field) out << format_percent(r.*c.field);
    out << '\n';
  }
  return out.str();
}

std::string report_table(const MetricsReport& r, const std::string& model_tag,
                         const std::string& attack_tag) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof line, "%-12s %-16s", "Model", "Attack");
  out += line;
  for (const Column& c : kColumns) {
    std::snprintf(line, sizeof line, " %8s", c.name);
    out += line;
  }
  out += '\n';
  std::snprintf(line, sizeof line, "%-12s %-16s", model_tag.c_str(), attack_tag.c_str());
  out += line;
  for (const Column& c : kColumns) {
    std::snprintf(line, sizeof line, " %8s", format_percent(r.*c.field).c_str());
    out += line;
  }
  out += '\n';
  return out;
}

}  // namespace segpoison
