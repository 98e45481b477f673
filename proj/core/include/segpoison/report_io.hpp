#pragma once

#include <string>
#include <nlohmann/json.hpp>

#include "segpoison/metrics.hpp"

namespace segpoison {

nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& value);

// One decimal place, or "-" when absent.
std::string format_percent(const std::optional<double>& value);

// CSV with header model,attack,metric,value; one row per metric in the order
// mIOU-B, PA-B, mIOU-A, PA-A, ASR.
std::string report_to_csv(const MetricsReport& report, const std::string& model_tag,
                          const std::string& attack_tag);

// Fixed-width table row in the same column order, with a header line.
std::string report_table(const MetricsReport& report, const std::string& model_tag,
                         const std::string& attack_tag);

}  // namespace segpoison
