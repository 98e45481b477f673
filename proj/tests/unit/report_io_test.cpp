#include <gtest/gtest.h>

#include "segpoison/report_io.hpp"

namespace segpoison {
namespace {

MetricsReport sample_report() {
  MetricsReport r;
  r.miou_b = 35.25;
  r.pa_b = 73.3;
  r.miou_a = 4.04;
  r.pa_a = std::nullopt;
  r.asr = 96.94;
  r.per_class_iou_b = {50.0, std::nullopt, 20.5};
  r.per_class_iou_a = {std::nullopt, 1.0, 2.0};
  r.counts = {100, 40, 30, 29, 70, 39};
  r.benign_samples = 5;
  r.attacked_samples = 4;
  return r;
}

TEST(ReportIo, JsonRoundTrip) {
  const MetricsReport r = sample_report();
  const MetricsReport back = report_from_json(report_to_json(r));
  EXPECT_EQ(back.miou_b, r.miou_b);
  EXPECT_EQ(back.pa_a, r.pa_a);
  EXPECT_EQ(back.per_class_iou_b, r.per_class_iou_b);
  EXPECT_EQ(back.counts.asr_hits, r.counts.asr_hits);
  EXPECT_EQ(back.attacked_samples, 4u);
  EXPECT_TRUE(report_to_json(r)["pa_a"].is_null());
}

TEST(ReportIo, CsvUsesOneDecimalAndBlankForAbsent) {
  EXPECT_EQ(report_to_csv(sample_report(), "patch", "N-to-1"),
            "model,attack,metric,value\n"
            "patch,N-to-1,mIOU-B,35.2\n"
            "patch,N-to-1,PA-B,73.3\n"
            "patch,N-to-1,mIOU-A,4.0\n"
            "patch,N-to-1,PA-A,\n"
            "patch,N-to-1,ASR,96.9\n");
}

TEST(ReportIo, TableColumnOrder) {
  const std::string t = report_table(sample_report(), "patch", "badnets");
  const auto header_end = t.find('\n');
  const std::string header = t.substr(0, header_end);
  EXPECT_LT(header.find("mIOU-B"), header.find("PA-B"));
  EXPECT_LT(header.find("PA-B"), header.find("mIOU-A"));
  EXPECT_LT(header.find("mIOU-A"), header.find("PA-A"));
  EXPECT_LT(header.find("PA-A"), header.find("ASR"));
  EXPECT_NE(t.find("96.9"), std::string::npos);
  EXPECT_EQ(format_percent(std::nullopt), "-");
  EXPECT_EQ(format_percent(100.0), "100.0");
}

}  // namespace
}  // namespace segpoison
