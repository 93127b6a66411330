#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "layerlens/errors.hpp"
#include "layerlens/report.hpp"

using namespace layerlens;

namespace {

Report sample_report() {
  Report r;
  r.tool_version = "test";
  r.config = {{"metrics", {"entropy"}}, {"seed", nullptr}};
  r.model_name = "m";
  r.num_layers = 4;
  r.prompts = {{1, {{"group", "a"}}}, {2, nlohmann::json::object()}};
  for (std::size_t layer = 0; layer <= 4; ++layer) {
    LayerReport l;
    l.layer = layer;
    l.depth_percent = depth_percent(layer, 4);
    l.metric = "entropy";
    l.params = {{"alpha", 1.0}, {"normalized", false}};
    l.prompt_ids = {1, 2};
    l.per_prompt = {0.1 * layer + 1.0 / 3.0, 2.0 / 7.0};
    summarize(l);
    r.layers.push_back(l);
  }
  r.wall_time_seconds = 0.25;
  return r;
}

}  // namespace

TEST(Report, DepthPercentEndpoints) {
  EXPECT_EQ(depth_percent(0, 24), 0.0);
  EXPECT_EQ(depth_percent(24, 24), 100.0);
  EXPECT_EQ(depth_percent(6, 24), 25.0);
}

TEST(Report, SummaryIsConsistentWithValues) {
  LayerReport l;
  l.per_prompt = {1, 2, 3, 4};
  summarize(l);
  EXPECT_NEAR(l.mean, 2.5, 1e-12);
  EXPECT_NEAR(l.std, std::sqrt(1.25), 1e-12);
  EXPECT_EQ(l.histogram.counts.size(), kHistogramBins);
  EXPECT_EQ(l.histogram.min, 1.0);
  EXPECT_EQ(l.histogram.max, 4.0);
}

TEST(Report, ParseEmitRoundTrip) {
  const auto r = sample_report();
  const auto text = emit_report(r);
  EXPECT_EQ(parse_report(text), r);
  EXPECT_EQ(emit_report(parse_report(text)), text);
  EXPECT_EQ(text.back(), '\n');
}

TEST(Report, FileRoundTrip) {
  fixture::TempDir dir;
  const auto r = sample_report();
  const auto path = (dir / "report.json").string();
  write_report_file(path, r);
  EXPECT_EQ(read_report_file(path), r);
}

TEST(Report, CanonicalFormatting) {
  auto r = sample_report();
  r.layers[0].params = {{"zeta", 0.1}, {"alpha", 1e-12}};
  const auto text = emit_report(r);
  EXPECT_NE(text.find("\"zeta\": 0.1"), std::string::npos);
  EXPECT_NE(text.find("1e-12"), std::string::npos);
  EXPECT_LT(text.find("\"alpha\""), text.find("\"zeta\""));
  EXPECT_LT(text.find("\"config\""), text.find("\"layers\""));
}

TEST(Report, InvalidDocumentsAreTyped) {
  auto code = [](const std::string& text) {
    try {
      parse_report(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code("not json"), ErrorCode::InvalidReport);
  EXPECT_EQ(code("{}"), ErrorCode::InvalidReport);
  auto j = report_to_json(sample_report());
  j["format_version"] = 99;
  EXPECT_EQ(code(j.dump()), ErrorCode::InvalidReport);
  j = report_to_json(sample_report());
  j["layers"][0]["per_prompt"] = "oops";
  EXPECT_EQ(code(j.dump()), ErrorCode::InvalidReport);
}

TEST(Report, ToolVersionIsSet) { EXPECT_FALSE(tool_version().empty()); }
