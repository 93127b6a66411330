#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layerlens/distribution.hpp"

namespace layerlens {

inline constexpr int kReportFormatVersion = 1;

/// Aggregate of one metric at one layer. Batch metrics (infonce, dime, lidar)
/// carry a single value in per_prompt and have scope "batch".
struct LayerReport {
  std::size_t layer = 0;
  double depth_percent = 0.0;
  std::string metric;
  nlohmann::json params = nlohmann::json::object();
  std::string scope = "prompt";
  std::vector<std::uint64_t> prompt_ids;
  std::vector<double> per_prompt;
  double mean = 0.0;
  double std = 0.0;
  Histogram histogram;

  friend bool operator==(const LayerReport&, const LayerReport&) = default;
};

struct ReportPrompt {
  std::uint64_t prompt_id = 0;
  nlohmann::json tags = nlohmann::json::object();

  friend bool operator==(const ReportPrompt&, const ReportPrompt&) = default;
};

struct Report {
  int format_version = kReportFormatVersion;
  std::string tool_version;
  nlohmann::json config = nlohmann::json::object();
  std::string model_name;
  std::size_t num_layers = 0;
  std::vector<ReportPrompt> prompts;
  std::vector<LayerReport> layers;
  double wall_time_seconds = 0.0;

  friend bool operator==(const Report&, const Report&) = default;
};

/// 100 * layer / num_layers.
double depth_percent(std::size_t layer, std::size_t num_layers);

/// Fills mean, std and histogram from per_prompt.
void summarize(LayerReport& r);

nlohmann::json report_to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);

/// Canonical text form: sorted keys, shortest round-trip doubles, trailing newline.
std::string emit_report(const Report& r);
Report parse_report(const std::string& text);

Report read_report_file(const std::string& path);
void write_report_file(const std::string& path, const Report& r);

std::string tool_version();

}  // namespace layerlens
