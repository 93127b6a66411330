#include "layerlens/report.hpp"

#include <fstream>
#include <sstream>

#include "layerlens/errors.hpp"

using nlohmann::json;

namespace layerlens {
namespace {

json histogram_to_json(const Histogram& h) {
  return {{"bins", h.counts.size()}, {"min", h.min}, {"max", h.max}, {"counts", h.counts}};
}

Histogram histogram_from_json(const json& j) {
  Histogram h;
  h.min = j.at("min").get<double>();
  h.max = j.at("max").get<double>();
  h.counts = j.at("counts").get<std::vector<std::size_t>>();
  if (j.at("bins").get<std::size_t>() != h.counts.size()) throw Error(ErrorCode::InvalidReport, "histogram bin count mismatch");
  return h;
}

}  // namespace

std::string tool_version() {
#ifdef LAYERLENS_VERSION
  return LAYERLENS_VERSION;
#else
  return "unknown";
#endif
}

double depth_percent(std::size_t layer, std::size_t num_layers) {
  if (num_layers == 0) return 0.0;
  return 100.0 * static_cast<double>(layer) / static_cast<double>(num_layers);
}

void summarize(LayerReport& r) {
  r.mean = mean(r.per_prompt);
  r.std = stddev(r.per_prompt);
  r.histogram = make_histogram(r.per_prompt, kHistogramBins);
}

json report_to_json(const Report& r) {
  json prompts = json::array();
  for (const auto& p : r.prompts) prompts.push_back({{"prompt_id", p.prompt_id}, {"tags", p.tags}});
  json layers = json::array();
  for (const auto& l : r.layers) {
    layers.push_back({
        {"layer", l.layer},
        {"depth_percent", l.depth_percent},
        {"metric", l.metric},
        {"params", l.params},
        {"scope", l.scope},
        {"prompt_ids", l.prompt_ids},
        {"per_prompt", l.per_prompt},
        {"mean", l.mean},
        {"std", l.std},
        {"histogram", histogram_to_json(l.histogram)},
    });
  }
  return {
      {"format_version", r.format_version},
      {"tool_version", r.tool_version},
      {"config", r.config},
      {"model_name", r.model_name},
      {"num_layers", r.num_layers},
      {"prompts", std::move(prompts)},
      {"layers", std::move(layers)},
      {"wall_time_seconds", r.wall_time_seconds},
  };
}

Report report_from_json(const json& j) {
  try {
    Report r;
    r.format_version = j.at("format_version").get<int>();
    if (r.format_version != kReportFormatVersion)
      throw Error(ErrorCode::InvalidReport, "unsupported report format_version " + std::to_string(r.format_version));
    r.tool_version = j.at("tool_version").get<std::string>();
    r.config = j.at("config");
    r.model_name = j.at("model_name").get<std::string>();
    r.num_layers = j.at("num_layers").get<std::size_t>();
    r.wall_time_seconds = j.at("wall_time_seconds").get<double>();
    for (const auto& p : j.at("prompts")) r.prompts.push_back({p.at("prompt_id").get<std::uint64_t>(), p.at("tags")});
    for (const auto& e : j.at("layers")) {
      LayerReport l;
      l.layer = e.at("layer").get<std::size_t>();
      l.depth_percent = e.at("depth_percent").get<double>();
      l.metric = e.at("metric").get<std::string>();
      l.params = e.at("params");
      l.scope = e.at("scope").get<std::string>();
      l.prompt_ids = e.at("prompt_ids").get<std::vector<std::uint64_t>>();
      l.per_prompt = e.at("per_prompt").get<std::vector<double>>();
      l.mean = e.at("mean").get<double>();
      l.std = e.at("std").get<double>();
      l.histogram = histogram_from_json(e.at("histogram"));
      if (l.prompt_ids.size() != l.per_prompt.size() && l.scope == "prompt")
        throw Error(ErrorCode::InvalidReport, "prompt_ids and per_prompt differ in length");
      r.layers.push_back(std::move(l));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidReport, e.what());
  }
}

std::string emit_report(const Report& r) { return report_to_json(r).dump(2) + "\n"; }

Report parse_report(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidReport, e.what());
  }
  return report_from_json(j);
}

Report read_report_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open report " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_report(ss.str());
}

void write_report_file(const std::string& path, const Report& r) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write report " + path);
  out << emit_report(r);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for report " + path);
}

}  // namespace layerlens
