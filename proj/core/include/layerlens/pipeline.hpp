#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layerlens/augmentation.hpp"
#include "layerlens/perturbation.hpp"
#include "layerlens/report.hpp"

namespace layerlens {

// ---------------------------------------------------------------- compute

/// Metric names accepted by compute: entropy, logdet, curvature (per prompt)
/// and infonce, dime, lidar (per batch of augmented classes).
bool is_known_metric(const std::string& name);
bool is_batch_metric(const std::string& name);

struct RunConfig {
  std::filesystem::path dump_dir;
  std::vector<std::string> metrics = {"entropy"};

  std::vector<double> entropy_alphas = {1.0};
  bool entropy_normalized = false;
  double curvature_eps = 1e-12;
  double infonce_temperature = 0.1;
  double dime_alpha = 1.0;
  std::size_t dime_permutations = 8;
  double lidar_delta = 1e-4;
  double lidar_eig_floor = 1e-8;
  std::size_t lidar_samples_per_class = 16;

  std::optional<std::uint64_t> seed;  // required when dime is requested
  std::size_t parallelism = 1;

  std::vector<std::uint64_t> prompt_ids;           // empty = all
  std::map<std::string, std::string> tag_filters;  // tag == value, all must hold

  // Tag keys that pair augmentations: prompts sharing `class_tag` are views of
  // one original prompt, ordered by `aug_tag`.
  std::string class_tag = "class";
  std::string aug_tag = "aug";
};

/// Throws ConfigError for unknown metrics, bad parameters or a missing seed.
void validate_config(const RunConfig& config);

/// Echo of the configuration stored in the report. Parallelism is left out so
/// that reports do not depend on the worker count.
nlohmann::json config_to_json(const RunConfig& config);

/// Evaluates every metric at every layer of the dump. Aggregation follows
/// ascending prompt_id independently of parallelism.
Report compute_report(const RunConfig& config);

// ---------------------------------------------------------------- corpora

/// Newline-delimited token-id lists, one prompt per line.
std::vector<TokenSequence> read_token_corpus(const std::filesystem::path& path, std::uint32_t vocab_size);
void write_token_corpus(const std::filesystem::path& path, const std::vector<TokenSequence>& corpus);

struct SubCorpus {
  std::string file_name;
  nlohmann::json tags;  // kind, p or T, seed
  std::vector<TokenSequence> prompts;
};

/// One sub-corpus per probability in `ps`. Prompt i uses prompt_index i, so a
/// given (seed, i) produces nested replacement sets as p grows.
std::vector<SubCorpus> perturb_corpus(const std::vector<TokenSequence>& corpus, PerturbKind kind,
                                      const std::vector<double>& ps, std::uint64_t seed);

/// One sub-corpus of `count` random prompts per length.
std::vector<SubCorpus> random_length_corpus(const std::vector<std::size_t>& lengths, std::size_t count,
                                            std::uint32_t vocab_size, std::uint64_t seed);

/// Writes each sub-corpus plus corpus_manifest.json into dir.
void write_sub_corpora(const std::filesystem::path& dir, const std::vector<SubCorpus>& subs,
                       const nlohmann::json& header);

struct AugmentedCorpus {
  std::vector<std::string> lines;  // prompt i, augmentation k at i * num_outputs + k
  nlohmann::json manifest;         // spec echo, entries with class/aug tags, mapping
};

AugmentedCorpus augment_corpus(const std::vector<std::string>& prompts, const AugmentSpec& spec);

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

// ---------------------------------------------------------------- analyses

struct SpectraRow {
  double beta;
  double alpha;
  double entropy;
};

/// Entropy of the normalized power-law spectrum lambda_i = i^-beta, i = 1..length.
std::vector<SpectraRow> synth_spectra(const std::vector<double>& betas, const std::vector<double>& alphas,
                                      std::size_t length);
std::string spectra_csv(const std::vector<SpectraRow>& rows);

struct DipRow {
  std::size_t layer;
  double depth_percent;
  std::size_t n;
  DipResult result;
};

struct DipTable {
  std::vector<DipRow> rows;
  std::size_t selected_layer = 0;
};

struct MetricSelector {
  std::string metric;
  nlohmann::json params = nlohmann::json::object();  // subset that must match
  std::size_t first_layer = 0;
  std::size_t last_layer = static_cast<std::size_t>(-1);
};

DipTable dip_table(const Report& report, const MetricSelector& selector, std::size_t bootstrap,
                   std::uint64_t seed, std::size_t width = 1);
std::string dip_csv(const DipTable& table);

struct CorrelationRow {
  std::size_t layer;
  double depth_percent;
  std::size_t groups;
  double r;
};

/// Reads "group,score" lines; a non-numeric first line is treated as a header.
std::map<std::string, double> read_scores(const std::filesystem::path& path);

/// Per layer, Pearson correlation between per-group metric means and scores.
/// A prompt's group is its `group_tag` tag, or its prompt_id when untagged.
std::vector<CorrelationRow> correlate_table(const Report& report, const MetricSelector& selector,
                                            const std::map<std::string, double>& scores,
                                            const std::string& group_tag = "group");
std::string correlation_csv(const std::vector<CorrelationRow>& rows);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace layerlens
