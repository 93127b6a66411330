// layerlens command-line front end.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 data error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "layerlens/distribution.hpp"
#include "layerlens/dump_io.hpp"
#include "layerlens/errors.hpp"
#include "layerlens/pipeline.hpp"
#include "layerlens/report.hpp"

namespace {

using namespace layerlens;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

// "k=v" with v parsed as JSON when possible (numbers, booleans), else kept as a string.
std::pair<std::string, nlohmann::json> parse_param(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::ConfigError, "expected key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  const std::string value = kv.substr(eq + 1);
  auto parsed = nlohmann::json::parse(value, nullptr, false);
  if (parsed.is_discarded()) return {key, value};
  return {key, parsed};
}

std::map<std::string, std::string> parse_tag_filters(const std::vector<std::string>& kvs) {
  std::map<std::string, std::string> out;
  for (const auto& kv : kvs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::ConfigError, "expected tag=value, got '" + kv + "'");
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path);
}

struct SelectorArgs {
  std::string metric = "entropy";
  std::vector<std::string> params;
  std::size_t first_layer = 0;
  std::optional<std::size_t> last_layer;

  void attach(CLI::App* cmd) {
    cmd->add_option("--metric", metric, "Metric name in the report")->capture_default_str();
    cmd->add_option("--param", params, "Parameter the layer report must carry, key=value (repeatable)");
    cmd->add_option("--first-layer", first_layer, "First layer to include")->capture_default_str();
    cmd->add_option("--last-layer", last_layer, "Last layer to include (default: all)");
  }

  MetricSelector build() const {
    MetricSelector s;
    s.metric = metric;
    for (const auto& kv : params) {
      auto [k, v] = parse_param(kv);
      s.params[k] = v;
    }
    s.first_layer = first_layer;
    if (last_layer) s.last_layer = *last_layer;
    return s;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layerlens: layer-wise representation quality metrics over hidden-state dumps"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  // compute
  RunConfig cfg;
  std::string compute_out;
  std::vector<std::string> tag_filters;
  std::uint64_t compute_seed = 0;
  auto* compute = app.add_subcommand("compute", "Evaluate metrics at every layer of a dump and write a JSON report");
  compute->add_option("--dump", cfg.dump_dir, "Dump directory")->required()->check(CLI::ExistingDirectory);
  compute->add_option("--metric", cfg.metrics, "entropy, logdet, curvature, infonce, dime, lidar (repeatable)")
      ->capture_default_str();
  compute->add_option("--alpha", cfg.entropy_alphas, "Entropy orders (repeatable)")->capture_default_str();
  compute->add_flag("--normalized", cfg.entropy_normalized, "Divide entropy by log(min(L, D))");
  compute->add_option("--curvature-eps", cfg.curvature_eps, "Norm below which a curvature term is skipped")
      ->capture_default_str();
  compute->add_option("--temperature", cfg.infonce_temperature, "InfoNCE temperature")->capture_default_str();
  compute->add_option("--dime-alpha", cfg.dime_alpha, "DiME entropy order")->capture_default_str();
  compute->add_option("--permutations", cfg.dime_permutations, "DiME sampled permutations")->capture_default_str();
  compute->add_option("--lidar-delta", cfg.lidar_delta, "LiDAR within-class ridge")->capture_default_str();
  compute->add_option("--lidar-eig-floor", cfg.lidar_eig_floor, "LiDAR whitening eigenvalue floor")
      ->capture_default_str();
  compute->add_option("--samples-per-class", cfg.lidar_samples_per_class, "LiDAR augmentations per class")
      ->capture_default_str();
  auto* compute_seed_opt = compute->add_option("--seed", compute_seed, "Seed (required for dime)");
  compute->add_option("-j,--parallelism", cfg.parallelism, "Worker threads")->capture_default_str();
  compute->add_option("--prompt", cfg.prompt_ids, "Restrict to these prompt ids (repeatable)");
  compute->add_option("--tag", tag_filters, "Keep prompts whose tag equals value, tag=value (repeatable)");
  compute->add_option("--class-tag", cfg.class_tag, "Tag grouping augmentations of one prompt")->capture_default_str();
  compute->add_option("--aug-tag", cfg.aug_tag, "Tag ordering augmentations within a class")->capture_default_str();
  compute->add_option("-o,--out", compute_out, "Report path (default: stdout)");

  // perturb
  std::string perturb_in, perturb_kind = "repetition", perturb_out;
  std::uint32_t vocab_size = 0;
  std::vector<double> ps;
  std::vector<std::size_t> lengths;
  std::size_t random_count = 1;
  std::uint64_t perturb_seed = 0;
  auto* perturb = app.add_subcommand("perturb", "Generate repetition, randomness or random-length token corpora");
  perturb->add_option("--kind", perturb_kind, "repetition, randomness or random_length")->capture_default_str();
  perturb->add_option("--input", perturb_in, "Token corpus, one whitespace-separated id list per line");
  perturb->add_option("--vocab-size", vocab_size, "Vocabulary size")->required();
  perturb->add_option("--p", ps, "Replacement probabilities (default 0, 0.1, ..., 1)");
  perturb->add_option("--length", lengths, "Prompt lengths for random_length (repeatable)");
  perturb->add_option("--count", random_count, "Prompts per length for random_length")->capture_default_str();
  perturb->add_option("--seed", perturb_seed, "Seed")->required();
  perturb->add_option("-o,--out", perturb_out, "Output directory")->required();

  // augment
  AugmentSpec aug;
  std::string augment_in, augment_out;
  auto* augment = app.add_subcommand("augment", "Produce tagged augmentations of a text corpus");
  augment->add_option("--input", augment_in, "Text corpus, one prompt per line")->required()->check(CLI::ExistingFile);
  augment->add_option("--split-p", aug.split_p, "Per-word split probability")->capture_default_str();
  augment->add_option("--char-p", aug.char_p, "Per-word random character edit probability")->capture_default_str();
  augment->add_option("--keyboard-p", aug.keyboard_p, "Per-word keyboard typo probability")->capture_default_str();
  augment->add_option("--num-outputs", aug.num_outputs, "Augmentations per prompt")->capture_default_str();
  augment->add_option("--seed", aug.seed, "Seed")->required();
  augment->add_option("-o,--out", augment_out, "Output directory")->required();

  // dip
  SelectorArgs dip_sel;
  std::string dip_report, dip_out;
  std::size_t bootstrap = 2000, dip_workers = 1;
  std::uint64_t dip_seed = 0;
  auto* dip = app.add_subcommand("dip", "Dip statistic and p-value per layer, selecting the most bimodal layer");
  dip->add_option("--report", dip_report, "Report file")->required()->check(CLI::ExistingFile);
  dip_sel.attach(dip);
  dip->add_option("--bootstrap", bootstrap, "Uniform null samples for the p-value")->capture_default_str();
  dip->add_option("--seed", dip_seed, "Seed for the null samples")->required();
  dip->add_option("-j,--parallelism", dip_workers, "Worker threads")->capture_default_str();
  dip->add_option("-o,--out", dip_out, "CSV path (default: stdout)");

  // correlate
  SelectorArgs cor_sel;
  std::string cor_report, scores_path, group_tag = "group", cor_out;
  auto* correlate = app.add_subcommand("correlate", "Pearson correlation of per-group metric means with scores");
  correlate->add_option("--report", cor_report, "Report file")->required()->check(CLI::ExistingFile);
  cor_sel.attach(correlate);
  correlate->add_option("--scores", scores_path, "CSV of group,score")->required()->check(CLI::ExistingFile);
  correlate->add_option("--group-tag", group_tag, "Prompt tag naming the group")->capture_default_str();
  correlate->add_option("-o,--out", cor_out, "CSV path (default: stdout)");

  // synth-spectra
  std::vector<double> betas{0.0, 0.5, 1.0, 2.0}, alphas{0.5, 1.0, 2.0, 4.0};
  std::size_t spectrum_length = 100;
  std::string spectra_out;
  auto* spectra = app.add_subcommand("synth-spectra", "Entropy of power-law spectra lambda_i = i^-beta");
  spectra->add_option("--beta", betas, "Exponents (repeatable)")->capture_default_str();
  spectra->add_option("--alpha", alphas, "Entropy orders (repeatable)")->capture_default_str();
  spectra->add_option("--length", spectrum_length, "Spectrum length")->capture_default_str();
  spectra->add_option("-o,--out", spectra_out, "CSV path (default: stdout)");

  // validate
  std::string validate_dir;
  bool manifest_only = false;
  auto* validate = app.add_subcommand("validate", "Check a dump directory against its manifest");
  validate->add_option("--dump", validate_dir, "Dump directory")->required();
  validate->add_flag("--manifest-only", manifest_only, "Skip reading blob contents");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*compute) {
      if (*compute_seed_opt) cfg.seed = compute_seed;
      cfg.tag_filters = parse_tag_filters(tag_filters);
      const Report report = compute_report(cfg);
      write_text(compute_out, emit_report(report));
    } else if (*perturb) {
      const PerturbKind kind = parse_perturb_kind(perturb_kind);
      std::vector<SubCorpus> subs;
      nlohmann::json header = {{"kind", perturb_kind}, {"seed", perturb_seed}, {"vocab_size", vocab_size}};
      if (kind == PerturbKind::RandomLength) {
        if (lengths.empty()) throw Error(ErrorCode::ConfigError, "random_length needs at least one --length");
        subs = random_length_corpus(lengths, random_count, vocab_size, perturb_seed);
      } else {
        if (perturb_in.empty()) throw Error(ErrorCode::ConfigError, "--input is required for " + perturb_kind);
        if (ps.empty())
          for (int i = 0; i <= 10; ++i) ps.push_back(i / 10.0);
        const auto corpus = read_token_corpus(perturb_in, vocab_size);
        subs = perturb_corpus(corpus, kind, ps, perturb_seed);
        header["input"] = perturb_in;
      }
      write_sub_corpora(perturb_out, subs, header);
      std::cerr << "wrote " << subs.size() << " sub-corpora to " << perturb_out << "\n";
    } else if (*augment) {
      const auto corpus = augment_corpus(read_lines(augment_in), aug);
      std::filesystem::create_directories(augment_out);
      const std::filesystem::path dir(augment_out);
      write_lines(dir / "augmented.txt", corpus.lines);
      write_text((dir / "augment_manifest.json").string(), corpus.manifest.dump(2) + "\n");
      std::cerr << "wrote " << corpus.lines.size() << " augmented prompts to " << augment_out << "\n";
    } else if (*dip) {
      const auto table = dip_table(read_report_file(dip_report), dip_sel.build(), bootstrap, dip_seed, dip_workers);
      write_text(dip_out, dip_csv(table));
      std::cerr << "most bimodal layer: " << table.selected_layer << "\n";
    } else if (*correlate) {
      const auto rows = correlate_table(read_report_file(cor_report), cor_sel.build(), read_scores(scores_path), group_tag);
      write_text(cor_out, correlation_csv(rows));
    } else if (*spectra) {
      write_text(spectra_out, spectra_csv(synth_spectra(betas, alphas, spectrum_length)));
    } else if (*validate) {
      const auto m = validate_dump(validate_dir, !manifest_only);
      std::cout << "ok: " << m.prompts.size() << " prompts, layers 0.." << m.num_layers << ", D=" << m.embedding_dim
                << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_config_error(e.code()) ? kExitConfig : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
