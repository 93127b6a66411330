#include "layerlens/pipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "layerlens/diversity.hpp"
#include "layerlens/dump_io.hpp"
#include "layerlens/errors.hpp"
#include "layerlens/invariance.hpp"
#include "layerlens/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace layerlens {
namespace {

constexpr std::array<const char*, 6> kMetrics = {"entropy", "logdet", "curvature", "infonce", "dime", "lidar"};

std::string tag_string(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// One per-prompt value column: a metric plus its parameters.
struct PromptSlot {
  std::string metric;
  json params;
  EntropyParams entropy;
};

std::vector<PromptSlot> prompt_slots(const RunConfig& c) {
  std::vector<PromptSlot> slots;
  for (const auto& m : c.metrics) {
    if (m == "entropy") {
      for (double a : c.entropy_alphas) {
        slots.push_back({m, {{"alpha", a}, {"normalized", c.entropy_normalized}}, {a, c.entropy_normalized}});
      }
    } else if (m == "logdet") {
      slots.push_back({m, {{"spectral_floor", kLogDetSpectralFloor}}, {}});
    } else if (m == "curvature") {
      slots.push_back({m, {{"degenerate_eps", c.curvature_eps}}, {}});
    }
  }
  return slots;
}

json batch_params(const RunConfig& c, const std::string& m) {
  if (m == "infonce") return {{"temperature", c.infonce_temperature}, {"similarity", "cosine"}, {"symmetrized", true}};
  if (m == "dime")
    return {{"alpha", c.dime_alpha}, {"num_permutations", c.dime_permutations}, {"seed", c.seed.value_or(0)},
            {"row_normalized", true}};
  return {{"delta", c.lidar_delta}, {"eig_floor", c.lidar_eig_floor}, {"samples_per_class", c.lidar_samples_per_class}};
}

double evaluate_prompt_metric(const PromptSlot& slot, const TokenMatrix& z, const RunConfig& c) {
  if (slot.metric == "entropy") return prompt_entropy(z, slot.entropy);
  if (slot.metric == "logdet") return logdet_entropy(z);
  return curvature(z, {c.curvature_eps});
}

bool matches_filters(const PromptEntry& p, const RunConfig& c, const std::set<std::uint64_t>& ids) {
  if (!ids.empty() && !ids.contains(p.prompt_id)) return false;
  for (const auto& [key, value] : c.tag_filters) {
    if (!p.tags.contains(key) || tag_string(p.tags.at(key)) != value) return false;
  }
  return true;
}

// Indices (into the selected prompt list) grouped by class, each class
// ordered by augmentation index. Classes are ordered by their first prompt_id.
std::vector<std::vector<std::size_t>> augmentation_classes(const std::vector<const PromptEntry*>& prompts,
                                                           const RunConfig& c) {
  std::map<std::string, std::vector<std::pair<double, std::size_t>>> by_class;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto& tags = prompts[i]->tags;
    if (!tags.contains(c.class_tag)) continue;
    double aug = static_cast<double>(i);
    if (tags.contains(c.aug_tag) && tags.at(c.aug_tag).is_number()) aug = tags.at(c.aug_tag).get<double>();
    by_class[tag_string(tags.at(c.class_tag))].emplace_back(aug, i);
  }
  std::vector<std::vector<std::size_t>> classes;
  for (auto& [key, members] : by_class) {
    std::sort(members.begin(), members.end());
    std::vector<std::size_t> idx;
    for (const auto& m : members) idx.push_back(m.second);
    classes.push_back(std::move(idx));
  }
  std::sort(classes.begin(), classes.end(), [](const auto& a, const auto& b) {
    return *std::min_element(a.begin(), a.end()) < *std::min_element(b.begin(), b.end());
  });
  return classes;
}

[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context) {
  throw Error(e.code(), context + ": " + e.what());
}

bool params_match(const json& have, const json& want) {
  for (const auto& [k, v] : want.items()) {
    if (!have.contains(k) || have.at(k) != v) return false;
  }
  return true;
}

std::vector<const LayerReport*> select_layers(const Report& report, const MetricSelector& sel) {
  std::map<std::size_t, const LayerReport*> chosen;
  for (const auto& l : report.layers) {
    if (l.metric != sel.metric || l.layer < sel.first_layer || l.layer > sel.last_layer) continue;
    if (!params_match(l.params, sel.params)) continue;
    if (chosen.contains(l.layer))
      throw Error(ErrorCode::ConfigError, "metric '" + sel.metric + "' is ambiguous at layer " + std::to_string(l.layer) +
                                              "; narrow it with parameter filters");
    chosen[l.layer] = &l;
  }
  if (chosen.empty()) throw Error(ErrorCode::ConfigError, "report has no entries for metric '" + sel.metric + "'");
  std::vector<const LayerReport*> out;
  for (const auto& [layer, l] : chosen) out.push_back(l);
  return out;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

bool is_known_metric(const std::string& name) {
  return std::find(kMetrics.begin(), kMetrics.end(), name) != kMetrics.end();
}

bool is_batch_metric(const std::string& name) { return name == "infonce" || name == "dime" || name == "lidar"; }

void validate_config(const RunConfig& c) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
  if (c.dump_dir.empty()) fail("no dump directory given");
  if (c.metrics.empty()) fail("no metrics requested");
  std::set<std::string> seen;
  for (const auto& m : c.metrics) {
    if (!is_known_metric(m)) fail("unknown metric '" + m + "'");
    if (!seen.insert(m).second) fail("metric '" + m + "' requested twice");
  }
  if (c.entropy_alphas.empty()) fail("at least one entropy alpha is required");
  for (double a : c.entropy_alphas)
    if (!(a > 0.0) || !std::isfinite(a)) fail("entropy alpha must be > 0");
  if (!(c.curvature_eps > 0.0)) fail("curvature eps must be > 0");
  if (!(c.infonce_temperature > 0.0)) fail("InfoNCE temperature must be > 0");
  if (!(c.dime_alpha > 0.0)) fail("DiME alpha must be > 0");
  if (c.dime_permutations < 1) fail("DiME needs at least one permutation");
  if (!(c.lidar_delta > 0.0) || !(c.lidar_eig_floor > 0.0)) fail("LiDAR delta and eig floor must be > 0");
  if (c.lidar_samples_per_class < 2) fail("LiDAR needs at least 2 samples per class");
  if (seen.contains("dime") && !c.seed) fail("dime is stochastic and needs --seed");
  if (c.parallelism < 1) fail("parallelism must be >= 1");
}

json config_to_json(const RunConfig& c) {
  json filters = json::object();
  for (const auto& [k, v] : c.tag_filters) filters[k] = v;
  json j = {
      {"dump_dir", c.dump_dir.generic_string()},
      {"metrics", c.metrics},
      {"prompt_ids", c.prompt_ids},
      {"tag_filters", filters},
      {"class_tag", c.class_tag},
      {"aug_tag", c.aug_tag},
      {"entropy_alphas", c.entropy_alphas},
      {"entropy_normalized", c.entropy_normalized},
      {"curvature_eps", c.curvature_eps},
      {"infonce_temperature", c.infonce_temperature},
      {"dime_alpha", c.dime_alpha},
      {"dime_permutations", c.dime_permutations},
      {"lidar_delta", c.lidar_delta},
      {"lidar_eig_floor", c.lidar_eig_floor},
      {"lidar_samples_per_class", c.lidar_samples_per_class},
  };
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  return j;
}

Report compute_report(const RunConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  validate_config(c);
  const DumpManifest manifest = validate_dump(c.dump_dir, false);

  const std::set<std::uint64_t> id_filter(c.prompt_ids.begin(), c.prompt_ids.end());
  std::vector<const PromptEntry*> prompts;
  for (const auto& p : manifest.prompts)
    if (matches_filters(p, c, id_filter)) prompts.push_back(&p);
  for (std::uint64_t id : c.prompt_ids) manifest.prompt(id);  // UnknownPrompt for stray ids

  const auto slots = prompt_slots(c);
  std::vector<std::string> batch_metrics;
  for (const auto& m : c.metrics)
    if (is_batch_metric(m)) batch_metrics.push_back(m);
  const bool need_pooled = !batch_metrics.empty();
  if (!slots.empty() && prompts.empty()) throw Error(ErrorCode::ConfigError, "prompt filters selected no prompts");

  const std::size_t layers = manifest.num_layers + 1;
  const std::size_t num_prompts = prompts.size();

  // values[layer][slot][prompt], pooled[layer][prompt]
  std::vector<std::vector<std::vector<double>>> values(
      layers, std::vector<std::vector<double>>(slots.size(), std::vector<double>(num_prompts)));
  std::vector<std::vector<std::vector<double>>> pooled(layers, std::vector<std::vector<double>>(num_prompts));

  parallel_for(num_prompts * layers, c.parallelism, [&](std::size_t task) {
    const std::size_t pi = task / layers;
    const std::size_t layer = task % layers;
    const PromptEntry& p = *prompts[pi];
    try {
      const LayerSlice slice = read_layer(c.dump_dir, manifest, p.prompt_id, layer);
      for (std::size_t s = 0; s < slots.size(); ++s) values[layer][s][pi] = evaluate_prompt_metric(slots[s], slice.matrix, c);
      if (need_pooled) pooled[layer][pi] = mean_pool(slice.matrix);
    } catch (const Error& e) {
      rethrow_with_context(e, "prompt " + std::to_string(p.prompt_id) + " layer " + std::to_string(layer));
    }
  });

  // batch[layer][metric]
  std::vector<std::vector<double>> batch(layers, std::vector<double>(batch_metrics.size()));
  if (need_pooled) {
    const auto classes = augmentation_classes(prompts, c);
    if (classes.size() < 2)
      throw Error(ErrorCode::InsufficientAugmentations, "invariance metrics need at least 2 tagged classes, found " +
                                                            std::to_string(classes.size()));
    for (const auto& m : batch_metrics) {
      const std::size_t need = m == "lidar" ? c.lidar_samples_per_class : 2;
      for (const auto& cls : classes)
        if (cls.size() < need)
          throw Error(ErrorCode::InsufficientAugmentations,
                      m + " needs " + std::to_string(need) + " augmentations per class, a class has " +
                          std::to_string(cls.size()));
    }

    parallel_for(layers, c.parallelism, [&](std::size_t layer) {
      const std::size_t dim = manifest.embedding_dim;
      auto pair_batch = [&](std::size_t member) {
        PooledBatch b(classes.size(), dim);
        for (std::size_t k = 0; k < classes.size(); ++k) {
          const auto& v = pooled[layer][classes[k][member]];
          std::copy(v.begin(), v.end(), b.row(k).begin());
        }
        return b;
      };
      try {
        for (std::size_t bm = 0; bm < batch_metrics.size(); ++bm) {
          const std::string& m = batch_metrics[bm];
          if (m == "infonce") {
            batch[layer][bm] = info_nce(pair_batch(0), pair_batch(1), {c.infonce_temperature});
          } else if (m == "dime") {
            batch[layer][bm] = dime(pair_batch(0), pair_batch(1), {c.dime_alpha, c.dime_permutations, *c.seed});
          } else {
            const std::size_t j = c.lidar_samples_per_class;
            AugmentedClassBatch acb{Matrix(classes.size() * j, dim), classes.size(), j};
            for (std::size_t k = 0; k < classes.size(); ++k)
              for (std::size_t s = 0; s < j; ++s) {
                const auto& v = pooled[layer][classes[k][s]];
                std::copy(v.begin(), v.end(), acb.samples.row(k * j + s).begin());
              }
            batch[layer][bm] = lidar(acb, {c.lidar_delta, c.lidar_eig_floor});
          }
        }
      } catch (const Error& e) {
        rethrow_with_context(e, "layer " + std::to_string(layer));
      }
    });
  }

  Report report;
  report.tool_version = tool_version();
  report.config = config_to_json(c);
  report.model_name = manifest.model_name;
  report.num_layers = manifest.num_layers;
  for (const auto* p : prompts) report.prompts.push_back({p->prompt_id, p->tags});

  std::vector<std::uint64_t> ids;
  for (const auto* p : prompts) ids.push_back(p->prompt_id);

  for (std::size_t layer = 0; layer < layers; ++layer) {
    std::size_t slot = 0;
    std::size_t bm = 0;
    for (const auto& m : c.metrics) {
      if (is_batch_metric(m)) {
        LayerReport r;
        r.layer = layer;
        r.depth_percent = depth_percent(layer, manifest.num_layers);
        r.metric = m;
        r.params = batch_params(c, m);
        r.scope = "batch";
        r.per_prompt = {batch[layer][bm++]};
        summarize(r);
        report.layers.push_back(std::move(r));
        continue;
      }
      const std::size_t count = m == "entropy" ? c.entropy_alphas.size() : 1;
      for (std::size_t k = 0; k < count; ++k, ++slot) {
        LayerReport r;
        r.layer = layer;
        r.depth_percent = depth_percent(layer, manifest.num_layers);
        r.metric = m;
        r.params = slots[slot].params;
        r.prompt_ids = ids;
        r.per_prompt = values[layer][slot];
        summarize(r);
        report.layers.push_back(std::move(r));
      }
    }
  }

  report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---------------------------------------------------------------- corpora

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::vector<TokenSequence> read_token_corpus(const fs::path& path, std::uint32_t vocab_size) {
  std::vector<TokenSequence> corpus;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    TokenSequence s;
    s.vocab_size = vocab_size;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      TokenId id = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(line_no) + ": bad token id '" + tok + "'");
      if (id >= vocab_size)
        throw Error(ErrorCode::InvalidArgument,
                    path.string() + ":" + std::to_string(line_no) + ": token id " + tok + " is outside the vocabulary");
      s.ids.push_back(id);
    }
    if (s.ids.empty()) throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(line_no) + ": empty prompt");
    corpus.push_back(std::move(s));
  }
  return corpus;
}

void write_token_corpus(const fs::path& path, const std::vector<TokenSequence>& corpus) {
  std::vector<std::string> lines;
  lines.reserve(corpus.size());
  for (const auto& s : corpus) {
    std::string line;
    for (std::size_t i = 0; i < s.ids.size(); ++i) {
      if (i) line += ' ';
      line += std::to_string(s.ids[i]);
    }
    lines.push_back(std::move(line));
  }
  write_lines(path, lines);
}

std::vector<SubCorpus> perturb_corpus(const std::vector<TokenSequence>& corpus, PerturbKind kind,
                                      const std::vector<double>& ps, std::uint64_t seed) {
  if (kind == PerturbKind::RandomLength)
    throw Error(ErrorCode::ConfigError, "random_length corpora are generated with random_length_corpus");
  std::vector<SubCorpus> out;
  for (double p : ps) {
    SubCorpus sub;
    sub.file_name = std::string(to_string(kind)) + "_p" + format_double(p) + ".txt";
    sub.tags = {{"kind", to_string(kind)}, {"p", p}, {"seed", seed}};
    for (std::size_t i = 0; i < corpus.size(); ++i)
      sub.prompts.push_back(apply_perturbation(corpus[i], {kind, p, 1, seed}, i));
    out.push_back(std::move(sub));
  }
  return out;
}

std::vector<SubCorpus> random_length_corpus(const std::vector<std::size_t>& lengths, std::size_t count,
                                            std::uint32_t vocab_size, std::uint64_t seed) {
  std::vector<SubCorpus> out;
  for (std::size_t t : lengths) {
    SubCorpus sub;
    sub.file_name = "random_length_T" + std::to_string(t) + ".txt";
    sub.tags = {{"kind", "random_length"}, {"T", t}, {"seed", seed}};
    for (std::size_t i = 0; i < count; ++i) sub.prompts.push_back(random_prompt(t, vocab_size, seed, i));
    out.push_back(std::move(sub));
  }
  return out;
}

void write_sub_corpora(const fs::path& dir, const std::vector<SubCorpus>& subs, const json& header) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  json manifest = header;
  manifest["subcorpora"] = json::array();
  for (const auto& s : subs) {
    write_token_corpus(dir / s.file_name, s.prompts);
    manifest["subcorpora"].push_back({{"file", s.file_name}, {"tags", s.tags}, {"prompt_count", s.prompts.size()}});
  }
  std::ofstream out(dir / "corpus_manifest.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write corpus manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

AugmentedCorpus augment_corpus(const std::vector<std::string>& prompts, const AugmentSpec& spec) {
  AugmentedCorpus out;
  json entries = json::array();
  json mapping = json::array();
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    json lines = json::array();
    auto variants = augment_pair(prompts[i], spec, i);
    for (std::size_t k = 0; k < variants.size(); ++k) {
      const std::size_t line = out.lines.size();
      out.lines.push_back(std::move(variants[k]));
      entries.push_back({{"line", line}, {"tags", {{"class", i}, {"aug", k}, {"seed", spec.seed}}}});
      lines.push_back(line);
    }
    mapping.push_back(std::move(lines));
  }
  out.manifest = {
      {"spec",
       {{"split_p", spec.split_p},
        {"char_p", spec.char_p},
        {"keyboard_p", spec.keyboard_p},
        {"seed", spec.seed},
        {"num_outputs", spec.num_outputs},
        {"stages", {"split", "random_char", "keyboard"}},
        {"split_min_word_length", 4},
        {"edit_alphabet", "abcdefghijklmnopqrstuvwxyz0123456789"},
        {"keyboard_layout", "qwerty"}}},
      {"entries", std::move(entries)},
      {"mapping", std::move(mapping)},
  };
  return out;
}

// ---------------------------------------------------------------- analyses

std::vector<SpectraRow> synth_spectra(const std::vector<double>& betas, const std::vector<double>& alphas,
                                      std::size_t length) {
  if (length < 2) throw Error(ErrorCode::InvalidArgument, "spectrum length must be >= 2");
  std::vector<SpectraRow> rows;
  for (double beta : betas) {
    if (!(beta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be >= 0");
    std::vector<double> p(length);
    double total = 0.0;
    for (std::size_t i = 0; i < length; ++i) total += p[i] = std::pow(static_cast<double>(i + 1), -beta);
    for (double& v : p) v /= total;
    for (double alpha : alphas) rows.push_back({beta, alpha, renyi_entropy(p, alpha)});
  }
  return rows;
}

std::string spectra_csv(const std::vector<SpectraRow>& rows) {
  std::string out = "beta,alpha,entropy\n";
  for (const auto& r : rows) out += format_double(r.beta) + "," + format_double(r.alpha) + "," + format_double(r.entropy) + "\n";
  return out;
}

DipTable dip_table(const Report& report, const MetricSelector& selector, std::size_t bootstrap, std::uint64_t seed,
                   std::size_t width) {
  DipTable table;
  std::map<std::size_t, std::vector<double>> per_layer;
  for (const LayerReport* l : select_layers(report, selector)) {
    DipRow row{l->layer, l->depth_percent, l->per_prompt.size(), dip_statistic(l->per_prompt)};
    row.result.p_value = dip_pvalue(l->per_prompt, bootstrap, seed, width);
    table.rows.push_back(row);
    per_layer[l->layer] = l->per_prompt;
  }
  table.selected_layer = most_bimodal_layer(per_layer);
  return table;
}

std::string dip_csv(const DipTable& t) {
  std::string out = "layer,depth_percent,n,dip,p_value,modal_lo,modal_hi,selected\n";
  for (const auto& r : t.rows) {
    out += std::to_string(r.layer) + "," + format_double(r.depth_percent) + "," + std::to_string(r.n) + "," +
           format_double(r.result.dip) + "," + (r.result.p_value ? format_double(*r.result.p_value) : "") + "," +
           format_double(r.result.modal_lo) + "," + format_double(r.result.modal_hi) + "," +
           (r.layer == t.selected_layer ? "1" : "0") + "\n";
  }
  return out;
}

std::map<std::string, double> read_scores(const fs::path& path) {
  std::map<std::string, double> scores;
  std::size_t line_no = 0;
  for (const auto& raw : read_lines(path)) {
    ++line_no;
    if (raw.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = raw.find(',');
    if (comma == std::string::npos)
      throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(line_no) + ": expected 'group,score'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(raw.substr(0, comma));
    const std::string value = trim(raw.substr(comma + 1));
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      if (scores.empty() && line_no == 1) continue;  // header
      throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(line_no) + ": bad score '" + value + "'");
    }
    if (!scores.emplace(key, v).second)
      throw Error(ErrorCode::InvalidArgument, path.string() + ": duplicate group '" + key + "'");
  }
  return scores;
}

std::vector<CorrelationRow> correlate_table(const Report& report, const MetricSelector& selector,
                                            const std::map<std::string, double>& scores, const std::string& group_tag) {
  std::map<std::uint64_t, std::string> group_of;
  for (const auto& p : report.prompts)
    group_of[p.prompt_id] = p.tags.contains(group_tag) ? tag_string(p.tags.at(group_tag)) : std::to_string(p.prompt_id);

  std::vector<CorrelationRow> rows;
  for (const LayerReport* l : select_layers(report, selector)) {
    if (l->scope != "prompt")
      throw Error(ErrorCode::ConfigError, "metric '" + l->metric + "' is batch-level and cannot be grouped");
    std::map<std::string, std::pair<double, std::size_t>> sums;
    for (std::size_t i = 0; i < l->prompt_ids.size(); ++i) {
      auto it = group_of.find(l->prompt_ids[i]);
      const std::string g = it != group_of.end() ? it->second : std::to_string(l->prompt_ids[i]);
      auto& acc = sums[g];
      acc.first += l->per_prompt[i];
      ++acc.second;
    }
    std::vector<double> x, y;
    for (const auto& [group, score] : scores) {
      auto it = sums.find(group);
      if (it == sums.end()) throw Error(ErrorCode::KeyMismatch, "score group '" + group + "' has no prompts in the report");
      x.push_back(it->second.first / static_cast<double>(it->second.second));
      y.push_back(score);
    }
    if (x.size() < 2) throw Error(ErrorCode::TooFewSamples, "correlation needs at least 2 groups");
    rows.push_back({l->layer, l->depth_percent, x.size(), pearson_correlation(x, y)});
  }
  return rows;
}

std::string correlation_csv(const std::vector<CorrelationRow>& rows) {
  std::string out = "layer,depth_percent,groups,pearson_r\n";
  for (const auto& r : rows)
    out += std::to_string(r.layer) + "," + format_double(r.depth_percent) + "," + std::to_string(r.groups) + "," +
           format_double(r.r) + "\n";
  return out;
}

}  // namespace layerlens
