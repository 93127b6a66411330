#include "layerlens/dump_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "layerlens/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace layerlens {
namespace {

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
  }
  return v;
}

template <class T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::InvalidManifest, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, std::string("field '") + key + "': " + e.what());
  }
}

void write_file_atomically(const fs::path& target, const void* data, std::size_t size) {
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string() + " for writing");
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot rename " + tmp.string() + ": " + ec.message());
}

void check_prompt_ids(const std::vector<PromptEntry>& prompts) {
  for (std::size_t i = 1; i < prompts.size(); ++i) {
    if (prompts[i].prompt_id <= prompts[i - 1].prompt_id)
      throw Error(ErrorCode::InvalidManifest, "prompt_ids must be unique and sorted ascending");
  }
}

}  // namespace

const PromptEntry& DumpManifest::prompt(std::uint64_t prompt_id) const {
  auto it = std::lower_bound(prompts.begin(), prompts.end(), prompt_id,
                             [](const PromptEntry& e, std::uint64_t id) { return e.prompt_id < id; });
  if (it == prompts.end() || it->prompt_id != prompt_id)
    throw Error(ErrorCode::UnknownPrompt, "prompt " + std::to_string(prompt_id) + " is not in the manifest");
  return *it;
}

json manifest_to_json(const DumpManifest& m) {
  json prompts = json::array();
  for (const auto& p : m.prompts) {
    json e = {{"prompt_id", p.prompt_id}, {"token_count", p.token_count}, {"tags", p.tags}};
    if (p.text) e["text"] = *p.text;
    prompts.push_back(std::move(e));
  }
  json j = {
      {"format_version", m.format_version}, {"model_name", m.model_name},
      {"num_layers", m.num_layers},         {"embedding_dim", m.embedding_dim},
      {"dtype", m.dtype},                   {"endianness", m.endianness},
      {"prompts", std::move(prompts)},
  };
  if (!m.metadata.empty()) j["metadata"] = m.metadata;
  return j;
}

DumpManifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidManifest, "manifest must be a JSON object");
  DumpManifest m;
  m.format_version = required<int>(j, "format_version");
  if (m.format_version != kDumpFormatVersion)
    throw Error(ErrorCode::UnsupportedDtype, "unsupported format_version " + std::to_string(m.format_version));
  m.dtype = required<std::string>(j, "dtype");
  if (m.dtype != "f32") throw Error(ErrorCode::UnsupportedDtype, "dtype '" + m.dtype + "' is not supported (f32 only)");
  m.endianness = required<std::string>(j, "endianness");
  if (m.endianness != "little")
    throw Error(ErrorCode::UnsupportedDtype, "endianness '" + m.endianness + "' is not supported");
  m.model_name = required<std::string>(j, "model_name");
  m.num_layers = required<std::size_t>(j, "num_layers");
  m.embedding_dim = required<std::size_t>(j, "embedding_dim");
  if (m.num_layers < 1) throw Error(ErrorCode::InvalidManifest, "num_layers must be >= 1");
  if (m.embedding_dim < 1) throw Error(ErrorCode::InvalidManifest, "embedding_dim must be >= 1");
  if (j.contains("metadata")) m.metadata = j.at("metadata");

  const json prompts = required<json>(j, "prompts");
  if (!prompts.is_array()) throw Error(ErrorCode::InvalidManifest, "prompts must be an array");
  for (const auto& e : prompts) {
    if (!e.is_object()) throw Error(ErrorCode::InvalidManifest, "prompt entry must be an object");
    PromptEntry p;
    p.prompt_id = required<std::uint64_t>(e, "prompt_id");
    p.token_count = required<std::size_t>(e, "token_count");
    if (p.token_count < 1) throw Error(ErrorCode::InvalidManifest, "token_count must be >= 1");
    if (e.contains("text") && !e.at("text").is_null()) p.text = required<std::string>(e, "text");
    if (e.contains("tags")) {
      p.tags = e.at("tags");
      if (!p.tags.is_object()) throw Error(ErrorCode::InvalidManifest, "tags must be an object");
    }
    m.prompts.push_back(std::move(p));
  }
  check_prompt_ids(m.prompts);
  return m;
}

std::string blob_file_name(std::uint64_t prompt_id, std::size_t layer) {
  return "p" + std::to_string(prompt_id) + "_l" + std::to_string(layer) + ".f32";
}

DumpWriter::DumpWriter(fs::path dir, DumpManifest manifest) : dir_(std::move(dir)), manifest_(std::move(manifest)) {
  // Round-trip through JSON to apply the same validation as readers.
  manifest_ = manifest_from_json(manifest_to_json(manifest_));
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir_.string() + ": " + ec.message());
}

void DumpWriter::write(const LayerSlice& slice) {
  if (finished_) throw Error(ErrorCode::InvalidArgument, "dump already finished");
  const PromptEntry& p = manifest_.prompt(slice.prompt_id);
  if (slice.layer > manifest_.num_layers)
    throw Error(ErrorCode::InconsistentDimensions, "layer " + std::to_string(slice.layer) + " exceeds num_layers");
  if (slice.matrix.rows() != p.token_count || slice.matrix.cols() != manifest_.embedding_dim)
    throw Error(ErrorCode::InconsistentDimensions,
                "slice for prompt " + std::to_string(slice.prompt_id) + " is " + std::to_string(slice.matrix.rows()) +
                    "x" + std::to_string(slice.matrix.cols()) + ", manifest expects " + std::to_string(p.token_count) +
                    "x" + std::to_string(manifest_.embedding_dim));
  if (!slice.matrix.all_finite()) throw Error(ErrorCode::NonFinite, "slice contains NaN or Inf");

  const auto values = slice.matrix.data();
  std::vector<std::uint32_t> words(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    words[i] = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
  }
  write_file_atomically(dir_ / blob_file_name(slice.prompt_id, slice.layer), words.data(), words.size() * 4);
  written_.emplace(slice.prompt_id, slice.layer);
}

void DumpWriter::finish() {
  if (finished_) return;
  for (const auto& p : manifest_.prompts)
    for (std::size_t l = 0; l <= manifest_.num_layers; ++l)
      if (!written_.contains({p.prompt_id, l}))
        throw Error(ErrorCode::InconsistentDimensions, "no slice written for " + blob_file_name(p.prompt_id, l));
  const std::string text = manifest_to_json(manifest_).dump(2) + "\n";
  write_file_atomically(dir_ / kManifestFileName, text.data(), text.size());
  finished_ = true;
}

void write_dump(const fs::path& dir, const DumpManifest& manifest, std::span<const LayerSlice> slices) {
  DumpWriter writer(dir, manifest);
  for (const auto& s : slices) writer.write(s);
  writer.finish();
}

DumpManifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / kManifestFileName;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

LayerSlice read_layer(const fs::path& dir, const DumpManifest& manifest, std::uint64_t prompt_id, std::size_t layer) {
  const PromptEntry& p = manifest.prompt(prompt_id);
  if (layer > manifest.num_layers)
    throw Error(ErrorCode::InvalidArgument, "layer " + std::to_string(layer) + " exceeds num_layers");
  const std::string name = blob_file_name(prompt_id, layer);
  const fs::path path = dir / name;
  const std::size_t count = p.token_count * manifest.embedding_dim;

  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec) throw Error(ErrorCode::ManifestBlobMismatch, "missing blob " + name);
  if (size != count * 4)
    throw Error(ErrorCode::ManifestBlobMismatch, "blob " + name + " has " + std::to_string(size) + " bytes, expected " +
                                                     std::to_string(count * 4));

  std::vector<std::uint32_t> words(count);
  std::ifstream in(path, std::ios::binary);
  if (!in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(count * 4)))
    throw Error(ErrorCode::IoFailure, "cannot read " + name);

  LayerSlice slice{prompt_id, layer, TokenMatrix(p.token_count, manifest.embedding_dim)};
  auto out = slice.matrix.data();
  for (std::size_t i = 0; i < count; ++i) {
    const float v = std::bit_cast<float>(to_little(words[i]));
    if (!std::isfinite(v)) throw Error(ErrorCode::CorruptBlob, "blob " + name + " has a non-finite value at index " + std::to_string(i));
    out[i] = v;
  }
  return slice;
}

LayerSlice read_layer(const fs::path& dir, std::uint64_t prompt_id, std::size_t layer) {
  return read_layer(dir, read_manifest(dir), prompt_id, layer);
}

DumpManifest validate_dump(const fs::path& dir, bool check_contents) {
  DumpManifest m = read_manifest(dir);
  for (const auto& p : m.prompts) {
    for (std::size_t l = 0; l <= m.num_layers; ++l) {
      if (check_contents) {
        read_layer(dir, m, p.prompt_id, l);
        continue;
      }
      const std::string name = blob_file_name(p.prompt_id, l);
      std::error_code ec;
      const auto size = fs::file_size(dir / name, ec);
      if (ec) throw Error(ErrorCode::ManifestBlobMismatch, "missing blob " + name);
      if (size != p.token_count * m.embedding_dim * 4)
        throw Error(ErrorCode::ManifestBlobMismatch, "blob " + name + " has the wrong size");
    }
  }
  return m;
}

}  // namespace layerlens
