#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "layerlens/matrix.hpp"

namespace layerlens {

inline constexpr int kDumpFormatVersion = 1;
inline constexpr const char* kManifestFileName = "manifest.json";

struct PromptEntry {
  std::uint64_t prompt_id = 0;
  std::size_t token_count = 0;
  std::optional<std::string> text;
  nlohmann::json tags = nlohmann::json::object();  // e.g. class, aug, kind, p, group

  friend bool operator==(const PromptEntry&, const PromptEntry&) = default;
};

/// Metadata for a hidden-state dump. Layers are indexed 0..num_layers where
/// layer 0 is the embedding output, so a dump holds num_layers + 1 blobs per prompt.
struct DumpManifest {
  int format_version = kDumpFormatVersion;
  std::string model_name;
  std::size_t num_layers = 0;
  std::size_t embedding_dim = 0;
  std::string dtype = "f32";
  std::string endianness = "little";
  std::vector<PromptEntry> prompts;
  nlohmann::json metadata = nlohmann::json::object();  // free-form, e.g. hidden-state tap point

  const PromptEntry& prompt(std::uint64_t prompt_id) const;

  friend bool operator==(const DumpManifest&, const DumpManifest&) = default;
};

struct LayerSlice {
  std::uint64_t prompt_id = 0;
  std::size_t layer = 0;
  TokenMatrix matrix;
};

nlohmann::json manifest_to_json(const DumpManifest& m);

/// Parses and validates a manifest document (schema, dtype, id ordering).
DumpManifest manifest_from_json(const nlohmann::json& j);

/// p{prompt_id}_l{layer}.f32
std::string blob_file_name(std::uint64_t prompt_id, std::size_t layer);

/// Streams slices into a dump directory. The manifest is written last, via
/// rename, once every (prompt, layer) blob has been written.
class DumpWriter {
 public:
  DumpWriter(std::filesystem::path dir, DumpManifest manifest);

  void write(const LayerSlice& slice);
  void finish();

  const DumpManifest& manifest() const noexcept { return manifest_; }

 private:
  std::filesystem::path dir_;
  DumpManifest manifest_;
  std::set<std::pair<std::uint64_t, std::size_t>> written_;
  bool finished_ = false;
};

void write_dump(const std::filesystem::path& dir, const DumpManifest& manifest, std::span<const LayerSlice> slices);

DumpManifest read_manifest(const std::filesystem::path& dir);

/// Reads one blob; rejects wrong sizes (ManifestBlobMismatch) and NaN/Inf (CorruptBlob).
LayerSlice read_layer(const std::filesystem::path& dir, const DumpManifest& manifest, std::uint64_t prompt_id,
                      std::size_t layer);
LayerSlice read_layer(const std::filesystem::path& dir, std::uint64_t prompt_id, std::size_t layer);

/// Full check of a dump directory: manifest schema, presence and size of every
/// blob, and (when check_contents) finiteness of every value. Throws the first
/// problem found as a typed Error; returns the manifest on success.
DumpManifest validate_dump(const std::filesystem::path& dir, bool check_contents = true);

}  // namespace layerlens
