#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>

#include "layerlens/dump_io.hpp"
#include "oracles.hpp"

namespace fixture {

/// Directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("layerlens_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct DumpShape {
  std::size_t prompts = 4;
  std::size_t num_layers = 2;
  std::size_t dim = 6;
  std::size_t min_tokens = 3;
  std::size_t max_tokens = 9;
  std::uint64_t seed = 1;
};

using TagFn = std::function<nlohmann::json(std::size_t prompt_index)>;

/// Random dump with float-representable values. Prompt ids are 10, 20, ...
inline layerlens::DumpManifest write_random_dump(const std::filesystem::path& dir, const DumpShape& shape,
                                                 const TagFn& tags = {}) {
  layerlens::DumpManifest m;
  m.model_name = "synthetic";
  m.num_layers = shape.num_layers;
  m.embedding_dim = shape.dim;
  layerlens::SplitMix64 rng(shape.seed);
  for (std::size_t i = 0; i < shape.prompts; ++i) {
    layerlens::PromptEntry e;
    e.prompt_id = 10 * (i + 1);
    e.token_count = shape.min_tokens + rng.below(shape.max_tokens - shape.min_tokens + 1);
    if (tags) e.tags = tags(i);
    m.prompts.push_back(e);
  }
  layerlens::DumpWriter w(dir, m);
  for (const auto& p : m.prompts)
    for (std::size_t l = 0; l <= m.num_layers; ++l) {
      auto z = oracle::gaussian_matrix(p.token_count, shape.dim, layerlens::stream_key(shape.seed, p.prompt_id, l));
      for (double& v : z.data()) v = static_cast<float>(v);
      w.write({p.prompt_id, l, z});
    }
  w.finish();
  return m;
}

}  // namespace fixture
