#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "layerlens/matrix.hpp"

namespace layerlens {

/// N x D batch of mean-pooled prompt vectors. Row i of two paired batches
/// refers to the same original prompt.
using PooledBatch = Matrix;

/// N classes with J samples each, stored as N*J rows grouped by class.
struct AugmentedClassBatch {
  Matrix samples;
  std::size_t num_classes = 0;
  std::size_t per_class = 0;
};

struct InfoNCEParams {
  double temperature = 0.1;
};

struct DiMEParams {
  double alpha = 1.0;
  std::size_t num_permutations = 8;
  std::uint64_t seed = 0;
};

struct LidarParams {
  double delta = 1e-4;
  double eig_floor = 1e-8;
};

std::vector<double> mean_pool(const TokenMatrix& z);

/// Stacks mean_pool of each matrix into a batch.
PooledBatch pool_batch(std::span<const TokenMatrix> prompts);

/// Symmetrized cosine-similarity InfoNCE loss. Lower means more invariant.
double info_nce(const PooledBatch& z1, const PooledBatch& z2, const InfoNCEParams& params = {});

/// Uniform random permutation of [0, n) for permutation draw `index`.
std::vector<std::size_t> dime_permutation(std::size_t n, std::uint64_t seed, std::uint64_t index);

/// Joint matrix-based entropy of (z1, perm applied to the rows of z2).
double dime_joint_entropy(const PooledBatch& z1, const PooledBatch& z2, std::span<const std::size_t> perm,
                          double alpha);

/// Mean joint entropy over sampled permutations minus the aligned joint entropy.
double dime(const PooledBatch& z1, const PooledBatch& z2, const DiMEParams& params = {});

/// dime with the permutation average taken over all N! permutations. N <= 10.
double dime_exhaustive(const PooledBatch& z1, const PooledBatch& z2, double alpha);

/// exp(Shannon entropy) of the whitened between-class scatter spectrum.
double lidar(const AugmentedClassBatch& batch, const LidarParams& params = {});

}  // namespace layerlens
