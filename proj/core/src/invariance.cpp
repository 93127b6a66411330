#include "layerlens/invariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "layerlens/diversity.hpp"
#include "layerlens/errors.hpp"
#include "layerlens/linalg.hpp"
#include "layerlens/rng.hpp"

namespace layerlens {
namespace {

constexpr double kMinRowNorm = 1e-12;

void check_batch(const PooledBatch& z, const char* what) {
  if (z.rows() < 2 || z.cols() < 1) throw Error(ErrorCode::ShapeMismatch, std::string(what) + " needs N >= 2 rows");
  if (!z.all_finite()) throw Error(ErrorCode::NonFinite, std::string(what) + " has NaN or Inf entries");
}

void check_pair(const PooledBatch& z1, const PooledBatch& z2) {
  check_batch(z1, "first batch");
  check_batch(z2, "second batch");
  if (z1.rows() != z2.rows() || z1.cols() != z2.cols())
    throw Error(ErrorCode::ShapeMismatch, "paired batches differ in shape");
}

Matrix row_normalized(const PooledBatch& z) {
  Matrix out = z;
  bool any_nonzero = false;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double n2 = 0.0;
    for (double v : row) n2 += v * v;
    const double norm = std::sqrt(n2);
    if (norm > 0.0) any_nonzero = true;
    if (norm < kMinRowNorm) continue;
    for (double& v : row) v /= norm;
  }
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double n2 = 0.0;
    for (double v : out.row(r)) n2 += v * v;
    if (std::sqrt(n2) < kMinRowNorm) {
      if (!any_nonzero) throw Error(ErrorCode::ZeroMatrix, "batch is all zero");
      throw Error(ErrorCode::ZeroNormRow, "row " + std::to_string(r) + " has zero norm");
    }
  }
  return out;
}

double log_sum_exp(std::span<const double> xs) {
  const double mx = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

// Trace-normalized Gram of the row-normalized batch.
Matrix normalized_kernel(const PooledBatch& z) {
  Matrix k = gram(row_normalized(z));
  const double tr = k.trace();
  for (double& v : k.data()) v /= tr;
  return k;
}

double joint_entropy(const Matrix& ka, const Matrix& kb, std::span<const std::size_t> perm, double alpha) {
  const std::size_t n = ka.rows();
  Matrix h(n, n);
  double tr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = ka(i, j) * kb(perm[i], perm[j]);
      h(i, j) = v;
      h(j, i) = v;
    }
    tr += h(i, i);
  }
  for (double& v : h.data()) v /= tr;
  auto eig = symmetric_eigen(h, false);
  for (double& v : eig.values) v = std::max(v, 0.0);
  return renyi_entropy(eig.values, alpha);
}

}  // namespace

std::vector<double> mean_pool(const TokenMatrix& z) {
  if (z.rows() == 0 || z.cols() == 0) throw Error(ErrorCode::ShapeMismatch, "mean_pool needs L >= 1 and D >= 1");
  if (!z.all_finite()) throw Error(ErrorCode::NonFinite, "token matrix has NaN or Inf entries");
  std::vector<double> mean(z.cols(), 0.0);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < z.cols(); ++c) mean[c] += row[c];
  }
  for (double& v : mean) v /= static_cast<double>(z.rows());
  return mean;
}

PooledBatch pool_batch(std::span<const TokenMatrix> prompts) {
  if (prompts.empty()) throw Error(ErrorCode::ShapeMismatch, "cannot pool an empty batch");
  const std::size_t dim = prompts.front().cols();
  PooledBatch out(prompts.size(), dim);
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (prompts[i].cols() != dim) throw Error(ErrorCode::ShapeMismatch, "prompts differ in embedding dimension");
    const auto m = mean_pool(prompts[i]);
    std::copy(m.begin(), m.end(), out.row(i).begin());
  }
  return out;
}

double info_nce(const PooledBatch& z1, const PooledBatch& z2, const InfoNCEParams& params) {
  if (!(params.temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be > 0");
  check_pair(z1, z2);
  const Matrix a = row_normalized(z1);
  const Matrix b = row_normalized(z2);
  const std::size_t n = a.rows();

  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < a.cols(); ++c) dot += a(i, c) * b(j, c);
      s(i, j) = dot / params.temperature;
    }
  }

  double rows_loss = 0.0;
  double cols_loss = 0.0;
  std::vector<double> column(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows_loss += log_sum_exp(s.row(i)) - s(i, i);
    for (std::size_t k = 0; k < n; ++k) column[k] = s(k, i);
    cols_loss += log_sum_exp(column) - s(i, i);
  }
  return 0.5 * (rows_loss + cols_loss) / static_cast<double>(n);
}

std::vector<std::size_t> dime_permutation(std::size_t n, std::uint64_t seed, std::uint64_t index) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  SplitMix64 rng(stream_key(seed, index));
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

double dime_joint_entropy(const PooledBatch& z1, const PooledBatch& z2, std::span<const std::size_t> perm,
                          double alpha) {
  check_pair(z1, z2);
  if (perm.size() != z1.rows()) throw Error(ErrorCode::ShapeMismatch, "permutation length differs from N");
  return joint_entropy(normalized_kernel(z1), normalized_kernel(z2), perm, alpha);
}

double dime(const PooledBatch& z1, const PooledBatch& z2, const DiMEParams& params) {
  if (params.num_permutations < 1) throw Error(ErrorCode::InvalidArgument, "DiME needs at least one permutation");
  if (!(params.alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "DiME alpha must be > 0");
  check_pair(z1, z2);
  const Matrix ka = normalized_kernel(z1);
  const Matrix kb = normalized_kernel(z2);
  const std::size_t n = z1.rows();

  std::vector<std::size_t> aligned(n);
  std::iota(aligned.begin(), aligned.end(), std::size_t{0});
  const double base = joint_entropy(ka, kb, aligned, params.alpha);

  double shuffled = 0.0;
  for (std::size_t m = 0; m < params.num_permutations; ++m) {
    shuffled += joint_entropy(ka, kb, dime_permutation(n, params.seed, m), params.alpha);
  }
  return shuffled / static_cast<double>(params.num_permutations) - base;
}

double dime_exhaustive(const PooledBatch& z1, const PooledBatch& z2, double alpha) {
  check_pair(z1, z2);
  const std::size_t n = z1.rows();
  if (n > 10) throw Error(ErrorCode::InvalidArgument, "exhaustive DiME is limited to N <= 10");
  const Matrix ka = normalized_kernel(z1);
  const Matrix kb = normalized_kernel(z2);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  const double base = joint_entropy(ka, kb, perm, alpha);
  double total = 0.0;
  std::size_t count = 0;
  do {
    total += joint_entropy(ka, kb, perm, alpha);
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total / static_cast<double>(count) - base;
}

double lidar(const AugmentedClassBatch& batch, const LidarParams& params) {
  const std::size_t n = batch.num_classes;
  const std::size_t j = batch.per_class;
  const Matrix& z = batch.samples;
  if (n < 2 || j < 2) throw Error(ErrorCode::ShapeMismatch, "LiDAR needs at least 2 classes and 2 samples per class");
  if (z.rows() != n * j) throw Error(ErrorCode::ShapeMismatch, "sample rows do not equal classes * per_class");
  if (!(params.delta > 0.0) || !(params.eig_floor > 0.0))
    throw Error(ErrorCode::InvalidArgument, "LiDAR delta and eig_floor must be > 0");
  if (!z.all_finite()) throw Error(ErrorCode::NonFinite, "samples have NaN or Inf entries");
  const std::size_t d = z.cols();

  Matrix means(n, d);
  std::vector<double> grand(d, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    auto mu = means.row(c);
    for (std::size_t s = 0; s < j; ++s) {
      auto row = z.row(c * j + s);
      for (std::size_t k = 0; k < d; ++k) mu[k] += row[k];
    }
    for (std::size_t k = 0; k < d; ++k) {
      mu[k] /= static_cast<double>(j);
      grand[k] += mu[k];
    }
  }
  for (double& g : grand) g /= static_cast<double>(n);

  Matrix between(d, d);
  Matrix within(d, d);
  std::vector<double> dev(d);
  auto accumulate = [&](Matrix& target, double weight) {
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b <= a; ++b) target(a, b) += weight * dev[a] * dev[b];
  };
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t k = 0; k < d; ++k) dev[k] = means(c, k) - grand[k];
    accumulate(between, 1.0 / static_cast<double>(n));
    for (std::size_t s = 0; s < j; ++s) {
      auto row = z.row(c * j + s);
      for (std::size_t k = 0; k < d; ++k) dev[k] = row[k] - means(c, k);
      accumulate(within, 1.0 / static_cast<double>(n * j));
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    within(a, a) += params.delta;
    for (std::size_t b = 0; b < a; ++b) {
      between(b, a) = between(a, b);
      within(b, a) = within(a, b);
    }
  }

  const Matrix w = inv_sqrt_psd(within, params.eig_floor);
  Matrix lda = multiply(multiply(w, between), w);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < a; ++b) lda(a, b) = lda(b, a) = 0.5 * (lda(a, b) + lda(b, a));

  auto eig = symmetric_eigen(lda, false);
  double total = 0.0;
  for (double& v : eig.values) {
    v = std::max(v, 0.0);
    total += v;
  }
  if (total < 1e-12) throw Error(ErrorCode::DegenerateScatter, "all class means coincide");
  for (double& v : eig.values) v /= total;
  return std::exp(renyi_entropy(eig.values, 1.0));
}

}  // namespace layerlens
