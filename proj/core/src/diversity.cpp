#include "layerlens/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "layerlens/errors.hpp"

namespace layerlens {
namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidArgument, "entropy order alpha must be > 0");
}

double normalizer(const TokenMatrix& z) {
  const std::size_t m = std::min(z.rows(), z.cols());
  if (m < 2) throw Error(ErrorCode::DegenerateNormalization, "normalized entropy needs min(L, D) >= 2");
  return std::log(static_cast<double>(m));
}

}  // namespace

double renyi_entropy(std::span<const double> probs, double alpha) {
  check_alpha(alpha);
  if (alpha == 1.0) {
    double h = 0.0;
    for (double p : probs)
      if (p > 0.0) h -= p * std::log(p);
    return h;
  }
  double s = 0.0;
  for (double p : probs)
    if (p > 0.0) s += std::pow(p, alpha);
  return std::log(s) / (1.0 - alpha);
}

double collision_entropy(const TokenMatrix& z) {
  require_token_matrix(z);
  const double tr = frobenius_norm_sq(z);
  if (!(tr > 0.0)) throw Error(ErrorCode::ZeroMatrix, "trace of the Gram matrix is not positive");
  // ||Z Z^T||_F = ||Z^T Z||_F; take whichever side is smaller.
  const Matrix k = z.cols() < z.rows() ? covariance(z) : gram(z);
  return -std::log(frobenius_norm_sq(k) / (tr * tr));
}

double prompt_entropy(const TokenMatrix& z, const EntropyParams& params) {
  check_alpha(params.alpha);
  const double denom = params.normalized ? normalizer(z) : 1.0;
  double h = 0.0;
  if (params.alpha == 2.0) {
    h = collision_entropy(z);
  } else {
    h = renyi_entropy(gram_spectrum(z).probs, params.alpha);
  }
  // Round-off can leave the exact bounds by a few ulps.
  const double upper = std::log(static_cast<double>(std::min(z.rows(), z.cols())));
  return std::clamp(h, 0.0, upper) / denom;
}

double logdet_entropy(const TokenMatrix& z) {
  const SpectrumDistribution s = gram_spectrum(z);
  double acc = 0.0;
  for (double p : s.probs)
    if (p > kLogDetSpectralFloor) acc += std::log(p);
  return acc - std::numbers::ln2;
}

double curvature(const TokenMatrix& z, const CurvatureParams& params) {
  if (!(params.degenerate_eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "degenerate_eps must be > 0");
  if (z.rows() < 3) throw Error(ErrorCode::TooShort, "curvature needs at least 3 tokens");
  require_token_matrix(z);

  const std::size_t len = z.rows();
  const std::size_t dim = z.cols();
  std::vector<double> prev(dim);
  std::vector<double> next(dim);
  auto diff = [&](std::size_t k, std::vector<double>& out) {
    double n2 = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      out[c] = z(k + 1, c) - z(k, c);
      n2 += out[c] * out[c];
    }
    return std::sqrt(n2);
  };

  double prev_norm = diff(0, prev);
  double sum = 0.0;
  std::size_t terms = 0;
  for (std::size_t k = 1; k + 1 < len; ++k) {
    const double next_norm = diff(k, next);
    if (prev_norm >= params.degenerate_eps && next_norm >= params.degenerate_eps) {
      double dot = 0.0;
      for (std::size_t c = 0; c < dim; ++c) dot += prev[c] * next[c];
      const double cosine = std::clamp(dot / (prev_norm * next_norm), -1.0, 1.0);
      sum += std::acos(cosine);
      ++terms;
    }
    std::swap(prev, next);
    prev_norm = next_norm;
  }
  if (terms == 0) throw Error(ErrorCode::AllDegenerate, "every difference vector is below degenerate_eps");
  return sum / static_cast<double>(terms);
}

}  // namespace layerlens
