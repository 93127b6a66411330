#pragma once

#include <span>

#include "layerlens/linalg.hpp"
#include "layerlens/matrix.hpp"

namespace layerlens {

struct EntropyParams {
  double alpha = 1.0;       // Renyi order; exactly 1 selects the Shannon limit
  bool normalized = false;  // divide by log(min(L, D))
};

struct CurvatureParams {
  double degenerate_eps = 1e-12;
};

/// Spectral floor below which logdet_entropy ignores an eigenvalue.
inline constexpr double kLogDetSpectralFloor = 1e-12;

/// Renyi entropy of order alpha (natural log) of a probability vector.
/// Zero entries contribute nothing for any alpha.
double renyi_entropy(std::span<const double> probs, double alpha);

/// Matrix-based alpha-order entropy of a prompt's token Gram spectrum.
/// alpha == 2 takes the Frobenius-norm route and never eigendecomposes.
double prompt_entropy(const TokenMatrix& z, const EntropyParams& params = {});

/// Collision entropy -log ||K / tr K||_F^2 without an eigendecomposition.
double collision_entropy(const TokenMatrix& z);

/// Sum of log p_i over eigenvalues above the spectral floor, minus log 2.
double logdet_entropy(const TokenMatrix& z);

/// Mean turning angle (radians) between consecutive token difference vectors.
double curvature(const TokenMatrix& z, const CurvatureParams& params = {});

}  // namespace layerlens
