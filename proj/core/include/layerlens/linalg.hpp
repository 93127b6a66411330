#pragma once

#include <vector>

#include "layerlens/matrix.hpp"

namespace layerlens {

/// Normalized eigenvalue distribution of a Gram matrix.
/// probs sums to one, is sorted descending and has length min(L, D).
struct SpectrumDistribution {
  std::vector<double> probs;
  double source_trace = 0.0;
};

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // column j pairs with values[j]; empty if not requested
};

/// Eigendecomposition of a real symmetric matrix by Householder
/// tridiagonalization followed by implicit QL. Only the lower triangle is read.
SymmetricEigen symmetric_eigen(const Matrix& a, bool want_vectors = false);

/// Trace-normalized spectrum of K = Z Z^T. When D < L the D x D covariance
/// Z^T Z is decomposed instead; the nonzero spectra coincide. Eigenvalues at or
/// below n * eps * lambda_max are reported as 0.
SpectrumDistribution gram_spectrum(const TokenMatrix& z);

/// Q diag(max(lambda, floor)^-1/2) Q^T for symmetric M.
Matrix inv_sqrt_psd(const Matrix& m, double floor);

/// Throws ZeroMatrix for an empty matrix or any NaN/Inf entry.
void require_token_matrix(const TokenMatrix& z);

}  // namespace layerlens
