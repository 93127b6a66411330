#include "layerlens/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "layerlens/errors.hpp"

namespace layerlens {
namespace {

constexpr int kMaxQlIterations = 100;

// Householder reduction to tridiagonal form (EISPACK tred2). On return v holds
// the accumulated orthogonal transform, d the diagonal and e the subdiagonal
// in e[1..n-1].
void tridiagonalize(Matrix& v, std::vector<double>& d, std::vector<double>& e) {
  const std::size_t n = v.rows();
  for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (std::size_t k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit QL on the symmetric tridiagonal matrix (EISPACK tql2).
void ql_implicit(Matrix& v, std::vector<double>& d, std::vector<double>& e, bool rotate_vectors) {
  const std::size_t n = d.size();
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }

    if (m > l) {
      int iter = 0;
      do {
        if (++iter > kMaxQlIterations) {
          throw Error(ErrorCode::NoConvergence, "symmetric eigensolver exceeded iteration limit");
        }
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0;
        double s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          if (rotate_vectors) {
            for (std::size_t k = 0; k < n; ++k) {
              h = v(k, ii + 1);
              v(k, ii + 1) = s * v(k, ii) + c * h;
              v(k, ii) = c * v(k, ii) - s * h;
            }
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

}  // namespace

SymmetricEigen symmetric_eigen(const Matrix& a, bool want_vectors) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::ShapeMismatch, "eigendecomposition needs a square matrix");
  const std::size_t n = a.rows();
  SymmetricEigen out;
  if (n == 0) return out;

  // Work on a symmetrized copy of the lower triangle.
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) v(i, j) = v(j, i) = a(i, j);

  std::vector<double> d(n);
  std::vector<double> e(n);
  tridiagonalize(v, d, e);
  ql_implicit(v, d, e, want_vectors);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d[x] > d[y]; });

  out.values.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.values[j] = d[order[j]];
  if (want_vectors) {
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
  }
  return out;
}

void require_token_matrix(const TokenMatrix& z) {
  if (z.rows() == 0 || z.cols() == 0) throw Error(ErrorCode::ZeroMatrix, "token matrix has no rows or columns");
  if (!z.all_finite()) throw Error(ErrorCode::ZeroMatrix, "token matrix has NaN or Inf entries");
}

SpectrumDistribution gram_spectrum(const TokenMatrix& z) {
  require_token_matrix(z);
  const double tr = frobenius_norm_sq(z);
  if (!(tr > 0.0) || !std::isfinite(tr)) throw Error(ErrorCode::ZeroMatrix, "trace of the Gram matrix is not positive");

  const Matrix k = z.cols() < z.rows() ? covariance(z) : gram(z);
  SymmetricEigen eig = symmetric_eigen(k, false);

  SpectrumDistribution s;
  s.source_trace = tr;
  s.probs.resize(eig.values.size());
  // Eigenvalues within the solver's backward error of zero are noise. Left in, they
  // dominate sum p^alpha for alpha < 1 (sqrt(1e-16) = 1e-8).
  const double noise = static_cast<double>(k.rows()) * std::numeric_limits<double>::epsilon() * eig.values.front();
  for (std::size_t i = 0; i < eig.values.size(); ++i)
    s.probs[i] = eig.values[i] > noise ? eig.values[i] / tr : 0.0;
  return s;
}

Matrix inv_sqrt_psd(const Matrix& m, double floor) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::ShapeMismatch, "inv_sqrt_psd needs a square matrix");
  if (!(floor > 0.0)) throw Error(ErrorCode::InvalidArgument, "eigenvalue floor must be positive");
  if (!m.all_finite()) throw Error(ErrorCode::NonFinite, "matrix has NaN or Inf entries");

  const std::size_t n = m.rows();
  double scale = 1.0;
  for (double v : m.data()) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-9 * scale) throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric");

  const SymmetricEigen eig = symmetric_eigen(m, true);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::sqrt(std::max(eig.values[i], floor));

  Matrix out(n, n);
  const Matrix& q = eig.vectors;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += q(i, k) * w[k] * q(j, k);
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

}  // namespace layerlens
