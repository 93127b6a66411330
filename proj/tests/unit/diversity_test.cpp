#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "layerlens/diversity.hpp"
#include "layerlens/errors.hpp"
#include "layerlens/linalg.hpp"
#include "oracles.hpp"

using namespace layerlens;

namespace {

constexpr double kPi = std::numbers::pi;

// Z with Z Z^T = diag(lambda): rows scaled unit vectors.
Matrix diag_spectrum(const std::vector<double>& lambda) {
  Matrix z(lambda.size(), lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) z(i, i) = std::sqrt(lambda[i]);
  return z;
}

template <class Fn>
ErrorCode error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(PromptEntropy, IdentityIsLogL) {
  EXPECT_NEAR(prompt_entropy(Matrix::identity(4), {1.0, false}), std::log(4.0), 1e-12);
  for (double a : {0.5, 2.0, 4.0}) EXPECT_NEAR(prompt_entropy(Matrix::identity(4), {a, false}), std::log(4.0), 1e-12);
}

TEST(PromptEntropy, RankOneIsZero) {
  const Matrix z{{1, 0}, {1, 0}};
  for (double a : {0.5, 1.0, 2.0, 4.0}) EXPECT_NEAR(prompt_entropy(z, {a, false}), 0.0, 1e-12) << a;
}

TEST(PromptEntropy, HarmonicSpectrumCollision) {
  // p = (12, 6, 4, 3) / 25.
  const auto z = diag_spectrum({1.0, 0.5, 1.0 / 3.0, 0.25});
  const double want = -std::log(205.0 / 625.0);
  EXPECT_NEAR(want, 1.1147, 1e-4);
  EXPECT_NEAR(prompt_entropy(z, {2.0, false}), want, 1e-12);
  EXPECT_NEAR(renyi_entropy(gram_spectrum(z).probs, 2.0), want, 1e-12);
}

TEST(PromptEntropy, ContinuityNearShannon) {
  const auto z = oracle::gaussian_matrix(8, 16, 5);
  EXPECT_NEAR(prompt_entropy(z, {1.000001, false}), prompt_entropy(z, {1.0, false}), 1e-4);
  EXPECT_NEAR(prompt_entropy(z, {0.999999, false}), prompt_entropy(z, {1.0, false}), 1e-4);
}

TEST(PromptEntropy, MatchesDirectSummation) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::size_t l = 2 + seed % 15, d = 2 + (seed * 5) % 17;
    const auto z = oracle::uniform_matrix(l, d, seed);
    const auto spec = oracle::gram_spectrum(z);
    for (double a : {0.5, 1.0, 2.0, 4.0}) EXPECT_NEAR(prompt_entropy(z, {a, false}), oracle::renyi(spec, a), 1e-8);
  }
}

TEST(PromptEntropy, FastPathMatchesEigenPath) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto z = oracle::gaussian_matrix(3 + seed % 20, 2 + seed % 7, seed);
    EXPECT_NEAR(collision_entropy(z), renyi_entropy(gram_spectrum(z).probs, 2.0), 1e-8);
  }
}

TEST(PromptEntropy, BoundsScaleAndMonotonicity) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t l = 1 + seed % 10, d = 1 + (seed * 3) % 9;
    const auto z = oracle::gaussian_matrix(l, d, 1000 + seed);
    Matrix cz = z;
    for (double& v : cz.data()) v *= -7.5;
    double prev = INFINITY;
    for (double a : {0.5, 1.0, 2.0, 4.0}) {
      const double h = prompt_entropy(z, {a, false});
      EXPECT_GE(h, 0.0);
      EXPECT_LE(h, std::log(static_cast<double>(std::min(l, d))) + 1e-15);
      EXPECT_NEAR(prompt_entropy(cz, {a, false}), h, 1e-9);
      EXPECT_LE(h, prev + 1e-12);
      prev = h;
      if (std::min(l, d) >= 2) {
        const double hn = prompt_entropy(z, {a, true});
        EXPECT_GE(hn, 0.0);
        EXPECT_LE(hn, 1.0);
        EXPECT_NEAR(hn, h / std::log(static_cast<double>(std::min(l, d))), 1e-12);
      }
    }
  }
}

TEST(PromptEntropy, NormalizedUsesMinDimension) {
  // 6 tokens in 3 dimensions with a flat spectrum reaches 1.
  Matrix z(6, 3);
  for (std::size_t i = 0; i < 6; ++i) z(i, i % 3) = 1.0;
  EXPECT_NEAR(prompt_entropy(z, {1.0, true}), 1.0, 1e-12);
}

TEST(PromptEntropy, Errors) {
  EXPECT_EQ(error_of([] { prompt_entropy(Matrix(2, 2, 0.0)); }), ErrorCode::ZeroMatrix);
  EXPECT_EQ(error_of([] { prompt_entropy(Matrix{{1.0, 2.0}}, {1.0, true}); }), ErrorCode::DegenerateNormalization);
  EXPECT_EQ(error_of([] { prompt_entropy(Matrix::identity(2), {0.0, false}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(error_of([] { prompt_entropy(Matrix::identity(2), {-1.0, false}); }), ErrorCode::InvalidArgument);
}

TEST(RenyiEntropy, ZeroProbabilitiesIgnored) {
  const std::vector<double> p{0.5, 0.5, 0.0, 0.0};
  for (double a : {0.5, 1.0, 2.0, 4.0}) EXPECT_NEAR(renyi_entropy(p, a), std::log(2.0), 1e-15);
}

TEST(LogDetEntropy, Examples) {
  EXPECT_NEAR(logdet_entropy(Matrix::identity(2)), -3.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(logdet_entropy(Matrix{{1, 2}, {2, 4}}), -std::log(2.0), 1e-12);
}

TEST(LogDetEntropy, MatchesOracleSpectrum) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto z = oracle::uniform_matrix(6, 4, seed);
    double want = -std::log(2.0);
    for (double p : oracle::gram_spectrum(z))
      if (p > kLogDetSpectralFloor) want += std::log(p);
    EXPECT_NEAR(logdet_entropy(z), want, 1e-8);
  }
}

TEST(Curvature, CollinearIsZero) {
  Matrix z(6, 3);
  for (std::size_t k = 0; k < 6; ++k)
    for (std::size_t c = 0; c < 3; ++c) z(k, c) = static_cast<double>(k) * (c + 1.5);
  EXPECT_NEAR(curvature(z), 0.0, 1e-12);
}

TEST(Curvature, ZigZagIsPi) {
  EXPECT_NEAR(curvature(Matrix{{0, 0}, {1, 0}, {0, 0}, {1, 0}}), kPi, 1e-12);
}

TEST(Curvature, RightAngle) {
  EXPECT_NEAR(curvature(Matrix{{0, 0}, {1, 0}, {1, 1}}), kPi / 2, 1e-15);
}

TEST(Curvature, MatchesTermByTermOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto z = oracle::gaussian_matrix(10, 5, seed);
    EXPECT_NEAR(curvature(z), oracle::curvature(z), 1e-10);
  }
}

TEST(Curvature, SkipsDegenerateTerms) {
  // Repeated token: the two terms touching it are skipped, the last one is pi/2.
  const Matrix z{{0, 0}, {1, 0}, {1, 0}, {2, 0}, {2, 1}};
  EXPECT_NEAR(curvature(z), kPi / 2, 1e-15);
  EXPECT_NEAR(oracle::curvature(z), kPi / 2, 1e-15);
}

TEST(Curvature, RigidMotionAndScaleInvariance) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto z = oracle::gaussian_matrix(8, 4, seed);
    const auto q = oracle::from_dense(oracle::jacobi_eigen(oracle::to_dense(gram(oracle::gaussian_matrix(4, 4, seed + 50)))).vectors);
    auto moved = multiply(z, q);
    for (std::size_t k = 0; k < moved.rows(); ++k)
      for (std::size_t c = 0; c < 4; ++c) moved(k, c) += 3.0 * c - 1.0;
    EXPECT_NEAR(curvature(moved), curvature(z), 1e-8);
    Matrix scaled = z;
    for (double& v : scaled.data()) v *= 12.5;
    EXPECT_NEAR(curvature(scaled), curvature(z), 1e-9);
  }
}

TEST(Curvature, Errors) {
  EXPECT_EQ(error_of([] { curvature(Matrix{{0, 0}, {1, 0}}); }), ErrorCode::TooShort);
  EXPECT_EQ(error_of([] { curvature(Matrix(4, 2, 1.0)); }), ErrorCode::AllDegenerate);
}
