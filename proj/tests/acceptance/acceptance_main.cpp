// Acceptance suite. One PASS/FAIL line per criterion; exit status 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "layerlens/diversity.hpp"
#include "layerlens/dump_io.hpp"
#include "layerlens/errors.hpp"
#include "layerlens/invariance.hpp"
#include "layerlens/linalg.hpp"
#include "layerlens/perturbation.hpp"
#include "layerlens/pipeline.hpp"
#include "oracles.hpp"

using namespace layerlens;

namespace {

// Tolerances and time budgets.
constexpr double kEntropyTol = 1e-8;
constexpr double kEntropyScaleTol = 1e-9;
constexpr double kBoundSlack = 1e-12;
constexpr double kEntropySeconds = 10.0;
constexpr double kPowerLawTol = 1e-9;
constexpr double kMonotoneSlack = 1e-12;  // flat rows may wiggle by an ulp
constexpr double kPowerLawSeconds = 1.0;
constexpr double kCurvatureExactTol = 1e-12;
constexpr double kCurvatureMotionTol = 1e-8;
constexpr double kInfoNceTol = 1e-9;
constexpr double kDimeTol = 1e-9;
constexpr double kLidarRotationTol = 1e-6;
constexpr double kInvarianceSeconds = 30.0;
constexpr double kDipNullMax = 0.02;
constexpr int kDipNullPassing = 99;
constexpr double kDipBimodalMin = 0.2;
constexpr double kDipPvalueMax = 0.01;
constexpr double kFractionTol = 0.02;

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_++ < 5) detail_ << (detail_.tellp() ? "; " : "") << what;
  }
  void note(const std::string& info) { info_ = info; }
  bool ok() const { return failures_ == 0; }
  std::string detail() const {
    if (ok()) return info_;
    return failures_ > 5 ? detail_.str() + "; ... " + std::to_string(failures_) + " failures" : detail_.str();
  }

 private:
  int failures_ = 0;
  std::ostringstream detail_;
  std::string info_;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Matrix random_orthogonal(std::size_t n, std::uint64_t seed) {
  return oracle::from_dense(oracle::jacobi_eigen(oracle::to_dense(gram(oracle::uniform_matrix(n, n, seed)))).vectors);
}

Matrix scaled(Matrix z, double c) {
  for (double& v : z.data()) v *= c;
  return z;
}

// ---------------------------------------------------------------- criteria

void entropy_suite(Check& c) {
  const double alphas[] = {0.5, 1.0, 2.0, 4.0};
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    SplitMix64 rng(stream_key(seed, 0xe7));
    const std::size_t l = 1 + rng.below(64), d = 1 + rng.below(64);
    const auto z = oracle::gaussian_matrix(l, d, seed);
    const auto probs = oracle::gram_spectrum(z);
    const double upper = std::log(static_cast<double>(std::min(l, d)));
    const double factor = std::exp(8.0 * rng.uniform() - 4.0);
    const auto zs = scaled(z, factor);
    for (double a : alphas) {
      const double got = prompt_entropy(z, {a, false});
      const double want = oracle::renyi(probs, a);
      worst = std::max(worst, std::abs(got - want));
      c.expect(std::abs(got - want) <= kEntropyTol, "seed " + std::to_string(seed) + " alpha " + num(a) + " off by " + num(got - want));
      c.expect(got >= -kBoundSlack && got <= upper + kBoundSlack, "bounds violated at seed " + std::to_string(seed));
      c.expect(std::abs(prompt_entropy(zs, {a, false}) - got) <= kEntropyScaleTol, "scale invariance at seed " + std::to_string(seed));
    }
    const double fast = collision_entropy(z);
    c.expect(std::abs(fast - oracle::renyi(probs, 2.0)) <= kEntropyTol, "fast path at seed " + std::to_string(seed));
  }
  c.note("worst deviation " + num(worst));
}

void power_law_table(Check& c) {
  const std::vector<double> betas{0, 0.5, 1, 2}, alphas{0.5, 1, 2, 4};
  const auto rows = synth_spectra(betas, alphas, 100);
  auto at = [&](std::size_t b, std::size_t a) { return rows[b * alphas.size() + a].entropy; };
  for (std::size_t b = 0; b < betas.size(); ++b)
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      if (a > 0) c.expect(at(b, a) <= at(b, a - 1) + kMonotoneSlack, "increase in alpha at beta " + num(betas[b]));
      if (b > 0) c.expect(at(b, a) <= at(b - 1, a) + kMonotoneSlack, "increase in beta at alpha " + num(alphas[a]));
    }
  for (std::size_t a = 0; a < alphas.size(); ++a)
    c.expect(std::abs(at(0, a) - std::log(100.0)) <= kPowerLawTol, "beta=0 row off log 100");
}

void curvature_suite(Check& c) {
  Matrix line(6, 3), zig(6, 2);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t k = 0; k < 3; ++k) line(i, k) = (k + 1.0) * i - 2.0;
    zig(i, 0) = i % 2 ? 1.0 : -1.0;
    zig(i, 1) = 0.5;
  }
  c.expect(std::abs(curvature(line)) <= kCurvatureExactTol, "collinear gave " + num(curvature(line)));
  c.expect(std::abs(curvature(zig) - std::numbers::pi) <= kCurvatureExactTol, "zig-zag gave " + num(curvature(zig)));
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    SplitMix64 rng(stream_key(seed, 0xc0));
    const std::size_t l = 3 + rng.below(30), d = 2 + rng.below(12);
    const auto z = oracle::gaussian_matrix(l, d, seed);
    auto moved = multiply(z, random_orthogonal(d, seed + 1000));
    for (std::size_t k = 0; k < d; ++k) {
      const double shift = 10.0 * rng.uniform() - 5.0;
      for (std::size_t i = 0; i < l; ++i) moved(i, k) += shift;
    }
    const double before = curvature(z), after = curvature(moved);
    c.expect(std::abs(before - after) <= kCurvatureMotionTol, "rigid motion at seed " + std::to_string(seed) + " off by " + num(after - before));
  }
}

void invariance_suite(Check& c) {
  for (std::size_t n : {2u, 5u, 16u}) {
    Matrix same(n, 4, 0.3);
    const double v = info_nce(same, same);
    c.expect(std::abs(v - std::log(static_cast<double>(n))) <= kInfoNceTol, "InfoNCE constant batch N=" + std::to_string(n) + " gave " + num(v));
  }

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto z1 = oracle::gaussian_matrix(6, 4, seed);
    auto z2 = z1;
    const auto noise = oracle::gaussian_matrix(6, 4, seed + 100);
    for (std::size_t i = 0; i < z2.data().size(); ++i) z2.data()[i] += 0.3 * noise.data()[i];
    for (double alpha : {1.0, 2.0}) {
      const double mean_all = dime_exhaustive(z1, z2, alpha);
      const double want = oracle::dime_exhaustive(z1, z2, alpha);
      c.expect(std::abs(mean_all - want) <= kDimeTol, "DiME exhaustive N=6 off by " + num(mean_all - want));
      // The sampled estimator averages the same joint-entropy term over its permutations.
      const DiMEParams p{alpha, 8, seed};
      double direct = 0;
      const auto h = [&](std::span<const std::size_t> perm) { return dime_joint_entropy(z1, z2, perm, alpha); };
      std::vector<std::size_t> id(6);
      for (std::size_t i = 0; i < 6; ++i) id[i] = i;
      for (std::uint64_t k = 0; k < p.num_permutations; ++k) direct += h(dime_permutation(6, seed, k));
      direct = direct / p.num_permutations - h(id);
      c.expect(std::abs(dime(z1, z2, p) - direct) <= kDimeTol, "sampled DiME disagrees with its permutations");
    }
  }

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t classes = 4, per = 5, dim = 6;
    AugmentedClassBatch b{Matrix(classes * per, dim), classes, per};
    const auto centers = oracle::gaussian_matrix(classes, dim, seed);
    const auto noise = oracle::gaussian_matrix(classes * per, dim, seed + 50);
    for (std::size_t r = 0; r < classes * per; ++r)
      for (std::size_t k = 0; k < dim; ++k) b.samples(r, k) = centers(r / per, k) + 0.3 * noise(r, k);
    const double before = lidar(b);
    b.samples = multiply(b.samples, random_orthogonal(dim, seed + 7));
    const double after = lidar(b);
    c.expect(std::abs(before - after) <= kLidarRotationTol, "LiDAR rotation off by " + num(after - before));
  }
  try {
    lidar({Matrix(12, 3, 0.7), 4, 3});
    c.expect(false, "collapsed batch did not throw");
  } catch (const Error& e) {
    c.expect(e.code() == ErrorCode::DegenerateScatter, std::string("collapsed batch threw ") + e.what());
  }
}

void dip_suite(Check& c) {
  const double d4 = dip_statistic(std::vector<double>{0, 0, 1, 1}).dip;
  c.expect(d4 == 0.25, "{0,0,1,1} gave " + num(d4));
  int below = 0;
  for (std::uint64_t t = 0; t < 100; ++t) {
    SplitMix64 rng(stream_key(t, 0xd1));
    std::vector<double> x(1000);
    for (double& v : x) v = rng.uniform();
    below += dip_statistic(x).dip < kDipNullMax;
  }
  c.expect(below >= kDipNullPassing, std::to_string(below) + "/100 uniform trials below " + num(kDipNullMax));
  SplitMix64 rng(42);
  std::vector<double> bimodal(1000);
  for (std::size_t i = 0; i < bimodal.size(); ++i) bimodal[i] = (i % 2 ? 1.0 : 0.0) + (2.0 * rng.uniform() - 1.0) * 1e-3;
  const double d = dip_statistic(bimodal).dip;
  const double p = dip_pvalue(bimodal, 2000, 7);
  c.expect(d > kDipBimodalMin, "bimodal dip " + num(d));
  c.expect(p < kDipPvalueMax, "bimodal p " + num(p));
}

void determinism(Check& c) {
  fixture::TempDir dir;
  fixture::DumpShape shape;
  shape.prompts = 4 * 16;
  shape.num_layers = 3;
  shape.dim = 8;
  shape.max_tokens = 12;
  const auto manifest = fixture::write_random_dump(
      dir.path(), shape, [](std::size_t i) { return nlohmann::json{{"class", i / 16}, {"aug", i % 16}}; });

  RunConfig cfg;
  cfg.dump_dir = dir.path();
  cfg.metrics = {"entropy", "logdet", "curvature", "infonce", "dime", "lidar"};
  cfg.entropy_alphas = {0.5, 1, 2};
  cfg.seed = 11;
  auto text = [&](std::size_t workers) {
    cfg.parallelism = workers;
    auto r = compute_report(cfg);
    r.wall_time_seconds = 0;
    return emit_report(r);
  };
  c.expect(text(1) == text(8), "reports differ between 1 and 8 workers");

  for (const auto& p : manifest.prompts)
    for (std::size_t l = 0; l <= shape.num_layers; ++l) {
      const auto z = read_layer(dir.path(), p.prompt_id, l).matrix;
      auto expect = oracle::gaussian_matrix(p.token_count, shape.dim, stream_key(shape.seed, p.prompt_id, l));
      for (double& v : expect.data()) v = static_cast<float>(v);
      c.expect(z == expect, "layer " + std::to_string(l) + " of prompt " + std::to_string(p.prompt_id) + " not bit-exact");
    }
  fixture::TempDir copy;
  std::vector<LayerSlice> slices;
  for (const auto& p : manifest.prompts)
    for (std::size_t l = 0; l <= shape.num_layers; ++l) slices.push_back(read_layer(dir.path(), p.prompt_id, l));
  write_dump(copy.path(), manifest, slices);
  c.expect(read_manifest(copy.path()) == manifest, "manifest changed on rewrite");
  for (const auto& s : slices) c.expect(read_layer(copy.path(), s.prompt_id, s.layer).matrix == s.matrix, "rewritten blob differs");
}

void perturbation_stats(Check& c) {
  const std::size_t length = 10000;
  const auto base = random_prompt(length, 50000, 3, 0);
  for (double p : {0.25, 0.5, 0.75})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto mask = replacement_mask(length, p, seed);
      const double frac = static_cast<double>(std::count(mask.begin(), mask.end(), true)) / length;
      c.expect(std::abs(frac - p) <= kFractionTol, "p=" + num(p) + " replaced " + num(frac));
      // Positions outside the mask keep their tokens.
      for (const auto& s : {inject_repetition(base, p, seed), inject_randomness(base, p, seed)}) {
        bool kept = s.ids.size() == length;
        for (std::size_t i = 0; kept && i < length; ++i) kept = mask[i] || s.ids[i] == base.ids[i];
        c.expect(kept, "unmasked token changed at p=" + num(p));
      }
    }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = inject_repetition(random_prompt(50 + seed, 1000, seed, 1), 1.0, seed);
    c.expect(std::all_of(s.ids.begin(), s.ids.end(), [&](TokenId t) { return t == s.ids.front(); }), "p=1 not constant");
  }
}

struct Criterion {
  const char* name;
  std::function<void(Check&)> run;
  double budget_seconds;  // 0 = no budget
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"entropy correctness", entropy_suite, kEntropySeconds},
      {"power-law table", power_law_table, kPowerLawSeconds},
      {"curvature", curvature_suite, 0},
      {"invariance metrics", invariance_suite, kInvarianceSeconds},
      {"dip", dip_suite, 0},
      {"determinism and dump round trip", determinism, 0},
      {"perturbation statistics", perturbation_stats, 0},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("threw: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_seconds > 0) check.expect(secs < cr.budget_seconds, "took " + num(secs) + " s, budget " + num(cr.budget_seconds) + " s");
    failed += !check.ok();
    std::printf("%s  %-34s %7.3f s  %s\n", check.ok() ? "PASS" : "FAIL", cr.name, secs, check.detail().c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
