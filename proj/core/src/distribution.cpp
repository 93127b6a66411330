#include "layerlens/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "layerlens/errors.hpp"
#include "layerlens/parallel.hpp"
#include "layerlens/rng.hpp"

namespace layerlens {
namespace {

void check_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "sample has NaN or Inf entries");
}

struct DipCore {
  double dip;        // already divided by 2n
  std::size_t low;   // 0-based modal interval indices into the sorted sample
  std::size_t high;
};

// Hartigan & Hartigan (1985) greatest-convex-minorant / least-concave-majorant
// iteration on a sorted sample. Tied values are handled as they are. Arrays are 1-based to
// follow the classical formulation; distances are kept on the 2n scale.
DipCore dip_sorted(const std::vector<double>& sorted) {
  const int n = static_cast<int>(sorted.size());
  std::vector<double> x(n + 1);
  for (int i = 1; i <= n; ++i) x[i] = sorted[i - 1];

  int low = 1;
  int high = n;
  double dip = 1.0;
  if (x[n] == x[1]) return {dip / (2.0 * n), 0, static_cast<std::size_t>(n - 1)};

  std::vector<int> mn(n + 1), mj(n + 1), gcm(n + 2), lcm(n + 2);

  // Indices over which combination is necessary for the convex minorant.
  mn[1] = 1;
  for (int j = 2; j <= n; ++j) {
    mn[j] = j - 1;
    for (;;) {
      const int mnj = mn[j];
      const int mnmnj = mn[mnj];
      if (mnj == 1 || (x[j] - x[mnj]) * (mnj - mnmnj) < (x[mnj] - x[mnmnj]) * (j - mnj)) break;
      mn[j] = mnmnj;
    }
  }
  // ... and for the concave majorant.
  mj[n] = n;
  for (int k = n - 1; k >= 1; --k) {
    mj[k] = k + 1;
    for (;;) {
      const int mjk = mj[k];
      const int mjmjk = mj[mjk];
      if (mjk == n || (x[k] - x[mjk]) * (mjk - mjmjk) < (x[mjk] - x[mjmjk]) * (k - mjk)) break;
      mj[k] = mjmjk;
    }
  }

  for (;;) {
    // GCM change points from high down to low, LCM change points from low up to high.
    int ig = 1;
    gcm[1] = high;
    for (int i = high; i > low;) gcm[++ig] = i = mn[i];
    const int l_gcm = ig;
    int ih = 1;
    lcm[1] = low;
    for (int i = low; i < high;) lcm[++ih] = i = mj[i];
    const int l_lcm = ih;

    // Largest distance between the GCM and the LCM over [low, high].
    long double d = 0.0L;
    if (l_gcm != 2 || l_lcm != 2) {
      int iv = 2;
      int ix = l_gcm - 1;
      do {
        const int gcmix = gcm[ix];
        const int lcmiv = lcm[iv];
        long double dx;
        if (gcmix > lcmiv) {
          const int gcmi1 = gcm[ix + 1];
          dx = (lcmiv - gcmi1 + 1) -
               (static_cast<long double>(x[lcmiv]) - x[gcmi1]) * (gcmix - gcmi1) / (x[gcmix] - x[gcmi1]);
          ++iv;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iv - 1;
          }
        } else {
          const int lcmiv1 = lcm[iv - 1];
          dx = (static_cast<long double>(x[gcmix]) - x[lcmiv1]) * (lcmiv - lcmiv1) / (x[lcmiv] - x[lcmiv1]) -
               (gcmix - lcmiv1 - 1);
          --ix;
          if (dx >= d) {
            d = dx;
            ig = ix + 1;
            ih = iv;
          }
        }
        if (ix < 1) ix = 1;
        if (iv > l_lcm) iv = l_lcm;
      } while (gcm[ix] != lcm[iv]);
    } else {
      d = 1.0L;
    }

    if (d < dip) break;

    // Dip for the convex minorant on [gcm[l_gcm], gcm[ig]].
    double dip_l = 0.0;
    for (int j = ig; j < l_gcm; ++j) {
      double max_t = 1.0;
      const int jb = gcm[j + 1];
      const int je = gcm[j];
      if (je - jb > 1 && x[je] != x[jb]) {
        const double c = (je - jb) / (x[je] - x[jb]);
        for (int jj = jb; jj <= je; ++jj) {
          const double t = (jj - jb + 1) - (x[jj] - x[jb]) * c;
          max_t = std::max(max_t, t);
        }
      }
      dip_l = std::max(dip_l, max_t);
    }
    // Dip for the concave majorant on [lcm[ih], lcm[l_lcm]].
    double dip_u = 0.0;
    for (int k = ih; k < l_lcm; ++k) {
      double max_t = 1.0;
      const int kb = lcm[k];
      const int ke = lcm[k + 1];
      if (ke - kb > 1 && x[ke] != x[kb]) {
        const double c = (ke - kb) / (x[ke] - x[kb]);
        for (int kk = kb; kk <= ke; ++kk) {
          const double t = (x[kk] - x[kb]) * c - (kk - kb - 1);
          max_t = std::max(max_t, t);
        }
      }
      dip_u = std::max(dip_u, max_t);
    }

    dip = std::max({dip, dip_l, dip_u});

    if (low == gcm[ig] && high == lcm[ih]) break;
    low = gcm[ig];
    high = lcm[ih];
  }
  return {dip / (2.0 * n), static_cast<std::size_t>(low - 1), static_cast<std::size_t>(high - 1)};
}

}  // namespace

DipResult dip_statistic(std::span<const double> x) {
  if (x.size() < 4) throw Error(ErrorCode::TooFewSamples, "dip needs at least 4 samples, got " + std::to_string(x.size()));
  check_finite(x);
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const auto core = dip_sorted(sorted);
  DipResult r;
  r.dip = core.dip;
  r.modal_lo = sorted[core.low];
  r.modal_hi = sorted[core.high];
  return r;
}

double dip_pvalue(std::span<const double> x, std::size_t bootstrap, std::uint64_t seed, std::size_t width) {
  if (bootstrap < 1) throw Error(ErrorCode::InvalidArgument, "bootstrap count must be >= 1");
  const double observed = dip_statistic(x).dip;
  const std::size_t n = x.size();
  std::vector<char> exceeds(bootstrap, 0);
  parallel_for(bootstrap, width, [&](std::size_t b) {
    SplitMix64 rng(stream_key(seed, b));
    std::vector<double> sample(n);
    for (double& v : sample) v = rng.uniform();
    std::sort(sample.begin(), sample.end());
    exceeds[b] = dip_sorted(sample).dip > observed ? 1 : 0;
  });
  const auto count = std::count(exceeds.begin(), exceeds.end(), char{1});
  return static_cast<double>(count) / static_cast<double>(bootstrap);
}

std::size_t most_bimodal_layer(const std::map<std::size_t, std::vector<double>>& per_layer) {
  bool found = false;
  std::size_t best_layer = 0;
  double best = -1.0;
  for (const auto& [layer, values] : per_layer) {
    if (values.size() < 4) continue;
    const double d = dip_statistic(values).dip;
    if (!found || d > best) {
      found = true;
      best = d;
      best_layer = layer;
    }
  }
  if (!found) throw Error(ErrorCode::NoEligibleLayer, "no layer has at least 4 samples");
  return best_layer;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "correlation inputs differ in length");
  if (x.size() < 2) throw Error(ErrorCode::TooFewSamples, "correlation needs at least 2 pairs");
  check_finite(x);
  check_finite(y);
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ZeroVariance, "correlation input has zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Histogram make_histogram(std::span<const double> values, std::size_t bins) {
  Histogram h;
  h.counts.assign(bins, 0);
  if (values.empty() || bins == 0) return h;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.min = *lo;
  h.max = *hi;
  const double width = h.max - h.min;
  for (double v : values) {
    std::size_t b = 0;
    if (width > 0.0) {
      b = static_cast<std::size_t>((v - h.min) / width * static_cast<double>(bins));
      b = std::min(b, bins - 1);
    }
    ++h.counts[b];
  }
  return h;
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size()));
}

}  // namespace layerlens
