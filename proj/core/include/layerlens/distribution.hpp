#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace layerlens {

struct DipResult {
  double dip = 0.0;
  std::optional<double> p_value;
  double modal_lo = 0.0;
  double modal_hi = 0.0;
};

/// Hartigan's dip statistic. The returned dip lies in [1/(2n), 1/4].
DipResult dip_statistic(std::span<const double> x);

/// Fraction of `bootstrap` uniform(0,1) samples of size n whose dip exceeds dip(x).
/// Replicate b draws from stream_key(seed, b), so any `width` gives the same value.
double dip_pvalue(std::span<const double> x, std::size_t bootstrap = 2000, std::uint64_t seed = 0,
                  std::size_t width = 1);

/// Layer with the largest dip among layers with >= 4 samples; ties go to the lowest index.
std::size_t most_bimodal_layer(const std::map<std::size_t, std::vector<double>>& per_layer);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

struct Histogram {
  double min = 0.0;
  double max = 0.0;
  std::vector<std::size_t> counts;

  friend bool operator==(const Histogram&, const Histogram&) = default;
};

inline constexpr std::size_t kHistogramBins = 64;

/// Equal-width bins over [min, max] of the sample. A constant sample lands in bin 0.
Histogram make_histogram(std::span<const double> values, std::size_t bins = kHistogramBins);

double mean(std::span<const double> values);

/// Population standard deviation.
double stddev(std::span<const double> values);

}  // namespace layerlens
