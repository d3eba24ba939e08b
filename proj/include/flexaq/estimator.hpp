#pragma once

#include <span>
#include <vector>

#include "flexaq/common.hpp"
#include "flexaq/query.hpp"

namespace flexaq {

// One aggregate for one group, with its population scale-up, fuzzy
// satisfaction, and interval. NaN estimate means the value is undefined
// (AVG over zero total satisfaction); +inf halfWidth means no interval can
// be given and renders as n/a.
struct GroupEstimate {
    std::vector<Value> groupKey;
    AggKind kind = AggKind::Count;
    std::string label;          // e.g. "COUNT(*)"
    double estimate = 0.0;
    double satisfaction = 0.0;  // mean degree over the group's sampled tuples
    double confidence = 0.0;    // NaN in exact mode
    double halfWidth = 0.0;     // NaN in exact mode
    size_t contributing = 0;    // tuples with positive degree (n_g)
    size_t tupleCount = 0;      // all sampled tuples carrying this group key
    size_t populationSize = 0;  // N
};

// Quantile function of the standard normal distribution, accurate to well
// under 1e-9 over (0, 1).
double inverse_normal_cdf(double p);

// Combined satisfaction degree of one joined tuple: the minimum of its fuzzy
// memberships, forced to zero when a crisp predicate failed. A tuple with no
// predicates at all satisfies fully.
double tuple_degree(std::span<const double> memberships, bool crispOk);

// Horvitz-Thompson scale-up from a uniform sample of `sampleSize` driving
// rows to a population of `populationSize`. degrees[i] is the satisfaction of
// the i-th qualifying tuple; values[i] the aggregated column.
double estimate_count(std::span<const double> degrees, size_t sampleSize, size_t populationSize);
double estimate_sum(std::span<const double> degrees, std::span<const double> values,
                    size_t sampleSize, size_t populationSize);

// Degree-weighted mean; needs no scale-up. Throws ZeroSatisfaction when no
// tuple carries weight.
double estimate_avg(std::span<const double> degrees, std::span<const double> values);

// Distribution-free half-width for the mean of n observations bounded by
// [lo, hi]: (hi - lo) * sqrt(ln(2 / (1 - confidence)) / (2 n)). Holds at any
// sample size.
double conservative_half_width(double lo, double hi, size_t n, double confidence);

// Same, after checking every observation really lies inside the stated range.
double conservative_half_width(std::span<const double> obs, double lo, double hi,
                               double confidence);

// Normal-approximation half-width for the mean of obs, with the
// finite-population correction sqrt((N - n) / (N - 1)).
double large_sample_half_width(std::span<const double> obs, size_t populationSize,
                               double confidence);

// Streaming variant over the first two moments of n observations.
double large_sample_half_width_from_moments(double sum, double sumSquares, size_t n,
                                            size_t populationSize, double confidence);

// Half-width for a degree-weighted average. Spread is the weighted variance
// of values about the weighted mean; the effective sample size is the number
// of tuples with positive weight. Returns +inf when fewer than two tuples
// carry weight, signalling that no interval can be given.
double avg_large_sample_half_width(std::span<const double> values, std::span<const double> degrees,
                                   size_t sampleSize, size_t populationSize, double confidence);

}  // namespace flexaq
