#include "flexaq/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flexaq {

namespace {

void check_confidence(double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0))
        throw InvalidConfidence("confidence must lie strictly between 0 and 1, got " +
                                format_double(confidence));
}

double fpc(size_t n, size_t populationSize) {
    if (populationSize <= 1 || n >= populationSize) return 0.0;
    return std::sqrt(static_cast<double>(populationSize - n) /
                     static_cast<double>(populationSize - 1));
}

}  // namespace

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw InvalidRange("quantile probability must lie strictly between 0 and 1, got " +
                           format_double(p));

    // Acklam's rational approximation, then one Halley step against erfc
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double pLow = 0.02425;

    double x;
    if (p < pLow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - pLow) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double sqrt2pi = 2.5066282746310002;
    double err = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    double u = err * sqrt2pi * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

double tuple_degree(std::span<const double> memberships, bool crispOk) {
    if (!crispOk) return 0.0;
    double d = 1.0;
    for (double m : memberships) d = std::min(d, m);
    return d;
}

double estimate_count(std::span<const double> degrees, size_t sampleSize, size_t populationSize) {
    if (sampleSize == 0) throw EmptySample("cannot estimate from zero sampled rows");
    double total = 0.0;
    for (double d : degrees) total += d;
    return total * static_cast<double>(populationSize) / static_cast<double>(sampleSize);
}

double estimate_sum(std::span<const double> degrees, std::span<const double> values,
                    size_t sampleSize, size_t populationSize) {
    if (sampleSize == 0) throw EmptySample("cannot estimate from zero sampled rows");
    double total = 0.0;
    for (size_t i = 0; i < degrees.size(); ++i) total += degrees[i] * values[i];
    return total * static_cast<double>(populationSize) / static_cast<double>(sampleSize);
}

double estimate_avg(std::span<const double> degrees, std::span<const double> values) {
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < degrees.size(); ++i) {
        num += degrees[i] * values[i];
        den += degrees[i];
    }
    if (den == 0.0) throw ZeroSatisfaction("no tuple satisfies the predicates");
    return num / den;
}

double conservative_half_width(double lo, double hi, size_t n, double confidence) {
    check_confidence(confidence);
    if (lo > hi)
        throw InvalidRange("range [" + format_double(lo) + ", " + format_double(hi) +
                           "] is inverted");
    if (n == 0) throw TooFewObservations("no observations to bound");
    return (hi - lo) * std::sqrt(std::log(2.0 / (1.0 - confidence)) /
                                 (2.0 * static_cast<double>(n)));
}

double conservative_half_width(std::span<const double> obs, double lo, double hi,
                               double confidence) {
    for (double v : obs)
        if (!(v >= lo && v <= hi))
            throw InvalidRange("observation " + format_double(v) + " escapes [" +
                               format_double(lo) + ", " + format_double(hi) + "]");
    return conservative_half_width(lo, hi, obs.size(), confidence);
}

double large_sample_half_width_from_moments(double sum, double sumSquares, size_t n,
                                            size_t populationSize, double confidence) {
    check_confidence(confidence);
    if (n < 2) throw TooFewObservations("need at least two observations for a variance");
    double nn = static_cast<double>(n);
    double variance = (sumSquares - sum * sum / nn) / (nn - 1.0);
    variance = std::max(variance, 0.0);
    double z = inverse_normal_cdf((1.0 + confidence) / 2.0);
    return z * std::sqrt(variance / nn) * fpc(n, populationSize);
}

double large_sample_half_width(std::span<const double> obs, size_t populationSize,
                               double confidence) {
    double sum = 0.0, sumSquares = 0.0;
    for (double v : obs) {
        sum += v;
        sumSquares += v * v;
    }
    return large_sample_half_width_from_moments(sum, sumSquares, obs.size(), populationSize,
                                                confidence);
}

double avg_large_sample_half_width(std::span<const double> values, std::span<const double> degrees,
                                   size_t sampleSize, size_t populationSize, double confidence) {
    check_confidence(confidence);
    if (sampleSize >= populationSize) return 0.0;
    double wsum = 0.0, mean = 0.0;
    size_t carriers = 0;
    for (size_t i = 0; i < degrees.size(); ++i) {
        if (degrees[i] <= 0.0) continue;
        ++carriers;
        wsum += degrees[i];
        mean += degrees[i] * values[i];
    }
    if (carriers < 2) return std::numeric_limits<double>::infinity();
    mean /= wsum;
    double spread = 0.0;
    for (size_t i = 0; i < degrees.size(); ++i) {
        if (degrees[i] <= 0.0) continue;
        double dev = values[i] - mean;
        spread += degrees[i] * dev * dev;
    }
    double nc = static_cast<double>(carriers);
    double variance = spread / wsum * nc / (nc - 1.0);
    double z = inverse_normal_cdf((1.0 + confidence) / 2.0);
    return z * std::sqrt(variance / nc) * fpc(sampleSize, populationSize);
}

}  // namespace flexaq
