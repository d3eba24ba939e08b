#include "flexaq/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace flexaq {

namespace {

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    size_t n = xs.size();
    if (n == 0) return 0.0;
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

using EstimateMap = std::map<std::vector<Value>, std::map<std::string, double>, ValueVectorLess>;

EstimateMap estimate_map(const ResultTable& rt) {
    EstimateMap m;
    for (const auto& r : rt.rows) m[r.groupKey][r.label] = r.estimate;
    return m;
}

// worst relative deviation of approx from exact over every group and
// aggregate; a group the sample missed counts as a full miss
double max_rel_error(const EstimateMap& exact, const ResultTable& approx) {
    EstimateMap got = estimate_map(approx);
    double worst = 0.0;
    for (const auto& [key, byLabel] : exact) {
        auto g = got.find(key);
        for (const auto& [label, e] : byLabel) {
            double err;
            const double* a = nullptr;
            if (g != got.end()) {
                auto it = g->second.find(label);
                if (it != g->second.end()) a = &it->second;
            }
            if (!a) {
                err = 1.0;
            } else if (std::isnan(e)) {
                err = std::isnan(*a) ? 0.0 : 1.0;
            } else if (e == 0.0) {
                err = *a == 0.0 ? 0.0 : 1.0;
            } else {
                err = std::abs(*a - e) / std::abs(e);
            }
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace

std::vector<BenchRow> benchmark(const FlexibleQuery& q, const Database& db,
                                const KnowledgeBase& kb, const std::vector<size_t>& sizes,
                                const std::vector<double>& fractions, size_t repetitions,
                                uint64_t seed, double alpha, const std::string& drivingTable) {
    if (fractions.empty()) throw InvalidRange("at least one sample fraction is required");
    if (repetitions == 0) throw InvalidRange("repetitions must be positive");

    std::vector<BenchRow> report;
    size_t points = sizes.empty() ? 1 : sizes.size();

    for (size_t si = 0; si < points; ++si) {
        Database generated;
        const Database* target = &db;
        if (!sizes.empty()) {
            generated = synth_database(sizes[si], seed * 1000003 + sizes[si]);
            target = &generated;
        }
        PreparedQuery prep = prepare(q, *target, kb, drivingTable);
        size_t rows = sizes.empty() ? prep.populationSize : sizes[si];

        std::vector<double> elapsed;
        ResultTable exact;
        for (size_t r = 0; r < repetitions; ++r) {
            ResultTable rt = run_exact(prep, alpha);
            elapsed.push_back(rt.elapsedMs);
            if (r == 0) exact = std::move(rt);
        }
        report.push_back({rows, "exact", 0.0, median(std::move(elapsed)), 0.0});

        EstimateMap oracle = estimate_map(exact);
        for (double f : fractions) {
            ApproximateQuery aq =
                rewrite_to_approximate(q, 0.95, IntervalKind::LargeSample, f);
            std::vector<double> times;
            double worst = 0.0;
            for (size_t r = 0; r < repetitions; ++r) {
                ResultTable rt = run_approximate(prep, aq, alpha, seed + r);
                times.push_back(rt.elapsedMs);
                worst = std::max(worst, max_rel_error(oracle, rt));
            }
            report.push_back({rows, "approx", f, median(std::move(times)), worst});
        }
    }
    return report;
}

std::string bench_csv(const std::vector<BenchRow>& report) {
    std::string out = "rows,mode,fraction,median_elapsed_ms,max_rel_error\n";
    for (const auto& r : report) {
        out += std::to_string(r.rows);
        out += ',';
        out += r.mode;
        out += ',';
        if (r.mode != "exact") out += format_double(r.fraction);
        out += ',';
        out += format_double(r.medianElapsedMs);
        out += ',';
        out += format_double(r.maxRelError);
        out += '\n';
    }
    return out;
}

}  // namespace flexaq
