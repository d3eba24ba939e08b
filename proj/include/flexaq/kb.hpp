#pragma once

#include "flexaq/common.hpp"

#include <string>
#include <vector>

namespace flexaq {

// One linguistic term: trapezoid with support [a,d] and plateau [b,c].
struct TrapezoidalTerm {
    std::string name;
    double a = 0, b = 0, c = 0, d = 0;

    bool operator==(const TrapezoidalTerm&) const = default;
};

// Piecewise-linear membership: 0 outside [a,d], 1 on [b,c], linear ramps.
double membership(const TrapezoidalTerm& t, double x);

// A column that carries linguistic terms. Terms are kept sorted by
// plateau start and must jointly cover the observed value domain.
struct RelaxableAttribute {
    std::string table;
    std::string column;
    std::vector<TrapezoidalTerm> terms;

    const TrapezoidalTerm* find_term(const std::string& name) const;
    std::string qualified_name() const { return table + "." + column; }

    bool operator==(const RelaxableAttribute&) const = default;
};

struct KnowledgeBase {
    std::vector<RelaxableAttribute> attributes;  // sorted by (table, column), unique
    std::string fingerprint = "0";

    const RelaxableAttribute* find(const std::string& table, const std::string& column) const;
    // all attributes whose column name matches, any table
    std::vector<const RelaxableAttribute*> find_by_column(const std::string& column) const;
    void add(RelaxableAttribute attr);  // InvariantViolation on duplicate or bad terms

    bool operator==(const KnowledgeBase&) const = default;
};

// Unsupervised 1-D partition of a column into k linguistic terms:
// seeded k-means (quantile init, <=50 Lloyd iterations), then a trapezoid
// per cluster. Plateau = mean +/- stddev clipped to the cluster range;
// ramps reach the neighbouring plateau, outermost ramps reach the observed
// min/max (padded just past them so the extremes keep nonzero membership).
// Deterministic for fixed (values, k, seed) and invariant under permutation
// of the input.
std::vector<TrapezoidalTerm> build_partition(std::vector<double> values, int k, uint64_t seed);

// throws InvariantViolation naming the attribute when terms do not cover
void check_coverage(const RelaxableAttribute& attr, const std::vector<double>& values);

// Line-oriented KB file: header "kb v1", optional "fingerprint <hex>",
// then "attr <table>.<column>" blocks with "term <name> <a> <b> <c> <d>"
// lines. '#' starts a comment, blank lines are ignored.
KnowledgeBase parse_kb(const std::string& text);
std::string format_kb(const KnowledgeBase& kb);
KnowledgeBase load_kb(const std::string& path);
void save_kb(const KnowledgeBase& kb, const std::string& path);

}  // namespace flexaq
