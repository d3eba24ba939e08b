#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flexaq/estimator.hpp"
#include "flexaq/fca.hpp"
#include "flexaq/kb.hpp"
#include "flexaq/query.hpp"
#include "flexaq/sampler.hpp"

namespace flexaq {

// CSV with a header line. A column is numeric when every non-empty cell
// parses fully as a decimal; empty numeric cells become NaN. Throws
// RaggedRow (with line number) and EmptyFile.
Table ingest_csv(const std::filesystem::path& path, const std::string& tableName = "");

// Ingests every *.csv in dir (sorted by filename); table names are the file
// stems.
Database load_dir(const std::filesystem::path& dir);

Schema schema_of(const Database& db);

struct RunConfig {
    std::filesystem::path dataDir;
    std::filesystem::path kbPath;
    double sampleFraction = 0.1;
    double confidence = 0.95;
    IntervalKind intervalKind = IntervalKind::LargeSample;
    double alpha = 0.5;
    uint64_t seed = 42;
    std::string mode = "approx";
    std::string drivingTable;  // empty picks the first FROM table
};

struct ResultTable {
    std::vector<std::string> groupColumns;
    std::vector<GroupEstimate> rows;  // sorted by group key, aggregates in query order
    std::string mode;                 // "exact" | "approx"
    double elapsedMs = 0.0;
    size_t sampleSize = 0;
    size_t populationSize = 0;
    uint64_t seed = 0;

    // `group | estimate | satisfaction` columns, plus `confidence` and
    // `estimate ± halfwidth` in approximate mode
    std::string render() const;
};

// Everything reusable across runs of one query: resolved slots, join plan
// with prebuilt key indexes, and population metadata for interval ranges.
// Building one is untimed preparation, like a DBMS keeping its indexes.
struct PreparedQuery {
    const Database* db = nullptr;
    FlexibleQuery query;
    JoinPlan plan;

    struct AggSpec {
        AggKind kind = AggKind::Count;
        bool star = false;
        int slot = -1;
        std::string label;
        double lo = 0.0, hi = 0.0;  // population bounds of the value column
    };
    struct FuzzySpec {
        int slot = -1;
        TrapezoidalTerm term;
        std::string label;
    };
    struct CrispSpec {
        int slot = -1;
        Comparator op = Comparator::Eq;
        Value literal;
        std::string label;
    };

    std::vector<AggSpec> aggs;
    std::vector<FuzzySpec> fuzzy;
    std::vector<CrispSpec> crisp;
    std::vector<int> groupSlots;
    std::vector<std::string> groupNames;
    double fanoutBound = 1.0;  // upper bound on joined tuples per driving row
    size_t populationSize = 0;
};

// Resolves and plans q against db/kb. Throws InvariantViolation when
// validation is not clean.
PreparedQuery prepare(const FlexibleQuery& q, const Database& db, const KnowledgeBase& kb,
                      const std::string& drivingTable = "");

// Full scan over the complete join; the oracle for approximate mode. Timed
// from the start of the scan (preparation excluded).
ResultTable run_exact(const PreparedQuery& prep, double alpha);
ResultTable run_exact(const FlexibleQuery& q, const Database& db, const KnowledgeBase& kb,
                      double alpha = 0.5, const std::string& drivingTable = "");

// Sample, scale to a formal context, build the concept lattice, estimate per
// group. latticeDot, when given, receives the DOT rendering (built after the
// timed section).
ResultTable run_approximate(const PreparedQuery& prep, const ApproximateQuery& aq, double alpha,
                            uint64_t seed, std::string* latticeDot = nullptr);
ResultTable run_approximate(const ApproximateQuery& aq, const Database& db,
                            const KnowledgeBase& kb, const RunConfig& cfg,
                            std::string* latticeDot = nullptr);

struct BenchRow {
    size_t rows = 0;
    std::string mode;
    double fraction = 0.0;       // 0 for exact rows
    double medianElapsedMs = 0.0;
    double maxRelError = 0.0;    // against run_exact; 0 for exact rows
};

// Times q at each size and fraction. Non-empty sizes generate synthetic
// databases of that many patients; empty sizes measure db as-is. Produces
// one exact row plus one row per fraction for every size.
std::vector<BenchRow> benchmark(const FlexibleQuery& q, const Database& db,
                                const KnowledgeBase& kb, const std::vector<size_t>& sizes,
                                const std::vector<double>& fractions, size_t repetitions,
                                uint64_t seed, double alpha = 0.5,
                                const std::string& drivingTable = "");

std::string bench_csv(const std::vector<BenchRow>& report);

// Synthetic patient/death data. Death risk grows with alcohol use and falls
// with schooling, so fuzzy predicates on those columns correlate with death
// rows; 30% of patients get a death record.
Database synth_database(size_t rows, uint64_t seed);

// Writes synth_database(rows, seed) as Patient.csv and Death.csv in outDir;
// byte-identical for identical arguments.
void generate_fixture(size_t rows, uint64_t seed, const std::filesystem::path& outDir);

// Clusters every numeric column (or just `columns`, given as Table.column)
// into k linguistic terms. Term names follow size: {low, medium, high} for
// k=3 and so on.
KnowledgeBase build_kb(const Database& db, size_t k, uint64_t seed,
                       const std::vector<std::string>& columns = {});

}  // namespace flexaq
