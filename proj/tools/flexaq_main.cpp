#include "CLI11.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "flexaq/engine.hpp"

namespace {

using namespace flexaq;

// exit 2 marks a problem with the request itself (bad SQL, bad parameters);
// everything else that throws is a runtime failure and exits 3
int classify(const Error& e) {
    static const std::set<std::string> request{
        "SyntaxError",        "UnknownAggregate", "ParseError",
        "InvariantViolation", "InvalidConfidence", "InvalidSampleFraction",
        "InvalidRange",       "DisconnectedJoinGraph"};
    return request.count(e.code()) ? 2 : 3;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + path);
    out << text;
}

struct KbArgs {
    std::string data, out;
    size_t k = 3;
    uint64_t seed = 42;
    std::vector<std::string> columns;
};

struct QueryArgs {
    std::string data, kb, sql;
    std::string mode = "approx";
    double fraction = 0.1;
    double confidence = 0.95;
    std::string interval = "clt";
    double alpha = 0.5;
    uint64_t seed = 42;
    std::string exportLattice;
    std::string driving;
};

struct BenchArgs {
    std::string data, kb, sql, out;
    std::vector<size_t> sizes;
    std::vector<double> fractions{0.1};
    size_t reps = 5;
    uint64_t seed = 42;
    double alpha = 0.5;
    std::string driving;
};

struct FixtureArgs {
    size_t rows = 0;
    uint64_t seed = 42;
    std::string out;
};

int run_kb_build(const KbArgs& a) {
    Database db = load_dir(a.data);
    KnowledgeBase kb = build_kb(db, a.k, a.seed, a.columns);
    save_kb(kb, a.out);
    std::cout << "wrote " << kb.attributes.size() << " attributes to " << a.out
              << " (fingerprint " << kb.fingerprint << ")\n";
    return 0;
}

int run_query(const QueryArgs& a) {
    Database db = load_dir(a.data);
    KnowledgeBase kb = load_kb(a.kb);
    FlexibleQuery q = parse_query(a.sql);

    std::vector<Diagnostic> diags = validate(q, kb, schema_of(db));
    if (!diags.empty()) {
        for (const auto& d : diags) std::cerr << d.to_string() << "\n";
        return 2;
    }

    ResultTable rt;
    std::string dot;
    if (a.mode == "exact") {
        rt = run_exact(q, db, kb, a.alpha, a.driving);
    } else {
        IntervalKind kind = a.interval == "conservative" ? IntervalKind::Conservative
                                                         : IntervalKind::LargeSample;
        ApproximateQuery aq = rewrite_to_approximate(q, a.confidence, kind, a.fraction);
        PreparedQuery prep = prepare(q, db, kb, a.driving);
        rt = run_approximate(prep, aq, a.alpha, a.seed,
                             a.exportLattice.empty() ? nullptr : &dot);
        if (!a.exportLattice.empty()) write_text(a.exportLattice, dot);
    }

    std::cout << rt.render();
    std::cout << "mode=" << rt.mode << " n=" << rt.sampleSize << " N=" << rt.populationSize;
    if (rt.mode != "exact") std::cout << " seed=" << rt.seed;
    std::cout << " elapsed=" << format_double(rt.elapsedMs) << "ms\n";
    return 0;
}

int run_bench(const BenchArgs& a) {
    Database db = load_dir(a.data);
    KnowledgeBase kb = load_kb(a.kb);
    FlexibleQuery q = parse_query(a.sql);

    std::vector<Diagnostic> diags = validate(q, kb, schema_of(db));
    if (!diags.empty()) {
        for (const auto& d : diags) std::cerr << d.to_string() << "\n";
        return 2;
    }

    std::vector<BenchRow> report =
        benchmark(q, db, kb, a.sizes, a.fractions, a.reps, a.seed, a.alpha, a.driving);
    std::string csv = bench_csv(report);
    if (a.out.empty()) {
        std::cout << csv;
    } else {
        write_text(a.out, csv);
        std::cout << "wrote " << report.size() << " rows to " << a.out << "\n";
    }
    return 0;
}

int run_fixture(const FixtureArgs& a) {
    generate_fixture(a.rows, a.seed, a.out);
    std::cout << "wrote Patient.csv and Death.csv for " << a.rows << " patients to " << a.out
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"approximate fuzzy aggregation over relational data"};
    app.require_subcommand(1);

    KbArgs kbArgs;
    CLI::App* kb = app.add_subcommand("kb", "knowledge-base maintenance");
    kb->require_subcommand(1);
    CLI::App* kbBuild = kb->add_subcommand("build", "cluster numeric columns into terms");
    kbBuild->add_option("--data", kbArgs.data, "directory of CSV files")->required();
    kbBuild->add_option("--out", kbArgs.out, "output KB path")->required();
    kbBuild->add_option("--k", kbArgs.k, "terms per attribute");
    kbBuild->add_option("--seed", kbArgs.seed, "clustering seed");
    kbBuild->add_option("--columns", kbArgs.columns, "restrict to Table.column names")
        ->delimiter(',');

    QueryArgs qArgs;
    CLI::App* query = app.add_subcommand("query", "run a flexible query");
    query->add_option("--data", qArgs.data, "directory of CSV files")->required();
    query->add_option("--kb", qArgs.kb, "knowledge-base path")->required();
    query->add_option("--sql", qArgs.sql, "query text")->required();
    query->add_option("--mode", qArgs.mode, "exact or approx")
        ->check(CLI::IsMember({"exact", "approx"}));
    query->add_option("--fraction", qArgs.fraction, "sample fraction in (0,1]");
    query->add_option("--confidence", qArgs.confidence, "confidence level in (0,1)");
    query->add_option("--interval", qArgs.interval, "clt or conservative")
        ->check(CLI::IsMember({"clt", "conservative"}));
    query->add_option("--alpha", qArgs.alpha, "membership cut in (0,1]");
    query->add_option("--seed", qArgs.seed, "sampling seed");
    query->add_option("--export-lattice", qArgs.exportLattice, "write concept lattice DOT here");
    query->add_option("--driving", qArgs.driving, "driving table (default: first FROM table)");

    BenchArgs bArgs;
    CLI::App* bench = app.add_subcommand("bench", "compare exact and approximate runs");
    bench->add_option("--data", bArgs.data, "directory of CSV files")->required();
    bench->add_option("--kb", bArgs.kb, "knowledge-base path")->required();
    bench->add_option("--sql", bArgs.sql, "query text")->required();
    bench->add_option("--sizes", bArgs.sizes, "synthetic patient counts")->delimiter(',');
    bench->add_option("--fractions", bArgs.fractions, "sample fractions")->delimiter(',');
    bench->add_option("--reps", bArgs.reps, "repetitions per measurement");
    bench->add_option("--out", bArgs.out, "CSV report path (default: stdout)");
    bench->add_option("--seed", bArgs.seed, "base seed");
    bench->add_option("--alpha", bArgs.alpha, "membership cut in (0,1]");
    bench->add_option("--driving", bArgs.driving, "driving table");

    FixtureArgs fArgs;
    CLI::App* fixture = app.add_subcommand("fixture", "generate synthetic patient data");
    fixture->add_option("--rows", fArgs.rows, "patient count")->required();
    fixture->add_option("--seed", fArgs.seed, "generator seed");
    fixture->add_option("--out", fArgs.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (kbBuild->parsed()) return run_kb_build(kbArgs);
        if (query->parsed()) return run_query(qArgs);
        if (bench->parsed()) return run_bench(bArgs);
        if (fixture->parsed()) return run_fixture(fArgs);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return classify(e);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 3;
    }
    return 0;
}
