#include "flexaq/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace flexaq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    for (;;) {
        size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

bool parses_as_number(const std::string& cell) {
    if (cell.empty()) return false;
    char* end = nullptr;
    std::strtod(cell.c_str(), &end);
    return end == cell.c_str() + cell.size();
}

}  // namespace

Table ingest_csv(const std::filesystem::path& path, const std::string& tableName) {
    std::string text = read_file(path);

    std::vector<std::pair<size_t, std::string>> lines;  // (line number, content)
    {
        size_t lineNo = 0, start = 0;
        while (start <= text.size()) {
            size_t nl = text.find('\n', start);
            std::string line = text.substr(
                start, nl == std::string::npos ? std::string::npos : nl - start);
            ++lineNo;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) lines.emplace_back(lineNo, std::move(line));
            if (nl == std::string::npos) break;
            start = nl + 1;
        }
    }
    if (lines.empty()) throw EmptyFile(path.string() + " has no header line");

    Table table;
    table.name = tableName.empty() ? path.stem().string() : tableName;
    std::vector<std::string> header = split_fields(lines[0].second);
    size_t width = header.size();

    // first pass: arity check and type inference
    std::vector<bool> numeric(width, true);
    std::vector<bool> nonEmpty(width, false);
    std::vector<std::vector<std::string>> rawRows;
    rawRows.reserve(lines.size() - 1);
    for (size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> fields = split_fields(lines[i].second);
        if (fields.size() != width)
            throw RaggedRow(path.string() + " line " + std::to_string(lines[i].first) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(width));
        for (size_t c = 0; c < width; ++c) {
            if (fields[c].empty()) continue;
            nonEmpty[c] = true;
            if (numeric[c] && !parses_as_number(fields[c])) numeric[c] = false;
        }
        rawRows.push_back(std::move(fields));
    }

    table.rowCount = rawRows.size();
    for (size_t c = 0; c < width; ++c) {
        Column col;
        col.name = header[c];
        col.numeric = numeric[c] && nonEmpty[c];
        if (col.numeric) {
            col.nums.reserve(rawRows.size());
            for (const auto& row : rawRows)
                col.nums.push_back(row[c].empty() ? kNaN : std::strtod(row[c].c_str(), nullptr));
        } else {
            col.texts.reserve(rawRows.size());
            for (auto& row : rawRows) col.texts.push_back(std::move(row[c]));
        }
        table.columns.push_back(std::move(col));
    }
    return table;
}

Database load_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw Error("IoError", dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    Database db;
    for (const auto& f : files) db.push_back(ingest_csv(f));
    return db;
}

Schema schema_of(const Database& db) {
    Schema schema;
    for (const auto& t : db) {
        SchemaTable st;
        st.name = t.name;
        for (const auto& c : t.columns) st.columns.push_back({c.name, c.numeric});
        schema.push_back(std::move(st));
    }
    return schema;
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw InvalidRange("alpha must lie in (0,1], got " + format_double(alpha));
}

bool crisp_holds(const Value& v, Comparator op, const Value& literal) {
    if (v.index() != literal.index()) return false;
    if (is_number(v)) {
        double a = as_number(v), b = as_number(literal);
        if (std::isnan(a) || std::isnan(b)) return false;
        switch (op) {
            case Comparator::Eq: return a == b;
            case Comparator::Ne: return a != b;
            case Comparator::Lt: return a < b;
            case Comparator::Le: return a <= b;
            case Comparator::Gt: return a > b;
            case Comparator::Ge: return a >= b;
        }
    }
    int c = compare_values(v, literal);
    switch (op) {
        case Comparator::Eq: return c == 0;
        case Comparator::Ne: return c != 0;
        case Comparator::Lt: return c < 0;
        case Comparator::Le: return c <= 0;
        case Comparator::Gt: return c > 0;
        case Comparator::Ge: return c >= 0;
    }
    return false;
}

std::string literal_to_string(const Value& v) {
    if (is_number(v)) return format_double(as_number(v));
    return "'" + as_text(v) + "'";
}

// reusable per-tuple evaluation state shared by both execution modes
struct TupleEval {
    std::vector<double> mu;     // one membership per fuzzy predicate
    std::vector<uint8_t> sat;   // one flag per crisp predicate
    std::vector<Value> key;     // group-by values
    bool qualifies = false;     // all crisp hold and all memberships clear alpha
    double degree = 0.0;        // min membership when qualifying, else 0

    explicit TupleEval(const PreparedQuery& prep)
        : mu(prep.fuzzy.size()), sat(prep.crisp.size()), key(prep.groupSlots.size()) {}

    void eval(const PreparedQuery& prep, const std::vector<Value>& tuple, double alpha) {
        bool crispOk = true;
        for (size_t i = 0; i < prep.crisp.size(); ++i) {
            const auto& spec = prep.crisp[i];
            bool ok = crisp_holds(tuple[static_cast<size_t>(spec.slot)], spec.op, spec.literal);
            sat[i] = ok ? 1 : 0;
            crispOk = crispOk && ok;
        }
        qualifies = crispOk;
        double d = 1.0;
        for (size_t i = 0; i < prep.fuzzy.size(); ++i) {
            const auto& spec = prep.fuzzy[i];
            double m = membership(spec.term, as_number(tuple[static_cast<size_t>(spec.slot)]));
            mu[i] = m;
            if (m < alpha)
                qualifies = false;
            else
                d = std::min(d, m);
        }
        degree = qualifies ? d : 0.0;
        for (size_t i = 0; i < prep.groupSlots.size(); ++i)
            key[i] = tuple[static_cast<size_t>(prep.groupSlots[i])];
    }
};

}  // namespace

PreparedQuery prepare(const FlexibleQuery& q, const Database& db, const KnowledgeBase& kb,
                      const std::string& drivingTable) {
    Schema schema = schema_of(db);
    std::vector<Diagnostic> diags = validate(q, kb, schema);
    if (!diags.empty()) {
        std::string msg = "query failed validation:";
        for (const auto& d : diags) msg += "\n  " + d.to_string();
        throw InvariantViolation(msg);
    }

    PreparedQuery prep;
    prep.db = &db;
    prep.query = q;

    auto resolve = [&](const ColumnRef& ref) -> std::pair<std::string, std::string> {
        if (!ref.table.empty()) return {ref.table, ref.column};
        for (const auto& tname : q.tables) {
            const Table* t = find_table(db, tname);
            if (t && t->find_column(ref.column)) return {tname, ref.column};
        }
        throw InvariantViolation("column " + ref.column + " did not resolve");
    };

    std::vector<std::pair<std::string, std::string>> columns;
    for (const auto& a : q.aggregates)
        if (!a.star) columns.push_back(resolve(a.column));
    for (const auto& p : q.fuzzyPredicates) columns.push_back(resolve(p.column));
    for (const auto& p : q.crispPredicates) columns.push_back(resolve(p.column));
    for (const auto& g : q.groupBy) columns.push_back(resolve(g));

    std::string driving = drivingTable.empty() ? q.tables.front() : drivingTable;
    if (std::find(q.tables.begin(), q.tables.end(), driving) == q.tables.end())
        throw InvariantViolation("driving table " + driving + " is not in the FROM clause");

    prep.plan = plan_join(db, q.tables, q.joins, columns, driving);
    prep.populationSize = prep.plan.driving->rowCount;

    auto slot_of = [&](const ColumnRef& ref) {
        auto [t, c] = resolve(ref);
        ColumnRef qualified;
        qualified.table = t;
        qualified.column = c;
        int s = prep.plan.layout.find(qualified);
        if (s < 0) throw InvariantViolation("no layout slot for " + t + "." + c);
        return s;
    };

    for (const auto& a : q.aggregates) {
        PreparedQuery::AggSpec spec;
        spec.kind = a.kind;
        spec.star = a.star;
        spec.label = a.to_string();
        if (!a.star) {
            spec.slot = slot_of(a.column);
            const Column* col = prep.plan.layout.slots[static_cast<size_t>(spec.slot)].source;
            if (col->numeric) {
                double lo = kInf, hi = -kInf;
                for (double v : col->nums) {
                    if (std::isnan(v)) continue;
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                if (lo <= hi) {
                    spec.lo = lo;
                    spec.hi = hi;
                }
            }
        }
        prep.aggs.push_back(std::move(spec));
    }

    for (const auto& p : q.fuzzyPredicates) {
        auto [t, c] = resolve(p.column);
        const RelaxableAttribute* attr = kb.find(t, c);
        const TrapezoidalTerm* term = attr ? attr->find_term(p.term) : nullptr;
        if (!term) throw InvariantViolation("term " + p.term + " missing for " + t + "." + c);
        prep.fuzzy.push_back({slot_of(p.column), *term, p.column.to_string() + " IS " + p.term});
    }

    for (const auto& p : q.crispPredicates)
        prep.crisp.push_back({slot_of(p.column), p.op, p.literal,
                              p.column.to_string() + " " + to_string(p.op) + " " +
                                  literal_to_string(p.literal)});

    for (const auto& g : q.groupBy) {
        prep.groupSlots.push_back(slot_of(g));
        prep.groupNames.push_back(g.to_string());
    }

    for (const auto& step : prep.plan.steps) {
        size_t widest = 0;
        for (const auto& [key, rows] : step.index) widest = std::max(widest, rows.size());
        prep.fanoutBound *= static_cast<double>(widest);
    }
    return prep;
}

ResultTable run_exact(const PreparedQuery& prep, double alpha) {
    check_alpha(alpha);

    ResultTable rt;
    rt.mode = "exact";
    rt.populationSize = prep.populationSize;
    rt.sampleSize = prep.populationSize;
    rt.groupColumns = prep.groupNames;

    struct Acc {
        size_t tuples = 0;
        size_t qualifying = 0;
        double sumD = 0.0;
        std::vector<double> sumDV;  // per aggregate, degree-weighted value sum
        std::vector<double> denD;   // per aggregate, degree sum over non-NaN values
    };
    std::map<std::vector<Value>, Acc, ValueVectorLess> groups;

    TupleEval ev(prep);
    auto start = Clock::now();

    std::vector<uint32_t> all(prep.populationSize);
    std::iota(all.begin(), all.end(), 0u);
    for_each_joined(prep.plan, all, [&](uint32_t, const std::vector<Value>& tuple) {
        ev.eval(prep, tuple, alpha);
        auto it = groups.find(ev.key);
        if (it == groups.end()) {
            Acc fresh;
            fresh.sumDV.assign(prep.aggs.size(), 0.0);
            fresh.denD.assign(prep.aggs.size(), 0.0);
            it = groups.emplace(ev.key, std::move(fresh)).first;
        }
        Acc& acc = it->second;
        acc.tuples++;
        if (!ev.qualifies) return;
        acc.qualifying++;
        acc.sumD += ev.degree;
        for (size_t ai = 0; ai < prep.aggs.size(); ++ai) {
            const auto& spec = prep.aggs[ai];
            if (spec.kind == AggKind::Count) continue;
            double v = as_number(tuple[static_cast<size_t>(spec.slot)]);
            if (std::isnan(v)) continue;
            acc.sumDV[ai] += ev.degree * v;
            acc.denD[ai] += ev.degree;
        }
    });

    for (const auto& [key, acc] : groups) {
        for (size_t ai = 0; ai < prep.aggs.size(); ++ai) {
            const auto& spec = prep.aggs[ai];
            GroupEstimate ge;
            ge.groupKey = key;
            ge.kind = spec.kind;
            ge.label = spec.label;
            ge.satisfaction = acc.tuples ? acc.sumD / static_cast<double>(acc.tuples) : 0.0;
            ge.confidence = kNaN;
            ge.halfWidth = kNaN;
            ge.contributing = acc.qualifying;
            ge.tupleCount = acc.tuples;
            ge.populationSize = prep.populationSize;
            switch (spec.kind) {
                case AggKind::Count: ge.estimate = acc.sumD; break;
                case AggKind::Sum: ge.estimate = acc.sumDV[ai]; break;
                case AggKind::Avg:
                    ge.estimate = acc.denD[ai] > 0.0 ? acc.sumDV[ai] / acc.denD[ai] : kNaN;
                    break;
            }
            rt.rows.push_back(std::move(ge));
        }
    }
    rt.elapsedMs = ms_since(start);
    return rt;
}

ResultTable run_exact(const FlexibleQuery& q, const Database& db, const KnowledgeBase& kb,
                      double alpha, const std::string& drivingTable) {
    return run_exact(prepare(q, db, kb, drivingTable), alpha);
}

ResultTable run_approximate(const PreparedQuery& prep, const ApproximateQuery& aq, double alpha,
                            uint64_t seed, std::string* latticeDot) {
    check_alpha(alpha);
    if (!(aq.confidence > 0.0 && aq.confidence < 1.0))
        throw InvalidConfidence("confidence must lie strictly between 0 and 1, got " +
                                format_double(aq.confidence));
    if (!(aq.sampleFraction > 0.0 && aq.sampleFraction <= 1.0))
        throw InvalidSampleFraction("sample fraction must lie in (0,1], got " +
                                    format_double(aq.sampleFraction));

    size_t N = prep.populationSize;
    size_t n = N == 0 ? 0
                      : std::clamp<size_t>(
                            static_cast<size_t>(std::llround(aq.sampleFraction *
                                                             static_cast<double>(N))),
                            1, N);

    ResultTable rt;
    rt.mode = "approx";
    rt.populationSize = N;
    rt.sampleSize = n;
    rt.seed = seed;
    rt.groupColumns = prep.groupNames;

    std::vector<std::string> fuzzyNames, crispNames;
    for (const auto& f : prep.fuzzy) fuzzyNames.push_back(f.label);
    for (const auto& c : prep.crisp) crispNames.push_back(c.label);

    size_t aggCount = prep.aggs.size();

    TupleEval ev(prep);
    auto start = Clock::now();

    std::vector<uint32_t> sampled = sample_indices(N, n, seed);

    std::vector<uint32_t> tupleDriving;
    std::vector<double> mu;
    std::vector<uint8_t> sat;
    std::vector<std::vector<Value>> groupTuples;
    std::vector<std::vector<double>> aggValues(aggCount);

    for_each_joined(prep.plan, sampled, [&](uint32_t drivingRow, const std::vector<Value>& tuple) {
        ev.eval(prep, tuple, alpha);
        tupleDriving.push_back(drivingRow);
        mu.insert(mu.end(), ev.mu.begin(), ev.mu.end());
        sat.insert(sat.end(), ev.sat.begin(), ev.sat.end());
        groupTuples.push_back(ev.key);
        for (size_t ai = 0; ai < aggCount; ++ai)
            if (prep.aggs[ai].kind != AggKind::Count)
                aggValues[ai].push_back(
                    as_number(tuple[static_cast<size_t>(prep.aggs[ai].slot)]));
    });

    ScaledContext sc;
    ConceptLattice lat;
    try {
        sc = scale(tupleDriving.size(), mu, fuzzyNames, sat, crispNames, groupTuples,
                   prep.groupNames, alpha);
        lat = build_lattice(sc.ctx);
    } catch (const ContextTooLarge& e) {
        throw ContextTooLarge(std::string(e.what()) +
                              "; lower the sample fraction to shrink the context");
    }
    std::vector<Bitset> extents = group_extents(sc, lat);

    std::vector<size_t> groupTupleCount(sc.groupKeys.size(), 0);
    for (uint32_t g : sc.objectGroup) groupTupleCount[g]++;

    double scaleFactor = n ? static_cast<double>(N) / static_cast<double>(n) : 0.0;
    double dN = static_cast<double>(N);

    std::vector<size_t> objs;
    std::vector<double> avgVals, avgDegs;

    for (size_t g = 0; g < sc.groupKeys.size(); ++g) {
        objs.clear();
        extents[g].for_each_set([&](size_t o) { objs.push_back(o); });
        size_t ng = objs.size();

        double sumD = 0.0;
        for (size_t o : objs) sumD += sc.degree(o);
        double satisfaction =
            groupTupleCount[g] ? sumD / static_cast<double>(groupTupleCount[g]) : 0.0;

        for (size_t ai = 0; ai < aggCount; ++ai) {
            const auto& spec = prep.aggs[ai];
            GroupEstimate ge;
            ge.groupKey = sc.groupKeys[g];
            ge.kind = spec.kind;
            ge.label = spec.label;
            ge.satisfaction = satisfaction;
            ge.confidence = aq.confidence;
            ge.contributing = ng;
            ge.tupleCount = groupTupleCount[g];
            ge.populationSize = N;

            // per-driving-row observation moments feed the CLT interval; the
            // estimate itself comes from the plain per-tuple sum so that an
            // exhaustive sample reproduces the exact scan to the last bit
            double est = 0.0, s1 = 0.0, s2 = 0.0, rowObs = 0.0, avgDen = 0.0;
            uint32_t curRow = 0;
            bool open = false;
            auto flush_row = [&]() {
                if (!open) return;
                s1 += rowObs;
                s2 += rowObs * rowObs;
                rowObs = 0.0;
            };
            if (spec.kind == AggKind::Avg) {
                avgVals.clear();
                avgDegs.clear();
            }
            for (size_t o : objs) {
                double d = sc.degree(o);
                double contribution;
                if (spec.kind == AggKind::Count) {
                    contribution = d;
                } else {
                    double v = aggValues[ai][o];
                    if (std::isnan(v)) continue;
                    contribution = d * v;
                }
                if (spec.kind == AggKind::Avg) {
                    avgVals.push_back(aggValues[ai][o]);
                    avgDegs.push_back(d);
                    avgDen += d;
                    est += contribution;
                    continue;
                }
                est += contribution;
                if (!open || tupleDriving[o] != curRow) {
                    flush_row();
                    curRow = tupleDriving[o];
                    open = true;
                }
                rowObs += contribution;
            }
            flush_row();

            switch (spec.kind) {
                case AggKind::Count:
                case AggKind::Sum: {
                    ge.estimate = est * scaleFactor;
                    double lo = 0.0, hi = prep.fanoutBound;
                    if (spec.kind == AggKind::Sum) {
                        lo = prep.fanoutBound * std::min(0.0, spec.lo);
                        hi = prep.fanoutBound * std::max(0.0, spec.hi);
                    }
                    try {
                        if (aq.intervalKind == IntervalKind::Conservative)
                            ge.halfWidth = dN * conservative_half_width(lo, hi, n, aq.confidence);
                        else
                            ge.halfWidth = dN * large_sample_half_width_from_moments(
                                                    s1, s2, n, N, aq.confidence);
                    } catch (const TooFewObservations&) {
                        ge.halfWidth = kInf;
                    }
                    break;
                }
                case AggKind::Avg: {
                    ge.estimate = avgDen > 0.0 ? est / avgDen : kNaN;
                    try {
                        if (aq.intervalKind == IntervalKind::Conservative)
                            ge.halfWidth = avgVals.empty()
                                               ? kInf
                                               : conservative_half_width(
                                                     spec.lo, spec.hi, avgVals.size(),
                                                     aq.confidence);
                        else
                            ge.halfWidth = avg_large_sample_half_width(avgVals, avgDegs, n, N,
                                                                       aq.confidence);
                    } catch (const TooFewObservations&) {
                        ge.halfWidth = kInf;
                    }
                    break;
                }
            }
            rt.rows.push_back(std::move(ge));
        }
    }
    rt.elapsedMs = ms_since(start);

    if (latticeDot) *latticeDot = lattice_to_dot(lat, sc.ctx.attributeNames);
    return rt;
}

ResultTable run_approximate(const ApproximateQuery& aq, const Database& db,
                            const KnowledgeBase& kb, const RunConfig& cfg,
                            std::string* latticeDot) {
    PreparedQuery prep = prepare(aq.base, db, kb, cfg.drivingTable);
    return run_approximate(prep, aq, cfg.alpha, cfg.seed, latticeDot);
}

namespace {

std::string fmt_g(double x) {
    if (std::isnan(x)) return "n/a";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    return buf;
}

}  // namespace

std::string ResultTable::render() const {
    bool approx = mode != "exact";
    std::set<std::string> labels;
    for (const auto& r : rows) labels.insert(r.label);
    bool multiAgg = labels.size() > 1;

    std::vector<std::string> header;
    header.push_back(groupColumns.empty() ? "group" : [&] {
        std::string h;
        for (size_t i = 0; i < groupColumns.size(); ++i) {
            if (i) h += ", ";
            h += groupColumns[i];
        }
        return h;
    }());
    if (multiAgg) header.push_back("aggregate");
    header.push_back("estimate");
    header.push_back("satisfaction");
    if (approx) {
        header.push_back("confidence");
        header.push_back("interval");
    }

    std::vector<std::vector<std::string>> cells;
    cells.push_back(header);
    for (const auto& r : rows) {
        std::vector<std::string> row;
        std::string key;
        for (size_t i = 0; i < r.groupKey.size(); ++i) {
            if (i) key += ", ";
            key += value_to_string(r.groupKey[i]);
        }
        row.push_back(key.empty() ? "all" : key);
        if (multiAgg) row.push_back(r.label);
        row.push_back(fmt_g(r.estimate));
        row.push_back(fmt_g(r.satisfaction));
        if (approx) {
            row.push_back(fmt_g(r.confidence));
            if (std::isinf(r.halfWidth) || std::isnan(r.estimate))
                row.push_back("n/a");
            else
                row.push_back(fmt_g(r.estimate) + " ± " + fmt_g(r.halfWidth));
        }
        cells.push_back(std::move(row));
    }

    std::vector<size_t> widths(cells[0].size(), 0);
    for (const auto& row : cells)
        for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());

    std::string out;
    for (const auto& row : cells) {
        for (size_t c = 0; c < row.size(); ++c) {
            if (c) out += " | ";
            out += row[c];
            if (c + 1 < row.size()) out.append(widths[c] - row[c].size(), ' ');
        }
        out += "\n";
    }
    return out;
}

}  // namespace flexaq
