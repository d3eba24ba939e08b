#include "flexaq/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flexaq {

Value Column::value_at(size_t row) const {
    if (numeric) return Value{nums[row]};
    return Value{texts[row]};
}

const Column* Table::find_column(const std::string& column) const {
    for (const auto& c : columns)
        if (c.name == column) return &c;
    return nullptr;
}

const Table* find_table(const Database& db, const std::string& name) {
    for (const auto& t : db)
        if (t.name == name) return &t;
    return nullptr;
}

std::vector<uint32_t> sample_indices(size_t populationSize, size_t sampleSize, uint64_t seed) {
    if (sampleSize > populationSize)
        throw SampleTooLarge("asked for " + std::to_string(sampleSize) + " of " +
                             std::to_string(populationSize) + " rows");
    std::vector<uint32_t> pool(populationSize);
    std::iota(pool.begin(), pool.end(), 0u);
    Rng rng(seed);
    for (size_t i = 0; i < sampleSize; ++i) {
        size_t j = i + static_cast<size_t>(rng.below(populationSize - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(sampleSize);
    std::sort(pool.begin(), pool.end());
    return pool;
}

int JoinedLayout::find(const ColumnRef& ref) const {
    for (size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].column != ref.column) continue;
        if (ref.table.empty() || slots[i].table == ref.table) return static_cast<int>(i);
    }
    return -1;
}

namespace {

// Resolves a possibly bare column reference against the attached tables.
std::pair<std::string, std::string> qualify(const Database& db,
                                            const std::vector<std::string>& tables,
                                            const ColumnRef& ref) {
    if (!ref.table.empty()) return {ref.table, ref.column};
    for (const auto& tname : tables) {
        const Table* t = find_table(db, tname);
        if (t && t->find_column(ref.column)) return {tname, ref.column};
    }
    throw InvariantViolation("unresolved column " + ref.column + " in join plan");
}

KeyIndex build_key_index(const Table& table, const std::string& column) {
    const Column* col = table.find_column(column);
    if (!col) throw InvariantViolation("join key " + table.name + "." + column + " missing");
    KeyIndex index;
    index.reserve(table.rowCount);
    for (size_t row = 0; row < table.rowCount; ++row) {
        if (col->numeric && std::isnan(col->nums[row])) continue;
        index[col->value_at(row)].push_back(static_cast<uint32_t>(row));
    }
    return index;
}

}  // namespace

JoinPlan plan_join(const Database& db, const std::vector<std::string>& tables,
                   const std::vector<JoinPredicate>& joins,
                   const std::vector<std::pair<std::string, std::string>>& columns,
                   const std::string& drivingTable) {
    JoinPlan plan;
    plan.driving = find_table(db, drivingTable);
    if (!plan.driving) throw InvariantViolation("driving table " + drivingTable + " missing");

    // table name -> ordinal in the probe chain
    std::unordered_map<std::string, size_t> ordinal;
    ordinal[drivingTable] = 0;

    struct PendingJoin {
        std::pair<std::string, std::string> left, right;
        bool planned = false;
    };
    std::vector<PendingJoin> pending;
    for (const auto& j : joins)
        pending.push_back({qualify(db, tables, j.left), qualify(db, tables, j.right), false});

    struct PlannedStep {
        std::string table;
        std::string keyColumn;
        std::pair<std::string, std::string> probe;  // column read from an attached table
    };
    std::vector<PlannedStep> steps;
    std::vector<std::pair<PendingJoin*, bool>> residual;  // filters, both sides attached

    bool progress = true;
    while (progress) {
        progress = false;
        for (auto& pj : pending) {
            if (pj.planned) continue;
            bool leftIn = ordinal.count(pj.left.first) != 0;
            bool rightIn = ordinal.count(pj.right.first) != 0;
            if (leftIn && rightIn) {
                residual.push_back({&pj, true});
                pj.planned = true;
                progress = true;
            } else if (leftIn || rightIn) {
                const auto& attached = leftIn ? pj.left : pj.right;
                const auto& fresh = leftIn ? pj.right : pj.left;
                ordinal[fresh.first] = steps.size() + 1;
                steps.push_back({fresh.first, fresh.second, attached});
                pj.planned = true;
                progress = true;
            }
        }
    }

    for (const auto& tname : tables)
        if (!ordinal.count(tname))
            throw DisconnectedJoinGraph("table " + tname +
                                        " is not connected to the rest of the query");

    // layout: requested columns plus every probe column, sorted by chain
    // position so tuples fill in attach order
    std::vector<std::pair<std::string, std::string>> wanted = columns;
    for (const auto& st : steps) wanted.push_back(st.probe);
    for (const auto& [pj, both] : residual) {
        (void)both;
        wanted.push_back(pj->left);
        wanted.push_back(pj->right);
    }
    std::sort(wanted.begin(), wanted.end(), [&](const auto& a, const auto& b) {
        size_t oa = ordinal.at(a.first), ob = ordinal.at(b.first);
        if (oa != ob) return oa < ob;
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

    for (const auto& [tname, cname] : wanted) {
        const Table* t = find_table(db, tname);
        const Column* c = t ? t->find_column(cname) : nullptr;
        if (!c) throw InvariantViolation("column " + tname + "." + cname + " missing");
        plan.layout.slots.push_back({tname, cname, ordinal.at(tname), c});
    }

    auto slot_of = [&](const std::pair<std::string, std::string>& qc) {
        ColumnRef ref;
        ref.table = qc.first;
        ref.column = qc.second;
        int s = plan.layout.find(ref);
        if (s < 0) throw InvariantViolation("slot for " + qc.first + "." + qc.second + " missing");
        return s;
    };

    for (const auto& st : steps) {
        JoinStep step;
        step.table = find_table(db, st.table);
        step.keyColumn = st.keyColumn;
        step.probeSlot = slot_of(st.probe);
        step.index = build_key_index(*step.table, st.keyColumn);
        plan.steps.push_back(std::move(step));
    }
    for (const auto& [pj, both] : residual) {
        (void)both;
        EqualityFilter f;
        f.leftSlot = slot_of(pj->left);
        f.rightSlot = slot_of(pj->right);
        f.readyAt = std::max(ordinal.at(pj->left.first), ordinal.at(pj->right.first));
        plan.filters.push_back(f);
    }
    return plan;
}

std::vector<std::vector<Value>> uniform_sample(const Table& t, size_t sampleSize, uint64_t seed) {
    std::vector<uint32_t> rows = sample_indices(t.rowCount, sampleSize, seed);
    std::vector<std::vector<Value>> out;
    out.reserve(rows.size());
    for (uint32_t row : rows) {
        std::vector<Value> tuple;
        tuple.reserve(t.columns.size());
        for (const auto& col : t.columns) tuple.push_back(col.value_at(row));
        out.push_back(std::move(tuple));
    }
    return out;
}

JoinSample join_sample(const JoinPlan& plan, size_t sampleSize, uint64_t seed) {
    JoinSample out;
    out.populationSize = plan.driving->rowCount;
    out.sampleSize = sampleSize;
    out.seed = seed;
    out.drivingTable = plan.driving->name;
    std::vector<uint32_t> rows = sample_indices(out.populationSize, sampleSize, seed);
    for_each_joined(plan, rows, [&](uint32_t drivingRow, const std::vector<Value>& tuple) {
        out.drivingRows.push_back(drivingRow);
        out.tuples.push_back(tuple);
    });
    return out;
}

JoinSample join_sample(const Database& db, const std::vector<std::string>& tables,
                       const std::vector<JoinPredicate>& joins, const std::string& drivingTable,
                       size_t sampleSize, uint64_t seed) {
    std::vector<std::pair<std::string, std::string>> columns;
    for (const auto& tname : tables) {
        const Table* t = find_table(db, tname);
        if (!t) throw InvariantViolation("table " + tname + " missing");
        for (const auto& col : t->columns) columns.emplace_back(tname, col.name);
    }
    JoinPlan plan = plan_join(db, tables, joins, columns, drivingTable);
    return join_sample(plan, sampleSize, seed);
}

}  // namespace flexaq
