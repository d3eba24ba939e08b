#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "flexaq/common.hpp"
#include "flexaq/query.hpp"

namespace flexaq {

// Column-oriented table. Numeric columns hold doubles (NaN for missing cells),
// text columns hold strings.
struct Column {
    std::string name;
    bool numeric = false;
    std::vector<double> nums;
    std::vector<std::string> texts;

    size_t size() const { return numeric ? nums.size() : texts.size(); }
    Value value_at(size_t row) const;
};

struct Table {
    std::string name;
    std::vector<Column> columns;
    size_t rowCount = 0;

    const Column* find_column(const std::string& column) const;
};

using Database = std::vector<Table>;

const Table* find_table(const Database& db, const std::string& name);

// Draws n of N row indices uniformly without replacement, returned ascending.
// Throws SampleTooLarge when n exceeds N.
std::vector<uint32_t> sample_indices(size_t populationSize, size_t sampleSize, uint64_t seed);

// Same draw, materialized as rows of t (one Value per column).
std::vector<std::vector<Value>> uniform_sample(const Table& t, size_t sampleSize, uint64_t seed);

// One slot per (table, column) used anywhere in the query. tableOrdinal is
// 0 for the driving table and i+1 for the table attached by the i-th step.
struct JoinedLayout {
    struct Slot {
        std::string table;
        std::string column;
        size_t tableOrdinal = 0;
        const Column* source = nullptr;
    };
    std::vector<Slot> slots;

    // Resolves a reference to a slot index. Bare column names match any table;
    // a miss returns -1.
    int find(const ColumnRef& ref) const;
};

using KeyIndex = std::unordered_map<Value, std::vector<uint32_t>>;

// One hash-probe step: rows of `table` indexed by `keyColumn`, probed with the
// value found in `probeSlot` of the partially joined tuple.
struct JoinStep {
    const Table* table = nullptr;
    std::string keyColumn;
    int probeSlot = -1;
    KeyIndex index;
};

// Residual equality between two slots, checked once both sides are filled
// (readyAt is the larger of the two table ordinals).
struct EqualityFilter {
    int leftSlot = -1;
    int rightSlot = -1;
    size_t readyAt = 0;
};

struct JoinPlan {
    const Table* driving = nullptr;
    std::vector<JoinStep> steps;
    std::vector<EqualityFilter> filters;
    JoinedLayout layout;
};

// Orders the joined tables as a probe chain starting from drivingTable (must
// be listed in `tables`). `columns` lists every column the caller will read
// from joined tuples; each becomes a layout slot. Throws DisconnectedJoinGraph
// when some table cannot be reached through the join predicates.
JoinPlan plan_join(const Database& db, const std::vector<std::string>& tables,
                   const std::vector<JoinPredicate>& joins,
                   const std::vector<std::pair<std::string, std::string>>& columns,
                   const std::string& drivingTable);

// Streams every joined tuple whose driving row is in `drivingRows`, in
// ascending driving-row order. `fn` receives (drivingRow, slotValues) where
// slotValues[i] belongs to plan.layout.slots[i].
template <typename Fn>
void for_each_joined(const JoinPlan& plan, const std::vector<uint32_t>& drivingRows, Fn&& fn) {
    const auto& slots = plan.layout.slots;
    std::vector<Value> tuple(slots.size());

    auto fill = [&](size_t tableOrdinal, uint32_t row) {
        for (size_t s = 0; s < slots.size(); ++s)
            if (slots[s].tableOrdinal == tableOrdinal) tuple[s] = slots[s].source->value_at(row);
    };

    auto filters_pass = [&](size_t tableOrdinal) {
        for (const auto& f : plan.filters)
            if (f.readyAt == tableOrdinal &&
                compare_values(tuple[static_cast<size_t>(f.leftSlot)],
                               tuple[static_cast<size_t>(f.rightSlot)]) != 0)
                return false;
        return true;
    };

    auto descend = [&](auto&& self, size_t depth, uint32_t drivingRow) -> void {
        if (depth == plan.steps.size()) {
            fn(drivingRow, tuple);
            return;
        }
        const JoinStep& step = plan.steps[depth];
        auto it = step.index.find(tuple[static_cast<size_t>(step.probeSlot)]);
        if (it == step.index.end()) return;
        for (uint32_t row : it->second) {
            fill(depth + 1, row);
            if (filters_pass(depth + 1)) self(self, depth + 1, drivingRow);
        }
    };

    for (uint32_t drivingRow : drivingRows) {
        fill(0, drivingRow);
        if (filters_pass(0)) descend(descend, 0, drivingRow);
    }
}

// Materialized joined sample: slot values for every surviving tuple, grouped
// by ascending driving row. A sampled driving row with no match contributes
// no tuple but still counts toward sampleSize.
struct JoinSample {
    std::vector<uint32_t> drivingRows;       // per tuple
    std::vector<std::vector<Value>> tuples;  // per tuple, one Value per layout slot
    size_t sampleSize = 0;                   // driving rows drawn (n)
    size_t populationSize = 0;               // driving-table row count (N)
    uint64_t seed = 0;
    std::string drivingTable;
};

// Samples `sampleSize` driving rows without replacement and joins them.
JoinSample join_sample(const JoinPlan& plan, size_t sampleSize, uint64_t seed);

// Convenience over plan_join + join_sample, exposing every column of every
// joined table as a layout slot.
JoinSample join_sample(const Database& db, const std::vector<std::string>& tables,
                       const std::vector<JoinPredicate>& joins, const std::string& drivingTable,
                       size_t sampleSize, uint64_t seed);

}  // namespace flexaq
