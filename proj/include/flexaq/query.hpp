#pragma once

#include "flexaq/common.hpp"
#include "flexaq/kb.hpp"

#include <string>
#include <vector>

namespace flexaq {

struct SourcePos {
    int line = 0, col = 0;  // 1-based; 0 = unknown/synthesized
};

enum class AggKind { Count, Sum, Avg };
const char* to_string(AggKind k);

// Column reference, optionally table-qualified. Positions are carried for
// diagnostics but ignored by equality.
struct ColumnRef {
    std::string table;  // empty when bare
    std::string column;
    SourcePos pos{};

    std::string to_string() const { return table.empty() ? column : table + "." + column; }
    bool operator==(const ColumnRef& o) const {
        return table == o.table && column == o.column;
    }
};

struct Aggregate {
    AggKind kind = AggKind::Count;
    bool star = false;  // COUNT(*)
    ColumnRef column;   // unused when star

    std::string to_string() const;
    bool operator==(const Aggregate& o) const {
        return kind == o.kind && star == o.star && (star || column == o.column);
    }
};

struct FuzzyPredicate {
    ColumnRef column;
    std::string term;

    bool operator==(const FuzzyPredicate& o) const {
        return column == o.column && term == o.term;
    }
};

enum class Comparator { Eq, Ne, Lt, Le, Gt, Ge };
const char* to_string(Comparator c);

struct CrispPredicate {
    ColumnRef column;
    Comparator op = Comparator::Eq;
    Value literal;

    bool operator==(const CrispPredicate& o) const {
        return column == o.column && op == o.op && literal == o.literal;
    }
};

struct JoinPredicate {
    ColumnRef left, right;

    bool operator==(const JoinPredicate& o) const {
        return left == o.left && right == o.right;
    }
};

// AST of the flexible dialect:
//   SELECT aggList FROM tableList [WHERE predList] [GROUP BY colList]
// where predicates are AND-separated and each is `col IS term`,
// `col op literal`, or `col = col` (join).
struct FlexibleQuery {
    std::vector<Aggregate> aggregates;
    std::vector<std::string> tables;
    std::vector<FuzzyPredicate> fuzzyPredicates;
    std::vector<CrispPredicate> crispPredicates;
    std::vector<JoinPredicate> joins;
    std::vector<ColumnRef> groupBy;

    std::string to_string() const;  // canonical text; parse(to_string()) == *this
    bool operator==(const FlexibleQuery& o) const;
};

enum class IntervalKind { Conservative, LargeSample };
const char* to_string(IntervalKind k);

// The approximate form: the base query plus the estimation contract.
struct ApproximateQuery {
    FlexibleQuery base;
    double confidence = 0.95;
    IntervalKind intervalKind = IntervalKind::LargeSample;
    double sampleFraction = 0.1;

    // Template rendering with the confidence-degree and interval columns.
    std::string to_string() const;
};

// Keywords are case-insensitive, identifiers are not. Throws SyntaxError
// (with position) or UnknownAggregate.
FlexibleQuery parse_query(const std::string& text);

struct SchemaColumn {
    std::string name;
    bool numeric = false;
};
struct SchemaTable {
    std::string name;
    std::vector<SchemaColumn> columns;
};
using Schema = std::vector<SchemaTable>;

struct Diagnostic {
    std::string level = "ERROR";
    std::string code;
    std::string message;
    SourcePos pos{};

    std::string to_string() const;  // "LEVEL code message @line:col"
};

// Name resolution and type checks; empty result means the query can run.
std::vector<Diagnostic> validate(const FlexibleQuery& q, const KnowledgeBase& kb,
                                 const Schema& schema);

// Wraps a validated query with estimation parameters.
// Throws InvalidConfidence / InvalidSampleFraction on out-of-range values.
ApproximateQuery rewrite_to_approximate(const FlexibleQuery& q, double confidence,
                                        IntervalKind kind, double sampleFraction);

}  // namespace flexaq
