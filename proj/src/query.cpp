#include "flexaq/query.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

namespace flexaq {

const char* to_string(AggKind k) {
    switch (k) {
        case AggKind::Count: return "COUNT";
        case AggKind::Sum: return "SUM";
        case AggKind::Avg: return "AVG";
    }
    return "?";
}

const char* to_string(Comparator c) {
    switch (c) {
        case Comparator::Eq: return "=";
        case Comparator::Ne: return "!=";
        case Comparator::Lt: return "<";
        case Comparator::Le: return "<=";
        case Comparator::Gt: return ">";
        case Comparator::Ge: return ">=";
    }
    return "?";
}

const char* to_string(IntervalKind k) {
    return k == IntervalKind::Conservative ? "conservative" : "clt";
}

namespace {

enum class Tok {
    Ident,
    Number,
    String,
    Comma,
    LParen,
    RParen,
    Star,
    Dot,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Semicolon,
    End,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0;
    SourcePos pos{};
};

std::string at(const SourcePos& p) {
    return "@" + std::to_string(p.line) + ":" + std::to_string(p.col);
}

class Lexer {
public:
    explicit Lexer(const std::string& text) : s_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.pos = {line_, col_};
            if (i_ >= s_.size()) {
                t.kind = Tok::End;
                out.push_back(t);
                return out;
            }
            char ch = s_[i_];
            if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
                size_t start = i_;
                while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) ||
                                          s_[i_] == '_'))
                    advance();
                t.kind = Tok::Ident;
                t.text = s_.substr(start, i_ - start);
            } else if (std::isdigit(static_cast<unsigned char>(ch)) ||
                       ((ch == '-' || ch == '+') && i_ + 1 < s_.size() &&
                        std::isdigit(static_cast<unsigned char>(s_[i_ + 1])))) {
                t.kind = Tok::Number;
                t.text = lex_number();
                t.number = std::strtod(t.text.c_str(), nullptr);
            } else if (ch == '\'') {
                advance();
                size_t start = i_;
                while (i_ < s_.size() && s_[i_] != '\'') advance();
                if (i_ >= s_.size())
                    throw SyntaxError("unterminated string " + at(t.pos));
                t.kind = Tok::String;
                t.text = s_.substr(start, i_ - start);
                advance();
            } else {
                t.kind = lex_symbol(t.pos);
            }
            out.push_back(std::move(t));
        }
    }

private:
    void advance() {
        if (s_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }

    void skip_space() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) advance();
    }

    std::string lex_number() {
        size_t start = i_;
        if (s_[i_] == '-' || s_[i_] == '+') advance();
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) advance();
        if (i_ < s_.size() && s_[i_] == '.') {
            advance();
            while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) advance();
        }
        if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
            size_t mark = i_;
            advance();
            if (i_ < s_.size() && (s_[i_] == '-' || s_[i_] == '+')) advance();
            if (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
                while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) advance();
            } else {
                // not an exponent after all; give back the 'e'
                col_ -= static_cast<int>(i_ - mark);
                i_ = mark;
            }
        }
        return s_.substr(start, i_ - start);
    }

    Tok lex_symbol(const SourcePos& pos) {
        char ch = s_[i_];
        advance();
        switch (ch) {
            case ',': return Tok::Comma;
            case '(': return Tok::LParen;
            case ')': return Tok::RParen;
            case '*': return Tok::Star;
            case '.': return Tok::Dot;
            case ';': return Tok::Semicolon;
            case '=': return Tok::Eq;
            case '<':
                if (i_ < s_.size() && s_[i_] == '=') {
                    advance();
                    return Tok::Le;
                }
                if (i_ < s_.size() && s_[i_] == '>') {
                    advance();
                    return Tok::Ne;
                }
                return Tok::Lt;
            case '>':
                if (i_ < s_.size() && s_[i_] == '=') {
                    advance();
                    return Tok::Ge;
                }
                return Tok::Gt;
            case '!':
                if (i_ < s_.size() && s_[i_] == '=') {
                    advance();
                    return Tok::Ne;
                }
                break;
        }
        throw SyntaxError(std::string("unexpected character '") + ch + "' " + at(pos));
    }

    const std::string& s_;
    size_t i_ = 0;
    int line_ = 1, col_ = 1;
};

std::string upper(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    FlexibleQuery run() {
        FlexibleQuery q;
        expect_kw("SELECT");
        q.aggregates.push_back(parse_aggregate());
        while (accept(Tok::Comma)) q.aggregates.push_back(parse_aggregate());
        expect_kw("FROM");
        q.tables.push_back(expect_ident("table name"));
        while (accept(Tok::Comma)) q.tables.push_back(expect_ident("table name"));
        if (accept_kw("WHERE")) {
            parse_predicate(q);
            while (accept_kw("AND")) parse_predicate(q);
        }
        if (accept_kw("GROUP")) {
            expect_kw("BY");
            q.groupBy.push_back(parse_column_ref());
            while (accept(Tok::Comma)) q.groupBy.push_back(parse_column_ref());
        }
        accept(Tok::Semicolon);
        if (cur().kind != Tok::End)
            throw SyntaxError("unexpected trailing input " + at(cur().pos));
        return q;
    }

private:
    const Token& cur() const { return toks_[i_]; }
    const Token& peek() const { return toks_[std::min(i_ + 1, toks_.size() - 1)]; }

    bool accept(Tok k) {
        if (cur().kind != k) return false;
        ++i_;
        return true;
    }

    bool is_kw(const Token& t, const char* kw) const {
        return t.kind == Tok::Ident && upper(t.text) == kw;
    }

    bool accept_kw(const char* kw) {
        if (!is_kw(cur(), kw)) return false;
        ++i_;
        return true;
    }

    void expect_kw(const char* kw) {
        if (!accept_kw(kw))
            throw SyntaxError(std::string("expected ") + kw + " " + at(cur().pos));
    }

    std::string expect_ident(const char* what) {
        if (cur().kind != Tok::Ident)
            throw SyntaxError(std::string("expected ") + what + " " + at(cur().pos));
        return toks_[i_++].text;
    }

    void expect(Tok k, const char* what) {
        if (!accept(k))
            throw SyntaxError(std::string("expected ") + what + " " + at(cur().pos));
    }

    ColumnRef parse_column_ref() {
        ColumnRef ref;
        ref.pos = cur().pos;
        std::string first = expect_ident("column name");
        if (accept(Tok::Dot)) {
            ref.table = first;
            ref.column = expect_ident("column name");
        } else {
            ref.column = first;
        }
        return ref;
    }

    Aggregate parse_aggregate() {
        if (cur().kind != Tok::Ident)
            throw SyntaxError("expected aggregate function " + at(cur().pos));
        Token head = cur();
        std::string name = upper(head.text);
        Aggregate agg;
        if (name == "COUNT")
            agg.kind = AggKind::Count;
        else if (name == "SUM")
            agg.kind = AggKind::Sum;
        else if (name == "AVG")
            agg.kind = AggKind::Avg;
        else if (peek().kind == Tok::LParen)
            throw UnknownAggregate(head.text + " " + at(head.pos));
        else
            throw SyntaxError("expected aggregate function " + at(head.pos));
        ++i_;
        expect(Tok::LParen, "'('");
        if (accept(Tok::Star))
            agg.star = true;
        else
            agg.column = parse_column_ref();
        expect(Tok::RParen, "')'");
        return agg;
    }

    void parse_predicate(FlexibleQuery& q) {
        ColumnRef col = parse_column_ref();
        if (accept_kw("IS")) {
            FuzzyPredicate p;
            p.column = col;
            if (cur().kind == Tok::Ident || cur().kind == Tok::String)
                p.term = toks_[i_++].text;
            else
                throw SyntaxError("expected linguistic term " + at(cur().pos));
            q.fuzzyPredicates.push_back(std::move(p));
            return;
        }
        Comparator op;
        if (accept(Tok::Eq))
            op = Comparator::Eq;
        else if (accept(Tok::Ne))
            op = Comparator::Ne;
        else if (accept(Tok::Le))
            op = Comparator::Le;
        else if (accept(Tok::Lt))
            op = Comparator::Lt;
        else if (accept(Tok::Ge))
            op = Comparator::Ge;
        else if (accept(Tok::Gt))
            op = Comparator::Gt;
        else
            throw SyntaxError("expected IS or a comparison operator " + at(cur().pos));

        if (op == Comparator::Eq && cur().kind == Tok::Ident) {
            JoinPredicate j;
            j.left = col;
            j.right = parse_column_ref();
            q.joins.push_back(std::move(j));
            return;
        }
        CrispPredicate p;
        p.column = col;
        p.op = op;
        if (cur().kind == Tok::Number)
            p.literal = Value{toks_[i_++].number};
        else if (cur().kind == Tok::String)
            p.literal = Value{toks_[i_++].text};
        else
            throw SyntaxError("expected literal " + at(cur().pos));
        q.crispPredicates.push_back(std::move(p));
    }

    std::vector<Token> toks_;
    size_t i_ = 0;
};

bool identifier_shaped(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

std::string print_term(const std::string& term) {
    return identifier_shaped(term) ? term : "'" + term + "'";
}

std::string print_literal(const Value& v) {
    if (is_number(v)) return format_double(as_number(v));
    return "'" + as_text(v) + "'";
}

}  // namespace

FlexibleQuery parse_query(const std::string& text) {
    return Parser(Lexer(text).run()).run();
}

std::string Aggregate::to_string() const {
    std::string arg = star ? "*" : column.to_string();
    return std::string(flexaq::to_string(kind)) + "(" + arg + ")";
}

bool FlexibleQuery::operator==(const FlexibleQuery& o) const {
    return aggregates == o.aggregates && tables == o.tables &&
           fuzzyPredicates == o.fuzzyPredicates && crispPredicates == o.crispPredicates &&
           joins == o.joins && groupBy == o.groupBy;
}

std::string FlexibleQuery::to_string() const {
    std::string out = "SELECT ";
    for (size_t i = 0; i < aggregates.size(); ++i) {
        if (i) out += ", ";
        out += aggregates[i].to_string();
    }
    out += " FROM ";
    for (size_t i = 0; i < tables.size(); ++i) {
        if (i) out += ", ";
        out += tables[i];
    }
    std::vector<std::string> preds;
    for (const auto& p : fuzzyPredicates)
        preds.push_back(p.column.to_string() + " IS " + print_term(p.term));
    for (const auto& p : crispPredicates)
        preds.push_back(p.column.to_string() + " " + flexaq::to_string(p.op) + " " +
                        print_literal(p.literal));
    for (const auto& j : joins) preds.push_back(j.left.to_string() + " = " + j.right.to_string());
    if (!preds.empty()) {
        out += " WHERE ";
        for (size_t i = 0; i < preds.size(); ++i) {
            if (i) out += " AND ";
            out += preds[i];
        }
    }
    if (!groupBy.empty()) {
        out += " GROUP BY ";
        for (size_t i = 0; i < groupBy.size(); ++i) {
            if (i) out += ", ";
            out += groupBy[i].to_string();
        }
    }
    return out;
}

std::string ApproximateQuery::to_string() const {
    std::string out = "SELECT ";
    for (const auto& a : base.aggregates) out += a.to_string() + ", ";
    out += "ConfidenceDegree As Confidence, IntervalHalfWidth(" + format_double(confidence) + ")";
    std::string rest = base.to_string();
    out += rest.substr(rest.find(" FROM "));
    return out;
}

std::string Diagnostic::to_string() const {
    std::string out = level + " " + code + " " + message;
    if (pos.line > 0) out += " @" + std::to_string(pos.line) + ":" + std::to_string(pos.col);
    return out;
}

namespace {

struct Resolver {
    const Schema& schema;
    const FlexibleQuery& q;
    std::vector<Diagnostic>& diags;

    const SchemaTable* schema_table(const std::string& name) const {
        for (const auto& t : schema)
            if (t.name == name) return &t;
        return nullptr;
    }

    const SchemaColumn* schema_column(const SchemaTable& t, const std::string& col) const {
        for (const auto& c : t.columns)
            if (c.name == col) return &c;
        return nullptr;
    }

    void error(const std::string& code, const std::string& message, const SourcePos& pos) {
        diags.push_back(Diagnostic{"ERROR", code, message, pos});
    }

    // returns (table, column) or nullopt after emitting a diagnostic
    struct Resolved {
        std::string table;
        std::string column;
        bool numeric = false;
        bool ok = false;
    };

    Resolved resolve(const ColumnRef& ref) {
        Resolved r;
        if (!ref.table.empty()) {
            if (std::find(q.tables.begin(), q.tables.end(), ref.table) == q.tables.end()) {
                error("UnknownTable", "table " + ref.table + " not in FROM clause", ref.pos);
                return r;
            }
            const SchemaTable* t = schema_table(ref.table);
            if (!t) {
                error("UnknownTable", "table " + ref.table + " does not exist", ref.pos);
                return r;
            }
            const SchemaColumn* c = schema_column(*t, ref.column);
            if (!c) {
                error("UnknownColumn", "column " + ref.to_string() + " does not exist", ref.pos);
                return r;
            }
            return Resolved{ref.table, ref.column, c->numeric, true};
        }
        std::vector<std::pair<std::string, bool>> hits;
        for (const auto& tname : q.tables) {
            const SchemaTable* t = schema_table(tname);
            if (!t) continue;
            if (const SchemaColumn* c = schema_column(*t, ref.column))
                hits.emplace_back(tname, c->numeric);
        }
        if (hits.empty()) {
            error("UnknownColumn", "column " + ref.column + " not found in any FROM table",
                  ref.pos);
            return r;
        }
        if (hits.size() > 1) {
            error("AmbiguousColumn", "column " + ref.column + " appears in multiple tables",
                  ref.pos);
            return r;
        }
        return Resolved{hits[0].first, ref.column, hits[0].second, true};
    }
};

}  // namespace

std::vector<Diagnostic> validate(const FlexibleQuery& q, const KnowledgeBase& kb,
                                 const Schema& schema) {
    std::vector<Diagnostic> diags;
    Resolver rs{schema, q, diags};

    std::set<std::string> seen;
    for (const auto& t : q.tables) {
        if (!rs.schema_table(t))
            rs.error("UnknownTable", "table " + t + " does not exist", SourcePos{});
        if (!seen.insert(t).second)
            rs.error("DuplicateTable", "table " + t + " listed twice in FROM", SourcePos{});
    }

    for (const auto& a : q.aggregates) {
        if (a.star) {
            if (a.kind != AggKind::Count)
                rs.error("InvalidAggregateArgument",
                         std::string(to_string(a.kind)) + "(*) is not defined", SourcePos{});
            continue;
        }
        auto r = rs.resolve(a.column);
        if (r.ok && a.kind != AggKind::Count && !r.numeric)
            rs.error("TypeMismatch",
                     std::string(to_string(a.kind)) + " needs a numeric column, " +
                         a.column.to_string() + " is text",
                     a.column.pos);
    }

    for (const auto& p : q.fuzzyPredicates) {
        auto r = rs.resolve(p.column);
        if (!r.ok) continue;
        if (!r.numeric) {
            rs.error("TypeMismatch", "fuzzy predicate needs a numeric column, " +
                                         p.column.to_string() + " is text",
                     p.column.pos);
            continue;
        }
        const RelaxableAttribute* attr = kb.find(r.table, p.column.column);
        if (!attr) {
            rs.error("NotRelaxable",
                     "column " + r.table + "." + p.column.column + " has no linguistic terms",
                     p.column.pos);
            continue;
        }
        if (!attr->find_term(p.term))
            rs.error("UnknownTerm",
                     "term " + p.term + " not defined for " + r.table + "." + p.column.column,
                     p.column.pos);
    }

    for (const auto& p : q.crispPredicates) {
        auto r = rs.resolve(p.column);
        if (!r.ok) continue;
        bool literalNumeric = is_number(p.literal);
        if (r.numeric != literalNumeric)
            rs.error("TypeMismatch",
                     "comparison of " + p.column.to_string() + " against a " +
                         (literalNumeric ? "number" : "string"),
                     p.column.pos);
        else if (!r.numeric && p.op != Comparator::Eq && p.op != Comparator::Ne)
            rs.error("TypeMismatch",
                     "ordering comparison needs a numeric column, " + p.column.to_string() +
                         " is text",
                     p.column.pos);
    }

    for (const auto& j : q.joins) {
        auto l = rs.resolve(j.left);
        auto r = rs.resolve(j.right);
        if (l.ok && r.ok) {
            if (l.numeric != r.numeric)
                rs.error("TypeMismatch",
                         "join " + j.left.to_string() + " = " + j.right.to_string() +
                             " mixes numeric and text",
                         j.left.pos);
            if (l.table == r.table)
                rs.error("SelfJoin",
                         "join " + j.left.to_string() + " = " + j.right.to_string() +
                             " stays within one table",
                         j.left.pos);
        }
    }

    for (const auto& g : q.groupBy) rs.resolve(g);
    return diags;
}

ApproximateQuery rewrite_to_approximate(const FlexibleQuery& q, double confidence,
                                        IntervalKind kind, double sampleFraction) {
    if (!(confidence > 0.0 && confidence < 1.0))
        throw InvalidConfidence("confidence must lie strictly between 0 and 1, got " +
                                format_double(confidence));
    if (!(sampleFraction > 0.0 && sampleFraction <= 1.0))
        throw InvalidSampleFraction("sample fraction must lie in (0,1], got " +
                                    format_double(sampleFraction));
    return ApproximateQuery{q, confidence, kind, sampleFraction};
}

}  // namespace flexaq
