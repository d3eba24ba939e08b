#include "flexaq/kb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace flexaq {

double membership(const TrapezoidalTerm& t, double x) {
    if (x >= t.b && x <= t.c) return 1.0;
    if (x > t.a && x < t.b) return (x - t.a) / (t.b - t.a);
    if (x > t.c && x < t.d) return (t.d - x) / (t.d - t.c);
    return 0.0;  // outside [a,d], at an open ramp endpoint, or NaN
}

const TrapezoidalTerm* RelaxableAttribute::find_term(const std::string& name) const {
    for (const auto& t : terms)
        if (t.name == name) return &t;
    return nullptr;
}

const RelaxableAttribute* KnowledgeBase::find(const std::string& table,
                                              const std::string& column) const {
    for (const auto& a : attributes)
        if (a.table == table && a.column == column) return &a;
    return nullptr;
}

std::vector<const RelaxableAttribute*> KnowledgeBase::find_by_column(
    const std::string& column) const {
    std::vector<const RelaxableAttribute*> out;
    for (const auto& a : attributes)
        if (a.column == column) out.push_back(&a);
    return out;
}

namespace {

void check_terms(const RelaxableAttribute& attr) {
    for (const auto& t : attr.terms) {
        if (!(t.a <= t.b && t.b <= t.c && t.c <= t.d))
            throw InvariantViolation("attribute " + attr.qualified_name() + ", term " + t.name +
                                     ": breakpoints not ordered");
    }
    for (size_t i = 1; i < attr.terms.size(); ++i) {
        if (attr.terms[i - 1].b > attr.terms[i].b)
            throw InvariantViolation("attribute " + attr.qualified_name() +
                                     ": terms not sorted by plateau start");
    }
    for (size_t i = 0; i < attr.terms.size(); ++i)
        for (size_t j = i + 1; j < attr.terms.size(); ++j)
            if (attr.terms[i].name == attr.terms[j].name)
                throw InvariantViolation("attribute " + attr.qualified_name() +
                                         ": duplicate term name " + attr.terms[i].name);
}

}  // namespace

void KnowledgeBase::add(RelaxableAttribute attr) {
    check_terms(attr);
    if (find(attr.table, attr.column))
        throw InvariantViolation("duplicate attribute " + attr.qualified_name());
    auto pos = std::lower_bound(attributes.begin(), attributes.end(), attr,
                                [](const RelaxableAttribute& x, const RelaxableAttribute& y) {
                                    return std::tie(x.table, x.column) < std::tie(y.table, y.column);
                                });
    attributes.insert(pos, std::move(attr));
}

void check_coverage(const RelaxableAttribute& attr, const std::vector<double>& values) {
    for (double v : values) {
        double best = 0;
        for (const auto& t : attr.terms) best = std::max(best, membership(t, v));
        if (!(best > 0))
            throw InvariantViolation("attribute " + attr.qualified_name() + ": value " +
                                     format_double(v) + " not covered by any term");
    }
}

namespace {

struct Cluster {
    double mean = 0, sd = 0;
    double lo = 0, hi = 0;  // value range of the cluster
    size_t count = 0;
};

// ulp-sized or 1% of span, whichever is larger: the padding used for
// degenerate plateaus and for keeping observed extremes strictly covered
double pad_at(double x, double span) {
    double base = std::fabs(x) + 1.0;
    double ulp = std::nextafter(base, std::numeric_limits<double>::infinity()) - base;
    return std::max(0.01 * span, ulp);
}

}  // namespace

std::vector<TrapezoidalTerm> build_partition(std::vector<double> values, int k, uint64_t seed) {
    (void)seed;  // quantile init + Lloyd iterations are deterministic already
    if (k < 1) throw InvalidRange("k must be >= 1");
    if (values.empty()) throw InsufficientDistinctValues("no values");
    std::sort(values.begin(), values.end());

    std::vector<double> distinct = values;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < static_cast<size_t>(k))
        throw InsufficientDistinctValues("need " + std::to_string(k) + " distinct values, have " +
                                         std::to_string(distinct.size()));

    const size_t n = values.size();
    const size_t kk = static_cast<size_t>(k);

    // centroid init by quantiles of the distinct values
    std::vector<double> centroids(kk);
    for (size_t j = 0; j < kk; ++j)
        centroids[j] = distinct[(2 * j + 1) * distinct.size() / (2 * kk)];

    std::vector<size_t> assign(n, 0);
    auto assign_all = [&]() {
        // centroids sorted: nearest-centroid assignment via midpoints,
        // ties resolved toward the lower index
        size_t j = 0;
        for (size_t i = 0; i < n; ++i) {
            while (j + 1 < kk && values[i] > 0.5 * (centroids[j] + centroids[j + 1])) ++j;
            assign[i] = j;
        }
    };

    for (int iter = 0; iter < 50; ++iter) {
        std::sort(centroids.begin(), centroids.end());
        assign_all();

        std::vector<double> sum(kk, 0.0);
        std::vector<size_t> cnt(kk, 0);
        for (size_t i = 0; i < n; ++i) {
            sum[assign[i]] += values[i];
            ++cnt[assign[i]];
        }

        bool reseeded = false;
        for (size_t j = 0; j < kk; ++j) {
            if (cnt[j] > 0) continue;
            // reseed an empty cluster to the value farthest from its centroid
            double bestDist = -1;
            size_t best = 0;
            for (size_t i = 0; i < n; ++i) {
                double d = std::fabs(values[i] - centroids[assign[i]]);
                if (d > bestDist) {
                    bestDist = d;
                    best = i;
                }
            }
            centroids[j] = values[best];
            reseeded = true;
        }
        if (reseeded) continue;

        std::vector<double> next(kk);
        for (size_t j = 0; j < kk; ++j) next[j] = sum[j] / cnt[j];
        std::sort(next.begin(), next.end());
        if (next == centroids) break;
        centroids = next;
    }
    std::sort(centroids.begin(), centroids.end());
    assign_all();

    // clusters are contiguous runs of the sorted values
    std::vector<Cluster> clusters(kk);
    {
        std::vector<double> sum(kk, 0.0);
        for (size_t i = 0; i < n; ++i) {
            size_t j = assign[i];
            Cluster& c = clusters[j];
            if (c.count == 0) c.lo = values[i];
            c.hi = values[i];
            sum[j] += values[i];
            ++c.count;
        }
        for (size_t j = 0; j < kk; ++j) {
            if (clusters[j].count == 0)
                throw InvariantViolation("k-means produced an empty cluster");
            clusters[j].mean = sum[j] / clusters[j].count;
        }
        for (size_t i = 0; i < n; ++i) {
            size_t j = assign[i];
            double dev = values[i] - clusters[j].mean;
            clusters[j].sd += dev * dev;
        }
        for (size_t j = 0; j < kk; ++j) clusters[j].sd = std::sqrt(clusters[j].sd / clusters[j].count);
    }

    const double vmin = values.front(), vmax = values.back();
    const double span = vmax - vmin;

    std::vector<TrapezoidalTerm> terms(kk);
    for (size_t j = 0; j < kk; ++j) {
        const Cluster& c = clusters[j];
        TrapezoidalTerm& t = terms[j];
        t.name = "t" + std::to_string(j + 1);
        if (c.sd == 0.0) {
            t.b = t.c = c.mean;
        } else {
            t.b = std::max(c.mean - c.sd, c.lo);
            t.c = std::min(c.mean + c.sd, c.hi);
        }
    }
    for (size_t j = 0; j < kk; ++j) {
        const Cluster& c = clusters[j];
        TrapezoidalTerm& t = terms[j];
        if (c.sd == 0.0) {
            double p = pad_at(c.mean, span);
            t.a = c.mean - p;
            t.d = c.mean + p;
            continue;
        }
        if (j == 0)
            t.a = t.b > vmin ? vmin - pad_at(vmin, span) : vmin;
        else
            t.a = terms[j - 1].c;
        if (j == kk - 1)
            t.d = t.c < vmax ? vmax + pad_at(vmax, span) : vmax;
        else
            t.d = terms[j + 1].b;
    }

    RelaxableAttribute probe{"", "", terms};
    check_terms(probe);
    check_coverage(probe, values);
    return terms;
}

namespace {

double parse_double_field(const std::string& tok, int line) {
    size_t pos = 0;
    double v;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line) + ": bad number '" + tok + "'");
    }
    if (pos != tok.size())
        throw ParseError("line " + std::to_string(line) + ": bad number '" + tok + "'");
    return v;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

}  // namespace

KnowledgeBase parse_kb(const std::string& text) {
    KnowledgeBase kb;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool sawHeader = false;
    RelaxableAttribute current;
    bool haveAttr = false;

    auto flush = [&]() {
        if (haveAttr) {
            kb.add(std::move(current));
            current = RelaxableAttribute{};
            haveAttr = false;
        }
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::vector<std::string> toks = split_ws(line);
        if (toks.empty()) continue;

        if (!sawHeader) {
            if (toks.size() != 2 || toks[0] != "kb" || toks[1] != "v1")
                throw ParseError("line " + std::to_string(lineno) + ": expected header 'kb v1'");
            sawHeader = true;
            continue;
        }
        if (toks[0] == "fingerprint") {
            if (toks.size() != 2)
                throw ParseError("line " + std::to_string(lineno) + ": fingerprint wants one token");
            kb.fingerprint = toks[1];
            continue;
        }
        if (toks[0] == "attr") {
            flush();
            if (toks.size() != 2)
                throw ParseError("line " + std::to_string(lineno) + ": attr wants <table>.<column>");
            auto dot = toks[1].find('.');
            if (dot == std::string::npos || dot == 0 || dot + 1 == toks[1].size())
                throw ParseError("line " + std::to_string(lineno) + ": attr wants <table>.<column>");
            current.table = toks[1].substr(0, dot);
            current.column = toks[1].substr(dot + 1);
            haveAttr = true;
            continue;
        }
        if (toks[0] == "term") {
            if (!haveAttr)
                throw ParseError("line " + std::to_string(lineno) + ": term before any attr");
            if (toks.size() != 6)
                throw ParseError("line " + std::to_string(lineno) +
                                 ": term wants <name> <a> <b> <c> <d>");
            TrapezoidalTerm t;
            t.name = toks[1];
            t.a = parse_double_field(toks[2], lineno);
            t.b = parse_double_field(toks[3], lineno);
            t.c = parse_double_field(toks[4], lineno);
            t.d = parse_double_field(toks[5], lineno);
            current.terms.push_back(std::move(t));
            continue;
        }
        throw ParseError("line " + std::to_string(lineno) + ": unknown directive '" + toks[0] + "'");
    }
    flush();
    return kb;
}

std::string format_kb(const KnowledgeBase& kb) {
    std::string out = "kb v1\n";
    out += "fingerprint " + kb.fingerprint + "\n";
    for (const auto& a : kb.attributes) {
        out += "attr " + a.qualified_name() + "\n";
        for (const auto& t : a.terms) {
            out += "term " + t.name + " " + format_double(t.a) + " " + format_double(t.b) + " " +
                   format_double(t.c) + " " + format_double(t.d) + "\n";
        }
    }
    return out;
}

KnowledgeBase load_kb(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_kb(buf.str());
}

void save_kb(const KnowledgeBase& kb, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IoError", "cannot write " + path);
    out << format_kb(kb);
}

}  // namespace flexaq
