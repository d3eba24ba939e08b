#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "flexaq/common.hpp"

namespace flexaq {

// Fixed-width bitset sized at runtime, word-packed for fast intersection and
// subset tests during lattice construction.
class Bitset {
public:
    Bitset() = default;
    explicit Bitset(size_t bits) : bits_(bits), words_((bits + 63) / 64, 0) {}

    static Bitset all(size_t bits) {
        Bitset b(bits);
        for (auto& w : b.words_) w = ~0ull;
        b.mask_tail();
        return b;
    }

    size_t size() const { return bits_; }
    bool empty() const { return bits_ == 0; }

    bool test(size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
    void set(size_t i) { words_[i >> 6] |= 1ull << (i & 63); }
    void reset(size_t i) { words_[i >> 6] &= ~(1ull << (i & 63)); }

    size_t count() const {
        size_t n = 0;
        for (uint64_t w : words_) n += static_cast<size_t>(std::popcount(w));
        return n;
    }

    bool any() const {
        for (uint64_t w : words_)
            if (w) return true;
        return false;
    }

    void intersect_with(const Bitset& o) {
        for (size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
    }

    bool is_subset_of(const Bitset& o) const {
        for (size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & ~o.words_[i]) return false;
        return true;
    }

    // true when both sets agree on every bit in [0, j)
    bool equal_below(const Bitset& o, size_t j) const {
        size_t full = j >> 6;
        for (size_t i = 0; i < full; ++i)
            if (words_[i] != o.words_[i]) return false;
        size_t rem = j & 63;
        if (rem == 0) return true;
        uint64_t mask = (1ull << rem) - 1;
        return (words_[full] & mask) == (o.words_[full] & mask);
    }

    bool operator==(const Bitset&) const = default;

    uint64_t hash() const {
        Fnv1a h;
        for (uint64_t w : words_) h.update(w);
        return h.digest();
    }

    template <typename Fn>
    void for_each_set(Fn&& fn) const {
        for (size_t wi = 0; wi < words_.size(); ++wi) {
            uint64_t w = words_[wi];
            while (w) {
                size_t bit = static_cast<size_t>(std::countr_zero(w));
                fn(wi * 64 + bit);
                w &= w - 1;
            }
        }
    }

private:
    void mask_tail() {
        size_t rem = bits_ & 63;
        if (rem && !words_.empty()) words_.back() &= (1ull << rem) - 1;
    }

    size_t bits_ = 0;
    std::vector<uint64_t> words_;
};

// Binary incidence between objects and attributes, stored both row-wise and
// column-wise so either derivation is a run of intersections.
struct FormalContext {
    FormalContext() = default;
    FormalContext(size_t objects, size_t attributes);

    size_t object_count() const { return objectIntent.size(); }
    size_t attribute_count() const { return attrExtent.size(); }

    void set(size_t obj, size_t attr);
    bool incidence(size_t obj, size_t attr) const { return objectIntent[obj].test(attr); }

    // derivation operators: objects shared by a set of attributes, and
    // attributes shared by a set of objects; an empty input derives everything
    Bitset common_objects(const Bitset& attrs) const;
    Bitset common_attributes(const Bitset& objs) const;

    std::vector<size_t> common_objects(const std::vector<size_t>& attrIds) const;
    std::vector<size_t> common_attributes(const std::vector<size_t>& objIds) const;

    // double application of the derivations on an attribute set
    Bitset closure(const Bitset& attrs) const;

    std::vector<Bitset> attrExtent;    // per attribute, over objects
    std::vector<Bitset> objectIntent;  // per object, over attributes
    std::vector<std::string> attributeNames;
};

struct Concept {
    Bitset extent;
    Bitset intent;
    bool operator==(const Concept&) const = default;
};

struct ConceptLattice {
    std::vector<Concept> concepts;
    // immediate superconcepts (next-larger extents) per concept
    std::vector<std::vector<uint32_t>> upperCovers;

    int find_by_intent(const Bitset& intent) const;

    std::unordered_map<uint64_t, std::vector<uint32_t>> intentIndex;
};

// Enumerates every formal concept with Close-by-One and links immediate
// neighbours. Throws ContextTooLarge when objects * attributes exceeds
// maxCells.
ConceptLattice build_lattice(const FormalContext& ctx, size_t maxCells = 10'000'000);

std::string lattice_to_dot(const ConceptLattice& lattice,
                           const std::vector<std::string>& attributeNames);

// A joined sample turned into a formal context. Objects are the sample
// tuples. Attributes [0, fuzzyCount) binarize the fuzzy predicates at the
// alpha cut (boundary inclusive); the next crispCount attributes mark
// satisfied crisp predicates; attribute fuzzyCount + crispCount + g marks
// membership in the g-th observed group key. Exact membership degrees
// survive scaling in `memberships`.
struct ScaledContext {
    FormalContext ctx;
    size_t fuzzyCount = 0;
    size_t crispCount = 0;
    double alpha = 0.5;
    std::vector<double> memberships;            // object-major, fuzzyCount per object
    std::vector<std::vector<Value>> groupKeys;  // sorted distinct group tuples
    std::vector<uint32_t> objectGroup;          // per object, index into groupKeys

    size_t group_attr(size_t g) const { return fuzzyCount + crispCount + g; }

    std::span<const double> membership_row(size_t obj) const {
        return {memberships.data() + obj * fuzzyCount, fuzzyCount};
    }

    // min of the exact memberships when the object holds every predicate
    // attribute, else 0; an object with no predicates at all has degree 1
    double degree(size_t obj) const;
};

// Builds the scaled context over `tupleCount` sample tuples. memberships is
// tuple-major (one exact degree per fuzzy predicate), crispSat likewise (1 =
// satisfied). groupTuples[i] holds tuple i's group-by values, empty for an
// ungrouped query. The name vectors become attribute labels. alpha must lie
// in (0, 1].
ScaledContext scale(size_t tupleCount, std::span<const double> memberships,
                    const std::vector<std::string>& predicateNames,
                    std::span<const uint8_t> crispSat, const std::vector<std::string>& crispNames,
                    const std::vector<std::vector<Value>>& groupTuples,
                    const std::vector<std::string>& groupColumnNames, double alpha,
                    size_t maxCells = 10'000'000);

// Extent of each group key: the concept whose intent closes over every
// predicate attribute plus that group's attribute. Its objects are exactly
// the tuples that satisfy all scaled predicates and carry that key.
std::vector<Bitset> group_extents(const ScaledContext& sc, const ConceptLattice& lattice);

}  // namespace flexaq
