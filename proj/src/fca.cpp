#include "flexaq/fca.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <numeric>

namespace flexaq {

FormalContext::FormalContext(size_t objects, size_t attributes)
    : attrExtent(attributes, Bitset(objects)), objectIntent(objects, Bitset(attributes)) {}

void FormalContext::set(size_t obj, size_t attr) {
    attrExtent[attr].set(obj);
    objectIntent[obj].set(attr);
}

Bitset FormalContext::common_objects(const Bitset& attrs) const {
    Bitset out = Bitset::all(object_count());
    attrs.for_each_set([&](size_t a) { out.intersect_with(attrExtent[a]); });
    return out;
}

Bitset FormalContext::common_attributes(const Bitset& objs) const {
    Bitset out = Bitset::all(attribute_count());
    objs.for_each_set([&](size_t o) { out.intersect_with(objectIntent[o]); });
    return out;
}

namespace {

Bitset from_ids(const std::vector<size_t>& ids, size_t universe, const char* what) {
    Bitset b(universe);
    for (size_t id : ids) {
        if (id >= universe)
            throw UnknownId(std::string(what) + " " + std::to_string(id) + " out of range");
        b.set(id);
    }
    return b;
}

std::vector<size_t> to_ids(const Bitset& b) {
    std::vector<size_t> out;
    b.for_each_set([&](size_t i) { out.push_back(i); });
    return out;
}

}  // namespace

std::vector<size_t> FormalContext::common_objects(const std::vector<size_t>& attrIds) const {
    return to_ids(common_objects(from_ids(attrIds, attribute_count(), "attribute")));
}

std::vector<size_t> FormalContext::common_attributes(const std::vector<size_t>& objIds) const {
    return to_ids(common_attributes(from_ids(objIds, object_count(), "object")));
}

Bitset FormalContext::closure(const Bitset& attrs) const {
    return common_attributes(common_objects(attrs));
}

int ConceptLattice::find_by_intent(const Bitset& intent) const {
    auto it = intentIndex.find(intent.hash());
    if (it == intentIndex.end()) return -1;
    for (uint32_t id : it->second)
        if (concepts[id].intent == intent) return static_cast<int>(id);
    return -1;
}

namespace {

// Close-by-One: depth-first over attribute positions, pruning non-canonical
// closures (a closure is generated exactly once, from its lectically smallest
// generator).
void cbo(const FormalContext& ctx, std::vector<Concept>& out, const Bitset& extent,
         const Bitset& intent, size_t start) {
    out.push_back({extent, intent});
    for (size_t j = start; j < ctx.attribute_count(); ++j) {
        if (intent.test(j)) continue;
        Bitset nextExtent = extent;
        nextExtent.intersect_with(ctx.attrExtent[j]);
        Bitset nextIntent = ctx.common_attributes(nextExtent);
        if (nextIntent.equal_below(intent, j)) cbo(ctx, out, nextExtent, nextIntent, j + 1);
    }
}

}  // namespace

ConceptLattice build_lattice(const FormalContext& ctx, size_t maxCells) {
    size_t cells = ctx.object_count() * ctx.attribute_count();
    if (cells > maxCells)
        throw ContextTooLarge("context has " + std::to_string(cells) + " cells, limit " +
                              std::to_string(maxCells));

    ConceptLattice lat;
    Bitset extent = Bitset::all(ctx.object_count());
    cbo(ctx, lat.concepts, extent, ctx.common_attributes(extent), 0);

    for (uint32_t id = 0; id < lat.concepts.size(); ++id)
        lat.intentIndex[lat.concepts[id].intent.hash()].push_back(id);

    // covers: for each concept, the minimal strictly-larger extents. Scanning
    // candidates by ascending extent size lets an accepted cover block every
    // concept above it.
    std::vector<uint32_t> bySize(lat.concepts.size());
    std::iota(bySize.begin(), bySize.end(), 0u);
    std::vector<size_t> extentSize(lat.concepts.size());
    for (uint32_t id = 0; id < lat.concepts.size(); ++id)
        extentSize[id] = lat.concepts[id].extent.count();
    std::sort(bySize.begin(), bySize.end(),
              [&](uint32_t a, uint32_t b) { return extentSize[a] < extentSize[b]; });

    lat.upperCovers.assign(lat.concepts.size(), {});
    for (uint32_t c : bySize) {
        for (uint32_t p : bySize) {
            if (extentSize[p] <= extentSize[c]) continue;
            if (!lat.concepts[c].extent.is_subset_of(lat.concepts[p].extent)) continue;
            bool blocked = false;
            for (uint32_t q : lat.upperCovers[c])
                if (lat.concepts[q].extent.is_subset_of(lat.concepts[p].extent)) {
                    blocked = true;
                    break;
                }
            if (!blocked) lat.upperCovers[c].push_back(p);
        }
        std::sort(lat.upperCovers[c].begin(), lat.upperCovers[c].end());
    }
    return lat;
}

std::string lattice_to_dot(const ConceptLattice& lattice,
                           const std::vector<std::string>& attributeNames) {
    std::string out = "digraph lattice {\n  rankdir=BT;\n  node [shape=box];\n";
    for (uint32_t id = 0; id < lattice.concepts.size(); ++id) {
        const Concept& c = lattice.concepts[id];
        std::string label = std::to_string(c.extent.count()) + "/{";
        bool first = true;
        c.intent.for_each_set([&](size_t a) {
            if (!first) label += ", ";
            label += a < attributeNames.size() ? attributeNames[a] : std::to_string(a);
            first = false;
        });
        label += "}";
        out += "  c" + std::to_string(id) + " [label=\"" + label + "\"];\n";
    }
    for (uint32_t id = 0; id < lattice.concepts.size(); ++id)
        for (uint32_t p : lattice.upperCovers[id])
            out += "  c" + std::to_string(id) + " -> c" + std::to_string(p) + ";\n";
    out += "}\n";
    return out;
}

double ScaledContext::degree(size_t obj) const {
    for (size_t c = 0; c < crispCount; ++c)
        if (!ctx.incidence(obj, fuzzyCount + c)) return 0.0;
    double d = 1.0;
    for (double m : membership_row(obj)) {
        if (m < alpha) return 0.0;
        d = std::min(d, m);
    }
    return d;
}

ScaledContext scale(size_t tupleCount, std::span<const double> memberships,
                    const std::vector<std::string>& predicateNames,
                    std::span<const uint8_t> crispSat, const std::vector<std::string>& crispNames,
                    const std::vector<std::vector<Value>>& groupTuples,
                    const std::vector<std::string>& groupColumnNames, double alpha,
                    size_t maxCells) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw InvalidRange("alpha must lie in (0,1], got " + format_double(alpha));
    assert(memberships.size() == tupleCount * predicateNames.size());
    assert(crispSat.size() == tupleCount * crispNames.size());
    assert(groupTuples.size() == tupleCount);

    ScaledContext sc;
    sc.fuzzyCount = predicateNames.size();
    sc.crispCount = crispNames.size();
    sc.alpha = alpha;
    sc.memberships.assign(memberships.begin(), memberships.end());

    // nominal scaling of the group keys: one attribute per distinct tuple
    std::map<std::vector<Value>, uint32_t, ValueVectorLess> keyIndex;
    for (const auto& gt : groupTuples) keyIndex.emplace(gt, 0);
    uint32_t next = 0;
    for (auto& [key, idx] : keyIndex) {
        idx = next++;
        sc.groupKeys.push_back(key);
    }
    sc.objectGroup.reserve(tupleCount);
    for (const auto& gt : groupTuples) sc.objectGroup.push_back(keyIndex.at(gt));

    size_t attrs = sc.fuzzyCount + sc.crispCount + sc.groupKeys.size();
    if (tupleCount * attrs > maxCells)
        throw ContextTooLarge("scaled context has " + std::to_string(tupleCount * attrs) +
                              " cells, limit " + std::to_string(maxCells));

    sc.ctx = FormalContext(tupleCount, attrs);
    for (const auto& name : predicateNames) sc.ctx.attributeNames.push_back(name);
    for (const auto& name : crispNames) sc.ctx.attributeNames.push_back(name);
    for (const auto& key : sc.groupKeys) {
        std::string label;
        for (size_t g = 0; g < key.size(); ++g) {
            if (g) label += ", ";
            label += groupColumnNames[g] + "=" + value_to_string(key[g]);
        }
        sc.ctx.attributeNames.push_back(label.empty() ? "all" : label);
    }

    for (size_t i = 0; i < tupleCount; ++i) {
        for (size_t f = 0; f < sc.fuzzyCount; ++f)
            if (memberships[i * sc.fuzzyCount + f] >= alpha) sc.ctx.set(i, f);
        for (size_t c = 0; c < sc.crispCount; ++c)
            if (crispSat[i * sc.crispCount + c]) sc.ctx.set(i, sc.fuzzyCount + c);
        sc.ctx.set(i, sc.group_attr(sc.objectGroup[i]));
    }
    return sc;
}

std::vector<Bitset> group_extents(const ScaledContext& sc, const ConceptLattice& lattice) {
    std::vector<Bitset> out;
    out.reserve(sc.groupKeys.size());
    size_t predicateAttrs = sc.fuzzyCount + sc.crispCount;
    for (size_t g = 0; g < sc.groupKeys.size(); ++g) {
        Bitset attrs(sc.ctx.attribute_count());
        for (size_t p = 0; p < predicateAttrs; ++p) attrs.set(p);
        attrs.set(sc.group_attr(g));
        Bitset intent = sc.ctx.closure(attrs);
        int id = lattice.find_by_intent(intent);
        if (id < 0)
            throw InvariantViolation("closure of group " + std::to_string(g) +
                                     " is missing from the lattice");
        out.push_back(lattice.concepts[static_cast<size_t>(id)].extent);
    }
    return out;
}

}  // namespace flexaq
