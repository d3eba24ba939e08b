#include "doctest.h"
#include "flexaq/sampler.hpp"

#include <algorithm>
#include <map>
#include <numeric>

using namespace flexaq;

namespace {

Column numeric_column(std::string name, std::vector<double> nums) {
    Column c;
    c.name = std::move(name);
    c.numeric = true;
    c.nums = std::move(nums);
    return c;
}

Column text_column(std::string name, std::vector<std::string> texts) {
    Column c;
    c.name = std::move(name);
    c.numeric = false;
    c.texts = std::move(texts);
    return c;
}

Table make_table(std::string name, std::vector<Column> cols) {
    Table t;
    t.name = std::move(name);
    t.rowCount = cols.empty() ? 0 : cols[0].size();
    t.columns = std::move(cols);
    return t;
}

// Orders(oid, customer, amount) joined to Customers(cid, city):
// customer 30 has no Customers row, city "b" has two orders.
Database order_database() {
    Database db;
    db.push_back(make_table(
        "Orders", {numeric_column("oid", {1, 2, 3, 4}), numeric_column("customer", {10, 20, 30, 10}),
                   numeric_column("amount", {5, 7, 11, 13})}));
    db.push_back(make_table(
        "Customers", {numeric_column("cid", {10, 20}), text_column("city", {"a", "b"})}));
    return db;
}

JoinPredicate join_on(const std::string& lt, const std::string& lc, const std::string& rt,
                      const std::string& rc) {
    JoinPredicate j;
    j.left = ColumnRef{lt, lc};
    j.right = ColumnRef{rt, rc};
    return j;
}

}  // namespace

TEST_CASE("sample_indices draws sorted distinct indices") {
    auto idx = sample_indices(100, 10, 4);
    REQUIRE(idx.size() == 10);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
    CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
    CHECK(idx.back() < 100);

    CHECK(sample_indices(100, 10, 4) == idx);       // deterministic
    CHECK(sample_indices(100, 10, 5) != idx);       // seed-sensitive
    CHECK_THROWS_AS(sample_indices(10, 11, 0), SampleTooLarge);
}

TEST_CASE("exhaustive sample is the identity permutation") {
    auto idx = sample_indices(50, 50, 9);
    std::vector<uint32_t> expected(50);
    std::iota(expected.begin(), expected.end(), 0u);
    CHECK(idx == expected);
}

TEST_CASE("every index is included at the nominal rate") {
    const size_t N = 10, n = 3, trials = 10000;
    std::vector<size_t> hits(N, 0);
    for (size_t seed = 0; seed < trials; ++seed)
        for (uint32_t i : sample_indices(N, n, seed)) ++hits[i];
    for (size_t i = 0; i < N; ++i)
        CHECK(static_cast<double>(hits[i]) / trials == doctest::Approx(0.3).epsilon(0.067));
}

TEST_CASE("uniform_sample returns whole rows of the table") {
    Table t = make_table("T", {numeric_column("x", {10, 11, 12, 13}),
                               text_column("tag", {"p", "q", "r", "s"})});
    auto rows = uniform_sample(t, 4, 21);
    REQUIRE(rows.size() == 4);
    // exhaustive draw keeps table order
    CHECK(as_number(rows[0][0]) == 10);
    CHECK(as_text(rows[3][1]) == "s");

    auto some = uniform_sample(t, 2, 21);
    REQUIRE(some.size() == 2);
    for (const auto& row : some) CHECK(row.size() == 2);
}

TEST_CASE("join_sample streams matching tuples and counts misses in n") {
    Database db = order_database();
    JoinSample js = join_sample(db, {"Orders", "Customers"},
                                {join_on("Orders", "customer", "Customers", "cid")}, "Orders",
                                4, 1);
    CHECK(js.sampleSize == 4);
    CHECK(js.populationSize == 4);
    // order 3 points at customer 30 which does not exist
    REQUIRE(js.tuples.size() == 3);
    CHECK(js.drivingRows == std::vector<uint32_t>{0, 1, 3});

    const JoinedLayout& layout =
        plan_join(db, {"Orders", "Customers"},
                  {join_on("Orders", "customer", "Customers", "cid")},
                  {{"Orders", "amount"}, {"Customers", "city"}}, "Orders")
            .layout;
    int citySlot = layout.find(ColumnRef{"", "city"});
    REQUIRE(citySlot >= 0);
    CHECK(layout.find(ColumnRef{"", "nonexistent"}) == -1);
}

TEST_CASE("join fanout multiplies tuples") {
    Database db;
    db.push_back(make_table("L", {numeric_column("k", {1, 2})}));
    db.push_back(
        make_table("R", {numeric_column("k", {1, 1, 1, 9}), numeric_column("v", {4, 5, 6, 7})}));
    JoinSample js = join_sample(db, {"L", "R"}, {join_on("L", "k", "R", "k")}, "L", 2, 3);
    CHECK(js.sampleSize == 2);
    REQUIRE(js.tuples.size() == 3);  // key 1 matches three R rows, key 2 none
    for (uint32_t d : js.drivingRows) CHECK(d == 0);
}

TEST_CASE("three-way chain join reaches the far table") {
    Database db;
    db.push_back(make_table("A", {numeric_column("id", {1, 2})}));
    db.push_back(make_table("B", {numeric_column("aid", {1, 2}), numeric_column("bid", {7, 8})}));
    db.push_back(make_table("C", {numeric_column("bid", {8}), text_column("tag", {"hit"})}));

    JoinPlan plan = plan_join(db, {"A", "B", "C"},
                              {join_on("A", "id", "B", "aid"), join_on("B", "bid", "C", "bid")},
                              {{"A", "id"}, {"C", "tag"}}, "A");
    std::vector<std::vector<Value>> tuples;
    std::vector<uint32_t> all{0, 1};
    for_each_joined(plan, all, [&](uint32_t, const std::vector<Value>& t) {
        tuples.push_back(t);
    });
    REQUIRE(tuples.size() == 1);
    int idSlot = plan.layout.find(ColumnRef{"A", "id"});
    int tagSlot = plan.layout.find(ColumnRef{"C", "tag"});
    CHECK(as_number(tuples[0][static_cast<size_t>(idSlot)]) == 2);
    CHECK(as_text(tuples[0][static_cast<size_t>(tagSlot)]) == "hit");
}

TEST_CASE("join cycles become residual filters") {
    Database db;
    db.push_back(make_table("A", {numeric_column("x", {1, 2}), numeric_column("y", {5, 6})}));
    db.push_back(make_table("B", {numeric_column("x", {1, 2}), numeric_column("y", {5, 9})}));

    // both columns must match; only row (1,5) pairs up
    JoinPlan plan = plan_join(db, {"A", "B"},
                              {join_on("A", "x", "B", "x"), join_on("A", "y", "B", "y")},
                              {{"A", "x"}}, "A");
    CHECK(plan.filters.size() == 1);
    size_t count = 0;
    std::vector<uint32_t> all{0, 1};
    for_each_joined(plan, all, [&](uint32_t, const std::vector<Value>&) { ++count; });
    CHECK(count == 1);
}

TEST_CASE("unreachable tables are rejected") {
    Database db = order_database();
    db.push_back(make_table("Island", {numeric_column("z", {1})}));
    CHECK_THROWS_AS(plan_join(db, {"Orders", "Customers", "Island"},
                              {join_on("Orders", "customer", "Customers", "cid")},
                              {{"Orders", "oid"}}, "Orders"),
                    DisconnectedJoinGraph);
}

TEST_CASE("scaled count over the join is unbiased within 2 percent") {
    // population: 400 orders, every fourth customer missing
    Database db;
    std::vector<double> oid(400), customer(400);
    for (size_t i = 0; i < 400; ++i) {
        oid[i] = static_cast<double>(i + 1);
        customer[i] = static_cast<double>(i % 8);
    }
    db.push_back(make_table("Orders", {numeric_column("oid", std::move(oid)),
                                       numeric_column("customer", std::move(customer))}));
    db.push_back(make_table(
        "Customers", {numeric_column("cid", {0, 1, 2, 3, 4, 5})}));  // customers 6,7 missing

    JoinPlan plan = plan_join(db, {"Orders", "Customers"},
                              {join_on("Orders", "customer", "Customers", "cid")},
                              {{"Orders", "oid"}}, "Orders");
    const double truth = 300.0;  // 6 of 8 residues match
    const size_t n = 40;
    double meanEstimate = 0.0;
    const size_t trials = 500;
    for (size_t seed = 0; seed < trials; ++seed) {
        size_t matched = 0;
        for_each_joined(plan, sample_indices(400, n, seed),
                        [&](uint32_t, const std::vector<Value>&) { ++matched; });
        meanEstimate += (400.0 / n) * static_cast<double>(matched);
    }
    meanEstimate /= trials;
    CHECK(meanEstimate == doctest::Approx(truth).epsilon(0.02));
}
