#include "flexaq/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace flexaq {

namespace {

struct PatientRow {
    uint32_t pid;
    int age;
    int education;
    double alcohol;  // units per week, one decimal
};

struct DeathRow {
    uint32_t did;
    uint32_t pid;
    int year;
    const char* cause;
};

const char* const kCauses[] = {"cardiac", "stroke", "cancer", "other"};
const std::vector<double> kCauseWeights = {0.4, 0.25, 0.2, 0.15};

// Share of patients that receive a death record. Selection is weighted by a
// risk score, so death correlates with heavy drinking and short schooling,
// but the overall ratio stays pinned for any size.
constexpr double kDeathShare = 0.3;

void synth_rows(size_t rows, uint64_t seed, std::vector<PatientRow>& patients,
                std::vector<DeathRow>& deaths) {
    Rng rng(seed);
    patients.clear();
    deaths.clear();
    patients.reserve(rows);

    std::vector<double> priority(rows);
    for (size_t i = 0; i < rows; ++i) {
        PatientRow p;
        p.pid = static_cast<uint32_t>(i + 1);
        p.age = 25 + static_cast<int>(rng.below(66));

        double u = rng.unit();
        double mean = u < 0.35 ? 6.0 : u < 0.80 ? 12.0 : 16.0;
        double sd = u < 0.80 ? 2.0 : 1.5;
        p.education = static_cast<int>(
            std::clamp<long long>(std::llround(rng.normal(mean, sd)), 0, 20));

        u = rng.unit();
        mean = u < 0.30 ? 1.0 : u < 0.70 ? 10.0 : 32.0;
        sd = u < 0.30 ? 0.8 : u < 0.70 ? 3.0 : 6.0;
        double alcohol = std::clamp(rng.normal(mean, sd), 0.0, 60.0);
        p.alcohol = std::round(alcohol * 10.0) / 10.0;

        double risk = 0.13 + 0.55 * (p.alcohol / 60.0) + (p.education <= 8 ? 0.12 : 0.0);
        // weighted reservoir key: keeps the death share exact while making
        // selection probability proportional to risk
        priority[i] = std::pow(rng.unit(), 1.0 / risk);
        patients.push_back(p);
    }

    size_t numDeaths = static_cast<size_t>(std::llround(kDeathShare * static_cast<double>(rows)));
    std::vector<size_t> order(rows);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (priority[a] != priority[b]) return priority[a] > priority[b];
        return a < b;
    });
    order.resize(numDeaths);
    std::sort(order.begin(), order.end());

    deaths.reserve(numDeaths);
    for (size_t i : order) {
        DeathRow d;
        d.did = static_cast<uint32_t>(deaths.size() + 1);
        d.pid = patients[i].pid;
        d.year = 2000 + static_cast<int>(rng.below(8));
        d.cause = kCauses[rng.pick_weighted(kCauseWeights)];
        deaths.push_back(d);
    }
}

Column num_column(std::string name) {
    Column c;
    c.name = std::move(name);
    c.numeric = true;
    return c;
}

Column text_column(std::string name) {
    Column c;
    c.name = std::move(name);
    c.numeric = false;
    return c;
}

}  // namespace

Database synth_database(size_t rows, uint64_t seed) {
    std::vector<PatientRow> patients;
    std::vector<DeathRow> deaths;
    synth_rows(rows, seed, patients, deaths);

    Table patient;
    patient.name = "Patient";
    patient.rowCount = patients.size();
    patient.columns = {num_column("pid"), num_column("age"), num_column("education_years"),
                       num_column("alcohol_units_per_week")};
    for (const auto& p : patients) {
        patient.columns[0].nums.push_back(p.pid);
        patient.columns[1].nums.push_back(p.age);
        patient.columns[2].nums.push_back(p.education);
        patient.columns[3].nums.push_back(p.alcohol);
    }

    Table death;
    death.name = "Death";
    death.rowCount = deaths.size();
    death.columns = {num_column("did"), num_column("pid"), num_column("year"),
                     text_column("cause")};
    for (const auto& d : deaths) {
        death.columns[0].nums.push_back(d.did);
        death.columns[1].nums.push_back(d.pid);
        death.columns[2].nums.push_back(d.year);
        death.columns[3].texts.push_back(d.cause);
    }

    Database db;
    db.push_back(std::move(patient));
    db.push_back(std::move(death));
    return db;
}

void generate_fixture(size_t rows, uint64_t seed, const std::filesystem::path& outDir) {
    std::vector<PatientRow> patients;
    std::vector<DeathRow> deaths;
    synth_rows(rows, seed, patients, deaths);

    std::filesystem::create_directories(outDir);
    char line[128];

    std::ofstream pf(outDir / "Patient.csv", std::ios::binary);
    if (!pf) throw Error("IoError", "cannot write " + (outDir / "Patient.csv").string());
    pf << "pid,age,education_years,alcohol_units_per_week\n";
    for (const auto& p : patients) {
        std::snprintf(line, sizeof(line), "%u,%d,%d,%.1f\n", p.pid, p.age, p.education,
                      p.alcohol);
        pf << line;
    }

    std::ofstream df(outDir / "Death.csv", std::ios::binary);
    if (!df) throw Error("IoError", "cannot write " + (outDir / "Death.csv").string());
    df << "did,pid,year,cause\n";
    for (const auto& d : deaths) {
        std::snprintf(line, sizeof(line), "%u,%u,%d,%s\n", d.did, d.pid, d.year, d.cause);
        df << line;
    }
}

namespace {

std::vector<std::string> term_names(size_t k) {
    switch (k) {
        case 1: return {"typical"};
        case 2: return {"low", "high"};
        case 3: return {"low", "medium", "high"};
        case 4: return {"very_low", "low", "high", "very_high"};
        case 5: return {"very_low", "low", "medium", "high", "very_high"};
        default: {
            std::vector<std::string> names;
            char buf[16];
            for (size_t i = 1; i <= k; ++i) {
                std::snprintf(buf, sizeof(buf), "level%02zu", i);
                names.push_back(buf);
            }
            return names;
        }
    }
}

}  // namespace

KnowledgeBase build_kb(const Database& db, size_t k, uint64_t seed,
                       const std::vector<std::string>& columns) {
    std::vector<std::pair<std::string, std::string>> targets;
    if (columns.empty()) {
        for (const auto& t : db)
            for (const auto& c : t.columns)
                if (c.numeric) targets.emplace_back(t.name, c.name);
    } else {
        for (const auto& spec : columns) {
            size_t dot = spec.find('.');
            if (dot == std::string::npos || dot == 0 || dot + 1 == spec.size())
                throw InvariantViolation("column spec " + spec + " wants Table.column");
            std::string tname = spec.substr(0, dot), cname = spec.substr(dot + 1);
            const Table* t = find_table(db, tname);
            if (!t) throw InvariantViolation("unknown table " + tname);
            const Column* c = t->find_column(cname);
            if (!c) throw InvariantViolation("unknown column " + spec);
            if (!c->numeric) throw InvariantViolation("column " + spec + " is not numeric");
            targets.emplace_back(tname, cname);
        }
    }
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

    KnowledgeBase kb;
    Fnv1a fp;
    std::vector<std::string> names = term_names(k);
    for (const auto& [tname, cname] : targets) {
        const Column* col = find_table(db, tname)->find_column(cname);
        std::vector<double> values;
        values.reserve(col->nums.size());
        for (double v : col->nums)
            if (!std::isnan(v)) values.push_back(v);

        RelaxableAttribute attr;
        attr.table = tname;
        attr.column = cname;
        attr.terms = build_partition(std::move(values), static_cast<int>(k), seed);
        for (size_t i = 0; i < attr.terms.size(); ++i) attr.terms[i].name = names[i];
        kb.add(std::move(attr));
    }
    for (const auto& a : kb.attributes) {
        fp.update(a.table);
        fp.update(a.column);
        fp.update(static_cast<uint64_t>(a.terms.size()));
        for (const auto& t : a.terms) {
            fp.update(t.name);
            fp.update(t.a);
            fp.update(t.b);
            fp.update(t.c);
            fp.update(t.d);
        }
    }
    kb.fingerprint = fp.hex();
    return kb;
}

}  // namespace flexaq
