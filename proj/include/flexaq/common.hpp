#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace flexaq {

// Every failure carries a stable code (the class name) plus a message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define FLEXAQ_DEFINE_ERROR(Name)                                             \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& message) : Error(#Name, message) {}  \
    }

FLEXAQ_DEFINE_ERROR(InsufficientDistinctValues);
FLEXAQ_DEFINE_ERROR(ParseError);
FLEXAQ_DEFINE_ERROR(InvariantViolation);
FLEXAQ_DEFINE_ERROR(SyntaxError);
FLEXAQ_DEFINE_ERROR(UnknownAggregate);
FLEXAQ_DEFINE_ERROR(InvalidConfidence);
FLEXAQ_DEFINE_ERROR(InvalidSampleFraction);
FLEXAQ_DEFINE_ERROR(SampleTooLarge);
FLEXAQ_DEFINE_ERROR(DisconnectedJoinGraph);
FLEXAQ_DEFINE_ERROR(ContextTooLarge);
FLEXAQ_DEFINE_ERROR(UnknownId);
FLEXAQ_DEFINE_ERROR(EmptySample);
FLEXAQ_DEFINE_ERROR(ZeroSatisfaction);
FLEXAQ_DEFINE_ERROR(InvalidRange);
FLEXAQ_DEFINE_ERROR(TooFewObservations);
FLEXAQ_DEFINE_ERROR(RaggedRow);
FLEXAQ_DEFINE_ERROR(EmptyFile);

#undef FLEXAQ_DEFINE_ERROR

// A cell value: numeric columns hold double, everything else text.
using Value = std::variant<double, std::string>;

inline bool is_number(const Value& v) { return v.index() == 0; }
inline double as_number(const Value& v) { return std::get<double>(v); }
inline const std::string& as_text(const Value& v) { return std::get<std::string>(v); }

// Shortest decimal form that parses back to the same double ("2003", "0.5").
std::string format_double(double x);
std::string value_to_string(const Value& v);

// Numbers order before text; numbers by value, text lexicographically.
int compare_values(const Value& a, const Value& b);

struct ValueLess {
    bool operator()(const Value& a, const Value& b) const { return compare_values(a, b) < 0; }
};

struct ValueVectorLess {
    bool operator()(const std::vector<Value>& a, const std::vector<Value>& b) const;
};

// FNV-1a 64, used for data fingerprints.
class Fnv1a {
public:
    void update(const void* data, size_t len);
    void update(const std::string& s) { update(s.data(), s.size()); }
    void update(uint64_t v);
    void update(double v);
    uint64_t digest() const { return state_; }
    std::string hex() const;

private:
    uint64_t state_ = 14695981039346656037ull;
};

// Seeded RNG with portable draws. std:: distributions are implementation
// defined, so bounded/unit/normal are done by hand to keep every seed's
// output identical across toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}
    uint64_t next() { return gen_(); }
    uint64_t below(uint64_t n);  // uniform in [0, n), n > 0
    double unit();               // uniform in [0, 1)
    double normal(double mean, double stddev);
    size_t pick_weighted(const std::vector<double>& weights);

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace flexaq
