#include "flexaq/common.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace flexaq {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string value_to_string(const Value& v) {
    if (is_number(v)) return format_double(as_number(v));
    return as_text(v);
}

int compare_values(const Value& a, const Value& b) {
    if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
    if (is_number(a)) {
        double x = as_number(a), y = as_number(b);
        // NaN sorts before every number so the ordering stays strict-weak
        bool nx = std::isnan(x), ny = std::isnan(y);
        if (nx || ny) return nx == ny ? 0 : (nx ? -1 : 1);
        if (x < y) return -1;
        if (x > y) return 1;
        return 0;
    }
    return as_text(a).compare(as_text(b)) < 0 ? -1 : (as_text(a) == as_text(b) ? 0 : 1);
}

bool ValueVectorLess::operator()(const std::vector<Value>& a, const std::vector<Value>& b) const {
    size_t m = std::min(a.size(), b.size());
    for (size_t i = 0; i < m; ++i) {
        int c = compare_values(a[i], b[i]);
        if (c != 0) return c < 0;
    }
    return a.size() < b.size();
}

void Fnv1a::update(const void* data, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        state_ ^= p[i];
        state_ *= 1099511628211ull;
    }
}

void Fnv1a::update(uint64_t v) {
    unsigned char bytes[8];
    std::memcpy(bytes, &v, 8);
    update(bytes, 8);
}

void Fnv1a::update(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    update(bits);
}

std::string Fnv1a::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
    return buf;
}

uint64_t Rng::below(uint64_t n) {
    if (n == 0) return 0;
    // rejection sampling keeps the draw unbiased for any n
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = gen_();
    } while (x >= limit);
    return x % n;
}

double Rng::unit() {
    return (gen_() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double stddev) {
    // Box-Muller with a cached spare
    if (has_spare_) {
        has_spare_ = false;
        return mean + stddev * spare_;
    }
    double u1, u2;
    do {
        u1 = unit();
    } while (u1 <= 0.0);
    u2 = unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return mean + stddev * r * std::cos(theta);
}

size_t Rng::pick_weighted(const std::vector<double>& weights) {
    double total = 0;
    for (double w : weights) total += w;
    double x = unit() * total;
    double acc = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (x < acc) return i;
    }
    return weights.size() - 1;
}

}  // namespace flexaq
