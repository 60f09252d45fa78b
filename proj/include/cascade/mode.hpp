#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace cascade {

// Integer lattice frequency j = (m, n).
struct Mode {
    std::int64_t m = 0;
    std::int64_t n = 0;

    friend constexpr Mode operator+(Mode a, Mode b) { return {a.m + b.m, a.n + b.n}; }
    friend constexpr Mode operator-(Mode a, Mode b) { return {a.m - b.m, a.n - b.n}; }
    friend constexpr Mode operator-(Mode a) { return {-a.m, -a.n}; }
    friend constexpr Mode operator*(std::int64_t k, Mode a) { return {k * a.m, k * a.n}; }
    friend constexpr bool operator==(Mode a, Mode b) { return a.m == b.m && a.n == b.n; }
    friend constexpr bool operator!=(Mode a, Mode b) { return !(a == b); }
    // Lexicographic by (m, n); the tie-break order used everywhere.
    friend constexpr bool operator<(Mode a, Mode b) {
        return a.m != b.m ? a.m < b.m : a.n < b.n;
    }

    constexpr std::int64_t norm2() const { return m * m + n * n; }
    constexpr std::int64_t dot(Mode o) const { return m * o.m + n * o.n; }
    constexpr std::int64_t cross(Mode o) const { return m * o.n - n * o.m; }

    std::string str() const { return "(" + std::to_string(m) + "," + std::to_string(n) + ")"; }
};

struct ModeHash {
    std::size_t operator()(Mode j) const {
        std::uint64_t x = static_cast<std::uint64_t>(j.m) * 0x9e3779b97f4a7c15ull ^
                          static_cast<std::uint64_t>(j.n) * 0xbf58476d1ce4e5b9ull;
        x ^= x >> 31;
        return static_cast<std::size_t>(x * 0x94d049bb133111ebull);
    }
};

}  // namespace cascade
