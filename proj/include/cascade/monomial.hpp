#pragma once

#include <cstdint>
#include <vector>

#include "cascade/mode.hpp"

// Index of a Taylor-Fourier monomial e^{i ell.theta} Y^l a^alpha abar^beta.
// alpha/beta are sparse, sorted by mode, no zero entries.

namespace cascade {

struct SparsePowers {
    std::vector<std::pair<Mode, int>> entries;  // sorted by Mode, powers > 0

    void add(Mode j, int k);
    int power(Mode j) const;
    int total() const;  // |alpha| (l1 of the multi-index)
    void normalize();
    friend bool operator==(const SparsePowers& a, const SparsePowers& b) {
        return a.entries == b.entries;
    }
    friend bool operator<(const SparsePowers& a, const SparsePowers& b);
};

struct MonomialIndex {
    std::vector<int> ell;  // Z^d angle harmonics
    std::vector<int> l;    // N^d action powers
    SparsePowers alpha;    // powers of a
    SparsePowers beta;     // powers of abar

    int d() const { return static_cast<int>(ell.size()); }
    int abs_ell() const;
    int abs_l() const;
    // 2|l| + |alpha| + |beta| - 2
    int degree() const;

    MonomialIndex conjugated() const;  // ell -> -ell, alpha <-> beta

    friend bool operator==(const MonomialIndex& a, const MonomialIndex& b) {
        return a.ell == b.ell && a.l == b.l && a.alpha == b.alpha && a.beta == b.beta;
    }
    friend bool operator<(const MonomialIndex& a, const MonomialIndex& b);
};

// monomial product: indices add
MonomialIndex operator*(const MonomialIndex& a, const MonomialIndex& b);

}  // namespace cascade
