#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade/mode.hpp"

// Construction and certification of the resonant generation sets: candidate
// sets built by the procreation map (spouses w1,w3 produce children
// (w1+w3)/2 +- i(w1-w3)/2), checked against the eight geometric properties,
// scaled into the sublattice, and weighed per generation.

namespace cascade::lattice {

struct Rectangle {
    // Diagonal pairing {d1[0], d1[1]} | {d2[0], d2[1]}:
    // d1[0]+d1[1] == d2[0]+d2[1] and equal norm sums. Canonical order:
    // each diagonal sorted, d1 <= d2.
    std::array<Mode, 2> d1, d2;
    void canonicalize();
    friend bool operator==(const Rectangle& a, const Rectangle& b) {
        return a.d1 == b.d1 && a.d2 == b.d2;
    }
    friend bool operator<(const Rectangle& a, const Rectangle& b);
};

// All 4-subsets {j1,j3},{j2,j4} with j1+j3 = j2+j4 and |j1|^2+|j3|^2 =
// |j2|^2+|j4|^2, found by hashing pair sums (O(n^2)), modes assumed distinct.
std::vector<Rectangle> enumerate_rectangles(const std::vector<Mode>& modes);

struct FamilyTree {
    // Flat global indices; -1 / {-1,-1} where a role does not exist
    // (no spouse/children in the last generation, no parents/sibling in the
    // first).
    std::vector<int> spouse;
    std::vector<int> sibling;
    std::vector<std::array<int, 2>> children;
    std::vector<std::array<int, 2>> parents;
};

struct PropertyCheck {
    bool pass = true;
    std::string witness;  // empty iff pass
};

struct PropertyReport {
    std::array<PropertyCheck, 8> prop;  // properties I..VIII
    long long rectangle_count = 0;
    long long family_count = 0;
    // min |m| over axis points (m,0) forming a right angle with a pair of the
    // set, from either orthogonality case; +inf when no axis point does.
    double right_angle_margin = std::numeric_limits<double>::infinity();
    bool all_pass() const {
        for (const auto& p : prop)
            if (!p.pass) return false;
        return true;
    }
    // pass/fail pattern only (witness text and margin scale with the set)
    std::array<bool, 8> pass_pattern() const {
        std::array<bool, 8> r{};
        for (int i = 0; i < 8; ++i) r[i] = prop[i].pass;
        return r;
    }
};

struct Candidate {
    int g = 0;
    std::vector<std::vector<Mode>> generations;  // sorted lex within each generation
    FamilyTree tree;

    int total_modes() const;
    int offset(int gen_idx) const;  // flat index of generations[gen_idx][0]
    int gen_of(int flat) const;
    Mode mode_at(int flat) const;
    std::vector<Mode> all_modes() const;
};

struct CertifiedLambda {
    Candidate set;  // scaled modes
    long long scale_n = 1;
    double f_scale = 1000.0;
    double builder_c = 1.0;  // derived: bounds f/C <= |j| <= C 3^g f hold with this C
    PropertyReport report;
};

struct BudgetExhausted : std::runtime_error {
    PropertyReport last_report;
    BudgetExhausted(const std::string& msg, PropertyReport rep)
        : std::runtime_error(msg), last_report(std::move(rep)) {}
};

struct MarginViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Explicit enumeration of properties I..VIII plus rectangle/family counts and
// the right-angle margin. early_exit stops at the first failure (used inside
// the rejection loop); the returned report is complete when it passes.
PropertyReport verify_properties(const Candidate& c, bool early_exit = false);

// profile: "uniform" (random ring seed, shape-preserving pairings),
// "cascade" (structured seed so that generation magnitudes spread toward
// generation 3 and equalize at generation g-1), or "auto" (cascade for g>=6).
Candidate build_prototype(int g, std::uint64_t seed, double spread,
                          const std::string& profile = "auto", int budget = 256);

// Multiplies all modes by N, re-verifies every property, computes the
// right-angle margin and asserts margin >= sqrt(f_scale).
CertifiedLambda scale_and_certify(const Candidate& c, long long N, double f_scale);

struct GenerationWeights {
    double s = 0.0;
    std::vector<double> S;  // S_k = sum |j|^{2s}, k = 1..g
    double ratio = 0.0;     // S_{g-1} / S_3
    double threshold = 0.0;
    bool pass = false;
};

// S_k and the growth ratio against 1/2 * 2^{(1-s)(g-4)} (s<1, backward
// cascade) or 1/2 * 2^{(s-1)(g-4)} (s>1, forward cascade).
GenerationWeights generation_weights(const CertifiedLambda& L, double s);

// min |m| over integer axis points forming a right angle with any ordered
// pair, via the two closed-form orthogonality cases.
double right_angle_margin(const std::vector<Mode>& modes);

std::string to_json_string(const CertifiedLambda& L);
CertifiedLambda lambda_from_json_string(const std::string& text);
void save_lambda(const CertifiedLambda& L, const std::string& path);
CertifiedLambda load_lambda(const std::string& path);

}  // namespace cascade::lattice
