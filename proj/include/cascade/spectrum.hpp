#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade/mode.hpp"

// Tangential/normal frequency model: omega_i = m_i^2 - eps*lambda_i on the
// tangential sites, Omega_j asymptotics on the rest of the sublattice with
// the mu_i(lambda) roots on the site columns, plus an optional bounded
// correction model. Small divisors, rectangle defects and the Monte-Carlo
// Melnikov measure scans live here.

namespace cascade::spectrum {

struct TangentialSites {
    std::vector<std::int64_t> m;  // the d distinct site abscissas
    int genericity_l = 0;         // largest L the set was verified against

    int d() const { return static_cast<int>(m.size()); }
    bool is_site(std::int64_t mm) const {
        for (std::int64_t v : m)
            if (v == mm) return true;
        return false;
    }
    int site_index(std::int64_t mm) const {
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m[i] == mm) return static_cast<int>(i);
        return -1;
    }
};

// mode classes on the sublattice Z x NZ relative to the sites
enum class ModeClass { TangentialS0, SiteColumn, Generic };

struct GenericityResult {
    bool pass = true;
    std::vector<int> witness;  // violating ell when !pass
};

// exhaustive check of sum_i ell_i m_i != 0 over 0 < |ell|_1 <= L
GenericityResult check_L_generic(const TangentialSites& sites, int L);

TangentialSites make_sites(std::vector<std::int64_t> m, int require_L);

struct ActionParams {
    std::vector<double> lambda;  // in (1/2,1)^d
    double eps = 0.1;
};

// Bounded correction model for (varpi_m, Theta_m, Theta_{m,n}): deterministic
// hash noise in [-1,1] scaled by M0*eps^2, or identically zero (default).
struct CorrectionModel {
    bool enabled = false;
    double m0 = 1.0;
    std::uint64_t seed = 0;

    double varpi(std::int64_t m, double eps) const;
    double theta_m(std::int64_t m, double eps) const;
    double theta_mn(std::int64_t m, std::int64_t n, double eps) const;
};

struct FrequencyModel {
    TangentialSites sites;
    ActionParams params;
    std::int64_t sublattice_n = 1;
    CorrectionModel corrections;

    ModeClass classify_mode(Mode j) const;
};

// coefficients of P(t,lambda) = prod(t+lambda_i) - 2 sum_i lambda_i prod_{k!=i}(t+lambda_k)
std::vector<double> char_poly_coeffs(const std::vector<double>& lambda);

// all d roots, sorted by (re, im); residual-checked
std::vector<std::complex<double>> mu_roots(const std::vector<double>& lambda);

std::vector<double> omega_tangential(const FrequencyModel& model);

// normal frequency Omega_j(lambda, eps); throws if j is a tangential site
double omega_normal(const FrequencyModel& model, Mode j);

// tilde-Omega at eps = 0 is an integer (n^2 on site columns, |j|^2 elsewhere)
std::int64_t omega_tilde_at_zero(const FrequencyModel& model, Mode j);

struct SmallDivisorQuery {
    std::vector<int> ell;       // in Z^d
    std::vector<Mode> modes;    // p of them
    std::vector<int> sigma;     // +-1 each
};

double small_divisor(const FrequencyModel& model, const SmallDivisorQuery& q);

// Gamma = Omega_{j1} - Omega_{j2} + Omega_{j3} - Omega_{j4} on an exact
// rectangle (diagonals {j1,j3}, {j2,j4}); rejects non-rectangles
double gamma_defect(const FrequencyModel& model, const std::array<Mode, 4>& rect);

struct MelnikovConfig {
    int p = 4;                 // 2 or 4
    double gamma = 1e-4;
    double tau = 4.0;          // d+2 default, set by caller
    int ell_max = 6;
    std::int64_t mode_window = 20;  // |m|,|n| <= window, n in N Z
    int sample_count = 500;
    std::uint64_t seed = 1;
    bool exclude_resonant = true;  // drop R2/R4-classified tuples
    int threads = 1;
};

struct MelnikovResult {
    double fraction = 0.0;  // fraction of lambda samples with >= 1 violation
    long long tuples_scanned = 0;
    long long tuples_kept = 0;
    int samples = 0;
};

// samples lambda uniformly over (1/2,1)^d; a sample counts as violating when
// some admissible non-resonant tuple in the window has
// |omega.ell + sum sigma Omega| < gamma * eps / <ell>^tau
MelnikovResult melnikov_violation_fraction(const FrequencyModel& model, const MelnikovConfig& cfg);

}  // namespace cascade::spectrum
