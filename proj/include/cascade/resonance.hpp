#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cascade/mode.hpp"
#include "cascade/monomial.hpp"
#include "cascade/spectrum.hpp"

// Selection-rule functionals, admissibility, R2/R4 classification and the
// desk-scale nonresonance audit via the integer part K and the lambda
// function F of the small divisors.

namespace cascade::resonance {

struct SelectionProfile {
    int eta_ab = 0;     // sum over all modes of alpha - beta
    int eta_ell = 0;    // sum of ell_i
    std::int64_t pi_x = 0, pi_y = 0;   // momenta over all modes
    std::int64_t pi_ell = 0;           // sum m_i ell_i
    int eta_tilde = 0;                 // restricted to generic modes (not site columns)
    std::int64_t pi_x_tilde = 0;
};

SelectionProfile selection_profile(const MonomialIndex& idx,
                                   const spectrum::FrequencyModel& model);

// a-monomial tuple (j_1..j_p with signs); the common currency of the
// classification and the audits
struct Tuple {
    std::vector<Mode> modes;
    std::vector<int> sigma;  // +-1
    std::vector<int> ell;    // Z^d
};

// admissible iff eta~ + eta(ell) = 0, pi_x~ + pi(ell) = 0, pi_y = 0,
// all modes in the sublattice and none tangential
bool is_admissible(const Tuple& t, const spectrum::FrequencyModel& model);

enum class ResonanceTag {
    Inadmissible,
    NonResonant,
    R2,
    R4Case1,  // ell=0, no site-column modes, rectangle (degenerate allowed)
    R4Case2,  // ell=0, two site-column + two generic, horizontal rectangle
    R4Case3,  // ell!=0, three site-column + one generic with |m4| < cutoff
    R4Case4,  // ell=0, all site-column, horizontal trapezoid
    // Desk-scale extension: the characteristic polynomial's trace identity
    // sum_i mu_i(lambda) = sum_i lambda_i makes tuples with ell = c*(1,..,1)
    // and net mu-coefficient c on every site column identically resonant at
    // first order. For d >= 3 such tuples carry >= 3 site-column modes and
    // land in case 3; for d <= 2 they are invisible to the four literal
    // cases, so they get their own tag here.
    R4Trace,
};

std::string tag_name(ResonanceTag t);

struct ResonanceClass {
    ResonanceTag tag = ResonanceTag::NonResonant;
    std::string witness;
    // cutoff used for case 3 (the universal constant M0 of the definition is
    // a config knob here)
    std::int64_t m4_cutoff = 32;
};

ResonanceClass classify(const Tuple& t, const spectrum::FrequencyModel& model,
                        std::int64_t m4_cutoff = 32);

// K is the integer omega^(0).ell + sum sigma_i * tildeOmega_{j_i}(., 0);
// F(lambda) = -lambda.ell + sum sigma_i * theta_{j_i}(lambda), where theta is
// mu_{i} on site columns and 0 elsewhere.
struct KF {
    std::int64_t k = 0;
    std::vector<int> ell;                    // the -lambda.ell part
    std::vector<std::pair<int, int>> mus;    // (site index, sign) terms
    double eval_f(const std::vector<double>& lambda) const;
    bool f_identically_zero() const { return ell.empty() && mus.empty(); }
};

KF k_and_f(const Tuple& t, const spectrum::FrequencyModel& model);

struct AuditConfig {
    std::int64_t window = 8;   // |m|,|n| <= window, |ell|_1 <= window
    int lambda_samples = 20;
    double f_tol = 1e-8;
    std::uint64_t seed = 12345;
    std::int64_t m4_cutoff = 32;
    int threads = 1;
    bool include_p2 = true;
};

struct AuditReport {
    // admissible tuples examined closely (p=2: all admissible; p=4: the
    // admissible tuples with K = 0, found by a meet-in-the-middle join on the
    // selection rules -- K != 0 tuples cannot be counterexamples)
    long long admissible_scanned = 0;
    long long k_zero = 0;
    long long f_vanishing = 0;   // K=0 and F ~ 0 at all samples
    long long trace_resonances = 0;            // tuples caught by the R4Trace extension
    std::vector<std::string> counterexamples;  // K=0, F~0 but not classified resonant
    std::vector<std::string> case5_log;        // ell != 0 all-site tuples with F ~ 0
    bool pass() const { return counterexamples.empty(); }
};

// exhaustive scan of admissible tuples in the window: every tuple with K = 0
// whose F vanishes at all sampled lambda must carry an R2/R4 tag
AuditReport nonresonance_audit(const spectrum::FrequencyModel& model, const AuditConfig& cfg);

std::string audit_to_json(const AuditReport& rep);

}  // namespace cascade::resonance
