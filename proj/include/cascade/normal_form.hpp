#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

#include "cascade/monomial.hpp"
#include "cascade/spectrum.hpp"

// Sparse Taylor-Fourier polynomial algebra: Poisson brackets, majorant norms,
// the homological equation against N^ = omega.Y + sum Omega_j |a_j|^2, and
// truncated Lie series.

namespace cascade::nf {

using Coeff = std::complex<double>;

class Poly {
   public:
    Poly() = default;
    explicit Poly(int d) : d_(d) {}

    int d() const { return d_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    void add_term(const MonomialIndex& idx, Coeff c);
    Coeff coeff(const MonomialIndex& idx) const;
    const std::map<MonomialIndex, Coeff>& terms() const { return terms_; }

    Poly& operator+=(const Poly& o);
    Poly& operator*=(double s);
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(const Poly& a, const Poly& b);
    friend Poly operator*(double s, Poly p) { return p *= s; }
    Poly operator*(const Poly& o) const;  // polynomial product

    // drop terms with |coeff| <= tol (exact zeros always dropped on insert)
    void prune(double tol = 0.0);
    // largest |coeff|, 0 for empty
    double max_abs_coeff() const;
    // smallest monomial degree, INT_MAX for empty
    int min_degree() const;
    // real-valuedness: coeff(conjugate index) == conj(coeff) within tol
    bool is_real_valued(double tol = 1e-12) const;

    std::string to_json_string() const;  // canonical record list
    static Poly from_json_string(const std::string& text);

   private:
    int d_ = 0;
    std::map<MonomialIndex, Coeff> terms_;
};

// {F,G} = dY F . dtheta G - dtheta F . dY G
//         + i sum_j (dabar_j F da_j G - da_j F dabar_j G)
// (the sign convention that reproduces {M~, m} = i(eta~ + eta(ell)) m and the
// homological divisor omega.ell + sum sigma Omega)
Poly poisson_bracket(const Poly& f, const Poly& g);

struct MajorantParams {
    double rho = 0.5;
    double r = 0.5;
};

// Upper-bound evaluation of |F|_{rho,r}: per monomial the majorant vector
// field components are evaluated at |Y_i| = r^2 and with the a-mass
// concentrated on single modes (exact for a single monomial, an upper bound
// in general); component norms combine as |X^theta|_1 + |X^Y|_1/r^2 +
// |X^a|_1/r + |X^abar|_1/r.
double majorant_norm(const Poly& f, const MajorantParams& p);

// divisor of a monomial under {N^, .}: omega.ell + sum_j (alpha_j - beta_j) Omega_j
double homological_divisor(const MonomialIndex& idx, const spectrum::FrequencyModel& model);

struct DivisorBelowFloor : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// solve {N^, chi} + K = 0: chi coefficient = i K_idx / divisor(idx);
// throws DivisorBelowFloor naming the offending monomial when |divisor| < floor
Poly solve_homological(const Poly& k, const spectrum::FrequencyModel& model, double floor);

// N^ as a Poly for the given model restricted to the modes appearing in
// support (plus the Y part): used to verify the homological identity
Poly n_hat_restricted(const spectrum::FrequencyModel& model, const Poly& support);

// sum_{l >= min_order} ad(f)^l h / l!, ad(f) h := {h, f}; monomials of degree
// > degree_cutoff are discarded at every step
Poly lie_series(const Poly& f, const Poly& h, int min_order, int degree_cutoff);

}  // namespace cascade::nf
