#include "cascade/normal_form.hpp"

#include <algorithm>
#include <climits>
#include <cmath>

#include "json.hpp"

namespace cascade {

// ---------------------------------------------------------------------------
// MonomialIndex

void SparsePowers::add(Mode j, int k) {
    if (k == 0) return;
    for (auto& [m, p] : entries) {
        if (m == j) {
            p += k;
            return;
        }
    }
    entries.emplace_back(j, k);
}

int SparsePowers::power(Mode j) const {
    for (const auto& [m, p] : entries)
        if (m == j) return p;
    return 0;
}

int SparsePowers::total() const {
    int t = 0;
    for (const auto& [m, p] : entries) t += p;
    return t;
}

void SparsePowers::normalize() {
    entries.erase(std::remove_if(entries.begin(), entries.end(),
                                 [](const auto& e) { return e.second == 0; }),
                  entries.end());
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
}

bool operator<(const SparsePowers& a, const SparsePowers& b) {
    return std::lexicographical_compare(
        a.entries.begin(), a.entries.end(), b.entries.begin(), b.entries.end(),
        [](const auto& x, const auto& y) {
            if (!(x.first == y.first)) return x.first < y.first;
            return x.second < y.second;
        });
}

int MonomialIndex::abs_ell() const {
    int s = 0;
    for (int e : ell) s += std::abs(e);
    return s;
}

int MonomialIndex::abs_l() const {
    int s = 0;
    for (int e : l) s += e;
    return s;
}

int MonomialIndex::degree() const { return 2 * abs_l() + alpha.total() + beta.total() - 2; }

MonomialIndex MonomialIndex::conjugated() const {
    MonomialIndex c = *this;
    for (int& e : c.ell) e = -e;
    std::swap(c.alpha, c.beta);
    return c;
}

bool operator<(const MonomialIndex& a, const MonomialIndex& b) {
    if (a.ell != b.ell) return a.ell < b.ell;
    if (a.l != b.l) return a.l < b.l;
    if (!(a.alpha == b.alpha)) return a.alpha < b.alpha;
    return a.beta < b.beta;
}

MonomialIndex operator*(const MonomialIndex& a, const MonomialIndex& b) {
    MonomialIndex r = a;
    for (std::size_t i = 0; i < r.ell.size() && i < b.ell.size(); ++i)
        r.ell[i] += b.ell[i];
    for (std::size_t i = 0; i < r.l.size() && i < b.l.size(); ++i) r.l[i] += b.l[i];
    for (const auto& [m, k] : b.alpha.entries) r.alpha.add(m, k);
    for (const auto& [m, k] : b.beta.entries) r.beta.add(m, k);
    r.alpha.normalize();
    r.beta.normalize();
    return r;
}

namespace nf {

// ---------------------------------------------------------------------------
// Poly

void Poly::add_term(const MonomialIndex& idx, Coeff c) {
    if (c == Coeff{}) return;
    if (d_ == 0) d_ = idx.d();
    auto [it, fresh] = terms_.emplace(idx, c);
    if (!fresh) {
        it->second += c;
        if (it->second == Coeff{}) terms_.erase(it);
    }
}

Coeff Poly::coeff(const MonomialIndex& idx) const {
    const auto it = terms_.find(idx);
    return it == terms_.end() ? Coeff{} : it->second;
}

Poly& Poly::operator+=(const Poly& o) {
    for (const auto& [idx, c] : o.terms_) add_term(idx, c);
    return *this;
}

Poly& Poly::operator*=(double s) {
    if (s == 0.0) {
        terms_.clear();
        return *this;
    }
    for (auto& [idx, c] : terms_) c *= s;
    return *this;
}

Poly operator-(const Poly& a, const Poly& b) {
    Poly r = a;
    for (const auto& [idx, c] : b.terms()) r.add_term(idx, -c);
    return r;
}

Poly Poly::operator*(const Poly& o) const {
    Poly r(d_ ? d_ : o.d_);
    for (const auto& [ia, ca] : terms_)
        for (const auto& [ib, cb] : o.terms_) r.add_term(ia * ib, ca * cb);
    return r;
}

void Poly::prune(double tol) {
    for (auto it = terms_.begin(); it != terms_.end();) {
        if (std::abs(it->second) <= tol)
            it = terms_.erase(it);
        else
            ++it;
    }
}

double Poly::max_abs_coeff() const {
    double m = 0.0;
    for (const auto& [idx, c] : terms_) m = std::max(m, std::abs(c));
    return m;
}

int Poly::min_degree() const {
    int m = INT_MAX;
    for (const auto& [idx, c] : terms_) m = std::min(m, idx.degree());
    return m;
}

bool Poly::is_real_valued(double tol) const {
    for (const auto& [idx, c] : terms_) {
        const Coeff cc = coeff(idx.conjugated());
        if (std::abs(cc - std::conj(c)) > tol) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Poisson bracket

Poly poisson_bracket(const Poly& f, const Poly& g) {
    const int d = f.d() ? f.d() : g.d();
    Poly out(d);
    const Coeff I{0.0, 1.0};
    for (const auto& [fi, cf] : f.terms()) {
        for (const auto& [gi, cg] : g.terms()) {
            // theta/Y part: i * sum_i (l^f_i ell^g_i - ell^f_i l^g_i)
            for (int i = 0; i < d; ++i) {
                const auto ui = static_cast<std::size_t>(i);
                const long w = static_cast<long>(fi.l[ui]) * gi.ell[ui] -
                               static_cast<long>(fi.ell[ui]) * gi.l[ui];
                if (w == 0) continue;
                MonomialIndex idx;
                idx.ell.resize(static_cast<std::size_t>(d));
                idx.l.resize(static_cast<std::size_t>(d));
                for (int k = 0; k < d; ++k) {
                    const auto uk = static_cast<std::size_t>(k);
                    idx.ell[uk] = fi.ell[uk] + gi.ell[uk];
                    idx.l[uk] = fi.l[uk] + gi.l[uk];
                }
                idx.l[ui] -= 1;
                idx.alpha = fi.alpha;
                for (const auto& [m, k] : gi.alpha.entries) idx.alpha.add(m, k);
                idx.beta = fi.beta;
                for (const auto& [m, k] : gi.beta.entries) idx.beta.add(m, k);
                idx.alpha.normalize();
                idx.beta.normalize();
                out.add_term(idx, I * static_cast<double>(w) * cf * cg);
            }
            // a/abar part: i * sum_j (beta^f_j alpha^g_j - alpha^f_j beta^g_j)
            auto a_part = [&](Mode j) -> long {
                return static_cast<long>(fi.beta.power(j)) * gi.alpha.power(j) -
                       static_cast<long>(fi.alpha.power(j)) * gi.beta.power(j);
            };
            std::vector<Mode> support;
            for (const auto& [m, k] : fi.alpha.entries) support.push_back(m);
            for (const auto& [m, k] : fi.beta.entries) support.push_back(m);
            std::sort(support.begin(), support.end());
            support.erase(std::unique(support.begin(), support.end()), support.end());
            for (const Mode& j : support) {
                const long w = a_part(j);
                if (w == 0) continue;
                MonomialIndex idx;
                idx.ell.resize(static_cast<std::size_t>(d));
                idx.l.resize(static_cast<std::size_t>(d));
                for (int k = 0; k < d; ++k) {
                    const auto uk = static_cast<std::size_t>(k);
                    idx.ell[uk] = fi.ell[uk] + gi.ell[uk];
                    idx.l[uk] = fi.l[uk] + gi.l[uk];
                }
                idx.alpha = fi.alpha;
                for (const auto& [m, k] : gi.alpha.entries) idx.alpha.add(m, k);
                idx.alpha.add(j, -1);
                idx.beta = fi.beta;
                for (const auto& [m, k] : gi.beta.entries) idx.beta.add(m, k);
                idx.beta.add(j, -1);
                idx.alpha.normalize();
                idx.beta.normalize();
                out.add_term(idx, I * static_cast<double>(w) * cf * cg);
            }
        }
    }
    out.prune(0.0);
    return out;
}

// ---------------------------------------------------------------------------
// Majorant norm

double majorant_norm(const Poly& f, const MajorantParams& p) {
    // per monomial: |c| e^{rho |ell|_1} r^{degree} (|l| + |ell|_1 + |alpha| + |beta|)
    double s = 0.0;
    for (const auto& [idx, c] : f.terms()) {
        const int weight = idx.abs_l() + idx.abs_ell() + idx.alpha.total() + idx.beta.total();
        s += std::abs(c) * std::exp(p.rho * idx.abs_ell()) *
             std::pow(p.r, idx.degree()) * weight;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Homological equation

double homological_divisor(const MonomialIndex& idx, const spectrum::FrequencyModel& model) {
    const std::vector<double> omega = spectrum::omega_tangential(model);
    double div = 0.0;
    for (std::size_t i = 0; i < omega.size() && i < idx.ell.size(); ++i)
        div += omega[i] * idx.ell[i];
    std::vector<Mode> support;
    for (const auto& [m, k] : idx.alpha.entries) support.push_back(m);
    for (const auto& [m, k] : idx.beta.entries) support.push_back(m);
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    for (const Mode& j : support) {
        const int w = idx.alpha.power(j) - idx.beta.power(j);
        if (w != 0) div += w * spectrum::omega_normal(model, j);
    }
    return div;
}

Poly solve_homological(const Poly& k, const spectrum::FrequencyModel& model, double floor) {
    Poly chi(k.d());
    const Coeff I{0.0, 1.0};
    for (const auto& [idx, c] : k.terms()) {
        const double div = homological_divisor(idx, model);
        if (std::fabs(div) < floor) {
            std::string what = "solve_homological: divisor " + std::to_string(div) +
                               " below floor for monomial ell=(";
            for (std::size_t i = 0; i < idx.ell.size(); ++i)
                what += (i ? "," : "") + std::to_string(idx.ell[i]);
            what += ") modes";
            for (const auto& [m, p] : idx.alpha.entries)
                what += " +" + m.str() + "^" + std::to_string(p);
            for (const auto& [m, p] : idx.beta.entries)
                what += " -" + m.str() + "^" + std::to_string(p);
            throw DivisorBelowFloor(what);
        }
        chi.add_term(idx, I * c / div);
    }
    return chi;
}

Poly n_hat_restricted(const spectrum::FrequencyModel& model, const Poly& support) {
    const int d = model.sites.d();
    Poly n(d);
    const std::vector<double> omega = spectrum::omega_tangential(model);
    for (int i = 0; i < d; ++i) {
        MonomialIndex idx;
        idx.ell.assign(static_cast<std::size_t>(d), 0);
        idx.l.assign(static_cast<std::size_t>(d), 0);
        idx.l[static_cast<std::size_t>(i)] = 1;
        n.add_term(idx, omega[static_cast<std::size_t>(i)]);
    }
    std::vector<Mode> modes;
    for (const auto& [idx, c] : support.terms()) {
        for (const auto& [m, k] : idx.alpha.entries) modes.push_back(m);
        for (const auto& [m, k] : idx.beta.entries) modes.push_back(m);
    }
    std::sort(modes.begin(), modes.end());
    modes.erase(std::unique(modes.begin(), modes.end()), modes.end());
    for (const Mode& j : modes) {
        MonomialIndex idx;
        idx.ell.assign(static_cast<std::size_t>(d), 0);
        idx.l.assign(static_cast<std::size_t>(d), 0);
        idx.alpha.add(j, 1);
        idx.beta.add(j, 1);
        idx.alpha.normalize();
        idx.beta.normalize();
        n.add_term(idx, spectrum::omega_normal(model, j));
    }
    return n;
}

Poly lie_series(const Poly& f, const Poly& h, int min_order, int degree_cutoff) {
    Poly acc(f.d() ? f.d() : h.d());
    Poly term = h;
    double fact = 1.0;
    for (int l = 0; !term.empty(); ++l) {
        if (l > 0) fact *= l;
        if (l >= min_order) {
            Poly t = term;
            t *= 1.0 / fact;
            acc += t;
        }
        Poly next = poisson_bracket(term, f);  // ad(f) term = {term, f}
        // drop monomials beyond the cutoff; bracket degrees are additive so
        // they cannot come back down
        Poly pruned(next.d());
        for (const auto& [idx, c] : next.terms())
            if (idx.degree() <= degree_cutoff) pruned.add_term(idx, c);
        term = std::move(pruned);
        if (l > 64) break;  // safety against a non-terminating input
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Serialization

std::string Poly::to_json_string() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [idx, c] : terms_) {
        nlohmann::json a = nlohmann::json::array(), b = nlohmann::json::array();
        for (const auto& [m, k] : idx.alpha.entries) a.push_back({m.m, m.n, k});
        for (const auto& [m, k] : idx.beta.entries) b.push_back({m.m, m.n, k});
        arr.push_back({{"ell", idx.ell},
                       {"l", idx.l},
                       {"alpha", a},
                       {"beta", b},
                       {"re", c.real()},
                       {"im", c.imag()}});
    }
    return arr.dump();
}

Poly Poly::from_json_string(const std::string& text) {
    const auto arr = nlohmann::json::parse(text);
    Poly p;
    for (const auto& rec : arr) {
        MonomialIndex idx;
        idx.ell = rec.at("ell").get<std::vector<int>>();
        idx.l = rec.at("l").get<std::vector<int>>();
        for (const auto& e : rec.at("alpha"))
            idx.alpha.add({e.at(0).get<std::int64_t>(), e.at(1).get<std::int64_t>()},
                          e.at(2).get<int>());
        for (const auto& e : rec.at("beta"))
            idx.beta.add({e.at(0).get<std::int64_t>(), e.at(1).get<std::int64_t>()},
                         e.at(2).get<int>());
        idx.alpha.normalize();
        idx.beta.normalize();
        p.add_term(idx, {rec.at("re").get<double>(), rec.at("im").get<double>()});
    }
    return p;
}

}  // namespace nf
}  // namespace cascade
