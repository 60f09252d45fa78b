#include "cascade/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>
#include <unordered_set>

#include "cascade/resonance.hpp"
#include "cascade/rng.hpp"

namespace cascade::spectrum {

namespace {
double angle_bracket(std::int64_t x) { return std::max<double>(1.0, static_cast<double>(std::llabs(x))); }
double ell_bracket(const std::vector<int>& ell) {
    std::int64_t s = 0;
    for (int e : ell) s += std::abs(e);
    return std::max<double>(1.0, static_cast<double>(s));
}
}  // namespace

GenericityResult check_L_generic(const TangentialSites& sites, int L) {
    GenericityResult res;
    const int d = sites.d();
    std::vector<int> ell(static_cast<std::size_t>(d), 0);
    std::function<bool(int, int)> rec = [&](int pos, int left) -> bool {
        if (pos == d) {
            bool zero = true;
            std::int64_t s = 0;
            for (int i = 0; i < d; ++i) {
                zero = zero && ell[static_cast<std::size_t>(i)] == 0;
                s += static_cast<std::int64_t>(ell[static_cast<std::size_t>(i)]) *
                     sites.m[static_cast<std::size_t>(i)];
            }
            if (!zero && s == 0) {
                res.pass = false;
                res.witness = ell;
                return false;
            }
            return true;
        }
        for (int v = -left; v <= left; ++v) {
            ell[static_cast<std::size_t>(pos)] = v;
            if (!rec(pos + 1, left - std::abs(v))) return false;
        }
        return true;
    };
    rec(0, L);
    return res;
}

TangentialSites make_sites(std::vector<std::int64_t> m, int require_L) {
    TangentialSites s;
    s.m = std::move(m);
    for (std::size_t i = 0; i < s.m.size(); ++i)
        for (std::size_t j = i + 1; j < s.m.size(); ++j)
            if (s.m[i] == s.m[j]) throw std::invalid_argument("make_sites: duplicate site");
    const GenericityResult g = check_L_generic(s, require_L);
    if (!g.pass) {
        std::string w = "make_sites: sites not L-generic at L=" + std::to_string(require_L) +
                        ", witness ell=(";
        for (std::size_t i = 0; i < g.witness.size(); ++i)
            w += (i ? "," : "") + std::to_string(g.witness[i]);
        throw std::invalid_argument(w + ")");
    }
    s.genericity_l = require_L;
    return s;
}

double CorrectionModel::varpi(std::int64_t m, double eps) const {
    if (!enabled) return 0.0;
    return m0 * eps * eps * hash_noise(seed, 0, m, 0);
}
double CorrectionModel::theta_m(std::int64_t m, double eps) const {
    if (!enabled) return 0.0;
    return m0 * eps * eps * hash_noise(seed, 1, m, 0);
}
double CorrectionModel::theta_mn(std::int64_t m, std::int64_t n, double eps) const {
    if (!enabled) return 0.0;
    return m0 * eps * eps * hash_noise(seed, 2, m, n);
}

ModeClass FrequencyModel::classify_mode(Mode j) const {
    if (j.n == 0 && sites.is_site(j.m)) return ModeClass::TangentialS0;
    if (j.n != 0 && sites.is_site(j.m)) return ModeClass::SiteColumn;
    return ModeClass::Generic;
}

std::vector<double> char_poly_coeffs(const std::vector<double>& lambda) {
    const int d = static_cast<int>(lambda.size());
    // prod (t + lambda_i)
    std::vector<double> full{1.0};
    for (double lv : lambda) {
        std::vector<double> next(full.size() + 1, 0.0);
        for (std::size_t k = 0; k < full.size(); ++k) {
            next[k + 1] += full[k];       // t * coeff
            next[k] += lv * full[k];      // lambda_i * coeff
        }
        full = std::move(next);
    }
    // - 2 sum_i lambda_i prod_{k != i} (t + lambda_k)
    for (int i = 0; i < d; ++i) {
        std::vector<double> part{1.0};
        for (int k = 0; k < d; ++k) {
            if (k == i) continue;
            std::vector<double> next(part.size() + 1, 0.0);
            for (std::size_t q = 0; q < part.size(); ++q) {
                next[q + 1] += part[q];
                next[q] += lambda[static_cast<std::size_t>(k)] * part[q];
            }
            part = std::move(next);
        }
        for (std::size_t q = 0; q < part.size(); ++q)
            full[q] -= 2.0 * lambda[static_cast<std::size_t>(i)] * part[q];
    }
    return full;  // degree d, leading coefficient 1
}

std::vector<std::complex<double>> mu_roots(const std::vector<double>& lambda) {
    const std::vector<double> c = char_poly_coeffs(lambda);
    const int d = static_cast<int>(lambda.size());
    if (d == 0) return {};
    auto eval = [&](std::complex<double> t) {
        std::complex<double> v = 0.0;
        for (int k = d; k >= 0; --k) v = v * t + c[static_cast<std::size_t>(k)];
        return v;
    };
    auto deriv = [&](std::complex<double> t) {
        std::complex<double> v = 0.0;
        for (int k = d; k >= 1; --k)
            v = v * t + static_cast<double>(k) * c[static_cast<std::size_t>(k)];
        return v;
    };
    // Durand-Kerner from a deterministic spread of starting points
    std::vector<std::complex<double>> z(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
        z[static_cast<std::size_t>(i)] =
            std::polar(1.5 + 0.3 * i, 0.7 + 2.0 * M_PI * i / std::max(1, d));
    for (int iter = 0; iter < 200; ++iter) {
        double moved = 0.0;
        for (int i = 0; i < d; ++i) {
            std::complex<double> den = 1.0;
            for (int k = 0; k < d; ++k)
                if (k != i) den *= z[static_cast<std::size_t>(i)] - z[static_cast<std::size_t>(k)];
            const std::complex<double> step = eval(z[static_cast<std::size_t>(i)]) / den;
            z[static_cast<std::size_t>(i)] -= step;
            moved = std::max(moved, std::abs(step));
        }
        if (moved < 1e-14) break;
    }
    // Newton polish
    for (auto& root : z) {
        for (int it = 0; it < 4; ++it) {
            const std::complex<double> dv = deriv(root);
            if (std::abs(dv) < 1e-300) break;
            root -= eval(root) / dv;
        }
        if (std::fabs(root.imag()) < 1e-9) root = {root.real(), 0.0};
    }
    double max_c = 0.0;
    for (double v : c) max_c = std::max(max_c, std::fabs(v));
    for (const auto& root : z) {
        if (std::abs(eval(root)) > 1e-10 * (1.0 + max_c))
            throw std::runtime_error("mu_roots: residual above tolerance");
    }
    std::sort(z.begin(), z.end(), [](const auto& a, const auto& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return z;
}

std::vector<double> omega_tangential(const FrequencyModel& model) {
    std::vector<double> w(model.params.lambda.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double m = static_cast<double>(model.sites.m[i]);
        w[i] = m * m - model.params.eps * model.params.lambda[i];
    }
    return w;
}

std::int64_t omega_tilde_at_zero(const FrequencyModel& model, Mode j) {
    switch (model.classify_mode(j)) {
        case ModeClass::TangentialS0:
            throw std::invalid_argument("omega_tilde_at_zero: tangential site " + j.str());
        case ModeClass::SiteColumn: return j.n * j.n;
        case ModeClass::Generic: return j.norm2();
    }
    return 0;
}

double omega_normal(const FrequencyModel& model, Mode j) {
    const double eps = model.params.eps;
    switch (model.classify_mode(j)) {
        case ModeClass::TangentialS0:
            throw std::invalid_argument("omega_normal: tangential site " + j.str());
        case ModeClass::SiteColumn: {
            const auto roots = mu_roots(model.params.lambda);
            const int i = model.sites.site_index(j.m);
            double v = eps * roots[static_cast<std::size_t>(i)].real() +
                       static_cast<double>(j.n * j.n);
            v += model.corrections.theta_m(j.m, eps) / (angle_bracket(j.m) * angle_bracket(j.m));
            v += model.corrections.theta_mn(j.m, j.n, eps) /
                 (angle_bracket(j.m) * angle_bracket(j.m) + angle_bracket(j.n) * angle_bracket(j.n));
            return v;
        }
        case ModeClass::Generic: {
            double v = static_cast<double>(j.norm2());
            if (j.n == 0) {
                v += model.corrections.varpi(j.m, eps) / angle_bracket(j.m);
            } else {
                v += model.corrections.theta_m(j.m, eps) /
                     (angle_bracket(j.m) * angle_bracket(j.m));
                v += model.corrections.theta_mn(j.m, j.n, eps) /
                     (angle_bracket(j.m) * angle_bracket(j.m) +
                      angle_bracket(j.n) * angle_bracket(j.n));
            }
            return v;
        }
    }
    return 0.0;
}

double small_divisor(const FrequencyModel& model, const SmallDivisorQuery& q) {
    const std::vector<double> w = omega_tangential(model);
    double v = 0.0;
    for (std::size_t i = 0; i < q.ell.size() && i < w.size(); ++i) v += w[i] * q.ell[i];
    for (std::size_t i = 0; i < q.modes.size(); ++i)
        v += q.sigma[i] * omega_normal(model, q.modes[i]);
    return v;
}

double gamma_defect(const FrequencyModel& model, const std::array<Mode, 4>& rect) {
    const Mode s1 = rect[0] + rect[2], s2 = rect[1] + rect[3];
    const std::int64_t n1 = rect[0].norm2() + rect[2].norm2();
    const std::int64_t n2 = rect[1].norm2() + rect[3].norm2();
    if (!(s1 == s2) || n1 != n2)
        throw std::invalid_argument("gamma_defect: modes do not form a rectangle");
    return omega_normal(model, rect[0]) - omega_normal(model, rect[1]) +
           omega_normal(model, rect[2]) - omega_normal(model, rect[3]);
}

// ---------------------------------------------------------------------------
// Melnikov Monte Carlo

namespace {

struct ScanTuple {
    std::vector<Mode> modes;
    std::vector<int> sigma;
    std::vector<int> ell;
};

// Admissible tuples whose integer divisor part is small enough to possibly
// violate the Melnikov bound for some lambda. Meet-in-the-middle on the
// selection rules for p=4, direct scan for p=2.
std::vector<ScanTuple> scan_candidates(const FrequencyModel& model, const MelnikovConfig& cfg,
                                       long long* scanned) {
    const std::int64_t W = cfg.mode_window;
    const std::int64_t N = model.sublattice_n;
    const int d = model.sites.d();

    std::vector<Mode> modes;
    for (std::int64_t m = -W; m <= W; ++m)
        for (std::int64_t n = -W; n <= W; ++n) {
            if (n % N != 0) continue;
            const Mode j{m, n};
            if (model.classify_mode(j) == ModeClass::TangentialS0) continue;
            modes.push_back(j);
        }
    const int nm = static_cast<int>(modes.size());

    // |eps F| is bounded by eps (|ell|_1 + p max|mu|) plus correction slack;
    // integer parts beyond that cannot violate
    double mu_cap = 1.0;
    {
        std::vector<double> lam(static_cast<std::size_t>(d), 0.99);
        for (const auto& r : mu_roots(lam)) mu_cap = std::max(mu_cap, std::abs(r) + 1.0);
    }
    const double eps = model.params.eps;
    const std::int64_t kcap = static_cast<std::int64_t>(
        std::ceil(eps * (cfg.ell_max + cfg.p * mu_cap) + 8.0 * model.corrections.m0 * eps * eps) +
        1);

    std::vector<ScanTuple> out;
    std::unordered_set<std::uint64_t> seen;
    auto push = [&](ScanTuple t, std::int64_t k) {
        // per-tuple reachability first: |eps F| <= eps(|ell|_1 + #site-modes * mu_cap)
        int nsite = 0, ell1 = 0;
        for (const Mode& mm : t.modes)
            if (model.classify_mode(mm) == ModeClass::SiteColumn) ++nsite;
        for (int e : t.ell) ell1 += std::abs(e);
        const double reach = eps * (ell1 + nsite * mu_cap) +
                             8.0 * model.corrections.m0 * eps * eps + cfg.gamma * eps;
        if (std::fabs(static_cast<double>(k)) > reach) return;
        std::uint64_t h = 0xcbf29ce484222325ull;
        std::vector<std::uint64_t> parts;
        for (std::size_t i = 0; i < t.modes.size(); ++i)
            parts.push_back(ModeHash{}(t.modes[i]) * 2 + (t.sigma[i] > 0 ? 1 : 0));
        std::sort(parts.begin(), parts.end());
        for (std::uint64_t p : parts) h = (h ^ p) * 0x100000001b3ull;
        for (int e : t.ell) h = (h ^ static_cast<std::uint64_t>(e + 4096)) * 0x100000001b3ull;
        if (!seen.insert(h).second) return;
        if (cfg.exclude_resonant) {
            resonance::Tuple rt{t.modes, t.sigma, t.ell};
            const auto rc = resonance::classify(rt, model);
            if (rc.tag != resonance::ResonanceTag::NonResonant) return;
        }
        out.push_back(std::move(t));
        if (out.size() > 4000000)
            throw std::runtime_error(
                "melnikov: candidate tuple list exceeds the memory budget; shrink the window");
    };

    std::vector<int> ell(static_cast<std::size_t>(d), 0);
    std::function<void(int, int, const std::function<void()>&)> rec =
        [&](int pos, int left, const std::function<void()>& fn) {
            if (pos == d) {
                fn();
                return;
            }
            for (int v = -left; v <= left; ++v) {
                ell[static_cast<std::size_t>(pos)] = v;
                rec(pos + 1, left - std::abs(v), fn);
            }
        };

    std::vector<int> cls(static_cast<std::size_t>(nm));
    for (int i = 0; i < nm; ++i)
        cls[static_cast<std::size_t>(i)] =
            model.classify_mode(modes[static_cast<std::size_t>(i)]) == ModeClass::Generic ? 1 : 0;

    if (cfg.p == 2) {
        rec(0, cfg.ell_max, [&]() {
            std::int64_t eta_ell = 0, pi_ell = 0, w0ell = 0;
            bool lead_neg = false, seen_nz = false;
            for (int i = 0; i < d; ++i) {
                const int e = ell[static_cast<std::size_t>(i)];
                eta_ell += e;
                pi_ell += static_cast<std::int64_t>(e) * model.sites.m[static_cast<std::size_t>(i)];
                w0ell += static_cast<std::int64_t>(e) * model.sites.m[static_cast<std::size_t>(i)] *
                         model.sites.m[static_cast<std::size_t>(i)];
                if (!seen_nz && e != 0) {
                    seen_nz = true;
                    lead_neg = e < 0;
                }
            }
            if (lead_neg) return;
            for (int i = 0; i < nm; ++i)
                for (int j = i; j < nm; ++j)
                    for (int si : {1, -1})
                        for (int sj : {1, -1}) {
                            if (i == j && !(si == 1 && sj == -1) && !(si == 1 && sj == 1)) continue;
                            if (!seen_nz && si < 0) continue;  // global sign canonical
                            const Mode mi = modes[static_cast<std::size_t>(i)];
                            const Mode mj = modes[static_cast<std::size_t>(j)];
                            const int ci = cls[static_cast<std::size_t>(i)];
                            const int cj = cls[static_cast<std::size_t>(j)];
                            if (si * mi.n + sj * mj.n != 0) continue;
                            if (si * ci + sj * cj + eta_ell != 0) continue;
                            if (si * ci * mi.m + sj * cj * mj.m + pi_ell != 0) continue;
                            ++*scanned;
                            const std::int64_t k =
                                w0ell + si * omega_tilde_at_zero(model, mi) +
                                sj * omega_tilde_at_zero(model, mj);
                            if (std::llabs(k) > kcap) continue;
                            push({{mi, mj}, {si, sj}, ell}, k);
                        }
        });
        return out;
    }

    // p = 4: pair tables keyed by the tilde selection sums
    struct PairEntry {
        std::int64_t key;
        std::int64_t k;
        int i, j, si, sj;
    };
    auto pack = [](std::int64_t eta, std::int64_t pix, std::int64_t piy) {
        return ((eta + 8) << 42) + ((pix + (1ll << 19)) << 21) + (piy + (1ll << 19));
    };
    auto make_entry = [&](int i, int j, int si, int sj) {
        PairEntry e{0, 0, i, j, si, sj};
        std::int64_t eta = 0, pix = 0, piy = 0;
        for (auto [idx, s] : {std::pair{i, si}, std::pair{j, sj}}) {
            const Mode& mm = modes[static_cast<std::size_t>(idx)];
            piy += s * mm.n;
            if (cls[static_cast<std::size_t>(idx)] == 1) {
                eta += s;
                pix += s * mm.m;
            }
            e.k += s * omega_tilde_at_zero(model, mm);
        }
        e.key = pack(eta, pix, piy);
        return e;
    };
    std::vector<PairEntry> tpp, tpm, tmm;
    for (int i = 0; i < nm; ++i)
        for (int j = i; j < nm; ++j) {
            tpp.push_back(make_entry(i, j, 1, 1));
            tmm.push_back(make_entry(i, j, -1, -1));
            tpm.push_back(make_entry(i, j, 1, -1));
            if (i != j) tpm.push_back(make_entry(i, j, -1, 1));
        }
    auto by_key = [](const PairEntry& a, const PairEntry& b) {
        return a.key != b.key ? a.key < b.key : a.k < b.k;
    };
    std::sort(tpp.begin(), tpp.end(), by_key);
    std::sort(tpm.begin(), tpm.end(), by_key);
    std::sort(tmm.begin(), tmm.end(), by_key);

    rec(0, cfg.ell_max, [&]() {
        std::int64_t eta_ell = 0, pi_ell = 0, w0ell = 0;
        bool lead_neg = false, seen_nz = false;
        for (int i = 0; i < d; ++i) {
            const int e = ell[static_cast<std::size_t>(i)];
            eta_ell += e;
            pi_ell += static_cast<std::int64_t>(e) * model.sites.m[static_cast<std::size_t>(i)];
            w0ell += static_cast<std::int64_t>(e) * model.sites.m[static_cast<std::size_t>(i)] *
                     model.sites.m[static_cast<std::size_t>(i)];
            if (!seen_nz && e != 0) {
                seen_nz = true;
                lead_neg = e < 0;
            }
        }
        if (lead_neg) return;
        const std::array<const std::vector<PairEntry>*, 3> tables{&tpp, &tpm, &tmm};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                if (!seen_nz && a > b) continue;
                const auto& t12 = *tables[static_cast<std::size_t>(a)];
                const auto& t34 = *tables[static_cast<std::size_t>(b)];
                for (const PairEntry& e34 : t34) {
                    std::int64_t eta34 = 0, pix34 = 0, piy34 = 0;
                    for (auto [idx, s] :
                         {std::pair{e34.i, e34.si}, std::pair{e34.j, e34.sj}}) {
                        const Mode& mm = modes[static_cast<std::size_t>(idx)];
                        piy34 += s * mm.n;
                        if (cls[static_cast<std::size_t>(idx)] == 1) {
                            eta34 += s;
                            pix34 += s * mm.m;
                        }
                    }
                    const std::int64_t want = pack(-eta_ell - eta34, -pi_ell - pix34, -piy34);
                    PairEntry probe{want, -w0ell - e34.k - kcap, 0, 0, 0, 0};
                    auto it = std::lower_bound(t12.begin(), t12.end(), probe, by_key);
                    for (; it != t12.end() && it->key == want &&
                           it->k <= -w0ell - e34.k + kcap;
                         ++it) {
                        ++*scanned;
                        push({{modes[static_cast<std::size_t>(it->i)],
                               modes[static_cast<std::size_t>(it->j)],
                               modes[static_cast<std::size_t>(e34.i)],
                               modes[static_cast<std::size_t>(e34.j)]},
                              {it->si, it->sj, e34.si, e34.sj},
                              ell},
                             w0ell + it->k + e34.k);
                    }
                }
            }
    });
    return out;
}

}  // namespace

MelnikovResult melnikov_violation_fraction(const FrequencyModel& model,
                                           const MelnikovConfig& cfg) {
    MelnikovResult res;
    res.samples = cfg.sample_count;
    std::vector<ScanTuple> tuples = scan_candidates(model, cfg, &res.tuples_scanned);
    res.tuples_kept = static_cast<long long>(tuples.size());

    // distinct modes appearing in candidates
    std::vector<Mode> support;
    for (const auto& t : tuples)
        for (const Mode& m : t.modes) support.push_back(m);
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    std::unordered_map<std::uint64_t, std::size_t> mode_slot;
    for (std::size_t i = 0; i < support.size(); ++i)
        mode_slot[ModeHash{}(support[i])] = i;

    const int d = model.sites.d();
    CounterRng rng(cfg.seed);
    std::vector<std::vector<double>> lambdas(static_cast<std::size_t>(cfg.sample_count));
    for (auto& lam : lambdas) {
        lam.resize(static_cast<std::size_t>(d));
        for (auto& v : lam) v = rng.uniform(0.5 + 1e-9, 1.0 - 1e-9);
    }

    const int nthreads = std::max(1, cfg.threads);
    std::vector<long long> violations(static_cast<std::size_t>(nthreads), 0);
    auto worker = [&](int w) {
        for (int s = w; s < cfg.sample_count; s += nthreads) {
            FrequencyModel local = model;
            local.params.lambda = lambdas[static_cast<std::size_t>(s)];
            const std::vector<double> omega = omega_tangential(local);
            std::vector<double> om(support.size());
            for (std::size_t i = 0; i < support.size(); ++i)
                om[i] = omega_normal(local, support[i]);
            bool viol = false;
            for (const auto& t : tuples) {
                double v = 0.0;
                for (std::size_t i = 0; i < t.ell.size(); ++i) v += omega[i] * t.ell[i];
                for (std::size_t i = 0; i < t.modes.size(); ++i)
                    v += t.sigma[i] * om[mode_slot[ModeHash{}(t.modes[i])]];
                const double thr =
                    cfg.gamma * local.params.eps / std::pow(ell_bracket(t.ell), cfg.tau);
                if (std::fabs(v) < thr) {
                    viol = true;
                    break;
                }
            }
            if (viol) ++violations[static_cast<std::size_t>(w)];
        }
    };
    if (nthreads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < nthreads; ++w) pool.emplace_back(worker, w);
        for (auto& th : pool) th.join();
    }
    long long total = 0;
    for (long long v : violations) total += v;
    res.fraction = cfg.sample_count > 0 ? static_cast<double>(total) / cfg.sample_count : 0.0;
    return res;
}

}  // namespace cascade::spectrum
