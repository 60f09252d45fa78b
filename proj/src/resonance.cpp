#include "cascade/resonance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_set>

#include "cascade/rng.hpp"
#include "json.hpp"

namespace cascade::resonance {

using spectrum::FrequencyModel;
using spectrum::ModeClass;

SelectionProfile selection_profile(const MonomialIndex& idx, const FrequencyModel& model) {
    SelectionProfile p;
    for (int e : idx.ell) p.eta_ell += e;
    for (int i = 0; i < idx.d() && i < model.sites.d(); ++i)
        p.pi_ell += static_cast<std::int64_t>(idx.ell[static_cast<std::size_t>(i)]) *
                    model.sites.m[static_cast<std::size_t>(i)];
    auto acc = [&](const SparsePowers& sp, int sign) {
        for (const auto& [j, k] : sp.entries) {
            p.eta_ab += sign * k;
            p.pi_x += sign * k * j.m;
            p.pi_y += sign * k * j.n;
            if (model.classify_mode(j) == ModeClass::Generic) {
                p.eta_tilde += sign * k;
                p.pi_x_tilde += sign * k * j.m;
            }
        }
    };
    acc(idx.alpha, +1);
    acc(idx.beta, -1);
    return p;
}

namespace {

MonomialIndex tuple_index(const Tuple& t) {
    MonomialIndex idx;
    idx.ell = t.ell;
    idx.l.assign(t.ell.size(), 0);
    for (std::size_t i = 0; i < t.modes.size(); ++i) {
        if (t.sigma[i] > 0)
            idx.alpha.add(t.modes[i], 1);
        else
            idx.beta.add(t.modes[i], 1);
    }
    idx.alpha.normalize();
    idx.beta.normalize();
    return idx;
}

bool in_sublattice(Mode j, const FrequencyModel& model) {
    return j.n % model.sublattice_n == 0;
}

}  // namespace

bool is_admissible(const Tuple& t, const FrequencyModel& model) {
    for (const Mode& j : t.modes) {
        if (!in_sublattice(j, model)) return false;
        if (model.classify_mode(j) == ModeClass::TangentialS0)
            throw std::invalid_argument("is_admissible: tangential site mode in tuple");
    }
    const SelectionProfile p = selection_profile(tuple_index(t), model);
    return p.eta_tilde + p.eta_ell == 0 && p.pi_x_tilde + p.pi_ell == 0 && p.pi_y == 0;
}

std::string tag_name(ResonanceTag t) {
    switch (t) {
        case ResonanceTag::Inadmissible: return "inadmissible";
        case ResonanceTag::NonResonant: return "nonresonant";
        case ResonanceTag::R2: return "R2";
        case ResonanceTag::R4Case1: return "R4-case1";
        case ResonanceTag::R4Case2: return "R4-case2";
        case ResonanceTag::R4Case3: return "R4-case3";
        case ResonanceTag::R4Case4: return "R4-case4";
        case ResonanceTag::R4Trace: return "R4-trace";
    }
    return "?";
}

ResonanceClass classify(const Tuple& t, const FrequencyModel& model, std::int64_t m4_cutoff) {
    ResonanceClass out;
    out.m4_cutoff = m4_cutoff;
    if (!is_admissible(t, model)) {
        out.tag = ResonanceTag::Inadmissible;
        return out;
    }
    const std::size_t p = t.modes.size();
    const bool ell_zero =
        std::all_of(t.ell.begin(), t.ell.end(), [](int e) { return e == 0; });

    if (p == 2) {
        if (ell_zero && t.sigma[0] + t.sigma[1] == 0 && t.modes[0] == t.modes[1]) {
            out.tag = ResonanceTag::R2;
            out.witness = "action pair at " + t.modes[0].str();
        }
        return out;
    }
    if (p != 4) return out;

    std::vector<std::size_t> site_idx, gen_idx;
    for (std::size_t i = 0; i < 4; ++i) {
        if (model.classify_mode(t.modes[i]) == ModeClass::SiteColumn)
            site_idx.push_back(i);
        else
            gen_idx.push_back(i);
    }
    auto sigma_sum = [&](const std::vector<std::size_t>& ix) {
        int s = 0;
        for (auto i : ix) s += t.sigma[i];
        return s;
    };
    auto n_multisets_match = [&]() {
        std::vector<std::int64_t> np, nm;
        for (std::size_t i = 0; i < 4; ++i)
            (t.sigma[i] > 0 ? np : nm).push_back(t.modes[i].n);
        std::sort(np.begin(), np.end());
        std::sort(nm.begin(), nm.end());
        return np == nm;
    };

    switch (site_idx.size()) {
        case 0: {
            if (!ell_zero) break;
            std::int64_t ksum = 0;
            for (std::size_t i = 0; i < 4; ++i) ksum += t.sigma[i] * t.modes[i].norm2();
            if (ksum == 0 && sigma_sum(gen_idx) == 0) {
                out.tag = ResonanceTag::R4Case1;
                out.witness = "rectangle";
            }
            break;
        }
        case 2: {
            if (!ell_zero) break;
            if (sigma_sum(site_idx) != 0 || sigma_sum(gen_idx) != 0) break;
            if (t.modes[site_idx[0]].m != t.modes[site_idx[1]].m) break;
            if (t.modes[gen_idx[0]].m != t.modes[gen_idx[1]].m) break;
            if (!n_multisets_match()) break;
            out.tag = ResonanceTag::R4Case2;
            out.witness = "horizontal rectangle, site column " +
                          std::to_string(t.modes[site_idx[0]].m);
            break;
        }
        case 3: {
            if (ell_zero) break;
            const Mode j4 = t.modes[gen_idx[0]];
            if (std::llabs(j4.m) < m4_cutoff) {
                out.tag = ResonanceTag::R4Case3;
                out.witness = "|m4| = " + std::to_string(std::llabs(j4.m)) + " < cutoff " +
                              std::to_string(m4_cutoff);
            }
            break;
        }
        case 4: {
            if (!ell_zero) break;
            if (sigma_sum(site_idx) != 0) break;
            if (!n_multisets_match()) break;
            out.tag = ResonanceTag::R4Case4;
            out.witness = "horizontal trapezoid";
            break;
        }
        default: break;
    }
    if (out.tag == ResonanceTag::NonResonant) {
        // trace-identity resonance: ell = c*(1,...,1), every site column with
        // net mu-coefficient c, integer part zero
        std::map<int, int> mu_coeff;
        for (std::size_t i = 0; i < 4; ++i)
            if (model.classify_mode(t.modes[i]) == ModeClass::SiteColumn)
                mu_coeff[model.sites.site_index(t.modes[i].m)] += t.sigma[i];
        const int d = model.sites.d();
        if (static_cast<int>(mu_coeff.size()) == d && d > 0) {
            const int c = mu_coeff.begin()->second;
            bool uniform = c != 0;
            for (const auto& [site, cc] : mu_coeff) uniform = uniform && cc == c;
            bool ell_match = static_cast<int>(t.ell.size()) == d;
            for (int e : t.ell) ell_match = ell_match && e == c;
            if (uniform && ell_match && k_and_f(t, model).k == 0) {
                out.tag = ResonanceTag::R4Trace;
                out.witness = "trace identity, ell = " + std::to_string(c) + "*(1,..,1)";
            }
        }
    }
    return out;
}

double KF::eval_f(const std::vector<double>& lambda) const {
    double v = 0.0;
    for (std::size_t i = 0; i < ell.size() && i < lambda.size(); ++i)
        v -= lambda[i] * ell[i];
    if (!mus.empty()) {
        const auto roots = spectrum::mu_roots(lambda);
        for (const auto& [site, coeff] : mus)
            v += coeff * roots[static_cast<std::size_t>(site)].real();
    }
    return v;
}

KF k_and_f(const Tuple& t, const FrequencyModel& model) {
    KF kf;
    for (std::size_t i = 0; i < t.ell.size(); ++i) {
        const std::int64_t mi = model.sites.m[i];
        kf.k += static_cast<std::int64_t>(t.ell[i]) * mi * mi;
    }
    std::map<int, int> mu_coeff;
    for (std::size_t i = 0; i < t.modes.size(); ++i) {
        kf.k += t.sigma[i] * spectrum::omega_tilde_at_zero(model, t.modes[i]);
        if (model.classify_mode(t.modes[i]) == ModeClass::SiteColumn)
            mu_coeff[model.sites.site_index(t.modes[i].m)] += t.sigma[i];
    }
    bool ell_nonzero = false;
    for (int e : t.ell) ell_nonzero = ell_nonzero || e != 0;
    if (ell_nonzero) kf.ell = t.ell;
    for (const auto& [site, coeff] : mu_coeff)
        if (coeff != 0) kf.mus.emplace_back(site, coeff);
    return kf;
}

// ---------------------------------------------------------------------------
// Audit

namespace {

struct PairEntry {
    // selection-rule contributions of a signed pair of modes
    std::int64_t key = 0;       // packed (eta_tilde, pi_x_tilde, pi_y)
    std::int64_t k = 0;         // integer divisor part
    int i = 0, j = 0;           // mode indices
    int si = 1, sj = 1;         // signs
};

std::int64_t pack_key(std::int64_t eta, std::int64_t pix, std::int64_t piy) {
    // disjoint bit fields: eta in [-4,4], |pix|,|piy| < 2^19
    return ((eta + 8) << 42) + ((pix + (1ll << 19)) << 21) + (piy + (1ll << 19));
}

struct TupleRec {
    std::array<int, 4> mode_idx;
    std::array<int, 4> sigma;
    std::vector<int> ell;
};

std::string tuple_str(const Tuple& t) {
    std::ostringstream os;
    os << "ell=(";
    for (std::size_t i = 0; i < t.ell.size(); ++i) os << (i ? "," : "") << t.ell[i];
    os << ")";
    for (std::size_t i = 0; i < t.modes.size(); ++i)
        os << " " << (t.sigma[i] > 0 ? "+" : "-") << t.modes[i].str();
    return os.str();
}

std::uint64_t tuple_hash_key(const Tuple& t) {
    std::vector<std::uint64_t> parts;
    for (std::size_t i = 0; i < t.modes.size(); ++i) {
        std::uint64_t h = ModeHash{}(t.modes[i]) * 2 + (t.sigma[i] > 0 ? 1 : 0);
        parts.push_back(h);
    }
    std::sort(parts.begin(), parts.end());
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::uint64_t p : parts) h = (h ^ p) * 0x100000001b3ull;
    for (int e : t.ell) h = (h ^ static_cast<std::uint64_t>(e + 1024)) * 0x100000001b3ull;
    return h;
}

// enumerate ell in Z^d with |ell|_1 <= cap
void each_ell(int d, int cap, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> ell(static_cast<std::size_t>(d), 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
        if (pos == d) {
            fn(ell);
            return;
        }
        for (int v = -left; v <= left; ++v) {
            ell[static_cast<std::size_t>(pos)] = v;
            rec(pos + 1, left - std::abs(v));
        }
    };
    rec(0, cap);
}

}  // namespace

AuditReport nonresonance_audit(const FrequencyModel& model, const AuditConfig& cfg) {
    AuditReport rep;
    const int d = model.sites.d();
    const std::int64_t W = cfg.window;
    const std::int64_t N = model.sublattice_n;

    std::vector<Mode> modes;
    for (std::int64_t m = -W; m <= W; ++m)
        for (std::int64_t n = -W; n <= W; ++n) {
            if (n % N != 0) continue;
            const Mode j{m, n};
            if (model.classify_mode(j) == ModeClass::TangentialS0) continue;
            modes.push_back(j);
        }
    const int nm = static_cast<int>(modes.size());

    // lambda samples for the numeric F == 0 certificate
    CounterRng rng(cfg.seed);
    std::vector<std::vector<double>> samples;
    for (int s = 0; s < cfg.lambda_samples; ++s) {
        std::vector<double> lam(static_cast<std::size_t>(d));
        for (auto& v : lam) v = rng.uniform(0.5 + 1e-9, 1.0 - 1e-9);
        samples.push_back(std::move(lam));
    }

    auto consider = [&](const Tuple& t) {
        const KF kf = k_and_f(t, model);
        if (kf.k != 0) return;
        ++rep.k_zero;
        bool vanish = true;
        if (!kf.f_identically_zero()) {
            for (const auto& lam : samples) {
                if (std::fabs(kf.eval_f(lam)) > cfg.f_tol) {
                    vanish = false;
                    break;
                }
            }
        }
        if (!vanish) return;
        ++rep.f_vanishing;
        const ResonanceClass rc = classify(t, model, cfg.m4_cutoff);
        if (rc.tag == ResonanceTag::R4Trace) ++rep.trace_resonances;
        const bool resonant_tag = rc.tag == ResonanceTag::R2 || rc.tag == ResonanceTag::R4Case1 ||
                                  rc.tag == ResonanceTag::R4Case2 ||
                                  rc.tag == ResonanceTag::R4Case3 ||
                                  rc.tag == ResonanceTag::R4Case4 ||
                                  rc.tag == ResonanceTag::R4Trace;
        bool ell_nonzero = false;
        for (int e : t.ell) ell_nonzero = ell_nonzero || e != 0;
        bool all_site = t.modes.size() == 4;
        for (const Mode& j : t.modes)
            all_site = all_site && model.classify_mode(j) == ModeClass::SiteColumn;
        if (ell_nonzero && all_site && !resonant_tag) {
            // the hyperplane-bound family: log, do not resolve
            rep.case5_log.push_back(tuple_str(t));
            return;
        }
        if (!resonant_tag) rep.counterexamples.push_back(tuple_str(t) + " -> " + tag_name(rc.tag));
    };

    // ---- p = 2 (direct scan; selection rules checked inline)
    if (cfg.include_p2) {
        std::vector<int> cls(static_cast<std::size_t>(nm));
        for (int i = 0; i < nm; ++i)
            cls[static_cast<std::size_t>(i)] =
                model.classify_mode(modes[static_cast<std::size_t>(i)]) == ModeClass::Generic ? 1 : 0;
        each_ell(d, static_cast<int>(W), [&](const std::vector<int>& ell) {
            std::int64_t eta_ell = 0, pi_ell = 0;
            for (int i = 0; i < d; ++i) {
                eta_ell += ell[static_cast<std::size_t>(i)];
                pi_ell += static_cast<std::int64_t>(ell[static_cast<std::size_t>(i)]) *
                          model.sites.m[static_cast<std::size_t>(i)];
            }
            for (int i = 0; i < nm; ++i)
                for (int j = i; j < nm; ++j)
                    for (int si : {1, -1})
                        for (int sj : {1, -1}) {
                            if (i == j && si <= sj && !(si == 1 && sj == 1)) continue;
                            const Mode mi = modes[static_cast<std::size_t>(i)];
                            const Mode mj = modes[static_cast<std::size_t>(j)];
                            const int ci = cls[static_cast<std::size_t>(i)];
                            const int cj = cls[static_cast<std::size_t>(j)];
                            if (si * mi.n + sj * mj.n != 0) continue;
                            if (si * ci + sj * cj + eta_ell != 0) continue;
                            if (si * ci * mi.m + sj * cj * mj.m + pi_ell != 0) continue;
                            Tuple t{{mi, mj}, {si, sj}, ell};
                            ++rep.admissible_scanned;
                            consider(t);
                        }
        });
    }

    // ---- p = 4 (meet in the middle on the selection rules)
    // pair tables per sign pattern
    auto pair_part = [&](int i, int j, int si, int sj) {
        PairEntry e;
        e.i = i;
        e.j = j;
        e.si = si;
        e.sj = sj;
        std::int64_t eta = 0, pix = 0, piy = 0;
        for (auto [idx, s] : {std::pair{i, si}, std::pair{j, sj}}) {
            const Mode& mm = modes[static_cast<std::size_t>(idx)];
            piy += s * mm.n;
            if (model.classify_mode(mm) == ModeClass::Generic) {
                eta += s;
                pix += s * mm.m;
            }
            e.k += s * spectrum::omega_tilde_at_zero(model, mm);
        }
        e.key = pack_key(eta, pix, piy);
        return e;
    };

    std::vector<PairEntry> tpp, tpm, tmm;  // (+,+), ordered (+,-)/(-,+), (-,-)
    for (int i = 0; i < nm; ++i)
        for (int j = i; j < nm; ++j) {
            tpp.push_back(pair_part(i, j, 1, 1));
            tmm.push_back(pair_part(i, j, -1, -1));
            tpm.push_back(pair_part(i, j, 1, -1));
            if (i != j) tpm.push_back(pair_part(i, j, -1, 1));
        }
    auto by_key = [](const PairEntry& a, const PairEntry& b) {
        return a.key != b.key ? a.key < b.key : a.k < b.k;
    };
    std::sort(tpp.begin(), tpp.end(), by_key);
    std::sort(tpm.begin(), tpm.end(), by_key);
    std::sort(tmm.begin(), tmm.end(), by_key);

    std::unordered_set<std::uint64_t> seen;
    each_ell(d, static_cast<int>(W), [&](const std::vector<int>& ell) {
        std::int64_t eta_ell = 0, pi_ell = 0, w0ell = 0;
        for (int i = 0; i < d; ++i) {
            eta_ell += ell[static_cast<std::size_t>(i)];
            pi_ell += static_cast<std::int64_t>(ell[static_cast<std::size_t>(i)]) *
                      model.sites.m[static_cast<std::size_t>(i)];
            w0ell += static_cast<std::int64_t>(ell[static_cast<std::size_t>(i)]) *
                     model.sites.m[static_cast<std::size_t>(i)] *
                     model.sites.m[static_cast<std::size_t>(i)];
        }
        // canonical global sign: first nonzero ell > 0, or (all ell zero and
        // handled by pair pattern choice below)
        bool lead_neg = false, ell_zero = true;
        for (int e : ell) {
            if (e != 0) {
                lead_neg = e < 0;
                ell_zero = false;
                break;
            }
        }
        if (lead_neg) return;

        const std::array<const std::vector<PairEntry>*, 3> tables{&tpp, &tpm, &tmm};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                if (ell_zero && a > b) continue;  // symmetric split
                const auto& t12 = *tables[static_cast<std::size_t>(a)];
                const auto& t34 = *tables[static_cast<std::size_t>(b)];
                for (const PairEntry& e34 : t34) {
                    // required complement in the selection rules
                    std::int64_t eta34, pix34, piy34;
                    {
                        // unpack is avoided: recompute required key from parts
                        // stored implicitly; recompute from modes instead
                        const Mode m1 = modes[static_cast<std::size_t>(e34.i)];
                        const Mode m2 = modes[static_cast<std::size_t>(e34.j)];
                        eta34 = pix34 = piy34 = 0;
                        for (auto [mm, s] : {std::pair{m1, e34.si}, std::pair{m2, e34.sj}}) {
                            piy34 += s * mm.n;
                            if (model.classify_mode(mm) == ModeClass::Generic) {
                                eta34 += s;
                                pix34 += s * mm.m;
                            }
                        }
                    }
                    const std::int64_t want =
                        pack_key(-eta_ell - eta34, -pi_ell - pix34, -piy34);
                    PairEntry probe;
                    probe.key = want;
                    probe.k = -w0ell - e34.k;  // need total K = 0
                    auto lo = std::lower_bound(t12.begin(), t12.end(), probe, by_key);
                    for (auto it = lo; it != t12.end() && it->key == want && it->k == probe.k;
                         ++it) {
                        Tuple t{{modes[static_cast<std::size_t>(it->i)],
                                 modes[static_cast<std::size_t>(it->j)],
                                 modes[static_cast<std::size_t>(e34.i)],
                                 modes[static_cast<std::size_t>(e34.j)]},
                                {it->si, it->sj, e34.si, e34.sj},
                                ell};
                        if (!seen.insert(tuple_hash_key(t)).second) continue;
                        ++rep.admissible_scanned;
                        consider(t);
                    }
                }
            }
    });

    return rep;
}

std::string audit_to_json(const AuditReport& rep) {
    nlohmann::json j{{"admissibleScanned", rep.admissible_scanned},
                     {"kZero", rep.k_zero},
                     {"fVanishing", rep.f_vanishing},
                     {"traceResonances", rep.trace_resonances},
                     {"counterexamples", rep.counterexamples},
                     {"case5Log", rep.case5_log},
                     {"pass", rep.pass()}};
    return j.dump(2);
}

}  // namespace cascade::resonance
