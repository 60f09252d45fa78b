#include "cascade/lattice.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cascade/rng.hpp"
#include "json.hpp"

namespace cascade::lattice {

using json = nlohmann::json;

namespace {

constexpr Mode rot90(Mode v) { return {-v.n, v.m}; }

Mode canon_dir(Mode v) {
    const std::int64_t g = std::gcd(std::llabs(v.m), std::llabs(v.n));
    if (g > 1) v = {v.m / g, v.n / g};
    if (v.m < 0 || (v.m == 0 && v.n < 0)) v = -v;
    return v;
}

std::uint64_t pack(Mode v) {
    assert(std::llabs(v.m) < (1ll << 30) && std::llabs(v.n) < (1ll << 30));
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(static_cast<std::int32_t>(v.m)))
            << 32) |
           static_cast<std::uint32_t>(static_cast<std::int32_t>(v.n));
}

std::int64_t isqrt64(std::int64_t x) {
    if (x < 0) return -1;
    auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(x)));
    while (r > 0 && r * r > x) --r;
    while ((r + 1) * (r + 1) <= x) ++r;
    return r;
}

std::string tuple_str(std::initializer_list<Mode> ms) {
    std::string s;
    for (const Mode& m : ms) {
        if (!s.empty()) s += " ";
        s += m.str();
    }
    return s;
}

}  // namespace

void Rectangle::canonicalize() {
    if (d1[1] < d1[0]) std::swap(d1[0], d1[1]);
    if (d2[1] < d2[0]) std::swap(d2[0], d2[1]);
    if (d2[0] < d1[0] || (d1[0] == d2[0] && d2[1] < d1[1])) std::swap(d1, d2);
}

bool operator<(const Rectangle& a, const Rectangle& b) {
    if (a.d1[0] != b.d1[0]) return a.d1[0] < b.d1[0];
    if (a.d1[1] != b.d1[1]) return a.d1[1] < b.d1[1];
    if (a.d2[0] != b.d2[0]) return a.d2[0] < b.d2[0];
    return a.d2[1] < b.d2[1];
}

std::vector<Rectangle> enumerate_rectangles(const std::vector<Mode>& modes) {
    // Bucket unordered pairs by (vector sum, norm sum). Two distinct pairs in
    // one bucket cannot share a mode, so every cross pair is a rectangle.
    const int n = static_cast<int>(modes.size());
    struct Entry {
        Mode sum;
        std::int64_t nsum;
        int i, j;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            entries.push_back({modes[i] + modes[j], modes[i].norm2() + modes[j].norm2(), i, j});
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.sum != b.sum) return a.sum < b.sum;
        return a.nsum < b.nsum;
    });
    std::vector<Rectangle> out;
    for (std::size_t lo = 0; lo < entries.size();) {
        std::size_t hi = lo + 1;
        while (hi < entries.size() && entries[hi].sum == entries[lo].sum &&
               entries[hi].nsum == entries[lo].nsum)
            ++hi;
        for (std::size_t a = lo; a < hi; ++a)
            for (std::size_t b = a + 1; b < hi; ++b) {
                Rectangle r{{modes[entries[a].i], modes[entries[a].j]},
                            {modes[entries[b].i], modes[entries[b].j]}};
                r.canonicalize();
                out.push_back(r);
            }
        lo = hi;
    }
    std::sort(out.begin(), out.end());
    return out;
}

int Candidate::total_modes() const {
    int n = 0;
    for (const auto& gen : generations) n += static_cast<int>(gen.size());
    return n;
}

int Candidate::offset(int gen_idx) const {
    int n = 0;
    for (int k = 0; k < gen_idx; ++k) n += static_cast<int>(generations[k].size());
    return n;
}

int Candidate::gen_of(int flat) const {
    for (int k = 0; k < g; ++k) {
        if (flat < static_cast<int>(generations[k].size())) return k;
        flat -= static_cast<int>(generations[k].size());
    }
    return -1;
}

Mode Candidate::mode_at(int flat) const {
    for (const auto& gen : generations) {
        if (flat < static_cast<int>(gen.size())) return gen[static_cast<std::size_t>(flat)];
        flat -= static_cast<int>(gen.size());
    }
    return {};
}

std::vector<Mode> Candidate::all_modes() const {
    std::vector<Mode> v;
    v.reserve(static_cast<std::size_t>(total_modes()));
    for (const auto& gen : generations) v.insert(v.end(), gen.begin(), gen.end());
    return v;
}

double right_angle_margin(const std::vector<Mode>& modes) {
    double margin = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(modes.size());
    auto consider = [&](std::int64_t m) {
        margin = std::min(margin, static_cast<double>(std::llabs(m)));
    };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const Mode j1 = modes[i], j2 = modes[j];
            // right angle at j2: (j1-j2).((m,0)-j2) = 0
            const std::int64_t den = j1.m - j2.m;
            const std::int64_t num = (j1.m - j2.m) * j2.m + (j1.n - j2.n) * j2.n;
            if (den != 0) {
                if (num % den == 0) consider(num / den);
            } else if (num == 0) {
                consider(0);  // whole axis; only possible with degenerate input
            }
            if (j < i) continue;  // the axis-vertex case is pair-symmetric
            // right angle at (m,0): m^2 - (m1+m2) m + (m1 m2 + n1 n2) = 0
            const std::int64_t b = j1.m + j2.m;
            const std::int64_t c = j1.m * j2.m + j1.n * j2.n;
            const std::int64_t disc = b * b - 4 * c;
            if (disc < 0) continue;
            const std::int64_t s = isqrt64(disc);
            if (s * s != disc) continue;
            if ((b + s) % 2 == 0) consider((b + s) / 2);
            if ((b - s) % 2 == 0) consider((b - s) / 2);
        }
    }
    return margin;
}

PropertyReport verify_properties(const Candidate& cand, bool early_exit) {
    PropertyReport rep;
    auto fail = [&](int p, const std::string& w) {
        if (rep.prop[static_cast<std::size_t>(p)].pass) {
            rep.prop[static_cast<std::size_t>(p)].pass = false;
            rep.prop[static_cast<std::size_t>(p)].witness = w;
        }
    };
    auto done = [&]() { return early_exit && !rep.all_pass(); };

    const std::vector<Mode> modes = cand.all_modes();
    const int n = static_cast<int>(modes.size());
    std::unordered_set<std::uint64_t> mode_set;
    mode_set.reserve(static_cast<std::size_t>(n) * 2);
    for (const Mode& m : modes) mode_set.insert(pack(m));
    auto contains = [&](Mode m) { return mode_set.count(pack(m)) != 0; };

    // VII: no modes on the axes
    for (const Mode& m : modes)
        if (m.m == 0 || m.n == 0) fail(6, m.str());
    if (done()) return rep;

    // VI a/b: antipodal pairs; signed triples (indices may repeat: 2j = j')
    for (int i = 0; i < n && !done(); ++i) {
        if (modes[i] != Mode{0, 0} && contains(-modes[i]))
            fail(5, tuple_str({modes[i], -modes[i]}) + " : j1 + j2 = 0");
        if (contains(2 * modes[i]) && 2 * modes[i] != modes[i])
            fail(5, tuple_str({modes[i], 2 * modes[i], modes[i]}) + " : j1 - j2 + j3 = 0");
        for (int j = i + 1; j < n; ++j) {
            if (contains(modes[i] + modes[j]))
                fail(5,
                     tuple_str({modes[i], modes[i] + modes[j], modes[j]}) + " : j1 - j2 + j3 = 0");
        }
    }
    if (done()) return rep;

    // VIII: no pair forms a right angle with the origin (at any of the three
    // vertices)
    for (int i = 0; i < n && !done(); ++i) {
        for (int j = i + 1; j < n; ++j) {
            const Mode a = modes[i], b = modes[j];
            if (a.dot(b) == 0) fail(7, tuple_str({a, b}) + " : j1 . j2 = 0");
            if ((a - b).dot(b) == 0) fail(7, tuple_str({a, b}) + " : (j1-j2) . j2 = 0");
            if ((b - a).dot(a) == 0) fail(7, tuple_str({a, b}) + " : (j2-j1) . j1 = 0");
        }
    }
    if (done()) return rep;

    // Family structure (II, III, IV). The tree may be absent for ad-hoc
    // candidates; then the structural properties fail with a note.
    const int total = cand.total_modes();
    const bool has_tree = static_cast<int>(cand.tree.spouse.size()) == total &&
                          static_cast<int>(cand.tree.children.size()) == total &&
                          static_cast<int>(cand.tree.sibling.size()) == total &&
                          static_cast<int>(cand.tree.parents.size()) == total;
    std::vector<Rectangle> families;
    if (!has_tree) {
        fail(1, "no family tree");
        fail(2, "no family tree");
    } else {
        auto gen_size = [&](int k) { return static_cast<int>(cand.generations[static_cast<std::size_t>(k)].size()); };
        for (int k = 0; k < cand.g; ++k) {
            const int off = cand.offset(k);
            for (int i = 0; i < gen_size(k); ++i) {
                const int fi = off + i;
                const Mode mi = modes[static_cast<std::size_t>(fi)];
                if (k + 1 < cand.g) {
                    const int sp = cand.tree.spouse[static_cast<std::size_t>(fi)];
                    const auto ch = cand.tree.children[static_cast<std::size_t>(fi)];
                    if (sp < 0 || cand.gen_of(sp) != k || sp == fi)
                        fail(1, "spouse missing/invalid for " + mi.str());
                    else if (cand.tree.spouse[static_cast<std::size_t>(sp)] != fi)
                        fail(1, "spouse map not involutive at " + mi.str());
                    if (ch[0] < 0 || ch[1] < 0 || ch[0] == ch[1] ||
                        cand.gen_of(ch[0]) != k + 1 || cand.gen_of(ch[1]) != k + 1) {
                        fail(1, "children missing/invalid for " + mi.str());
                    } else if (sp >= 0 && sp != fi) {
                        const Mode ms = modes[static_cast<std::size_t>(sp)];
                        const Mode c1 = modes[static_cast<std::size_t>(ch[0])];
                        const Mode c2 = modes[static_cast<std::size_t>(ch[1])];
                        const bool rect = (mi + ms == c1 + c2) &&
                                          (mi.norm2() + ms.norm2() == c1.norm2() + c2.norm2());
                        if (!rect || mi == ms)
                            fail(1, "family not a non-degenerate rectangle: " +
                                        tuple_str({mi, c1, ms, c2}));
                        if (fi < sp) {
                            Rectangle r{{mi, ms}, {c1, c2}};
                            r.canonicalize();
                            families.push_back(r);
                        }
                    }
                }
                if (k > 0) {
                    const int sib = cand.tree.sibling[static_cast<std::size_t>(fi)];
                    const auto pa = cand.tree.parents[static_cast<std::size_t>(fi)];
                    if (sib < 0 || cand.gen_of(sib) != k || sib == fi)
                        fail(2, "sibling missing/invalid for " + mi.str());
                    else if (cand.tree.sibling[static_cast<std::size_t>(sib)] != fi)
                        fail(2, "sibling map not involutive at " + mi.str());
                    if (pa[0] < 0 || pa[1] < 0 || pa[0] == pa[1] || cand.gen_of(pa[0]) != k - 1 ||
                        cand.gen_of(pa[1]) != k - 1) {
                        fail(2, "parents missing/invalid for " + mi.str());
                    } else {
                        if (cand.tree.spouse[static_cast<std::size_t>(pa[0])] != pa[1])
                            fail(2, "parents are not spouses for " + mi.str());
                        const auto ch = cand.tree.children[static_cast<std::size_t>(pa[0])];
                        const bool match = (ch[0] == fi && ch[1] == sib) ||
                                           (ch[0] == sib && ch[1] == fi);
                        if (!match) fail(2, "parents' children do not match " + mi.str());
                    }
                    // IV: spouse != sibling where both exist
                    if (k + 1 < cand.g) {
                        const int sp = cand.tree.spouse[static_cast<std::size_t>(fi)];
                        if (sp >= 0 && sp == sib)
                            fail(3, mi.str() + " has spouse == sibling");
                    }
                }
            }
        }
        std::sort(families.begin(), families.end());
    }
    rep.family_count = static_cast<long long>(families.size());
    if (done()) return rep;

    auto is_family = [&](const Rectangle& r) {
        return std::binary_search(families.begin(), families.end(), r);
    };

    // V(a): every rectangle is a nuclear family
    const std::vector<Rectangle> rects = enumerate_rectangles(modes);
    rep.rectangle_count = static_cast<long long>(rects.size());
    for (const Rectangle& r : rects) {
        if (!is_family(r))
            fail(4, "non-family rectangle " + tuple_str({r.d1[0], r.d2[0], r.d1[1], r.d2[1]}));
    }
    if (done()) return rep;

    // I and V(b): right-angle triples. Right angle at B between A and C
    // completes to D = A + C - B; D must be in the set (I) and the rectangle
    // must be a family (V). Perpendicularity is exact: primitive directions.
    {
        std::vector<std::pair<std::uint64_t, int>> dirs(static_cast<std::size_t>(n));
        for (int bidx = 0; bidx < n && !done(); ++bidx) {
            const Mode B = modes[bidx];
            dirs.clear();
            for (int a = 0; a < n; ++a) {
                if (a == bidx) continue;
                dirs.emplace_back(pack(canon_dir(modes[a] - B)), a);
            }
            std::sort(dirs.begin(), dirs.end());
            for (const auto& [key_a, a] : dirs) {
                const std::uint64_t want = pack(canon_dir(rot90(modes[a] - B)));
                auto it = std::lower_bound(dirs.begin(), dirs.end(),
                                           std::make_pair(want, std::numeric_limits<int>::min()));
                for (; it != dirs.end() && it->first == want; ++it) {
                    const int cidx = it->second;
                    if (cidx <= a) continue;
                    const Mode A = modes[a], C = modes[cidx];
                    const Mode D = A + C - B;
                    if (!contains(D)) {
                        fail(0, "open rectangle, right angle at " + B.str() + ": " +
                                    tuple_str({A, B, C}) + " missing " + D.str());
                        continue;
                    }
                    Rectangle r{{A, C}, {B, D}};
                    r.canonicalize();
                    if (!is_family(r))
                        fail(4, "right-angle triple outside families: " + tuple_str({A, B, C}));
                }
            }
        }
    }
    if (done()) return rep;

    // VI(c): 4-point relations j1 - j2 + j3 - j4 = 0 (vector only). Bucket
    // unordered pairs *including* self-pairs by their sum; every cross pair in
    // a bucket is a relation and must be a family diagonal pairing.
    {
        std::vector<std::array<std::int64_t, 3>> sums;  // key, i, j
        sums.reserve(static_cast<std::size_t>(n) * (n + 1) / 2);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                sums.push_back({static_cast<std::int64_t>(pack(modes[i] + modes[j])), i, j});
        std::sort(sums.begin(), sums.end());
        for (std::size_t lo = 0; lo < sums.size() && !done();) {
            std::size_t hi = lo + 1;
            while (hi < sums.size() && sums[hi][0] == sums[lo][0]) ++hi;
            for (std::size_t a = lo; a < hi && !done(); ++a)
                for (std::size_t b = a + 1; b < hi; ++b) {
                    const Mode p1 = modes[static_cast<std::size_t>(sums[a][1])];
                    const Mode p2 = modes[static_cast<std::size_t>(sums[a][2])];
                    const Mode q1 = modes[static_cast<std::size_t>(sums[b][1])];
                    const Mode q2 = modes[static_cast<std::size_t>(sums[b][2])];
                    if (sums[a][1] == sums[a][2] || sums[b][1] == sums[b][2]) {
                        fail(5, tuple_str({p1, q1, p2, q2}) + " : midpoint relation");
                        continue;
                    }
                    Rectangle r{{p1, p2}, {q1, q2}};
                    r.canonicalize();
                    if (!is_family(r))
                        fail(5, tuple_str({p1, q1, p2, q2}) + " : non-family 4-point relation");
                }
            lo = hi;
        }
    }
    if (done()) return rep;

    rep.right_angle_margin = right_angle_margin(modes);
    return rep;
}

// ---------------------------------------------------------------------------
// Builder

namespace {

struct BuildPt {
    Mode pt;
    int mate = -1;       // construction index of the family co-member in this
                         // generation; pairing mates reproduces the previous
                         // generation exactly (the procreation map is an involution)
    Mode sibdiff{0, 0};  // pt - (family co-member); {0,0} for seeds
};

struct FamRec {
    int parent_gen = 0;  // 0-based generation index of the parents
    Mode p1, p2, c1, c2;
};

// Children are integral iff the parents have equal checkerboard colour
// (parity of m+n). Same-colour parents produce two children of one colour,
// so colour classes keep even sizes generation after generation.
bool can_procreate(Mode a, Mode b) {
    return ((a.m + a.n) - (b.m + b.n)) % 2 == 0;
}

std::array<Mode, 2> procreate_pair(Mode a, Mode b) {
    const Mode S = a + b;
    const Mode R = rot90(a - b);
    assert((S.m + R.m) % 2 == 0 && (S.n + R.n) % 2 == 0);
    return {Mode{(S.m + R.m) / 2, (S.n + R.n) / 2}, Mode{(S.m - R.m) / 2, (S.n - R.n) / 2}};
}

// Spatial registry of every mode created so far: pairings must produce
// children that keep a minimum distance from all existing modes (exact
// low-primitive offsets such as (0,k) or k*(3,4) between crowded points are
// what create accidental rectangles and right angles) and that use fresh
// m and n coordinates (a shared coordinate is an axis-aligned right angle
// waiting for a third vertex).
class ProximityIndex {
   public:
    explicit ProximityIndex(std::int64_t min_dist) : d_(std::max<std::int64_t>(min_dist, 1)) {}

    void insert(Mode p) {
        cells_[cell_key(p)].push_back(p);
        ms_.insert(p.m);
        ns_.insert(p.n);
    }

    bool blocked(Mode p) const {
        if (ms_.count(p.m) != 0 || ns_.count(p.n) != 0) return true;
        const std::int64_t cx = fdiv(p.m), cy = fdiv(p.n);
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                const auto it = cells_.find(key(cx + dx, cy + dy));
                if (it == cells_.end()) continue;
                for (const Mode& q : it->second)
                    if ((p - q).norm2() < d_ * d_) return true;
            }
        return false;
    }

   private:
    std::int64_t fdiv(std::int64_t x) const { return x >= 0 ? x / d_ : -((-x + d_ - 1) / d_); }
    std::uint64_t cell_key(Mode p) const { return key(fdiv(p.m), fdiv(p.n)); }
    static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(static_cast<std::int32_t>(cx)))
                << 32) |
               static_cast<std::uint32_t>(static_cast<std::int32_t>(cy));
    }

    std::int64_t d_;
    std::unordered_map<std::uint64_t, std::vector<Mode>> cells_;
    std::unordered_set<std::int64_t> ms_, ns_;
};

// One spouse-pairing round over a generation. Constraints beyond the angle
// preference:
//  - partners must have equal checkerboard colour (integral children);
//  - a point never pairs with its family co-member (involution);
//  - two couples never connect the same two families (a marriage 2-cycle
//    forces an exact non-family relation j1 - j2 + j3 - j4 = 0 two
//    generations away);
//  - children must be nonzero, off the axes, and not repeat within the round.
class PairingRound {
   public:
    PairingRound(const std::vector<BuildPt>& v, std::int64_t floor_norm2,
                 const ProximityIndex* global, std::int64_t min_dist)
        : v_(v), floor_norm2_(floor_norm2), global_(global), local_(min_dist) {
        used_.assign(v.size(), false);
    }

    bool admissible(int i, int j) {
        if (used_[static_cast<std::size_t>(j)] || i == j) return false;
        if (v_[static_cast<std::size_t>(i)].mate == j) return false;
        const Mode a = v_[static_cast<std::size_t>(i)].pt, b = v_[static_cast<std::size_t>(j)].pt;
        if (a == b || a + b == Mode{0, 0}) return false;
        if (!can_procreate(a, b)) return false;
        if (edges_.count(edge_key(i, j)) != 0) return false;
        // procreation multiplies by (1+-i)/2, so any exact 45-degree-family
        // alignment between the marriage direction and a partner's sibling
        // difference turns into an exact right angle one generation later
        if (on_45_family(v_[static_cast<std::size_t>(i)].sibdiff, b - a)) return false;
        if (on_45_family(v_[static_cast<std::size_t>(j)].sibdiff, b - a)) return false;
        const auto out = procreate_pair(a, b);
        for (const Mode& m : out) {
            if (m.m == 0 || m.n == 0) return false;
            if (m.norm2() < floor_norm2_) return false;
            if ((global_ != nullptr && global_->blocked(m)) || local_.blocked(m)) return false;
        }
        return out[0] != out[1];
    }

    void commit(int i, int j) {
        used_[static_cast<std::size_t>(i)] = used_[static_cast<std::size_t>(j)] = true;
        edges_.insert(edge_key(i, j));
        for (const Mode& m :
             procreate_pair(v_[static_cast<std::size_t>(i)].pt, v_[static_cast<std::size_t>(j)].pt))
            local_.insert(m);
        pairs_.push_back({i, j});
    }

    // Marry each of the nbig largest points to a smaller partner (the
    // equalising rounds: children land at the quadratic mean of the couple).
    // A large point with no admissible small partner (colour imbalance) is
    // left for the shape-preserving pass, which marries it to another large
    // one; the profile self-heals on the next round.
    void pair_bigs_with_smalls(int nbig) {
        const auto order = by_descending_norm();
        const int nb = std::min<int>(nbig, static_cast<int>(order.size()));
        for (int oi = 0; oi < nb; ++oi) {
            const int i = order[static_cast<std::size_t>(oi)];
            if (used_[static_cast<std::size_t>(i)]) continue;
            const Mode a = v_[static_cast<std::size_t>(i)].pt;
            double best = -1e300;
            int bj = -1;
            for (std::size_t oj = static_cast<std::size_t>(nb); oj < order.size(); ++oj) {
                const int j = order[oj];
                if (!admissible(i, j)) continue;
                const double score = -unit_dot(a, v_[static_cast<std::size_t>(j)].pt);
                if (score > best) {
                    best = score;
                    bj = j;
                }
            }
            if (bj >= 0) commit(i, bj);
        }
    }

    // Greedy shape-preserving matching: largest-first, most antiparallel
    // admissible partner of similar size. The greedy order can strand a tail
    // point; retry with a shuffled order a few times before giving up.
    bool pair_greedy(CounterRng& rng) {
        const Snapshot base = save();
        for (int retry = 0; retry < 16; ++retry) {
            if (retry > 0) restore(base);
            if (try_greedy(rng, retry > 0)) return true;
        }
        return false;
    }

    const std::vector<std::array<int, 2>>& pairs() const { return pairs_; }

   private:
    struct Snapshot {
        std::vector<bool> used;
        std::vector<std::array<int, 2>> pairs;
        std::unordered_set<std::uint64_t> edges;
        ProximityIndex local;
    };
    Snapshot save() const { return {used_, pairs_, edges_, local_}; }
    void restore(const Snapshot& s) {
        used_ = s.used;
        pairs_ = s.pairs;
        edges_ = s.edges;
        local_ = s.local;
    }

    static bool on_45_family(Mode u, Mode v) {
        if (u == Mode{0, 0}) return false;
        const std::int64_t d = u.dot(v), c = u.cross(v);
        return d == 0 || c == 0 || d == c || d == -c;
    }

    static double unit_dot(Mode a, Mode b) {
        return static_cast<double>(a.dot(b)) /
               std::sqrt(static_cast<double>(a.norm2()) * static_cast<double>(b.norm2()));
    }

    std::uint64_t edge_key(int i, int j) const {
        const int fi = family_id(i), fj = family_id(j);
        const int lo = std::min(fi, fj), hi = std::max(fi, fj);
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(lo)) << 32) |
               static_cast<std::uint32_t>(hi);
    }
    int family_id(int i) const {
        const int m = v_[static_cast<std::size_t>(i)].mate;
        return m >= 0 ? std::min(i, m) : i;
    }

    std::vector<int> by_descending_norm() const {
        std::vector<int> order;
        for (int i = 0; i < static_cast<int>(v_.size()); ++i)
            if (!used_[static_cast<std::size_t>(i)]) order.push_back(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const auto na = v_[static_cast<std::size_t>(a)].pt.norm2();
            const auto nb = v_[static_cast<std::size_t>(b)].pt.norm2();
            return na != nb ? na > nb
                            : v_[static_cast<std::size_t>(a)].pt < v_[static_cast<std::size_t>(b)].pt;
        });
        return order;
    }

    bool try_greedy(CounterRng& rng, bool shuffle) {
        std::vector<int> order = by_descending_norm();
        if (shuffle) {
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[rng.next_below(i)]);
        }
        for (int i : order) {
            if (used_[static_cast<std::size_t>(i)]) continue;
            const Mode a = v_[static_cast<std::size_t>(i)].pt;
            const double la = std::log(static_cast<double>(a.norm2()));
            double best = -1e300;
            int bj = -1;
            for (int j : order) {
                if (!admissible(i, j)) continue;
                const Mode b = v_[static_cast<std::size_t>(j)].pt;
                const double size_pen =
                    0.75 * std::fabs(la - std::log(static_cast<double>(b.norm2())));
                const double score = -unit_dot(a, b) - size_pen;
                if (score > best) {
                    best = score;
                    bj = j;
                }
            }
            if (bj < 0) return false;  // stuck
            commit(i, bj);
        }
        return true;
    }

    const std::vector<BuildPt>& v_;
    std::int64_t floor_norm2_ = 0;
    const ProximityIndex* global_ = nullptr;
    ProximityIndex local_;
    std::vector<bool> used_;
    std::vector<std::array<int, 2>> pairs_;
    std::unordered_set<std::uint64_t> edges_;
};

struct GeometryAttempt {
    std::vector<std::vector<Mode>> gens;  // construction order
    std::vector<FamRec> fams;
    bool ok = false;
};

// Forward construction from a seeded first generation. The "uniform" profile
// seeds a ring and keeps its shape; the "cascade" profile seeds 8 large modes
// plus a cloud of small ones, keeps that profile through generation 3, then
// marries each large mode to a small one per round (children at the quadratic
// mean), so that generation g-1 carries 2^{g-1} nearly equal modes while
// generation 3 keeps its mass in 8 large ones. That shape is what makes the
// growth-ratio thresholds attainable: the family rectangle identity forces
// sum |j|^2 to be the same in every generation, so only the in-generation
// distribution can differ.
GeometryAttempt attempt_geometry(int g, CounterRng& rng, double spread,
                                 const std::string& profile) {
    GeometryAttempt out;
    const int half = 1 << (g - 1);
    const double R0 = spread * static_cast<double>(1ll << g);
    const bool cascade = profile == "cascade" || (profile == "auto" && g >= 6);
    const int nbig0 = std::min(8, half);
    const bool debug = std::getenv("CASCADE_LAB_BUILD_DEBUG") != nullptr;
    constexpr double pi = std::numbers::pi_v<double>;

    std::vector<std::vector<BuildPt>> gens(static_cast<std::size_t>(g));
    auto& seed = gens[0];
    seed.reserve(static_cast<std::size_t>(half));
    // the uniform profile can afford a coarse dyadic grid, which keeps every
    // generation in one checkerboard colour class; the cascade profile needs
    // unit resolution so its small-mode cloud has room to avoid exact
    // coincidences
    const std::int64_t seed_grid = cascade ? 1 : (1ll << (g - 1));
    const std::int64_t min_dist = std::max<std::int64_t>(static_cast<std::int64_t>(R0 / 8000.0), 4);
    ProximityIndex registry(min_dist);
    {
        auto place = [&](double rlo, double rhi, double ang0, double wobble) -> bool {
            for (int tries = 0; tries < 32; ++tries) {
                const double ang = ang0 + rng.uniform(-wobble, wobble);
                const double rad = R0 * std::exp(rng.uniform(std::log(rlo), std::log(rhi)));
                const Mode m{seed_grid * std::llround(rad * std::cos(ang) / seed_grid),
                             seed_grid * std::llround(rad * std::sin(ang) / seed_grid)};
                if (m.m == 0 || m.n == 0) continue;
                if (registry.blocked(m)) continue;
                registry.insert(m);
                seed.push_back({m, -1});
                return true;
            }
            return false;
        };
        bool ok = true;
        if (cascade) {
            for (int i = 0; i < nbig0 && ok; ++i)
                ok = place(0.9, 1.1, 2.0 * pi * i / nbig0 + 2.0 * pi * 0.05, 0.25);
            for (int i = nbig0; i < half && ok; ++i)
                ok = place(0.003, 0.010, rng.uniform(0.0, 2.0 * pi), pi);
        } else {
            for (int i = 0; i < half && ok; ++i)
                ok = place(0.85, 1.15, 2.0 * pi * i / half, 0.8 * pi / half);
        }
        if (!ok) {
            if (debug) std::fprintf(stderr, "  [geom] seed placement failed\n");
            return out;
        }
        // colour classes must have even sizes for the pairing rounds to close
        int odd = 0;
        for (const auto& p : seed) odd += static_cast<int>((p.pt.m + p.pt.n) & 1);
        if (odd % 2 != 0) {
            if (seed_grid > 1) {
                if (debug) std::fprintf(stderr, "  [geom] colour imbalance on coarse grid\n");
                return out;
            }
            bool fixed = false;
            const std::int64_t o = min_dist | 1;  // odd total displacement flips the colour
            for (int back = static_cast<int>(seed.size()) - 1; back >= 0 && !fixed; --back) {
                Mode& m = seed[static_cast<std::size_t>(back)].pt;
                for (const Mode d : {Mode{o, o + 1}, Mode{-o, o + 1}, Mode{o, -o - 1},
                                     Mode{-o, -o - 1}, Mode{3 * o, o + 1}, Mode{o, 3 * o + 1}}) {
                    const Mode b = m + d;
                    if (b.m != 0 && b.n != 0 && !registry.blocked(b)) {
                        m = b;
                        registry.insert(b);  // old entry stays registered; harmless over-block
                        fixed = true;
                        break;
                    }
                }
            }
            if (!fixed) {
                if (debug) std::fprintf(stderr, "  [geom] colour bump failed\n");
                return out;
            }
        }
    }

    // forward procreation; generations 4..g-1 are the equalising rounds
    int nbig = nbig0;
    const std::int64_t small_floor =
        cascade ? static_cast<std::int64_t>(0.002 * R0 * (0.002 * R0)) : 0;
    for (int k = 0; k + 1 < g; ++k) {
        const auto& cur = gens[static_cast<std::size_t>(k)];
        PairingRound round(cur, small_floor, &registry, min_dist);
        const bool equalize = cascade && (k + 1 >= 3) && (k + 1 <= g - 2);
        if (equalize) {
            round.pair_bigs_with_smalls(nbig);
            nbig *= 2;
        }
        if (!round.pair_greedy(rng)) {
            if (debug) std::fprintf(stderr, "  [geom] pairing stuck at gen idx %d\n", k);
            return out;
        }
        auto& next = gens[static_cast<std::size_t>(k + 1)];
        for (const auto& [ia, ib] : round.pairs()) {
            const Mode p1 = cur[static_cast<std::size_t>(ia)].pt;
            const Mode p2 = cur[static_cast<std::size_t>(ib)].pt;
            const auto ch = procreate_pair(p1, p2);
            registry.insert(ch[0]);
            registry.insert(ch[1]);
            const int base = static_cast<int>(next.size());
            next.push_back({ch[0], base + 1, ch[0] - ch[1]});
            next.push_back({ch[1], base, ch[1] - ch[0]});
            out.fams.push_back({k, p1, p2, ch[0], ch[1]});
        }
    }

    for (auto& gen : gens) {
        std::vector<Mode> ms;
        ms.reserve(gen.size());
        for (const auto& p : gen) ms.push_back(p.pt);
        out.gens.push_back(std::move(ms));
    }
    out.ok = true;
    return out;
}

bool assemble(const GeometryAttempt& geo, int g, Candidate& cand) {
    cand.g = g;
    cand.generations = geo.gens;
    for (auto& gen : cand.generations) std::sort(gen.begin(), gen.end());

    const int total = cand.total_modes();
    std::unordered_map<std::uint64_t, int> index;
    index.reserve(static_cast<std::size_t>(total) * 2);
    int flat = 0;
    for (const auto& gen : cand.generations)
        for (const Mode& m : gen) {
            if (!index.emplace(pack(m), flat).second) return false;  // duplicate mode
            ++flat;
        }

    auto& t = cand.tree;
    t.spouse.assign(static_cast<std::size_t>(total), -1);
    t.sibling.assign(static_cast<std::size_t>(total), -1);
    t.children.assign(static_cast<std::size_t>(total), {-1, -1});
    t.parents.assign(static_cast<std::size_t>(total), {-1, -1});
    for (const FamRec& f : geo.fams) {
        const auto ip1 = index.find(pack(f.p1)), ip2 = index.find(pack(f.p2));
        const auto ic1 = index.find(pack(f.c1)), ic2 = index.find(pack(f.c2));
        if (ip1 == index.end() || ip2 == index.end() || ic1 == index.end() || ic2 == index.end())
            return false;
        const int p1 = ip1->second, p2 = ip2->second, c1 = ic1->second, c2 = ic2->second;
        if (t.spouse[static_cast<std::size_t>(p1)] != -1 || t.spouse[static_cast<std::size_t>(p2)] != -1 ||
            t.sibling[static_cast<std::size_t>(c1)] != -1 || t.sibling[static_cast<std::size_t>(c2)] != -1)
            return false;  // role already taken: degenerate geometry
        t.spouse[static_cast<std::size_t>(p1)] = p2;
        t.spouse[static_cast<std::size_t>(p2)] = p1;
        t.children[static_cast<std::size_t>(p1)] = {c1, c2};
        t.children[static_cast<std::size_t>(p2)] = {c1, c2};
        t.sibling[static_cast<std::size_t>(c1)] = c2;
        t.sibling[static_cast<std::size_t>(c2)] = c1;
        t.parents[static_cast<std::size_t>(c1)] = {p1, p2};
        t.parents[static_cast<std::size_t>(c2)] = {p1, p2};
    }
    return true;
}

}  // namespace

Candidate build_prototype(int g, std::uint64_t seed, double spread, const std::string& profile,
                          int budget) {
    if (g < 2) throw std::invalid_argument("build_prototype: g must be >= 2");
    if (spread < 64.0) throw std::invalid_argument("build_prototype: spread too small to snap");
    CounterRng root(seed);
    PropertyReport last;
    const bool debug = std::getenv("CASCADE_LAB_BUILD_DEBUG") != nullptr;
    for (int attempt = 0; attempt < budget; ++attempt) {
        CounterRng rng = root.stream(static_cast<std::uint64_t>(attempt));
        const GeometryAttempt geo = attempt_geometry(g, rng, spread, profile);
        if (!geo.ok) {
            if (debug) std::fprintf(stderr, "[build g=%d a=%d] geometry rejected\n", g, attempt);
            continue;
        }
        Candidate cand;
        if (!assemble(geo, g, cand)) {
            if (debug) std::fprintf(stderr, "[build g=%d a=%d] assembly collision\n", g, attempt);
            continue;
        }
        const PropertyReport rep = verify_properties(cand, /*early_exit=*/true);
        if (rep.all_pass()) return cand;
        if (debug) {
            for (int i = 0; i < 8; ++i)
                if (!rep.prop[static_cast<std::size_t>(i)].pass)
                    std::fprintf(stderr, "[build g=%d a=%d] prop %d: %s\n", g, attempt, i + 1,
                                 rep.prop[static_cast<std::size_t>(i)].witness.c_str());
        }
        last = rep;
    }
    throw BudgetExhausted("build_prototype: no candidate passed properties I-VIII within budget",
                          last);
}

CertifiedLambda scale_and_certify(const Candidate& c, long long N, double f_scale) {
    if (N < 1) throw std::invalid_argument("scale_and_certify: N must be >= 1");
    CertifiedLambda L;
    L.set = c;
    for (auto& gen : L.set.generations)
        for (Mode& m : gen) m = N * m;
    L.scale_n = N;
    L.f_scale = f_scale;
    L.report = verify_properties(L.set);
    if (!L.report.all_pass())
        throw MarginViolation("scale_and_certify: properties failed after scaling (scaling "
                              "invariance violated or candidate was not certified)");
    const std::vector<Mode> modes = L.set.all_modes();
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const Mode& m : modes) {
        const double r = std::sqrt(static_cast<double>(m.norm2()));
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    const double pow3g = std::pow(3.0, L.set.g);
    L.builder_c = std::max({f_scale / lo, hi / (pow3g * f_scale), 1.0});
    if (L.report.right_angle_margin < std::sqrt(f_scale)) {
        std::ostringstream os;
        os << "scale_and_certify: right-angle margin " << L.report.right_angle_margin
           << " below sqrt(fScale) = " << std::sqrt(f_scale);
        throw MarginViolation(os.str());
    }
    return L;
}

GenerationWeights generation_weights(const CertifiedLambda& L, double s) {
    if (!(s > 0.0)) throw std::invalid_argument("generation_weights: s must be > 0");
    GenerationWeights w;
    w.s = s;
    for (const auto& gen : L.set.generations) {
        double acc = 0.0;
        for (const Mode& m : gen) acc += std::pow(static_cast<double>(m.norm2()), s);
        w.S.push_back(acc);
    }
    const int g = L.set.g;
    w.threshold = 0.5 * std::exp2(std::fabs(1.0 - s) * (g - 4));
    if (g >= 4) {
        w.ratio = w.S[static_cast<std::size_t>(g - 2)] / w.S[2];
        w.pass = w.ratio >= w.threshold;
    }
    return w;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json report_to_json(const PropertyReport& r) {
    static const char* names[8] = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII"};
    json props = json::array();
    for (int i = 0; i < 8; ++i)
        props.push_back({{"name", names[i]},
                         {"pass", r.prop[static_cast<std::size_t>(i)].pass},
                         {"witness", r.prop[static_cast<std::size_t>(i)].witness}});
    json j{{"properties", props},
           {"rectangles", r.rectangle_count},
           {"families", r.family_count}};
    if (std::isfinite(r.right_angle_margin))
        j["rightAngleMargin"] = r.right_angle_margin;
    else
        j["rightAngleMargin"] = "inf";
    return j;
}

PropertyReport report_from_json(const json& j) {
    PropertyReport r;
    const auto& props = j.at("properties");
    for (int i = 0; i < 8; ++i) {
        r.prop[static_cast<std::size_t>(i)].pass = props.at(static_cast<std::size_t>(i)).at("pass").get<bool>();
        r.prop[static_cast<std::size_t>(i)].witness = props.at(static_cast<std::size_t>(i)).at("witness").get<std::string>();
    }
    r.rectangle_count = j.at("rectangles").get<long long>();
    r.family_count = j.at("families").get<long long>();
    if (j.at("rightAngleMargin").is_string())
        r.right_angle_margin = std::numeric_limits<double>::infinity();
    else
        r.right_angle_margin = j.at("rightAngleMargin").get<double>();
    return r;
}

}  // namespace

std::string to_json_string(const CertifiedLambda& L) {
    json gens = json::array();
    for (const auto& gen : L.set.generations) {
        json arr = json::array();
        for (const Mode& m : gen) arr.push_back({m.m, m.n});
        gens.push_back(arr);
    }
    json j{{"format", "cascade-lab/lambda"},
           {"version", 1},
           {"g", L.set.g},
           {"scaleN", L.scale_n},
           {"fScale", L.f_scale},
           {"builderC", L.builder_c},
           {"generations", gens},
           {"tree",
            {{"spouse", L.set.tree.spouse},
             {"sibling", L.set.tree.sibling},
             {"children", L.set.tree.children},
             {"parents", L.set.tree.parents}}},
           {"report", report_to_json(L.report)}};
    return j.dump(2);
}

CertifiedLambda lambda_from_json_string(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "cascade-lab/lambda")
        throw std::runtime_error("lambda_from_json: unexpected format");
    if (j.at("version").get<int>() != 1)
        throw std::runtime_error("lambda_from_json: unsupported version");
    CertifiedLambda L;
    L.set.g = j.at("g").get<int>();
    for (const auto& gen : j.at("generations")) {
        std::vector<Mode> ms;
        for (const auto& m : gen) ms.push_back({m.at(0).get<std::int64_t>(), m.at(1).get<std::int64_t>()});
        L.set.generations.push_back(std::move(ms));
    }
    const auto& t = j.at("tree");
    L.set.tree.spouse = t.at("spouse").get<std::vector<int>>();
    L.set.tree.sibling = t.at("sibling").get<std::vector<int>>();
    L.set.tree.children = t.at("children").get<std::vector<std::array<int, 2>>>();
    L.set.tree.parents = t.at("parents").get<std::vector<std::array<int, 2>>>();
    L.scale_n = j.at("scaleN").get<long long>();
    L.f_scale = j.at("fScale").get<double>();
    L.builder_c = j.at("builderC").get<double>();
    L.report = report_from_json(j.at("report"));
    return L;
}

void save_lambda(const CertifiedLambda& L, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_lambda: cannot open " + path);
    f << to_json_string(L) << "\n";
}

CertifiedLambda load_lambda(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_lambda: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return lambda_from_json_string(ss.str());
}

}  // namespace cascade::lattice
