// temporary builder smoke test (deleted before finalizing)
#include <chrono>
#include <cstdio>

#include "cascade/lattice.hpp"

using namespace cascade;
using namespace cascade::lattice;

int main() {
    // g=2 spec example
    {
        Candidate c;
        c.g = 2;
        c.generations = {{{1, 1}, {2, 2}}, {{1, 2}, {2, 1}}};
        c.tree.spouse = {1, 0, -1, -1};
        c.tree.sibling = {-1, -1, 3, 2};
        c.tree.children = {{{2, 3}}, {{2, 3}}, {{-1, -1}}, {{-1, -1}}};
        c.tree.parents = {{{-1, -1}}, {{-1, -1}}, {{0, 1}}, {{0, 1}}};
        auto rep = verify_properties(c);
        std::printf("g=2 example: VI pass=%d witness='%s'\n", rep.prop[5].pass ? 1 : 0,
                    rep.prop[5].witness.c_str());
        std::printf("  rect=%lld fam=%lld allpass=%d\n", rep.rectangle_count, rep.family_count,
                    rep.all_pass() ? 1 : 0);
    }
    for (int g : {2, 3, 4, 5, 6}) {
        auto t0 = std::chrono::steady_clock::now();
        try {
            Candidate c = build_prototype(g, 7, g >= 6 ? 8000.0 : 1000.0);
            auto rep = verify_properties(c);
            auto t1 = std::chrono::steady_clock::now();
            double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            std::printf("g=%d: pass=%d modes=%d rect=%lld fam=%lld margin=%g  (%.0f ms)\n", g,
                        rep.all_pass() ? 1 : 0, c.total_modes(), rep.rectangle_count,
                        rep.family_count, rep.right_angle_margin, ms);
        } catch (const BudgetExhausted& e) {
            std::printf("g=%d FAILED: %s\n", g, e.what());
            for (int i = 0; i < 8; ++i)
                if (!e.last_report.prop[i].pass)
                    std::printf("   prop %d: %s\n", i + 1, e.last_report.prop[i].witness.c_str());
        }
    }
    // g=8 cascade + weights
    {
        auto t0 = std::chrono::steady_clock::now();
        try {
            Candidate c = build_prototype(8, 7, 8000.0);
            auto t1 = std::chrono::steady_clock::now();
            auto L = scale_and_certify(c, 32, 1000.0);
            auto t2 = std::chrono::steady_clock::now();
            std::printf("g=8 build %.0f ms, certify %.0f ms, margin=%g, C=%g\n",
                        std::chrono::duration<double, std::milli>(t1 - t0).count(),
                        std::chrono::duration<double, std::milli>(t2 - t1).count(),
                        L.report.right_angle_margin, L.builder_c);
            for (double s : {0.3, 0.5, 0.7}) {
                auto w = generation_weights(L, s);
                std::printf("  s=%.1f ratio=%.3f threshold=%.3f pass=%d\n", s, w.ratio,
                            w.threshold, w.pass ? 1 : 0);
            }
        } catch (const std::exception& e) {
            std::printf("g=8 FAILED: %s\n", e.what());
        }
    }
    return 0;
}
