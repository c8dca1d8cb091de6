#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hcube/io.hpp"
#include "hcube/tree.hpp"
#include "conditional_generators.hpp"
#include "support.hpp"

#include <cmath>

using namespace hcube;
using hcube::test::Gen;

namespace {

// Canonical l1 profile values: t_I = 2|I|/L.
std::vector<std::vector<double>> linear_values(const IntervalTree& t) {
    std::vector<std::vector<double>> v(t.level_count());
    for (int j = 0; j < t.level_count(); ++j)
        for (const auto& I : t.level(j)) v[j].push_back(2.0 * I.size() / t.length());
    return v;
}

}  // namespace

TEST_CASE("interval tree construction") {
    const IntervalTree t({2, 2});
    CHECK(t.length() == 4);
    CHECK(t.depth() == 1);
    CHECK(t.level(0) == std::vector<SignedInterval>{SignedInterval(1, 4)});
    CHECK(t.level(1) == std::vector<SignedInterval>{SignedInterval(1, 2), SignedInterval(3, 4)});
    CHECK(t.level(2) == std::vector<SignedInterval>{SignedInterval(1, 1), SignedInterval(2, 2), SignedInterval(3, 3),
                                                    SignedInterval(4, 4)});
    CHECK(t.parent(2, 3) == 1);
    CHECK(t.children(1, 1) == std::vector<SignedInterval>{SignedInterval(3, 3), SignedInterval(4, 4)});

    const IntervalTree chain({1, 5});
    CHECK(chain.level(1) == chain.level(0));
    CHECK(chain.level_size(2) == 5);

    const IntervalTree t23({2, 3});
    CHECK(t23.level(1) == std::vector<SignedInterval>{SignedInterval(1, 3), SignedInterval(4, 6)});

    CHECK_THROWS_AS(IntervalTree({}), Error);
    CHECK_THROWS_AS(IntervalTree({2, 0}), Error);
    CHECK_THROWS_AS(IntervalTree({1 << 16, 1 << 16}), Error);

    // structural invariants on random trees
    Gen g(1);
    for (int trial = 0; trial < 200; ++trial) {
        const auto tr = test::random_tree(g, 0, 5, 4, 3000);
        long long count = 1;
        for (int j = 0; j < tr.level_count(); ++j) {
            CHECK(tr.level_size(j) == count);
            if (j + 1 < tr.level_count()) {
                count *= tr.arity(j);
                for (int k = 0; k < tr.level_size(j); ++k) {
                    const auto ch = tr.children(j, k);
                    CHECK(ch.front().lo == tr.level(j)[k].lo);
                    CHECK(ch.back().hi == tr.level(j)[k].hi);
                    for (std::size_t c = 0; c < ch.size(); ++c) {
                        CHECK(ch[c].size() == ch.front().size());
                        if (c > 0) CHECK(ch[c].lo == ch[c - 1].hi + 1);
                        CHECK(tr.parent(j + 1, tr.first_child(j, k) + static_cast<int>(c)) == k);
                    }
                }
            }
        }
    }
}

TEST_CASE("tree profiles") {
    const auto id = LipschitzMap::identity();
    SUBCASE("canonical l1 pair") {
        const IntervalTree t({2, 2});
        const auto pr = tree_profile(id, canonical_map(4, 1.0), t, 2.0);
        for (int j = 0; j < t.level_count(); ++j)
            for (int k = 0; k < t.level_size(j); ++k) {
                CHECK(pr.r[j][k] == doctest::Approx(2.0 * t.level(j)[k].size() / 4.0).epsilon(1e-12));
                CHECK(pr.s[j][k] == pr.r[j][k]);
            }
        CHECK(pr.lipschitz_consistent);
        const auto vase = vase_check(pr);
        CHECK(vase.ok());
        // sum form is tight: parent equals the sum over any deeper level
        CHECK(pr.s[0][0] == doctest::Approx(pr.child_sum(0, 0, false)).epsilon(1e-12));
    }
    SUBCASE("constant map") {
        const MapOnCube c(4, LpSpace(1, 1.0), std::vector<double>(16, 2.0));
        const auto pr = tree_profile(id, c, IntervalTree({2, 2}), 2.0);
        for (const auto& lvl : pr.r)
            for (double x : lvl) CHECK(x == 0.0);
        CHECK(vase_check(pr).ok());
    }
    SUBCASE("diagonal F keeps r below lambda s") {
        const auto F = LipschitzMap::diag_log(6);
        const auto pr = tree_profile(F, canonical_map(6, 1.0), IntervalTree({2, 3}), 2.0);
        CHECK(pr.lipschitz_consistent);
        for (int j = 0; j < pr.tree.level_count(); ++j)
            for (int k = 0; k < pr.tree.level_size(j); ++k) CHECK(pr.r[j][k] <= pr.lambda * pr.s[j][k] * (1 + 1e-12));
    }
    CHECK_THROWS_AS(tree_profile(id, canonical_map(5, 1.0), IntervalTree({2, 2}), 2.0), Error);
    CHECK_THROWS_AS(TreeProfile::from_values(IntervalTree({2}), 2.0, {{1.0}}, {{1.0}}), Error);
}

TEST_CASE("vase inequalities hold on map-generated profiles") {
    Gen g(314);
    const auto id = LipschitzMap::identity();
    for (int trial = 0; trial < 500; ++trial) {
        const auto t = test::random_tree(g, 0, 4, 3, 200);
        if (t.length() > 8) continue;
        const auto f = g.map(t.length(), g.integer(1, 3), g.exponent());
        const double p = std::vector<double>{1.0, 1.5, 2.0, 3.0}[g.integer(0, 3)];
        const auto pr = tree_profile(id, f, t, p);
        const auto vase = vase_check(pr);
        INFO(vase.first_violation);
        REQUIRE(vase.ok());
    }
    // zero profile
    const IntervalTree t({2, 2});
    std::vector<std::vector<double>> z{{0.0}, {0.0, 0.0}, {0.0, 0.0, 0.0, 0.0}};
    CHECK(vase_check(TreeProfile::from_values(t, 2.0, z, z)).ok());
}

TEST_CASE("s-counting analysis") {
    const IntervalTree t({2, 2, 2});
    const double p = 2.0;
    SUBCASE("canonical profile has no additive defect") {
        const auto v = linear_values(t);
        const auto pr = TreeProfile::from_values(t, p, v, v);
        const auto rep = goodX_analysis(pr, 0.5, 0.3);
        for (const auto& Ij : rep.I_sets) CHECK(Ij.empty());
        CHECK(rep.B.empty());
    }
    SUBCASE("a flattened level enters B") {
        auto v = linear_values(t);
        // level 2 values equal to their parents: every level-1 node gains a factor l^{p-1} l / l^p... here 4
        for (int k = 0; k < t.level_size(2); ++k) v[2][k] = v[1][t.parent(2, k)];
        const auto pr = TreeProfile::from_values(t, p, v, v);
        const double mu = 0.2;
        const auto rep = goodX_analysis(pr, mu, 0.5);
        // arithmetic oracle: s_I^p = 1/4 against (1 - mu) 2 (1/4 + 1/4) = 0.8
        CHECK(rep.I_sets[1] == std::vector<int>{0, 1});
        CHECK(rep.I_sets[0].empty());
        CHECK(rep.B == std::vector<int>{1});
    }
    SUBCASE("I_j grows as mu decreases") {
        Gen g(8);
        for (int trial = 0; trial < 200; ++trial) {
            const auto tr = test::random_tree(g, 1, 4, 3, 300);
            auto s = test::near_additive_values(g, tr, 2.0, 0.1, 0.5, 0.05, 0.2);
            const auto pr = TreeProfile::from_values(tr, 2.0, s, s);
            const double mu1 = g.uniform(0.01, 0.9), mu2 = g.uniform(0.0001, mu1);
            const auto big = goodX_analysis(pr, mu2, 0.5), small = goodX_analysis(pr, mu1, 0.5);
            for (std::size_t j = 0; j < big.I_sets.size(); ++j)
                for (int k : small.I_sets[j])
                    CHECK(std::find(big.I_sets[j].begin(), big.I_sets[j].end(), k) != big.I_sets[j].end());
        }
    }
    CHECK_THROWS_AS(goodX_analysis(TreeProfile::from_values(t, p, linear_values(t), linear_values(t)), 0.0, 0.5),
                    Error);
}

TEST_CASE("s-counting bound on sampled profiles meeting the hypotheses") {
    Gen g(2718);
    int accepted = 0, nontrivial = 0;
    for (int trial = 0; trial < 40000 && accepted < 1500; ++trial) {
        const auto inst = test::draw_goodx(g);
        if (!inst) continue;
        ++accepted;
        nontrivial += inst->hyp.m < inst->profile.tree.depth();
        REQUIRE_FALSE(inst->report.violation);
        REQUIRE(static_cast<long long>(inst->report.B.size()) <= inst->hyp.m);
    }
    CHECK(accepted >= 1500);
    CHECK(nontrivial > 0);
}

TEST_CASE("r-to-s analysis") {
    const IntervalTree t({2, 2, 2});
    const double p = 2.0;
    SUBCASE("r = Theta s on a tight profile has no bad nodes") {
        const auto s = linear_values(t);
        const double Theta = 0.8, nu = 0.2, lambda = 1.0, M = 1.5;
        auto r = s;
        for (auto& lvl : r)
            for (auto& x : lvl) x *= Theta;
        const auto pr = TreeProfile::from_values(t, p, r, s);
        const double Delta = 0.5 * nu * Theta * Theta / (2.0 * M * M);
        const auto rep = ytox_analysis(pr, nu, Theta, Delta, lambda, M);
        CHECK(rep.hypotheses_hold());
        for (int c : rep.bad_counts) CHECK(c == 0);
        CHECK_FALSE(rep.violation());
    }
    SUBCASE("huge Theta: hypothesis failure, not a violation") {
        const auto s = linear_values(t);
        const auto pr = TreeProfile::from_values(t, p, s, s);
        const auto rep = ytox_analysis(pr, 0.2, 10.0, 0.01, 1.0, 1.5);
        for (int j = 0; j < t.depth(); ++j) CHECK(rep.bad_counts[j] == t.level_size(j));
        CHECK_FALSE(rep.hypotheses_hold());
        CHECK_FALSE(rep.violation());
    }
}

TEST_CASE("r-to-s bound on sampled profiles meeting the hypotheses") {
    Gen g(1618);
    int accepted = 0, with_bad = 0;
    for (int trial = 0; trial < 40000 && accepted < 1500; ++trial) {
        const auto inst = test::draw_ytox(g);
        if (!inst) continue;
        ++accepted;
        for (int c : inst->report.bad_counts) with_bad += c > 0;
        REQUIRE_FALSE(inst->report.violation());
    }
    CHECK(accepted >= 1500);
    CHECK(with_bad > 0);
}

TEST_CASE("good interval selection") {
    const IntervalTree t({2, 2, 2});
    const double p = 2.0;
    SelectionParams q;
    q.mu = 0.05;
    q.nu = 0.05;
    q.Theta = 1.0;
    q.M = 2.0;
    q.Delta = 0.01;
    q.m = 0;
    q.lambda = 1.0;

    SUBCASE("canonical profile selects the root") {
        const auto v = linear_values(t);
        const auto sel = select_good_interval(TreeProfile::from_values(t, p, v, v), q);
        REQUIRE(sel.found);
        CHECK(sel.level == 0);
        CHECK(sel.interval == SignedInterval(1, 8));
        CHECK(sel.cond_r_additive);
        CHECK(sel.cond_s_additive);
        CHECK(sel.cond_scale);
        CHECK(sel.counting_holds);
        CHECK_FALSE(sel.alarm);
    }
    SUBCASE("canonical map profile selects the root") {
        const auto pr = tree_profile(LipschitzMap::identity(), canonical_map(8, 1.0), t, p);
        const auto sel = select_good_interval(pr, q);
        REQUIRE(sel.found);
        CHECK(sel.level == 0);
    }
    SUBCASE("depth too small") {
        q.m = 1;
        const auto v = linear_values(t);
        CHECK_THROWS_AS(select_good_interval(TreeProfile::from_values(t, p, v, v), q), Error);
    }
    SUBCASE("adversarial profile names the violated hypothesis") {
        // all values 1: every node is non-additive and s at the root is far from extremal
        std::vector<std::vector<double>> v(t.level_count());
        for (int j = 0; j < t.level_count(); ++j) v[j].assign(t.level_size(j), 1.0);
        const auto sel = select_good_interval(TreeProfile::from_values(t, p, v, v), q);
        CHECK_FALSE(sel.found);
        CHECK(sel.failure == "s-counting hypothesis: root extremality of s");
        CHECK_FALSE(sel.alarm);
    }
    SUBCASE("selected nodes satisfy their conditions on sampled profiles") {
        Gen g(55);
        int found = 0;
        for (int trial = 0; trial < 2000; ++trial) {
            const auto tr = test::random_tree(g, 2, 5, 3, 300);
            auto s = test::near_additive_values(g, tr, p, 0.05, 0.3, 0.02, 0.1);
            auto r = s;
            for (auto& lvl : r)
                for (auto& x : lvl) x *= g.uniform(0.97, 1.0);
            const auto pr = TreeProfile::from_values(tr, p, r, s);
            SelectionParams qq = q;
            qq.m = g.integer(0, tr.depth() - 2);
            const auto sel = select_good_interval(pr, qq);
            if (!sel.found) {
                CHECK_FALSE(sel.failure.empty());
                continue;
            }
            ++found;
            const int j = sel.level, k = sel.index;
            const double lf = std::pow(static_cast<double>(tr.arity(j)), p - 1.0);
            CHECK(pr.rp[j][k] > (1 - qq.mu) * lf * pr.child_power_sum(j, k, true));
            CHECK(pr.sp[j][k] > (1 - qq.mu) * lf * pr.child_power_sum(j, k, false));
            CHECK(pr.rp[j][k] > (1 - qq.nu) * lf * pr.child_power_sum(j, k, false));
            CHECK(sel.counting_holds);
        }
        CHECK(found > 100);
    }
}

TEST_CASE("profile JSON dump") {
    const IntervalTree t({2, 2});
    const auto pr = tree_profile(LipschitzMap::identity(), canonical_map(4, 1.0), t, 2.0);
    const auto j = profile_to_json(pr);
    CHECK(j["branching"] == Json::array({2, 2}));
    CHECK(j["nodes"].size() == 7);
    CHECK(j["nodes"][1]["lo"] == 1);
    CHECK(j["nodes"][1]["hi"] == 2);
    CHECK(j["nodes"][1]["level"] == 1);
    CHECK(j["nodes"][1]["r"].get<double>() == pr.r[1][0]);
}
