#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hcube/concentration.hpp"
#include "hcube/io.hpp"
#include "conditional_generators.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>

using namespace hcube;
using hcube::test::Gen;

namespace {

// Brute force: first eps whose block orbit misses omega.
std::optional<Mask> first_avoiding(int L, int l, const std::vector<char>& omega) {
    const auto blocks = BlockPartition::equal(L, l);
    for (Mask e = 0; e < (Mask{1} << L); ++e) {
        bool clean = true;
        for (Mask d = 0; d < (Mask{1} << l) && clean; ++d) {
            Mask v = e;
            for (int k = 0; k < l; ++k)
                if ((d >> k) & 1u) v ^= blocks.masks()[k];
            clean = !omega[v];
        }
        if (clean) return e;
    }
    return std::nullopt;
}

std::vector<double> weighted_sum(int n, const std::vector<double>& w) {
    std::vector<double> t(std::size_t{1} << n);
    for (Mask v = 0; v < t.size(); ++v)
        for (int i = 0; i < n; ++i) t[v] += ((v >> i) & 1u) ? -w[i] : w[i];
    return t;
}

}  // namespace

TEST_CASE("lower median") {
    CHECK(lower_median({3.0, 1.0, 2.0, 4.0}) == 2.0);
    CHECK(lower_median({5.0}) == 5.0);
    CHECK(lower_median({2.0, 2.0, 1.0}) == 2.0);
    CHECK_THROWS_AS(lower_median({}), Error);
    Gen g(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(g.integer(1, 40));
        for (auto& x : v) x = g.uniform(-5.0, 5.0);
        const double m = lower_median(v);
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        CHECK(m == sorted[(sorted.size() - 1) / 2]);
    }
}

TEST_CASE("median and tail report") {
    SUBCASE("constant table") {
        const auto r = median_tail_report(std::vector<double>(8, 1.5), 1.0);
        CHECK(r.median == 1.5);
        CHECK(r.mean == 1.5);
        for (const auto& tp : r.tails) CHECK(tp.prob == 0.0);
        CHECK_FALSE(r.fit_ok);
    }
    SUBCASE("grid and tail values on a small sum") {
        // Phi = sum of three signs, lambda1 = observed Lipschitz constant 6
        const auto t = weighted_sum(3, {1.0, 1.0, 1.0});
        const auto r = median_tail_report(t, 6.0);
        CHECK(r.observed_lip == 6.0);
        CHECK(r.median == -1.0);
        CHECK(r.tails.size() == 6);
        // P(|Phi + 1| > 2) = P(Phi = 3) = 1 / 8
        CHECK(r.tails[1].t == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK(r.tails[1].prob == 0.125);
        // P(|Phi + 1| > 1) = P(Phi in {-3, 1, 3}) = 5 / 8
        CHECK(r.tails[0].prob == 0.625);
        CHECK_THROWS_AS(median_tail_report(t, 5.0), Error);
        CHECK_THROWS_AS(median_tail_report(std::vector<double>(6, 0.0), 1.0), Error);
    }
    SUBCASE("normalized distance to a vertex: binomial tails") {
        for (int n : {2, 4, 8, 10}) {
            std::vector<double> t(std::size_t{1} << n);
            for (Mask v = 0; v < t.size(); ++v) t[v] = static_cast<double>(std::popcount(v)) / n;
            const auto r = median_tail_report(t, 1.0);
            CHECK(r.median == 0.5);
            CHECK(r.observed_lip == doctest::Approx(1.0).epsilon(1e-15));
            for (const auto& tp : r.tails) {
                // exact count of k with |k/n - 1/2| > t
                long long count = 0;
                for (int k = 0; k <= n; ++k) {
                    long long binom = 1;
                    for (int i = 0; i < k; ++i) binom = binom * (n - i) / (i + 1);
                    if (std::abs(static_cast<double>(k) / n - 0.5) > tp.t) count += binom;
                }
                CHECK(tp.prob == std::ldexp(static_cast<double>(count), -n));
            }
        }
    }
    SUBCASE("Lipschitz functions concentrate for n >= 8") {
        Gen g(12);
        for (int trial = 0; trial < 30; ++trial) {
            const int n = g.integer(8, 12);
            std::vector<double> w(n);
            for (auto& x : w) x = g.uniform(0.5, 1.0);
            const auto t = weighted_sum(n, w);
            const auto r = median_tail_report(t, 2.0 * n);
            CHECK(r.fit_ok);
            CHECK(r.beta > 0.0);
            for (std::size_t j = 1; j < r.tails.size(); ++j) CHECK(r.tails[j].prob <= r.tails[j - 1].prob);
        }
    }
}

TEST_CASE("far events sit inside wide events when median and mean are close") {
    Gen g(19);
    int checked = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = g.integer(2, 10);
        std::vector<double> w(n);
        for (auto& x : w) x = g.uniform(0.0, 1.0);
        const auto t = weighted_sum(n, w);
        const double med = lower_median(t);
        double mean = 0.0;
        for (double x : t) mean += x / static_cast<double>(t.size());
        const double width = g.uniform(0.01, 2.0);
        if (std::abs(med - mean) > width / 2.0) continue;
        ++checked;
        for (double x : t)
            if (std::abs(x - mean) > width) REQUIRE(std::abs(x - med) > width / 4.0);
    }
    CHECK(checked > 200);
}

TEST_CASE("density selection") {
    SUBCASE("empty set") {
        const auto r = density_select(BlockPartition::equal(4, 2), std::vector<char>(16, 0));
        REQUIRE(r.eps.has_value());
        CHECK(*r.eps == 0);
        CHECK(r.prob == 0.0);
        CHECK(r.guaranteed);
    }
    SUBCASE("single vertex") {
        std::vector<char> omega(16, 0);
        omega[0] = 1;
        const auto r = density_select(BlockPartition::equal(4, 2), omega);
        REQUIRE(r.eps.has_value());
        CHECK(*r.eps == 1);
        CHECK(r.prob == 1.0 / 16.0);
        CHECK(r.guaranteed);
        CHECK_FALSE(r.alarm);
    }
    SUBCASE("one vertex per orbit blocks every eps") {
        // orbits are cosets of {0, 3, 12, 15}; the representatives 0, 1, 4, 5 meet each once
        std::vector<char> omega(16, 0);
        for (int v : {0, 1, 4, 5}) omega[v] = 1;
        const auto r = density_select(BlockPartition::equal(4, 2), omega);
        CHECK_FALSE(r.eps.has_value());
        CHECK_FALSE(r.guaranteed);
        CHECK_FALSE(r.alarm);
    }
    SUBCASE("custom orbit map") {
        const OrbitMap g = [](Mask e, Mask d) { return e ^ d; };
        std::vector<char> omega(8, 0);
        omega[1] = 1;
        const auto r = density_select(3, 1, g, omega);
        REQUIRE(r.eps.has_value());
        CHECK(*r.eps == 2);
        const OrbitMap collapse = [](Mask, Mask) { return Mask{0}; };
        CHECK_THROWS_AS(density_select(3, 1, collapse, omega), Error);
    }
    CHECK_THROWS_AS(density_select(BlockPartition::equal(4, 2), std::vector<char>(8, 0)), Error);
}

TEST_CASE("sparse sets always leave an avoiding orbit") {
    Gen g(99);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto inst = test::draw_density(g);
        const auto r = density_select(BlockPartition::equal(inst.L, inst.l), inst.omega);
        INFO("L = " << inst.L << ", l = " << inst.l);
        REQUIRE(r.guaranteed);
        REQUIRE_FALSE(r.alarm);
        REQUIRE(r.eps.has_value());
        REQUIRE(r.eps == first_avoiding(inst.L, inst.l, inst.omega));
        CHECK(r.prob == inst.prob);
    }
}

TEST_CASE("extraction through concentration") {
    const auto id = LipschitzMap::identity();
    SUBCASE("canonical l1 pair passes") {
        const ConcentrationParams q;
        const auto cert = extract_via_concentration(id, canonical_map(q.l * q.k, 1.0), q);
        REQUIRE(cert.pass);
        CHECK(cert.route == "concentration");
        CHECK(cert.alarms == 0);
        REQUIRE(cert.h.has_value());
        CHECK(cert.h->n() == q.l);
        CHECK(cert.distortion_Fh == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(cert.distortion_Fh <= q.D);
    }
    SUBCASE("invalid parameters fail first") {
        ConcentrationParams q;
        q.a = 0.6;
        const auto cert = extract_via_concentration(id, canonical_map(6, 1.0), q);
        CHECK_FALSE(cert.pass);
        CHECK(cert.failed_stage == "parameters");
    }
    SUBCASE("l2 map has a low average ratio") {
        const ConcentrationParams q;
        const auto cert = extract_via_concentration(id, canonical_map(6, 2.0), q);
        CHECK_FALSE(cert.pass);
        CHECK(cert.failed_stage == "near_extremality");
        const auto j = to_json(cert);
        CHECK(j["failed_stage"] == "near_extremality");
    }
}
