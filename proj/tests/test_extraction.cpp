#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hcube/extraction.hpp"
#include "hcube/io.hpp"
#include "conditional_generators.hpp"
#include "support.hpp"

#include <cmath>

using namespace hcube;
using hcube::test::Gen;

namespace {

// Plain-loop oracle for r_I^p, l^{p-1} sum r_J^p, s_I^p, l^{p-1} sum s_J^p.
struct NodeMoments {
    long double r_node = 0, r_children = 0, s_node = 0, s_children = 0;
};

NodeMoments naive_node_moments(const LipschitzMap& F, const MapOnCube& f, const SignedInterval& I,
                               const std::vector<SignedInterval>& children, double p) {
    const MapOnCube Ff = compose(F, f);
    NodeMoments m;
    const long double N = static_cast<long double>(f.size());
    const long double lf = std::pow(static_cast<long double>(children.size()), p - 1.0L);
    for (Mask v = 0; v < f.size(); ++v) {
        m.r_node += std::pow(static_cast<long double>(Ff.rho(v, v ^ I.mask())), p) / N;
        m.s_node += std::pow(static_cast<long double>(f.rho(v, v ^ I.mask())), p) / N;
        for (const auto& J : children) {
            m.r_children += lf * std::pow(static_cast<long double>(Ff.rho(v, v ^ J.mask())), p) / N;
            m.s_children += lf * std::pow(static_cast<long double>(f.rho(v, v ^ J.mask())), p) / N;
        }
    }
    return m;
}

ParameterLedger empirical_ledger(int l = 2) {
    return build_ledger(2.0, 1.0, 1.0, 0.5, 2.0, l, LedgerMode::Empirical);
}

}  // namespace

TEST_CASE("empirical ledger") {
    const auto g = empirical_ledger();
    CHECK(g.mode == LedgerMode::Empirical);
    CHECK(g.a == 0.5);
    CHECK(g.a_source == "default");
    CHECK(g.d == 2);
    CHECK(g.m == 0);
    CHECK(g.constant_chain_holds());
    CHECK(g.eta > 0.0);
    CHECK(g.eta < g.nu);
    CHECK(g.nu < g.b);
    CHECK(g.mu < g.a);
    CHECK(g.M > g.lambda / g.Theta);
    // the failing size-dependent checks are exactly the gaps
    std::vector<std::string> failing;
    for (const auto& ch : g.checks) {
        if (!ch.size_dependent) CHECK(ch.holds);
        if (!ch.holds) failing.push_back(ch.name);
    }
    CHECK(failing == g.gaps());
    CHECK(g.all_hold() == failing.empty());

    // every check row is reproduced from its stored sides
    for (const auto& ch : g.checks) {
        const bool lt = ch.lhs < ch.rhs, gt = ch.lhs > ch.rhs;
        CHECK((ch.holds == lt || ch.holds == gt));
    }
}

TEST_CASE("ledger overrides and errors") {
    LedgerOverrides ov;
    ov.a = 0.3;
    ov.m = 1;
    ov.d = 4;
    const auto g = build_ledger(2.0, 1.0, 1.0, 0.5, 2.0, 2, LedgerMode::Empirical, ov);
    CHECK(g.a == 0.3);
    CHECK(g.a_source == "user");
    CHECK(g.m == 1);
    CHECK(g.d == 4);
    CHECK(g.log_N == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-15));

    CHECK_THROWS_AS(build_ledger(1.0, 1.0, 1.0, 0.5, 2.0, 2, LedgerMode::Empirical), Error);
    CHECK_THROWS_AS(build_ledger(2.0, 1.0, 1.0, 1.0, 2.0, 2, LedgerMode::Empirical), Error);
    CHECK_THROWS_AS(build_ledger(2.0, 0.5, 1.0, 0.5, 2.0, 2, LedgerMode::Empirical), Error);
    CHECK_THROWS_AS(build_ledger(2.0, 1.0, 1.0, 0.5, 1.0, 2, LedgerMode::Empirical), Error);
    LedgerOverrides bad;
    bad.mu = 0.9;  // mu >= a
    CHECK_THROWS_AS(build_ledger(2.0, 1.0, 1.0, 0.5, 2.0, 2, LedgerMode::Empirical, bad), Error);
    CHECK(ledger_mode_from_string("paper_faithful") == LedgerMode::PaperFaithful);
    CHECK(ledger_mode_from_string(to_string(LedgerMode::Empirical)) == LedgerMode::Empirical);
    CHECK_THROWS_AS(ledger_mode_from_string("loose"), Error);
}

TEST_CASE("paper-faithful ledger") {
    LedgerOverrides ov;
    ov.a = 0.1;
    const auto g = build_ledger(2.0, 1.0, 1.0, 0.5, 2.0, 2, LedgerMode::PaperFaithful, ov);
    CHECK(g.all_hold());
    CHECK(g.d == g.m + 2);
    // m is the least integer meeting the decay condition
    const double decay = std::log1p(-g.Delta * g.mu / std::pow(g.M, g.p));
    const double target = std::log((1.0 - g.nu / 2.0) * std::pow(g.Theta / g.lambda, g.p));
    CHECK(static_cast<double>(g.m) * decay < target);
    CHECK_FALSE(static_cast<double>(g.m - 1) * decay < target);

    LedgerOverrides shallow = ov;
    shallow.d = g.m + 1;
    CHECK_THROWS_AS(build_ledger(2.0, 1.0, 1.0, 0.5, 2.0, 2, LedgerMode::PaperFaithful, shallow), Error);
    // the same shallow depth is only a gap in empirical mode
    const auto e = build_ledger(2.0, 1.0, 1.0, 0.5, 2.0, 2, LedgerMode::Empirical, shallow);
    CHECK_FALSE(e.gaps().empty());
}

TEST_CASE("witness functions reproduce the node moments") {
    Gen g(77);
    const auto id = LipschitzMap::identity();
    for (int trial = 0; trial < 150; ++trial) {
        const int L = g.integer(1, 8);
        const int lo = g.integer(1, L), hi = g.integer(lo, L);
        const SignedInterval I(lo, hi);
        std::vector<SignedInterval> ch;
        for (int a = lo; a <= hi;) {
            const int b = g.integer(a, hi);
            ch.emplace_back(a, b);
            a = b + 1;
        }
        const auto f = g.map(L, g.integer(1, 3), g.exponent());
        std::vector<double> w(f.space().point_width());
        for (auto& x : w) x = g.uniform(0.0, 1.0);
        const auto F = g.coin() ? id : LipschitzMap::diagonal(w);
        const double p = std::vector<double>{1.0, 1.5, 2.0, 3.0}[g.integer(0, 3)];
        const auto W = build_witness_functions(F, f, I, ch, p);
        const auto o = naive_node_moments(F, f, I, ch, p);
        INFO("trial " << trial);
        REQUIRE(test::close(W.mean_DY, static_cast<double>(o.r_node), 1e-12));
        REQUIRE(test::close(W.mean_EY, static_cast<double>(o.r_children), 1e-12));
        REQUIRE(test::close(W.mean_DX, static_cast<double>(o.s_node), 1e-12));
        REQUIRE(test::close(W.mean_EX, static_cast<double>(o.s_children), 1e-12));
        REQUIRE(W.identities_hold(1e-12));
        REQUIRE(W.pointwise_ok);
    }
    CHECK_THROWS_AS(build_witness_functions(id, canonical_map(3, 1.0), SignedInterval(1, 3),
                                            {SignedInterval(1, 1), SignedInterval(3, 3)}, 2.0),
                    Error);
}

TEST_CASE("witness search") {
    SUBCASE("constructed tables") {
        // E_X = E_Y = 1 everywhere; D equals E except at index 0
        std::vector<double> E(4, 1.0), D{0.1, 1.0, 1.0, 1.0};
        const auto W = witness_functions_from_tables(2.0, D, E, D, E);
        WitnessParams q;
        q.a = 0.5;
        q.b = 0.5;
        q.nu = 0.01;
        q.mu = 0.01;
        const auto r = witness_search(W, q);
        REQUIRE(r.witness.has_value());
        CHECK(*r.witness == 1);
        CHECK(r.witness_count == 3);
    }
    SUBCASE("hypothesis failure is not an alarm") {
        std::vector<double> E(4, 1.0), D(4, 0.1);
        const auto W = witness_functions_from_tables(2.0, D, E, D, E);
        const auto r = witness_search(W, WitnessParams{});
        CHECK_FALSE(r.h_means);
        CHECK_FALSE(r.witness.has_value());
        CHECK_FALSE(r.alarm);
    }
}

TEST_CASE("witness exists on sampled tables meeting the hypotheses") {
    Gen g(4242);
    int accepted = 0;
    for (int trial = 0; trial < 20000 && accepted < 1500; ++trial) {
        const auto inst = test::draw_witness(g);
        if (!inst) continue;
        ++accepted;
        REQUIRE_FALSE(inst->result.alarm);
        REQUIRE(inst->result.witness.has_value());
        const Mask e = *inst->result.witness;
        const double Tp = std::pow(inst->q.Theta, inst->q.p);
        CHECK(inst->W.DY[e] > (1 - inst->q.a) * inst->W.EY[e]);
        CHECK(inst->W.DX[e] > (1 - inst->q.a) * inst->W.EX[e]);
        CHECK(inst->W.DY[e] > (1 - inst->q.b) * Tp * inst->W.EX[e]);
    }
    CHECK(accepted >= 1500);
}

TEST_CASE("subcube extraction") {
    const auto id = LipschitzMap::identity();
    SUBCASE("canonical l1 pair passes") {
        const auto cert = extract_subcube(id, canonical_map(8, 1.0), empirical_ledger(), IntervalTree({2, 2, 2}));
        REQUIRE(cert.pass);
        CHECK(cert.route == "tree");
        CHECK(cert.failed_stage.empty());
        CHECK(cert.alarms == 0);
        REQUIRE(cert.h.has_value());
        CHECK(cert.h->n() == cert.l);
        CHECK(cert.distortion_h == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(cert.distortion_Fh == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(cert.scale_ratio == doctest::Approx(1.0).epsilon(1e-12));
        for (const auto& st : cert.stages) CHECK(st.ok);
        CHECK(cert.stage("witness") != nullptr);
        CHECK(cert.stage("nope") == nullptr);
    }
    SUBCASE("l2 canonical map fails near extremality") {
        const auto cert = extract_subcube(id, canonical_map(8, 2.0), empirical_ledger(), IntervalTree({2, 2, 2}));
        CHECK_FALSE(cert.pass);
        CHECK(cert.failed_stage == "near_extremality");
        CHECK(cert.stages.size() == 1);
    }
    SUBCASE("shallow tree fails at selection") {
        LedgerOverrides ov;
        ov.m = 2;
        const auto g = build_ledger(2.0, 1.0, 1.0, 0.5, 2.0, 2, LedgerMode::Empirical, ov);
        const auto cert = extract_subcube(id, canonical_map(8, 1.0), g, IntervalTree({2, 2, 2}));
        CHECK_FALSE(cert.pass);
        CHECK(cert.failed_stage == "select");
        CHECK_FALSE(cert.stage("select")->note.empty());
    }
    SUBCASE("mismatched tree") {
        CHECK_THROWS_AS(extract_subcube(id, canonical_map(6, 1.0), empirical_ledger(), IntervalTree({2, 2, 2})), Error);
    }
    SUBCASE("certificate JSON") {
        const auto cert = extract_subcube(id, canonical_map(8, 1.0), empirical_ledger(), IntervalTree({2, 2, 2}));
        const auto j = to_json(cert);
        CHECK(j["verdict"] == "pass");
        CHECK(j["stages"].size() == cert.stages.size());
    }
}
