#pragma once

// Rejection samplers for the conditional statements: each draw returns an instance whose
// hypotheses were verified by the library's own certificate, or nothing.

#include "hcube/concentration.hpp"
#include "hcube/extraction.hpp"
#include "hcube/tree.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace hcube::test {

inline IntervalTree random_tree(Gen& g, int min_depth, int max_depth, int max_arity, int max_nodes) {
    for (;;) {
        const int levels = g.integer(min_depth + 1, max_depth + 1);
        std::vector<int> b(levels);
        long long nodes = 1, total = 1;
        for (auto& x : b) {
            x = g.integer(1, max_arity);
            nodes *= x;
            total += nodes;
        }
        if (total <= max_nodes) return IntervalTree(b);
    }
}

/// s values whose children power sums are l^{1-p} (1 + gain) s_I^p, split by jittered weights.
/// A node is hot with probability `hot` and then gains in [hot_gain, 2 hot_gain]; otherwise
/// in [0, cold_gain]. Every gain is raised enough to keep s subadditive.
inline std::vector<std::vector<double>> near_additive_values(Gen& g, const IntervalTree& t, double p, double hot_gain,
                                                             double hot, double cold_gain, double jitter) {
    std::vector<std::vector<double>> s(t.level_count());
    s[0] = {1.0};
    for (int j = 0; j + 1 < t.level_count(); ++j) {
        const int l = t.arity(j);
        for (int k = 0; k < t.level_size(j); ++k) {
            std::vector<double> w(l);
            double total = 0.0;
            for (auto& x : w) total += (x = 1.0 + g.uniform(-jitter, jitter));
            double spread = 0.0;
            for (double x : w) spread += std::pow(x * l / total, 1.0 / p);
            const double floor_gain = std::max(0.0, std::pow(spread / l, -p) - 1.0) * (1.0 + 1e-9);
            const double gain = floor_gain + (g.coin(hot) ? g.uniform(hot_gain, 2.0 * hot_gain) : g.uniform(0.0, cold_gain));
            const double base = std::pow(s[j][k], p) * std::pow(static_cast<double>(l), 1.0 - p) * (1.0 + gain);
            for (double x : w) s[j + 1].push_back(std::pow(base * x / total, 1.0 / p));
        }
    }
    return s;
}

/// Gain budget left by root extremality: log of 1 / ((1 - nu/2) Theta^p).
inline double gain_budget(double nu, double Theta, double p) { return -std::log((1.0 - nu / 2.0) * std::pow(Theta, p)); }

/// Hot-node rate spending roughly `share` of the budget over the depth.
inline double hot_rate(double budget, double share, double hot_gain, int depth) {
    return std::clamp(budget * share / (hot_gain * 1.5 * depth), 0.0, 1.0);
}

struct GoodXInstance {
    TreeProfile profile;
    double mu, Delta;
    GoodXHypotheses hyp;
    GoodXReport report;
};

inline std::optional<GoodXInstance> draw_goodx(Gen& g) {
    const double p = std::vector<double>{1.5, 2.0, 3.0}[g.integer(0, 2)];
    const auto tree = random_tree(g, 2, 7, 3, 400);
    GoodXHypotheses h;
    h.lambda = 1.0;
    h.Theta = g.coin() ? 1.0 - g.uniform(0.0, 0.02) : g.uniform(0.9, 1.0);
    h.nu = g.uniform(0.02, 0.4);
    h.M = g.uniform(1.05, 2.5);
    const double mu = g.uniform(0.02, 0.35), Delta = g.uniform(0.05, 0.7);
    // smallest m meeting the decay hypothesis
    const double decay = std::log1p(-mu * Delta / std::pow(h.M, p));
    const double target = std::log((1.0 - h.nu / 2.0) * std::pow(h.Theta / h.lambda, p));
    h.m = target >= 0.0 ? 0 : static_cast<long long>(std::floor(target / decay)) + 1;
    const double hot_gain = mu / (1.0 - mu);
    const double budget = gain_budget(h.nu, h.Theta, p);
    const double cold = g.uniform(0.0, 0.3) * budget / tree.depth();
    auto s = near_additive_values(g, tree, p, hot_gain, hot_rate(budget, g.uniform(0.0, 1.2), hot_gain, tree.depth()),
                                  cold, g.uniform(0.0, 0.05));
    auto r = s;
    auto pr = TreeProfile::from_values(tree, p, std::move(r), std::move(s));
    auto rep = goodX_analysis(pr, mu, Delta, h);
    if (!rep.hypotheses_hold()) return std::nullopt;
    return GoodXInstance{std::move(pr), mu, Delta, h, std::move(rep)};
}

struct YtoXInstance {
    TreeProfile profile;
    double nu, Theta, Delta, lambda, M;
    YtoXReport report;
};

/// r is a uniform contraction of s, so bad nodes come from nodes where s gains at least nu / (1 - nu).
inline std::optional<YtoXInstance> draw_ytox(Gen& g) {
    const double p = std::vector<double>{1.5, 2.0, 3.0}[g.integer(0, 2)];
    const auto tree = random_tree(g, 1, 7, 3, 400);
    const double lambda = 1.0, Theta = g.coin() ? 1.0 - g.uniform(0.0, 0.02) : g.uniform(0.6, 1.0);
    const double nu = g.uniform(0.02, 0.5), M = g.uniform(1.05, 2.5);
    const double Delta = g.uniform(0.01, 1.0) * nu * std::pow(Theta, p) / (2.0 * std::pow(lambda, p) * std::pow(M, p));
    const double budget = -std::log(1.0 - nu / 2.0);
    const double shrink = g.uniform(0.0, 0.3) * budget;
    const double hot_gain = nu / (1.0 - nu);
    auto s = near_additive_values(g, tree, p, hot_gain,
                                  hot_rate(budget - shrink, g.uniform(0.0, 1.2), hot_gain, tree.depth()),
                                  g.uniform(0.0, 0.3) * budget / tree.depth(), g.uniform(0.0, 0.05));
    const double c = Theta * std::exp(-shrink / p);
    std::vector<std::vector<double>> r(s.size());
    for (std::size_t j = 0; j < s.size(); ++j)
        for (double x : s[j]) r[j].push_back(c * x);
    auto pr = TreeProfile::from_values(tree, p, std::move(r), std::move(s));
    auto rep = ytox_analysis(pr, nu, Theta, Delta, lambda, M);
    if (!rep.hypotheses_hold()) return std::nullopt;
    return YtoXInstance{std::move(pr), nu, Theta, Delta, lambda, M, std::move(rep)};
}

struct WitnessInstance {
    WitnessFunctions W;
    WitnessParams q;
    WitnessResult result;
};

/// Tables with E_Y = Theta^p u E_X and D = v min(E_Y, D_X-ish), mostly near-extremal.
inline std::optional<WitnessInstance> draw_witness(Gen& g) {
    const int L = g.integer(1, 7);
    const std::size_t n = std::size_t{1} << L;
    WitnessParams q;
    q.p = std::vector<double>{1.5, 2.0, 3.0}[g.integer(0, 2)];
    q.lambda = 1.0;
    q.Theta = g.uniform(0.7, 1.0);
    q.a = g.uniform(0.1, 0.9);
    q.b = g.uniform(0.1, 0.9);
    const double Tp = std::pow(q.Theta, q.p);
    // split the admissible budget lambda^p (2 mu / a + 2 nu / b) < Theta^p (1 - nu)
    q.nu = g.uniform(0.001, 0.2) * q.b;
    q.mu = g.uniform(0.001, 0.2) * q.a * Tp;
    const double outlier = g.uniform(0.0, 0.5);
    std::vector<double> DY(n), EY(n), DX(n), EX(n);
    for (std::size_t e = 0; e < n; ++e) {
        const bool far = g.coin(outlier);
        EX[e] = g.uniform(0.2, 2.0);
        DX[e] = EX[e] * (far ? g.uniform(0.0, 1.0) : g.uniform(0.97, 1.0));
        EY[e] = Tp * EX[e] * (far ? g.uniform(0.0, 1.0) : g.uniform(0.97, 1.0));
        DY[e] = std::min(EY[e], DX[e]) * (far ? g.uniform(0.0, 1.0) : g.uniform(0.97, 1.0));
    }
    auto W = witness_functions_from_tables(q.p, std::move(DY), std::move(EY), std::move(DX), std::move(EX));
    auto res = witness_search(W, q);
    if (!res.hypotheses_hold()) return std::nullopt;
    return WitnessInstance{std::move(W), q, res};
}

struct SharpInstance {
    MapOnCube h;
    double a, D;
    SharpEmbeddingReport report;
};

/// Perturbed canonical l1 maps on 2^l whose sharp-embedding hypothesis verifies.
inline std::optional<SharpInstance> draw_sharp(Gen& g) {
    const int l = g.integer(2, 4);
    const double a = g.uniform(0.01, 0.9 / l);
    const double D = std::max(1.01 / (1.0 - a * l), 1.0 + g.uniform(0.0, 2.0));
    auto coords = canonical_map(l, 1.0).coords();
    const double noise = std::pow(10.0, g.uniform(-5.0, -1.0));
    for (auto& x : coords) x += noise * g.uniform(-1.0, 1.0);
    MapOnCube h(l, LpSpace(l, 1.0), std::move(coords));
    auto rep = sharp_embedding_check(h, a, D);
    if (!rep.hypothesis_holds) return std::nullopt;
    return SharpInstance{std::move(h), a, D, rep};
}

struct DensityInstance {
    int L, l;
    std::vector<char> omega;
    double prob;
};

/// Omega with P(Omega) < 2^{-l} on 2^L, L <= 12, blocks of equal size.
inline DensityInstance draw_density(Gen& g) {
    for (;;) {
        const int L = g.integer(1, 12);
        std::vector<int> divisors;
        for (int l = 1; l <= L; ++l)
            if (L % l == 0) divisors.push_back(l);
        const int l = divisors[g.integer(0, static_cast<int>(divisors.size()) - 1)];
        const std::size_t N = std::size_t{1} << L;
        const std::size_t max_count = (N >> l) == 0 ? 0 : (N >> l) - 1;  // strictly below N / 2^l
        if (max_count == 0) continue;
        std::vector<char> omega(N, 0);
        const std::size_t count = static_cast<std::size_t>(g.integer(0, static_cast<int>(max_count)));
        for (std::size_t c = 0; c < count;) {
            const std::size_t v = g.bits() % N;
            if (!omega[v]) {
                omega[v] = 1;
                ++c;
            }
        }
        return {L, l, std::move(omega), static_cast<double>(count) / static_cast<double>(N)};
    }
}

}  // namespace hcube::test
