#include "hcube/type_stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hcube {

namespace {

inline double powp(double x, double p) {
    if (p == 1.0) return x;
    if (p == 2.0) return x * x;
    return std::pow(x, p);
}

inline Mask low_mask(int bits) { return bits >= 64 ? ~Mask{0} : (Mask{1} << bits) - 1; }

void check_p(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error("exponent p must satisfy 1 < p < infinity");
}

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::max(std::abs(a), std::abs(b))); }

constexpr double kTol = 1e-9;

}  // namespace

std::string to_string(StatKind k) {
    switch (k) {
        case StatKind::A: return "a";
        case StatKind::B: return "b";
        case StatKind::E: return "e";
    }
    return "?";
}

double TypeStatistic::root() const {
    if (kind == StatKind::A) return ratio;
    return std::pow(ratio, 1.0 / p);
}

double safe_ratio(double lhs, double rhs) {
    if (lhs == 0.0) return 0.0;
    if (rhs == 0.0) return kInf;
    return lhs / rhs;
}

double antipodal_moment(const MapOnCube& g, double p, const ExpectOptions& opts) {
    const Mask full = g.cube().full_mask();
    return expect([&](Mask v) { return powp(g.rho(v, v ^ full), p); }, g.cube(), opts);
}

double edge_moment_sum(const MapOnCube& f, double p, const ExpectOptions& opts) {
    const int n = f.n();
    return expect(
        [&](Mask v) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += powp(f.rho(v, v ^ (Mask{1} << i)), p);
            return s;
        },
        f.cube(), opts);
}

TypeStatistic b_statistic(const LipschitzMap& F, const MapOnCube& f, double p, const ExpectOptions& opts) {
    check_p(p);
    const MapOnCube g = compose(F, f);
    TypeStatistic s;
    s.kind = StatKind::B;
    s.p = p;
    s.n = f.n();
    s.lhs = antipodal_moment(g, p, opts);
    s.rhs = std::pow(static_cast<double>(f.n()), p - 1.0) * edge_moment_sum(f, p, opts);
    s.ratio = safe_ratio(s.lhs, s.rhs);
    return s;
}

TypeStatistic e_statistic(const LipschitzMap& F, const MapOnCube& f, double p, const ExpectOptions& opts) {
    check_p(p);
    const MapOnCube g = compose(F, f);
    TypeStatistic s;
    s.kind = StatKind::E;
    s.p = p;
    s.n = f.n();
    s.lhs = antipodal_moment(g, p, opts);
    s.rhs = edge_moment_sum(f, p, opts);
    s.ratio = safe_ratio(s.lhs, s.rhs);
    return s;
}

TypeStatistic a_statistic(const LipschitzMap& F, const MapOnCube& f, const ExpectOptions& opts) {
    const MapOnCube g = compose(F, f);
    TypeStatistic s;
    s.kind = StatKind::A;
    s.p = 1.0;
    s.n = f.n();
    s.lhs = antipodal_moment(g, 1.0, opts);
    s.rhs = lip_constant(f);
    s.ratio = safe_ratio(s.lhs, s.rhs);
    return s;
}

MapOnCube doubling_extension(const MapOnCube& f, int l) {
    const int k = f.n();
    if (k > l) throw Error("doubling_extension requires k <= l");
    Cube target(l);
    check_cap(l);
    const Mask keep = low_mask(k);
    const int w = f.width();
    std::vector<double> coords;
    coords.reserve(target.size() * w);
    for (Mask v = 0; v < target.size(); ++v) {
        auto img = f.image(v & keep);
        coords.insert(coords.end(), img.begin(), img.end());
    }
    return MapOnCube(l, f.space(), std::move(coords));
}

std::vector<double> flip_path_moments(const MapOnCube& f, double p) {
    std::vector<double> out;
    out.reserve(f.n());
    for (int i = 1; i <= f.n(); ++i) {
        const Mask prev = low_mask(i - 1);
        const Mask cur = low_mask(i);
        out.push_back(expect([&](Mask v) { return powp(f.rho(v ^ prev, v ^ cur), p); }, f.cube()));
    }
    return out;
}

ExchangeReport exchange_identity_check(const LipschitzMap& F, const MapOnCube& f, int k, int l) {
    if (k < 1 || l < 1 || k * l != f.n()) throw Error("exchange check needs f on 2^{kl}");
    const BlockPartition blocks = BlockPartition::equal(f.n(), l);
    const auto& bm = blocks.masks();
    const MapOnCube g = compose(F, f);
    const Cube big(f.n());
    const Cube small(l);
    const Mask full = big.full_mask();
    const Mask dfull = small.full_mask();

    ExchangeReport rep;
    rep.k = k;
    rep.l = l;
    rep.lip_f = lip_constant(f);
    rep.direct = expect([&](Mask e) { return g.rho(e, e ^ full); }, big);
    rep.exchanged = expect(
        [&](Mask d) {
            return expect(
                [&](Mask e) { return g.rho(block_product_mask(e, d, bm), block_product_mask(e, d ^ dfull, bm)); }, big);
        },
        small);

    // Induced maps f_eps(delta) = f(g(eps, delta)).
    std::vector<double> lips(big.size());
    for (Mask e = 0; e < big.size(); ++e) {
        double lhs = 0.0;
        double edge = 0.0;
        detail::KahanSum acc;
        for (Mask d = 0; d < small.size(); ++d) {
            const Mask x = block_product_mask(e, d, bm);
            acc.add(g.rho(x, block_product_mask(e, d ^ dfull, bm)));
            for (int i = 0; i < l; ++i) edge = std::max(edge, f.rho(x, x ^ bm[i]));
        }
        lhs = acc.value() * small.weight();
        const double lip = edge * l;
        lips[e] = lip;
        rep.max_induced_lhs = std::max(rep.max_induced_lhs, lhs);
        rep.max_induced_ratio = std::max(rep.max_induced_ratio, safe_ratio(lhs, lip));
    }
    rep.mean_induced_lip = expect([&](Mask e) { return lips[e]; }, big);

    rep.identity_holds = close(rep.direct, rep.exchanged, 1e-12);
    rep.max_bound_holds = rep.direct <= rep.max_induced_lhs * (1 + 1e-12) + 1e-15;
    rep.ratio_chain_holds = rep.direct <= rep.max_induced_ratio * rep.mean_induced_lip * (1 + kTol) + kTol &&
                            rep.mean_induced_lip <= rep.lip_f * (1 + kTol) + kTol;
    return rep;
}

TruncationReport truncation_bound_check(const LipschitzMap& F, const MapOnCube& f, int l, Mask pad) {
    TruncationReport rep;
    rep.m = f.n();
    rep.l = l;
    if (l < 1 || rep.m < l) throw Error("truncation check requires m >= l >= 1");
    rep.k = rep.m / l;
    rep.r = rep.m - l * rep.k;
    if (pad > low_mask(rep.r)) throw Error("pad vertex does not fit 2^r");
    rep.pad = pad;
    const int lk = l * rep.k;

    const int w = f.width();
    const Cube small(lk);
    std::vector<double> gc;
    gc.reserve(small.size() * w);
    for (Mask v = 0; v < small.size(); ++v) {
        auto img = f.image(v | (pad << lk));
        gc.insert(gc.end(), img.begin(), img.end());
    }
    const MapOnCube G(lk, f.space(), std::move(gc));
    const MapOnCube H = doubling_extension(G, rep.m);

    rep.lhs = antipodal_moment(compose(F, f), 1.0);
    rep.g_term = antipodal_moment(compose(F, G), 1.0);
    rep.h_term = antipodal_moment(compose(F, H), 1.0);
    rep.lip_F = lip_on_images(F, f);
    rep.lip_f = lip_constant(f);
    rep.lip_G = lip_constant(G);
    rep.correction = 2.0 * rep.lip_F * rep.lip_f * rep.r / rep.m;
    rep.lip_G_bound = static_cast<double>(rep.m) / lk * rep.lip_f;

    rep.gh_equal = close(rep.g_term, rep.h_term, 1e-12);
    rep.mean_bound_holds = rep.lhs <= (rep.g_term + rep.correction) * (1 + kTol) + kTol;
    rep.lip_bound_holds = rep.lip_G <= rep.lip_G_bound * (1 + kTol) + kTol;
    return rep;
}

MapOnCube random_map(int n, int m, double q, double box, std::uint64_t seed) {
    Cube c(n);
    check_cap(n);
    std::mt19937_64 rng(seed);
    std::vector<double> coords(c.size() * m);
    for (auto& x : coords) x = box * (2.0 * detail::unit_uniform(rng) - 1.0);
    return MapOnCube(n, LpSpace(m, q), std::move(coords));
}

CatalogBound catalog_lower_bound(const std::vector<TypeStatistic>& stats) {
    CatalogBound b;
    for (std::size_t i = 0; i < stats.size(); ++i)
        if (stats[i].ratio > b.value) {
            b.value = stats[i].ratio;
            b.argmax = i;
        }
    return b;
}

}  // namespace hcube
