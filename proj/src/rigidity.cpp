#include "hcube/rigidity.hpp"

#include "hcube/type_stats.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace hcube {

namespace {

void check_flat_params(double p, int n, double Phi) {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error("flat constant needs 1 < p < infinity");
    if (n < 1) throw Error("flat constant needs n >= 1");
    if (!(Phi >= 1.0) || !std::isfinite(Phi)) throw Error("flat constant needs Phi >= 1");
}

struct Minimum {
    double arg;
    double value;
};

template <class Fn>
Minimum brent_min(Fn&& fn, double lo, double hi) {
    std::uintmax_t iters = 500;
    const auto r = boost::math::tools::brent_find_minima(fn, lo, hi, 52, iters);
    Minimum m{r.first, r.second};
    // Endpoints are admissible; Brent only samples the interior.
    for (double x : {lo, hi}) {
        const double v = fn(x);
        if (v < m.value) m = {x, v};
    }
    return m;
}

/// lim_{n->inf} n * flat_deficit(p, n, Phi, c).
double asymptotic_deficit(double p, double Phi, double c) {
    const double cp = std::pow(c, p);
    const double B = std::pow(Phi, p) + 1.0 - 2.0 * cp;
    const double A = Phi + 1.0 - 2.0 * c;
    return B / cp - p * A / c;
}

}  // namespace

std::string to_string(FlatMethod m) {
    switch (m) {
        case FlatMethod::ConstrainedOpt: return "constrained_opt";
        case FlatMethod::Grid: return "grid";
        case FlatMethod::SampleCheck: return "sample_check";
    }
    return "?";
}

double flatness_ratio(std::span<const double> a, double p) {
    double l1 = 0.0, lp = 0.0;
    for (double x : a) {
        l1 += std::abs(x);
        lp += std::pow(std::abs(x), p);
    }
    if (l1 == 0.0) return 0.0;
    return std::pow(l1, p) / (std::pow(static_cast<double>(a.size()), p - 1.0) * lp);
}

double flat_deficit(double p, double n, double Phi, double c) {
    const double u = (Phi + 1.0 - 2.0 * c) / (n * c);
    const double v = (std::pow(Phi, p) + 1.0 - 2.0 * std::pow(c, p)) / (n * std::pow(c, p));
    const double log_ratio = p * std::log1p(u) - std::log1p(v);
    return -std::expm1(log_ratio);
}

FlatConstant flat_phi(double p, int n, double Phi, FlatMethod method, std::uint64_t seed, std::uint64_t samples) {
    check_flat_params(p, n, Phi);
    FlatConstant fc;
    fc.p = p;
    fc.n = n;
    fc.Phi = Phi;
    fc.method = method;
    // Phi = 1: the constraint admits constant vectors (ratio 1). n = 1: no non-flat nonzero vector exists.
    if (Phi == 1.0 || n == 1) {
        fc.phi_star = 1.0;
        return fc;
    }
    const double dn = n;
    auto deficit = [&](double c) { return flat_deficit(p, dn, Phi, c); };

    switch (method) {
        case FlatMethod::ConstrainedOpt: {
            // With max = Phi * min active and coordinates sorted, every interior coordinate
            // satisfies the same stationarity condition c^{p-1} = ||a||_p^p / ||a||_1.
            const auto m = brent_min(deficit, 1.0, Phi);
            fc.interior = m.arg;
            fc.phi_star = 1.0 - m.value;
            break;
        }
        case FlatMethod::Grid: {
            constexpr int kGrid = 20000;
            Minimum best{1.0, deficit(1.0)};
            for (int i = 1; i <= kGrid; ++i) {
                const double c = 1.0 + (Phi - 1.0) * i / kGrid;
                const double v = deficit(c);
                if (v < best.value) best = {c, v};
            }
            fc.interior = best.arg;
            fc.phi_star = 1.0 - best.value;
            break;
        }
        case FlatMethod::SampleCheck: {
            std::mt19937_64 rng(seed);
            auto u01 = [](std::mt19937_64& g) { return detail::unit_uniform(g); };
            std::vector<double> a(n);
            double best = 0.0;
            for (std::uint64_t s = 0; s < samples; ++s) {
                if (s % 2 == 0) {
                    for (auto& x : a) x = u01(rng);
                } else {
                    // Near the boundary max = Phi * min.
                    a[0] = 1.0;
                    a[n - 1] = Phi * (1.0 + 1e-3 * u01(rng));
                    for (int i = 1; i < n - 1; ++i) a[i] = 1.0 + (Phi - 1.0) * u01(rng);
                }
                const auto [mn, mx] = std::minmax_element(a.begin(), a.end());
                if (!(*mx > Phi * *mn)) continue;
                best = std::max(best, flatness_ratio(a, p));
            }
            fc.phi_star = best;
            break;
        }
    }
    return fc;
}

double log_flat_gap(double p, double log_N, double Phi) {
    if (!(Phi > 1.0)) throw Error("log_flat_gap needs Phi > 1");
    // N = 1 admits no non-flat vector, so phi = 1.
    if (log_N < std::log(2.0) - 1e-12) return -kInf;
    if (log_N < 600.0) {
        const double n = std::floor(std::exp(log_N) + 1e-9);
        const auto m = brent_min([&](double c) { return flat_deficit(p, n, Phi, c); }, 1.0, Phi);
        return std::log(m.value);
    }
    const auto m = brent_min([&](double c) { return asymptotic_deficit(p, Phi, c); }, 1.0, Phi);
    return std::log(m.value) - log_N;
}

FlatCheck flat_check(std::span<const double> a, double p, double Phi, double phi) {
    FlatCheck r;
    if (a.empty()) throw Error("flat_check needs a nonempty vector");
    double l1 = 0.0, lp = 0.0, mx = 0.0, mn = kInf;
    for (double x : a) {
        const double v = std::abs(x);
        l1 += v;
        lp += std::pow(v, p);
        mx = std::max(mx, v);
        mn = std::min(mn, v);
    }
    r.lhs = std::pow(l1, p);
    r.rhs = phi * std::pow(static_cast<double>(a.size()), p - 1.0) * lp;
    r.ratio = flatness_ratio(a, p);
    r.hypothesis_holds = l1 > 0.0 && r.lhs > r.rhs;
    r.conclusion_holds = mx <= Phi * mn;
    return r;
}

SharpEmbeddingReport sharp_embedding_check(const MapOnCube& h, double a, double D) {
    SharpEmbeddingReport r;
    r.l = h.n();
    r.a = a;
    r.D = D;
    if (!(a > 0.0) || !(a < 1.0 / r.l)) throw Error("sharp embedding check needs 0 < a < 1/l");
    if (!(1.0 - a * r.l > 1.0 / D)) throw Error("sharp embedding check needs 1 - a l > 1/D");
    r.lip = lip_constant(h);
    const Mask full = h.cube().full_mask();
    r.min_antipodal = kInf;
    for (Mask v = 0; v < h.size(); ++v) r.min_antipodal = std::min(r.min_antipodal, h.rho(v, v ^ full));
    r.hypothesis_holds = (1.0 - a) * r.lip < r.min_antipodal;
    r.distortion = distortion(h);
    r.proven_bound = 1.0 / (1.0 - a * r.l);
    r.conclusion_holds = r.distortion <= D * (1.0 + 1e-12);
    return r;
}

RigidityCertificate bmw_rigidity_check(const MapOnCube& h, double p, double a, double D, double tol) {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error("rigidity check needs 1 < p < infinity");
    if (!(a > 0.0 && a < 1.0)) throw Error("rigidity check needs 0 < a < 1");
    RigidityCertificate c;
    c.l = h.n();
    c.p = p;
    c.a = a;
    c.D = D;
    const double scale_p = std::pow(static_cast<double>(c.l), p - 1.0) * edge_moment_sum(h, p);
    c.lhs = antipodal_moment(h, p);
    c.rhs = (1.0 - a) * scale_p;
    c.hypothesis_ratio = safe_ratio(c.lhs, c.rhs);
    c.hypothesis_holds = c.hypothesis_ratio > 1.0;
    c.T = std::pow(scale_p, 1.0 / p);
    const auto range = pair_ratio_range(h);
    if (c.T > 0.0) {
        c.min_scaled = range.min / c.T;
        c.max_scaled = range.max / c.T;
    }
    c.pass = c.T > 0.0 && c.min_scaled >= 1.0 / D - tol && c.max_scaled <= D + tol;
    return c;
}

MapOnCube bmw_trial_map(int l, std::uint64_t seed, int trial) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(trial));
    auto u01 = [](std::mt19937_64& g) { return detail::unit_uniform(g); };
    const double spread = std::pow(10.0, -6.0 + 6.0 * u01(rng));
    const Cube cube(l);
    std::vector<double> coords(cube.size() * l);
    switch (trial % 3) {
        case 0: {  // canonical map plus coordinate noise
            for (Mask v = 0; v < cube.size(); ++v)
                for (int i = 0; i < l; ++i) {
                    const double s = ((v >> i) & 1u) ? -1.0 : 1.0;
                    coords[v * l + i] = (s + spread * (2.0 * u01(rng) - 1.0)) / l;
                }
            break;
        }
        case 1: {  // anisotropic coordinate weights
            std::vector<double> w(l);
            for (auto& x : w) x = 1.0 + spread * (2.0 * u01(rng) - 1.0);
            for (Mask v = 0; v < cube.size(); ++v)
                for (int i = 0; i < l; ++i) coords[v * l + i] = (((v >> i) & 1u) ? -w[i] : w[i]) / l;
            break;
        }
        default: {  // unstructured
            for (auto& x : coords) x = 2.0 * u01(rng) - 1.0;
            break;
        }
    }
    return MapOnCube(l, LpSpace(l, 1.0), std::move(coords));
}

BmwEstimate estimate_bmw_constant(double p, int l, double D, int trials, std::uint64_t seed) {
    if (trials < 1) throw Error("estimate_bmw_constant needs trials >= 1");
    BmwEstimate est;
    est.p = p;
    est.l = l;
    est.D = D;
    est.trials = trials;
    est.seed = seed;
    // The D-check does not depend on a, and a trial meets the hypothesis at level a iff
    // its extremality deficit 1 - lhs / (l^{p-1} sum) is below a. The supremum of admissible
    // a is therefore the smallest deficit among failing trials.
    double threshold = 1.0;
    for (int t = 0; t < trials; ++t) {
        MapOnCube h = bmw_trial_map(l, seed, t);
        const auto cert = bmw_rigidity_check(h, p, 0.5, D);
        if (cert.pass) continue;
        ++est.failing_trials;
        const double deficit = std::max(0.0, 1.0 - cert.hypothesis_ratio * (1.0 - 0.5));
        if (deficit < threshold) {
            threshold = deficit;
            est.counterexample = std::move(h);
            est.counterexample_trial = t;
        }
    }
    est.counterexample_found = est.failing_trials > 0;
    est.a_estimate = threshold;
    est.degenerate = threshold < 1e-6;
    return est;
}

}  // namespace hcube
