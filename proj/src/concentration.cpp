#include "hcube/concentration.hpp"

#include "hcube/type_stats.hpp"

#include <algorithm>
#include <cmath>

namespace hcube {

namespace {

double num(bool b) { return b ? 1.0 : 0.0; }

/// n times the largest change of Phi along an edge of 2^n.
double table_lipschitz(const std::vector<double>& Phi, int n) {
    double worst = 0.0;
    for (Mask v = 0; v < Phi.size(); ++v)
        for (int i = 0; i < n; ++i) {
            const Mask w = v ^ (Mask{1} << i);
            if (w > v) worst = std::max(worst, std::abs(Phi[v] - Phi[w]));
        }
    return worst * n;
}

double probability(const std::vector<char>& set) {
    std::size_t c = 0;
    for (char x : set) c += x != 0;
    return static_cast<double>(c) / static_cast<double>(set.size());
}

}  // namespace

std::vector<double> default_tail_grid(int n) {
    std::vector<double> g;
    const int steps = std::max(1, 2 * n);
    for (int j = 1; j <= steps; ++j) g.push_back(static_cast<double>(j) / steps);
    return g;
}

double lower_median(std::vector<double> values) {
    if (values.empty()) throw Error("median of an empty table");
    const std::size_t idx = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + idx, values.end());
    return values[idx];
}

ConcentrationReport median_tail_report(const std::vector<double>& Phi, double lambda1, std::string id,
                                       std::optional<std::vector<double>> grid) {
    if (Phi.empty() || !std::has_single_bit(Phi.size())) throw Error("function table must have 2^n entries");
    ConcentrationReport rep;
    rep.id = std::move(id);
    rep.n = std::countr_zero(Phi.size());
    rep.lambda1 = lambda1;
    rep.observed_lip = table_lipschitz(Phi, rep.n);
    if (!(lambda1 >= rep.observed_lip * (1.0 - 1e-12)))
        throw Error("lambda_1 is below the observed Lipschitz constant " + std::to_string(rep.observed_lip));
    rep.median = lower_median(Phi);
    const Cube cube(rep.n);
    rep.mean = expect([&](Mask v) { return Phi[v]; }, cube, {kMaxDim, true});

    std::vector<double> dev(Phi.size());
    for (std::size_t v = 0; v < Phi.size(); ++v) dev[v] = std::abs(Phi[v] - rep.median);
    std::sort(dev.begin(), dev.end());
    const auto ts = grid ? *grid : default_tail_grid(rep.n);
    for (double t : ts) {
        const auto above = dev.end() - std::upper_bound(dev.begin(), dev.end(), t * lambda1);
        rep.tails.push_back({t, static_cast<double>(above) / static_cast<double>(dev.size())});
    }

    std::vector<double> xs, ys;
    for (const auto& tp : rep.tails)
        if (tp.prob > 0.0) {
            xs.push_back(tp.t * rep.n);
            ys.push_back(std::log(tp.prob));
        }
    rep.fit_points = static_cast<int>(xs.size());
    if (xs.empty()) return rep;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= xs.size();
    my /= ys.size();
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    if (xs.size() >= 2 && slope < 0.0) {
        rep.beta = -slope;
        rep.alpha = std::exp(my - slope * mx);
        rep.fit_ok = true;
    } else {
        // Constrained optimum sits on the boundary beta -> 0+.
        rep.beta = 0.0;
        rep.alpha = std::exp(my);
    }
    return rep;
}

std::vector<double> interval_displacement(const LipschitzMap& F, const MapOnCube& f, Mask interval_mask) {
    const MapOnCube Ff = compose(F, f);
    std::vector<double> out(f.size());
    for (Mask v = 0; v < f.size(); ++v) out[v] = Ff.rho(v, v ^ interval_mask);
    return out;
}

DensityResult density_select(int L, int l, const OrbitMap& g, const std::vector<char>& omega) {
    check_cap(L);
    if (l < 0 || l > 20) throw Error("orbit dimension out of range");
    const Mask N = Mask{1} << L;
    const Mask ds = Mask{1} << l;
    if (omega.size() != N) throw Error("event table must have 2^L entries");
    DensityResult res;
    res.prob = probability(omega);
    res.guaranteed = res.prob < std::ldexp(1.0, -l);
    if (L <= 12) {
        std::vector<char> seen(N);
        for (Mask d = 0; d < ds; ++d) {
            std::fill(seen.begin(), seen.end(), 0);
            for (Mask e = 0; e < N; ++e) {
                const Mask x = g(e, d);
                if (x >= N || seen[x]) throw Error("orbit map is not a bijection for some delta");
                seen[x] = 1;
            }
        }
        res.bijection_checked = true;
    }
    for (Mask e = 0; e < N && !res.eps; ++e) {
        bool clear = true;
        for (Mask d = 0; d < ds && clear; ++d) clear = !omega[g(e, d)];
        if (clear) res.eps = e;
    }
    res.alarm = res.guaranteed && !res.eps;
    return res;
}

DensityResult density_select(const BlockPartition& blocks, const std::vector<char>& omega) {
    const auto& bm = blocks.masks();
    return density_select(blocks.length(), blocks.count(), [&](Mask e, Mask d) { return block_product_mask(e, d, bm); },
                          omega);
}

ExtractionCertificate extract_via_concentration(const LipschitzMap& F, const MapOnCube& f,
                                                const ConcentrationParams& q, const ExpectOptions& opts) {
    if (q.l < 1 || q.k < 1 || q.l * q.k != f.n()) throw Error("concentration route needs f on 2^{lk}");
    check_cap(f.n(), opts);
    ExtractionCertificate c;
    c.route = "concentration";
    c.L = f.n();
    c.l = q.l;
    auto stage = [&](std::string name) -> StageRecord& {
        c.stages.push_back(StageRecord{std::move(name), false, {}, {}});
        return c.stages.back();
    };
    auto fail = [&](StageRecord& st, std::string note) -> ExtractionCertificate& {
        st.ok = false;
        st.note = std::move(note);
        c.pass = false;
        c.failed_stage = st.name;
        return c;
    };
    const double l = q.l;

    {
        auto& st = stage("parameters");
        const std::vector<std::pair<std::string, bool>> conds{
            {"0 < a < 1/l", q.a > 0.0 && q.a < 1.0 / l},
            {"1 - a l > 1/D", 1.0 - q.a * l > 1.0 / q.D},
            {"vartheta < Theta / D", q.vartheta > 0.0 && q.vartheta < q.Theta / q.D},
            {"0 < mu < 1/2", q.mu > 0.0 && q.mu < 0.5},
            {"(1+mu)/(1-mu) > 1-a", (1.0 + q.mu) / (1.0 - q.mu) > 1.0 - q.a},
            {"(1-2mu) Theta / D > vartheta", (1.0 - 2.0 * q.mu) * q.Theta / q.D > q.vartheta},
            {"0 < eta < mu", q.eta > 0.0 && q.eta < q.mu},
            {"(1-mu)/l + (1+eta)(l-1)/l < 1-eta", (1.0 - q.mu) / l + (1.0 + q.eta) * (l - 1.0) / l < 1.0 - q.eta},
            {"0 < t < mu Theta / l", q.t > 0.0 && q.t < q.mu * q.Theta / l},
            {"(l+1) t < mu (1-2mu) Theta", (l + 1.0) * q.t < q.mu * (1.0 - 2.0 * q.mu) * q.Theta},
        };
        std::string failed;
        for (const auto& [name, ok] : conds) {
            st.values.emplace_back(name, num(ok));
            if (!ok && failed.empty()) failed = name;
        }
        st.ok = failed.empty();
        if (!st.ok) return fail(st, "parameter constraint violated: " + failed);
    }

    const MapOnCube Ff = compose(F, f);
    const double lip = lip_constant(f);
    {
        auto& st = stage("near_extremality");
        const double lhs = antipodal_moment(Ff, 1.0, opts);
        const double rhs = (1.0 - q.eta) * q.Theta * lip;
        st.values = {{"lhs", lhs}, {"rhs", rhs}, {"lip_f", lip}, {"a_ratio", safe_ratio(lhs, lip)}};
        st.ok = lhs > rhs;
        if (!st.ok) return fail(st, "E rho_Y(eps,-eps) does not exceed (1 - eta) Theta Lip(f)");
    }

    // Root then the l blocks of length k.
    const BlockPartition blocks = BlockPartition::equal(f.n(), q.l);
    std::vector<Mask> nodes{Cube(f.n()).full_mask()};
    for (Mask m : blocks.masks()) nodes.push_back(m);
    const double lambda = f.n() <= kPairCap ? lip_on_images(F, f) : F.lipschitz_bound(f.space());
    std::vector<std::vector<double>> Phi;
    std::vector<double> med, mean;
    {
        auto& st = stage("medians");
        bool lip_ok = true;
        for (Mask m : nodes) {
            Phi.push_back(interval_displacement(F, f, m));
            med.push_back(lower_median(Phi.back()));
            mean.push_back(expect([&](Mask v) { return Phi.back()[v]; }, f.cube(), opts));
            lip_ok = lip_ok && table_lipschitz(Phi.back(), f.n()) <= 2.0 * lambda * lip * (1.0 + 1e-9) + 1e-12;
        }
        const double TL = q.Theta * lip;
        const bool root_bracket = (1.0 - q.eta) * TL < mean[0] && mean[0] < (1.0 + q.eta) * TL;
        bool block_bracket = true;
        for (std::size_t i = 1; i < nodes.size(); ++i)
            block_bracket = block_bracket && (1.0 - q.mu) * TL <= l * mean[i] && l * mean[i] <= (1.0 + q.eta) * TL;
        st.values = {{"lambda", lambda}, {"r_root", mean[0]}, {"median_root", med[0]},
                     {"displacement_lipschitz", num(lip_ok)}, {"root_bracket", num(root_bracket)},
                     {"block_bracket", num(block_bracket)}};
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            st.values.emplace_back("r_block_" + std::to_string(i), mean[i]);
            st.values.emplace_back("median_block_" + std::to_string(i), med[i]);
        }
        if (!lip_ok) ++c.alarms;
        st.ok = lip_ok && root_bracket && block_bracket;
        if (!st.ok)
            return fail(st, !lip_ok ? "displacement exceeds its 2 lambda Lip(f) bound"
                            : !root_bracket ? "root mean outside ((1-eta) Theta Lip, (1+eta) Theta Lip)"
                                            : "block mean outside [(1-mu) Theta Lip, (1+eta) Theta Lip] / l");
    }

    std::vector<char> omega(f.size(), 0);
    {
        auto& st = stage("events");
        const auto rep = median_tail_report(Phi[0], std::max(2.0 * lambda * lip, table_lipschitz(Phi[0], f.n())),
                                            "root");
        st.values = {{"fit_alpha", rep.alpha}, {"fit_beta", rep.beta}};
        // Size conditions on k evaluated with the fitted constants; reported only.
        if (rep.fit_ok && lambda > 0.0) {
            const double tail = rep.alpha * std::exp(-rep.beta * q.t * f.n() / (8.0 * lambda));
            st.values.emplace_back("size_condition_mass", num(lambda * tail < q.t / (4.0 * lambda)));
            st.values.emplace_back("size_condition_union", num((l + 1.0) * tail < std::ldexp(1.0, -q.l)));
        }
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            std::vector<char> up(f.size()), om(f.size());
            for (Mask v = 0; v < f.size(); ++v) {
                up[v] = std::abs(Phi[i][v] - med[i]) > q.t * lip / 4.0;
                om[v] = std::abs(Phi[i][v] - mean[i]) > q.t * lip;
                omega[v] = omega[v] || om[v];
            }
            const double p_up = probability(up);
            const bool gap_ok = std::abs(med[i] - mean[i]) <= q.t * lip / 2.0;
            // Median-mean gap is implied by the mass bound on the wide-deviation event.
            if (lambda > 0.0 && p_up <= q.t / (4.0 * lambda) && !gap_ok) ++c.alarms;
            if (gap_ok) {
                bool inside = true;
                for (Mask v = 0; v < f.size(); ++v) inside = inside && (!om[v] || up[v]);
                if (!inside) ++c.alarms;
                st.values.emplace_back("inclusion_" + std::to_string(i), num(inside));
            }
            st.values.emplace_back("p_wide_" + std::to_string(i), p_up);
            st.values.emplace_back("p_far_" + std::to_string(i), probability(om));
        }
        st.values.emplace_back("p_union", probability(omega));
        st.ok = true;
    }

    {
        auto& st = stage("density");
        const auto res = density_select(blocks, omega);
        if (res.alarm) ++c.alarms;
        st.values = {{"p_union", res.prob}, {"guaranteed", num(res.guaranteed)}};
        st.ok = res.eps.has_value();
        if (!st.ok) return fail(st, res.alarm ? "no avoiding orbit although P(Omega) < 2^{-l}" : "no avoiding orbit");
        c.witness = res.eps;
        st.values.emplace_back("witness", static_cast<double>(*res.eps));
    }

    {
        auto& st = stage("subcube");
        const auto& bm = blocks.masks();
        std::vector<double> coords;
        for (Mask d = 0; d < (Mask{1} << q.l); ++d) {
            const auto img = f.image(block_product_mask(*c.witness, d, bm));
            coords.insert(coords.end(), img.begin(), img.end());
        }
        MapOnCube h(q.l, f.space(), std::move(coords));
        const MapOnCube Fh = compose(F, h);
        const auto sharp = sharp_embedding_check(Fh, q.a, q.D);
        if (!sharp.consistent()) ++c.alarms;
        bool pointwise = true;
        for (Mask x = 0; x < h.size(); ++x)
            for (Mask y = x + 1; y < h.size(); ++y) pointwise = pointwise && q.vartheta * h.rho(x, y) <= Fh.rho(x, y);
        c.distortion_h = distortion(h);
        c.distortion_Fh = sharp.distortion;
        c.r = lip_constant(Fh);
        c.s = lip_constant(h);
        c.scale_ratio = safe_ratio(c.r, c.s);
        st.values = {{"sharp_hypothesis", num(sharp.hypothesis_holds)}, {"sharp_bound", sharp.proven_bound},
                     {"distortion_Fh", c.distortion_Fh}, {"distortion_h", c.distortion_h},
                     {"pointwise_scale", num(pointwise)}, {"lip_Fh", c.r}, {"lip_h", c.s}};
        c.h = std::move(h);
        const bool dist_ok = c.distortion_Fh <= q.D * (1.0 + 1e-12);
        st.ok = dist_ok && pointwise;
        if (!st.ok) return fail(st, !dist_ok ? "distortion of F o h exceeds D" : "vartheta rho_X^h > rho_Y^h somewhere");
    }
    c.pass = true;
    return c;
}

}  // namespace hcube
