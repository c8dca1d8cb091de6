#include "hcube/extraction.hpp"

#include "hcube/type_stats.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hcube {

namespace {

constexpr double kLazy = 0.5;  // each lazily chosen constant sits at this fraction of its bound
constexpr double kTol = 1e-9;

template <class T>
double num(T x) {
    return static_cast<double>(x);
}

inline double powp(double x, double p) { return p == 2.0 ? x * x : std::pow(x, p); }

bool leq_tol(double lhs, double rhs, double tol = kTol) { return lhs <= rhs * (1.0 + tol) + tol * 1e-3; }

double rel_err(double got, double want) {
    const double scale = std::max(std::abs(got), std::abs(want));
    return scale == 0.0 ? 0.0 : std::abs(got - want) / scale;
}

double log_add(double x, double y) {
    const double hi = std::max(x, y), lo = std::min(x, y);
    if (hi == -kInf) return -kInf;
    return hi + std::log1p(std::exp(lo - hi));
}

std::vector<Mask> interval_masks(const std::vector<SignedInterval>& blocks) {
    std::vector<Mask> out;
    out.reserve(blocks.size());
    for (const auto& b : blocks) out.push_back(b.mask());
    return out;
}

void check_children(const SignedInterval& I, const std::vector<SignedInterval>& children) {
    if (children.empty()) throw Error("node needs at least one child");
    int next = I.lo;
    for (const auto& c : children) {
        if (c.lo != next || c.hi < c.lo) throw Error("children must partition the node into consecutive intervals");
        next = c.hi + 1;
    }
    if (next != I.hi + 1) throw Error("children must cover the node");
    if (children.size() > 20) throw CapExceeded("node arity exceeds the enumeration cap");
}

StageRecord& add_stage(ExtractionCertificate& c, std::string name) {
    c.stages.push_back(StageRecord{std::move(name), false, {}, {}});
    return c.stages.back();
}

ExtractionCertificate& fail(ExtractionCertificate& c, StageRecord& st, std::string note = {}) {
    st.ok = false;
    if (!note.empty()) st.note = std::move(note);
    c.pass = false;
    c.failed_stage = st.name;
    return c;
}

/// max over eps of the b-ratio of (F, f_eps) where f_eps(delta) = f(g(eps, delta)) over the children of a node.
double max_induced_b_ratio(const MapOnCube& f, const MapOnCube& Ff, Mask node, const std::vector<Mask>& cm, double p) {
    const int l = static_cast<int>(cm.size());
    const Mask ds = Mask{1} << l;
    const double lf = std::pow(static_cast<double>(l), p - 1.0);
    double best = 0.0;
    for (Mask e = 0; e < f.size(); ++e) {
        detail::KahanSum lhs, edge;
        for (Mask d = 0; d < ds; ++d) {
            const Mask x = block_product_mask(e, d, cm);
            lhs.add(powp(Ff.rho(x, x ^ node), p));
            for (int i = 0; i < l; ++i) edge.add(powp(f.rho(x, x ^ cm[i]), p));
        }
        best = std::max(best, safe_ratio(lhs.value(), lf * edge.value()));
    }
    return best;
}

}  // namespace

std::string to_string(LedgerMode m) { return m == LedgerMode::PaperFaithful ? "paper_faithful" : "empirical"; }

LedgerMode ledger_mode_from_string(const std::string& s) {
    if (s == "paper_faithful") return LedgerMode::PaperFaithful;
    if (s == "empirical") return LedgerMode::Empirical;
    throw Error("unknown ledger mode '" + s + "' (expected paper_faithful or empirical)");
}

bool ParameterLedger::constant_chain_holds() const {
    return std::all_of(checks.begin(), checks.end(), [](const LedgerCheck& c) { return c.size_dependent || c.holds; });
}

bool ParameterLedger::all_hold() const {
    return std::all_of(checks.begin(), checks.end(), [](const LedgerCheck& c) { return c.holds; });
}

std::vector<std::string> ParameterLedger::gaps() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
        if (c.size_dependent && !c.holds) out.push_back(c.name);
    return out;
}

ParameterLedger build_ledger(double p, double lambda, double Theta, double vartheta, double D, int l, LedgerMode mode,
                             const LedgerOverrides& ov) {
    if (!(p > 1.0) || !std::isfinite(p)) throw Error("ledger needs 1 < p < infinity");
    if (!(vartheta > 0.0 && vartheta < Theta)) throw Error("ledger needs 0 < vartheta < Theta");
    if (!(Theta <= lambda)) throw Error("ledger needs Theta <= lambda");
    if (!(D > 1.0)) throw Error("ledger needs D > 1");
    if (l < 1) throw Error("ledger needs l >= 1");

    ParameterLedger g;
    g.mode = mode;
    g.p = p;
    g.lambda = lambda;
    g.Theta = Theta;
    g.vartheta = vartheta;
    g.D = D;
    g.l = l;
    const bool faithful = mode == LedgerMode::PaperFaithful;
    const double Tp = std::pow(Theta, p);
    const double Lp = std::pow(lambda, p);
    const double c = Tp / (4.0 * Lp);

    g.b = ov.b.value_or(kLazy * (1.0 - std::pow(vartheta / Theta, p)));
    g.nu = ov.nu.value_or(kLazy * c * g.b / (1.0 + c * g.b));
    if (ov.a) {
        g.a = *ov.a;
        g.a_source = "user";
    } else if (faithful) {
        const auto est = estimate_bmw_constant(p, l, D, ov.bmw_trials, ov.seed);
        g.a = kLazy * est.a_estimate;
        g.a_source = "estimate";
        if (!(g.a > 0.0)) throw Error("rigidity estimate is degenerate at this l and D; supply a explicitly");
    } else {
        g.a = 0.5;
        g.a_source = "default";
    }
    g.mu = ov.mu.value_or(kLazy * g.a * (1.0 - g.nu) * c);
    g.M = ov.M.value_or(2.0 * lambda / Theta);
    g.Phi = ov.Phi.value_or(1.0 + kLazy * (std::cbrt(g.M * Theta / lambda) - 1.0));
    const double Mp = std::pow(g.M, p);
    g.Delta = ov.Delta.value_or(kLazy * g.nu * Tp / (2.0 * Lp * Mp));

    const double decay = std::log1p(-g.Delta * g.mu / Mp);
    const double decay_target = std::log((1.0 - g.nu / 2.0) * Tp / Lp);
    long long m_min = 1;
    if (decay < 0.0) {
        m_min = static_cast<long long>(std::floor(decay_target / decay)) + 1;
        while (m_min > 1 && (m_min - 1) * decay < decay_target) --m_min;
        while (!(m_min * decay < decay_target)) ++m_min;
    }
    if (faithful) {
        g.m = ov.m.value_or(m_min);
        g.d = ov.d.value_or(g.m + 2);
    } else {
        g.d = ov.d.value_or(2);
        g.m = ov.m.value_or(std::max<long long>(0, g.d - 2));
    }

    g.log_N = static_cast<double>(g.d) * std::log(static_cast<double>(l));
    if (!(g.Phi > 1.0)) throw Error("ledger needs Phi > 1");
    g.log_flat_gap = log_flat_gap(p, g.log_N, g.Phi);
    g.phi = -std::expm1(g.log_flat_gap);
    const double log_Phi_p = p * std::log(g.Phi);
    const double log_1p_phi = std::log1p(g.phi);

    if (ov.eta) {
        g.log_eta = std::log(*ov.eta);
    } else {
        // Largest admissible eta for each condition, then the lazy fraction of the smallest.
        std::vector<double> bounds{std::log(g.nu), g.log_flat_gap - log_1p_phi};
        const double Phi_p = std::exp(log_Phi_p);
        bounds.push_back(std::log(Phi_p - 1.0) -
                         log_add(std::log(Phi_p + 1.0), std::log(2.0) + g.log_N + log_Phi_p));
        const double q = std::pow(g.Phi, 3.0) * lambda / (g.M * Theta);
        if (q < 1.0) bounds.push_back(std::log1p(-std::pow(q, p)));
        bounds.push_back(std::log(g.mu) - log_Phi_p - g.log_N - std::log(2.0));
        g.log_eta = std::log(kLazy) + *std::min_element(bounds.begin(), bounds.end());
    }
    g.eta = std::exp(g.log_eta);

    auto add = [&](std::string name, double lhs, double rhs, bool holds, bool size_dep) {
        g.checks.push_back({std::move(name), lhs, rhs, holds, size_dep});
    };
    const double cb = (1.0 - g.nu) * c;
    add("0 < b < 1", g.b, 1.0, g.b > 0.0 && g.b < 1.0, false);
    add("(1-b)^{1/p} Theta > vartheta", std::pow(1.0 - g.b, 1.0 / p) * Theta, vartheta,
        std::pow(1.0 - g.b, 1.0 / p) * Theta > vartheta, false);
    add("0 < nu < b", g.nu, g.b, g.nu > 0.0 && g.nu < g.b, false);
    add("nu/b < (1-nu) Theta^p / (4 lambda^p)", g.nu / g.b, cb, g.nu / g.b < cb, false);
    add("0 < a < 1", g.a, 1.0, g.a > 0.0 && g.a < 1.0, false);
    add("0 < mu < a", g.mu, g.a, g.mu > 0.0 && g.mu < g.a, false);
    add("mu/a < (1-nu) Theta^p / (4 lambda^p)", g.mu / g.a, cb, g.mu / g.a < cb, false);
    add("M > lambda / Theta", g.M, lambda / Theta, g.M > lambda / Theta, false);
    add("0 < Delta < 1", g.Delta, 1.0, g.Delta > 0.0 && g.Delta < 1.0, false);
    add("Delta M^p < nu Theta^p / (2 lambda^p)", g.Delta * Mp, g.nu * Tp / (2.0 * Lp),
        g.Delta * Mp < g.nu * Tp / (2.0 * Lp), false);
    add("M > Phi^3 lambda / Theta", g.M, std::pow(g.Phi, 3.0) * lambda / Theta,
        g.M > std::pow(g.Phi, 3.0) * lambda / Theta, false);
    add("0 < eta < nu", g.eta, g.nu, g.log_eta > -kInf && g.eta < g.nu, false);

    // Size-dependent conditions, compared in log space.
    const double md = static_cast<double>(g.m) * decay;
    add("(1 - Delta mu / M^p)^m < (1 - nu/2) Theta^p / lambda^p [log]", md, decay_target, md < decay_target, true);
    add("d > m + 1", static_cast<double>(g.d), static_cast<double>(g.m + 1), g.d > g.m + 1, true);
    const double la = g.log_eta + log_1p_phi;
    add("phi (1 + eta) < 1 - eta [log]", la, g.log_flat_gap, la < g.log_flat_gap, true);
    {
        const double lhs = std::log(std::expm1(log_Phi_p));
        const double rhs = g.log_eta + log_add(std::log1p(std::exp(log_Phi_p)), std::log(2.0) + g.log_N + log_Phi_p);
        add("Phi^p/(1+eta) - 1/(1-eta) > (1/(1-eta) - 1/(1+eta)) N Phi^p [log]", lhs, rhs, lhs > rhs, true);
    }
    {
        const double lhs = std::log(g.M);
        const double rhs = 3.0 * std::log(g.Phi) + std::log(lambda) - std::log1p(-g.eta) / p - std::log(Theta);
        add("M > Phi^3 lambda / ((1-eta)^{1/p} Theta) [log]", lhs, rhs, lhs > rhs, true);
    }
    {
        const double log_x = std::log(g.mu) - log_Phi_p - g.log_N;
        const double lhs = std::log(2.0) + g.log_eta;
        const double rhs = log_x + std::log1p(g.eta);
        add("(1 - mu/(Phi^p N))(1 + eta) < 1 - eta [log]", lhs, rhs, lhs < rhs, true);
    }

    for (const auto& ch : g.checks)
        if (!ch.holds && (faithful || !ch.size_dependent)) {
            std::ostringstream os;
            os << "ledger inequality violated: " << ch.name << " (lhs " << ch.lhs << ", rhs " << ch.rhs << ")";
            throw Error(os.str());
        }
    return g;
}

WitnessFunctions build_witness_functions(const LipschitzMap& F, const MapOnCube& f, const SignedInterval& I,
                                         const std::vector<SignedInterval>& children, double p,
                                         const ExpectOptions& opts) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw Error("witness functions need 1 <= p < infinity");
    if (I.hi > f.n()) throw Error("node lies outside the cube");
    check_children(I, children);
    check_cap(f.n(), opts);
    const MapOnCube Ff = compose(F, f);
    const Cube cube = f.cube();
    const Mask node = I.mask();
    const std::vector<Mask> cm = interval_masks(children);
    const int l = static_cast<int>(cm.size());
    std::vector<Mask> prefix(l + 1, 0);
    for (int i = 0; i < l; ++i) prefix[i + 1] = prefix[i] ^ cm[i];
    const Mask ds = Mask{1} << l;
    const double dw = std::ldexp(1.0, -l);
    const double lf = std::pow(static_cast<double>(l), p - 1.0);

    WitnessFunctions W;
    W.L = f.n();
    W.l = l;
    W.p = p;
    W.DY.resize(cube.size());
    W.EY.resize(cube.size());
    W.DX.resize(cube.size());
    W.EX.resize(cube.size());
    for (Mask e = 0; e < cube.size(); ++e) {
        detail::KahanSum dy, ey, dx, ex;
        for (Mask d = 0; d < ds; ++d) {
            const Mask x = block_product_mask(e, d, cm);
            dy.add(powp(Ff.rho(x, x ^ node), p));
            dx.add(powp(f.rho(x, x ^ node), p));
            for (int i = 1; i <= l; ++i) {
                ey.add(powp(Ff.rho(x ^ prefix[i - 1], x ^ prefix[i]), p));
                ex.add(powp(f.rho(x ^ prefix[i - 1], x ^ prefix[i]), p));
            }
        }
        W.DY[e] = dy.value() * dw;
        W.DX[e] = dx.value() * dw;
        W.EY[e] = lf * ey.value() * dw;
        W.EX[e] = lf * ex.value() * dw;
    }
    auto mean = [&](const std::vector<double>& t) { return expect([&](Mask v) { return t[v]; }, cube, opts); };
    W.mean_DY = mean(W.DY);
    W.mean_EY = mean(W.EY);
    W.mean_DX = mean(W.DX);
    W.mean_EX = mean(W.EX);

    auto moment = [&](const MapOnCube& g, Mask m) {
        return expect([&](Mask v) { return powp(g.rho(v, v ^ m), p); }, cube, opts);
    };
    W.target_DY = moment(Ff, node);
    W.target_DX = moment(f, node);
    double sy = 0.0, sx = 0.0;
    for (Mask m : cm) {
        sy += moment(Ff, m);
        sx += moment(f, m);
    }
    W.target_EY = lf * sy;
    W.target_EX = lf * sx;
    W.identity_error = std::max({rel_err(W.mean_DY, W.target_DY), rel_err(W.mean_EY, W.target_EY),
                                 rel_err(W.mean_DX, W.target_DX), rel_err(W.mean_EX, W.target_EX)});

    W.lambda = f.n() <= kPairCap ? lip_on_images(F, f) : F.lipschitz_bound(f.space());
    const double lp = std::pow(W.lambda, p);
    W.pointwise_ok = true;
    for (Mask e = 0; e < cube.size(); ++e)
        W.pointwise_ok = W.pointwise_ok && leq_tol(W.DY[e], W.EY[e]) && leq_tol(W.DX[e], W.EX[e]) &&
                         leq_tol(W.DY[e], lp * W.DX[e]) && leq_tol(W.EY[e], lp * W.EX[e]);
    return W;
}

WitnessFunctions witness_functions_from_tables(double p, std::vector<double> DY, std::vector<double> EY,
                                               std::vector<double> DX, std::vector<double> EX) {
    const std::size_t n = DY.size();
    if (n == 0 || !std::has_single_bit(n) || EY.size() != n || DX.size() != n || EX.size() != n)
        throw Error("witness tables must share a power-of-two size");
    WitnessFunctions W;
    W.L = std::countr_zero(n);
    W.p = p;
    W.DY = std::move(DY);
    W.EY = std::move(EY);
    W.DX = std::move(DX);
    W.EX = std::move(EX);
    const Cube cube(W.L);
    auto mean = [&](const std::vector<double>& t) { return expect([&](Mask v) { return t[v]; }, cube); };
    W.mean_DY = W.target_DY = mean(W.DY);
    W.mean_EY = W.target_EY = mean(W.EY);
    W.mean_DX = W.target_DX = mean(W.DX);
    W.mean_EX = W.target_EX = mean(W.EX);
    W.pointwise_ok = true;
    return W;
}

WitnessResult witness_search(const WitnessFunctions& W, const WitnessParams& q) {
    WitnessResult res;
    const double Tp = std::pow(q.Theta, q.p);
    const double lp = std::pow(q.lambda, q.p);
    const std::size_t n = W.DY.size();

    res.h_pointwise = true;
    for (std::size_t e = 0; e < n && res.h_pointwise; ++e) {
        const double dy = W.DY[e], ey = W.EY[e], dx = W.DX[e], ex = W.EX[e];
        res.h_pointwise = dy >= 0.0 && ey >= 0.0 && dx >= 0.0 && ex >= 0.0 && dy <= ey && dx <= ex &&
                          dy <= lp * dx && ey <= lp * ex && dy <= (1.0 + q.nu) * Tp * ex;
    }
    res.h_means = W.mean_DY > (1.0 - q.nu) * Tp * W.mean_EX && W.mean_DY > (1.0 - q.mu) * W.mean_EY &&
                  W.mean_DX > (1.0 - q.mu) * W.mean_EX;
    res.h_constants = q.a > 0.0 && q.a < 1.0 && q.b > 0.0 && q.b < 1.0 && q.nu > 0.0 && q.nu < 1.0 &&
                      q.mu > 0.0 && q.mu < 1.0 && lp * (2.0 * q.mu / q.a + 2.0 * q.nu / q.b) < Tp * (1.0 - q.nu);

    for (std::size_t e = 0; e < n; ++e) {
        if (W.DY[e] > (1.0 - q.a) * W.EY[e] && W.DX[e] > (1.0 - q.a) * W.EX[e] &&
            W.DY[e] > (1.0 - q.b) * Tp * W.EX[e]) {
            if (!res.witness) res.witness = e;
            ++res.witness_count;
        }
    }
    res.alarm = res.hypotheses_hold() && !res.witness;
    return res;
}

const StageRecord* ExtractionCertificate::stage(const std::string& name) const {
    for (const auto& s : stages)
        if (s.name == name) return &s;
    return nullptr;
}

ExtractionCertificate extract_subcube(const LipschitzMap& F, const MapOnCube& f, const ParameterLedger& g,
                                      const IntervalTree& tree, const ExpectOptions& opts) {
    if (tree.length() != f.n()) throw Error("tree length does not match the cube dimension of f");
    check_cap(f.n(), opts);
    ExtractionCertificate c;
    c.route = "tree";
    c.L = f.n();
    const double p = g.p;
    const double Tp = std::pow(g.Theta, p);
    const MapOnCube Ff = compose(F, f);
    const int last = tree.level_count() - 1;
    const int d = tree.depth();
    const double Lf = std::pow(static_cast<double>(f.n()), p - 1.0);

    {
        auto& st = add_stage(c, "near_extremality");
        const double lhs = antipodal_moment(Ff, p, opts);
        const double edge = edge_moment_sum(f, p, opts);
        const double rhs = (1.0 - g.eta / 2.0) * Tp * Lf * edge;
        st.values = {{"lhs", lhs}, {"rhs", rhs}, {"ratio", safe_ratio(lhs, Lf * edge)}, {"eta", g.eta}};
        st.ok = lhs > rhs;
        if (!st.ok) return fail(c, st, "E rho_Y(eps,-eps)^p does not exceed (1 - eta/2) Theta^p L^{p-1} sum");
    }

    const TreeProfile pr = tree_profile(F, f, tree, p, opts);
    {
        auto& st = add_stage(c, "profile");
        const auto vase = vase_check(pr);
        st.values = {{"r_root", pr.r[0][0]}, {"s_root", pr.s[0][0]}, {"lambda_observed", pr.lambda},
                     {"vase_checked", static_cast<double>(vase.checked)},
                     {"vase_violations", static_cast<double>(vase.violations)}};
        st.ok = vase.ok() && pr.lipschitz_consistent;
        if (!vase.ok()) {
            ++c.alarms;
            return fail(c, st, "subadditivity violated on a map-generated profile: " + vase.first_violation);
        }
        if (!st.ok) return fail(c, st, "r_I exceeds the observed Lipschitz bound times s_I");
    }

    {
        auto& st = add_stage(c, "profile_checks");
        double scale = 1.0;
        for (int j = 0; j < last; ++j) scale *= std::pow(static_cast<double>(tree.arity(j)), p - 1.0);
        const double leaf_sum = pr.level_power_sum(last, false);
        const bool c_root = pr.rp[0][0] > (1.0 - g.eta / 2.0) * scale * Tp * leaf_sum;
        bool c_lip = true, c_sub = true, c_induced = true;
        for (int j = 0; j <= last; ++j)
            for (int k = 0; k < tree.level_size(j); ++k) c_lip = c_lip && leq_tol(pr.r[j][k], g.lambda * pr.s[j][k]);
        double worst_family = 0.0, worst_family_leaf = 0.0;
        for (int j = 0; j <= d; ++j) {
            const double lf = std::pow(static_cast<double>(tree.arity(j)), p - 1.0);
            for (int k = 0; k < tree.level_size(j); ++k) {
                c_sub = c_sub && leq_tol(pr.r[j][k], pr.child_sum(j, k, true)) &&
                        leq_tol(pr.s[j][k], pr.child_sum(j, k, false));
                const auto cm = interval_masks(tree.children(j, k));
                const double bp = max_induced_b_ratio(f, Ff, tree.level(j)[k].mask(), cm, p);
                c_induced = c_induced && leq_tol(pr.rp[j][k], bp * lf * pr.child_power_sum(j, k, false));
                worst_family = std::max(worst_family, bp / Tp);
                if (j == d) worst_family_leaf = std::max(worst_family_leaf, bp / Tp);
            }
        }
        st.values = {{"root_extremal", num(c_root)},
                     {"lipschitz", num(c_lip)},
                     {"subadditive", num(c_sub)},
                     {"induced_bound", num(c_induced)},
                     {"max_induced_ratio_over_Theta_p", worst_family},
                     {"family_bound_nu_holds", num(worst_family <= 1.0 + g.nu)},
                     {"family_bound_eta_holds_last_level", num(worst_family_leaf <= 1.0 + g.eta)}};
        st.ok = c_root && c_lip && c_sub && c_induced;
        if (!c_sub || !c_induced) ++c.alarms;
        if (!st.ok) {
            std::string why = !c_root ? "root extremality" : !c_lip ? "r_I <= lambda s_I" : !c_sub ? "subadditivity"
                                                                                                 : "induced b-bound";
            return fail(c, st, "profile check failed: " + why);
        }
    }

    Selection sel;
    {
        auto& st = add_stage(c, "select");
        try {
            sel = select_good_interval(pr, {g.mu, g.nu, g.Theta, g.Delta, g.M, g.m, g.lambda});
        } catch (const Error& e) {
            return fail(c, st, e.what());
        }
        if (sel.alarm) ++c.alarms;
        if (sel.goodx.violation) ++c.alarms;
        if (sel.ytox.violation()) ++c.alarms;
        st.values = {{"level", num(sel.level)},
                     {"index", num(sel.index)},
                     {"lo", num(sel.interval.lo)},
                     {"hi", num(sel.interval.hi)},
                     {"s_counting_hypotheses", num(sel.goodx.hypotheses_hold())},
                     {"r_to_s_hypotheses", num(sel.ytox.hypotheses_hold())},
                     {"B_size", static_cast<double>(sel.goodx.B.size())}};
        st.ok = sel.found;
        if (!st.ok) return fail(c, st, sel.failure);
    }

    const auto children = tree.children(sel.level, sel.index);
    c.l = static_cast<int>(children.size());
    WitnessFunctions W;
    {
        auto& st = add_stage(c, "witness_functions");
        W = build_witness_functions(F, f, sel.interval, children, p, opts);
        st.values = {{"mean_DY", W.mean_DY}, {"mean_EY", W.mean_EY}, {"mean_DX", W.mean_DX},
                     {"mean_EX", W.mean_EX}, {"identity_error", W.identity_error}, {"pointwise", num(W.pointwise_ok)}};
        st.ok = W.pointwise_ok && W.identities_hold();
        if (!st.ok) {
            ++c.alarms;
            return fail(c, st, "witness-function invariants or expectation identities failed");
        }
    }

    {
        auto& st = add_stage(c, "witness");
        const auto res = witness_search(W, {g.a, g.b, g.Theta, p, g.nu, g.mu, g.lambda});
        if (res.alarm) ++c.alarms;
        st.values = {{"witness_count", static_cast<double>(res.witness_count)},
                     {"hypotheses_pointwise", num(res.h_pointwise)},
                     {"hypotheses_means", num(res.h_means)},
                     {"hypotheses_constants", num(res.h_constants)}};
        st.ok = res.witness.has_value();
        if (!st.ok) return fail(c, st, res.alarm ? "no witness although every hypothesis held" : "no witness");
        c.witness = res.witness;
        st.values.emplace_back("witness", static_cast<double>(*res.witness));
    }

    {
        auto& st = add_stage(c, "subcube");
        const Mask e0 = *c.witness;
        const auto cm = interval_masks(children);
        const int l = c.l;
        std::vector<double> coords;
        coords.reserve((Mask{1} << l) * f.width());
        for (Mask dl = 0; dl < (Mask{1} << l); ++dl) {
            const auto img = f.image(block_product_mask(e0, dl, cm));
            coords.insert(coords.end(), img.begin(), img.end());
        }
        MapOnCube h(l, f.space(), std::move(coords));
        const MapOnCube Fh = compose(F, h);
        const double lp = std::pow(static_cast<double>(l), p);
        c.r = std::pow(W.EY[e0] / lp, 1.0 / p);
        c.s = std::pow(W.EX[e0] / lp, 1.0 / p);
        // Same scales recomputed from h alone.
        const double r_direct = std::pow(edge_moment_sum(Fh, p) / l, 1.0 / p);
        const double s_direct = std::pow(edge_moment_sum(h, p) / l, 1.0 / p);
        c.distortion_h = distortion(h);
        c.distortion_Fh = distortion(Fh);
        c.scale_ratio = safe_ratio(c.r, c.s);
        st.values = {{"r", c.r}, {"s", c.s}, {"r_direct", r_direct}, {"s_direct", s_direct},
                     {"distortion_h", c.distortion_h}, {"distortion_Fh", c.distortion_Fh},
                     {"scale_ratio", c.scale_ratio}};
        if (g.a > 0.0 && g.a < 1.0) {
            const auto ch = bmw_rigidity_check(h, p, g.a, g.D);
            const auto cf = bmw_rigidity_check(Fh, p, g.a, g.D);
            st.values.emplace_back("rigidity_hypothesis_h", num(ch.hypothesis_holds));
            st.values.emplace_back("rigidity_pass_h", num(ch.pass));
            st.values.emplace_back("rigidity_hypothesis_Fh", num(cf.hypothesis_holds));
            st.values.emplace_back("rigidity_pass_Fh", num(cf.pass));
        }
        const bool dist_ok = c.distortion_h <= g.D * (1.0 + 1e-12) && c.distortion_Fh <= g.D * (1.0 + 1e-12);
        const bool scale_ok = c.r >= g.vartheta * c.s;
        c.h = std::move(h);
        st.ok = dist_ok && scale_ok;
        if (!st.ok) return fail(c, st, !dist_ok ? "distortion exceeds D" : "r < vartheta s");
    }
    c.pass = true;
    return c;
}

}  // namespace hcube
