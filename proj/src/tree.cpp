#include "hcube/tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hcube {

namespace {

constexpr long long kMaxTreeLength = 1LL << 30;

inline double powp(double x, double p) { return p == 2.0 ? x * x : std::pow(x, p); }

bool leq_tol(double lhs, double rhs, double tol) { return lhs <= rhs * (1.0 + tol) + tol * 1e-3; }

/// prod_{m=i+1}^{j} l_m^{p-1}
double holder_factor(const IntervalTree& t, int i, int j, double p) {
    double f = 1.0;
    for (int m = i; m < j; ++m) f *= std::pow(static_cast<double>(t.arity(m)), p - 1.0);
    return f;
}

bool levels_comparable(const TreeProfile& pr, double M, int last_level) {
    for (int j = 0; j <= last_level; ++j) {
        const auto [mn, mx] = std::minmax_element(pr.s[j].begin(), pr.s[j].end());
        if (!(*mx <= M * *mn)) return false;
    }
    return true;
}

bool subadditive(const TreeProfile& pr, bool target) {
    const int d = pr.tree.depth();
    for (int j = 0; j <= d; ++j)
        for (int k = 0; k < pr.tree.level_size(j); ++k) {
            const auto& t = target ? pr.r : pr.s;
            if (!(t[j][k] <= pr.child_sum(j, k, target))) return false;
        }
    return true;
}

/// Right side of the root-extremality hypotheses without its leading constant:
/// prod_{i=1}^{d+1} l_i^{p-1} sum_{leaves} s^p.
double leaf_scale(const TreeProfile& pr) {
    const int last = pr.tree.level_count() - 1;
    return holder_factor(pr.tree, 0, last, pr.p) * pr.level_power_sum(last, false);
}

}  // namespace

IntervalTree::IntervalTree(std::vector<int> branching) : branching_(std::move(branching)) {
    if (branching_.empty()) throw Error("interval tree needs at least one branching factor");
    long long L = 1;
    for (int l : branching_) {
        if (l < 1) throw Error("branching factors must be >= 1");
        L *= l;
        if (L > kMaxTreeLength) throw Error("interval tree length overflows");
    }
    L_ = static_cast<int>(L);
    levels_.push_back({SignedInterval(1, L_)});
    for (int l : branching_) {
        std::vector<SignedInterval> next;
        next.reserve(levels_.back().size() * l);
        for (const auto& I : levels_.back()) {
            const int len = I.size() / l;
            for (int c = 0; c < l; ++c) next.emplace_back(I.lo + c * len, I.lo + (c + 1) * len - 1);
        }
        levels_.push_back(std::move(next));
    }
}

std::vector<SignedInterval> IntervalTree::children(int j, int k) const {
    const auto& next = levels_.at(j + 1);
    const int first = first_child(j, k);
    return {next.begin() + first, next.begin() + first + arity(j)};
}

IntervalTree build_tree(const std::vector<int>& branching) { return IntervalTree(branching); }

TreeProfile TreeProfile::from_values(IntervalTree tree, double p, std::vector<std::vector<double>> r,
                                     std::vector<std::vector<double>> s) {
    if (static_cast<int>(r.size()) != tree.level_count() || static_cast<int>(s.size()) != tree.level_count())
        throw Error("profile values do not match the tree levels");
    TreeProfile pr{std::move(tree), p, std::move(r), std::move(s), {}, {}};
    pr.rp.resize(pr.r.size());
    pr.sp.resize(pr.s.size());
    for (int j = 0; j < pr.tree.level_count(); ++j) {
        if (static_cast<int>(pr.r[j].size()) != pr.tree.level_size(j) ||
            static_cast<int>(pr.s[j].size()) != pr.tree.level_size(j))
            throw Error("profile level sizes do not match the tree");
        for (int k = 0; k < pr.tree.level_size(j); ++k) {
            if (!(pr.r[j][k] >= 0.0) || !(pr.s[j][k] >= 0.0)) throw Error("profile values must be nonnegative");
            pr.rp[j].push_back(powp(pr.r[j][k], p));
            pr.sp[j].push_back(powp(pr.s[j][k], p));
        }
    }
    return pr;
}

double TreeProfile::child_power_sum(int j, int k, bool target) const {
    const auto& t = target ? rp : sp;
    const int first = tree.first_child(j, k);
    double sum = 0.0;
    for (int c = 0; c < tree.arity(j); ++c) sum += t[j + 1][first + c];
    return sum;
}

double TreeProfile::child_sum(int j, int k, bool target) const {
    const auto& t = target ? r : s;
    const int first = tree.first_child(j, k);
    double sum = 0.0;
    for (int c = 0; c < tree.arity(j); ++c) sum += t[j + 1][first + c];
    return sum;
}

double TreeProfile::level_power_sum(int j, bool target) const {
    const auto& t = target ? rp : sp;
    double sum = 0.0;
    for (double x : t[j]) sum += x;
    return sum;
}

TreeProfile tree_profile(const LipschitzMap& F, const MapOnCube& f, const IntervalTree& tree, double p,
                         const ExpectOptions& opts) {
    if (tree.length() != f.n()) throw Error("tree length does not match the cube dimension of f");
    if (!(p >= 1.0) || !std::isfinite(p)) throw Error("profile exponent must satisfy 1 <= p < infinity");
    const MapOnCube g = compose(F, f);
    const Cube cube = f.cube();
    std::vector<std::vector<double>> r(tree.level_count()), s(tree.level_count());
    for (int j = 0; j < tree.level_count(); ++j)
        for (const auto& I : tree.level(j)) {
            const Mask m = I.mask();
            r[j].push_back(std::pow(expect([&](Mask v) { return powp(g.rho(v, v ^ m), p); }, cube, opts), 1.0 / p));
            s[j].push_back(std::pow(expect([&](Mask v) { return powp(f.rho(v, v ^ m), p); }, cube, opts), 1.0 / p));
        }
    TreeProfile pr = TreeProfile::from_values(tree, p, std::move(r), std::move(s));
    pr.lambda = f.n() <= kPairCap ? lip_on_images(F, f) : F.lipschitz_bound(f.space());
    for (int j = 0; j < tree.level_count() && pr.lipschitz_consistent; ++j)
        for (int k = 0; k < tree.level_size(j); ++k)
            if (!leq_tol(pr.r[j][k], pr.lambda * pr.s[j][k], 1e-9)) {
                pr.lipschitz_consistent = false;
                break;
            }
    return pr;
}

VaseReport vase_check(const TreeProfile& pr, double tol) {
    VaseReport rep;
    const auto& t = pr.tree;
    const int levels = t.level_count();
    auto record = [&](double lhs, double rhs, const char* what, bool target, int i, int k, int j) {
        ++rep.checked;
        if (leq_tol(lhs, rhs, tol)) return;
        ++rep.violations;
        const double excess = rhs > 0.0 ? lhs / rhs - 1.0 : kInf;
        rep.worst_excess = std::max(rep.worst_excess, excess);
        if (rep.first_violation.empty()) {
            std::ostringstream os;
            os << what << " (" << (target ? 'r' : 's') << ") node " << k << " of level " << i << " vs level " << j
               << ": " << lhs << " > " << rhs;
            rep.first_violation = os.str();
        }
    };
    for (int i = 0; i + 1 < levels; ++i)
        for (int k = 0; k < t.level_size(i); ++k) {
            // Descendants of node k at level j occupy a contiguous index block.
            int first = k, count = 1;
            for (int j = i + 1; j < levels; ++j) {
                first *= t.arity(j - 1);
                count *= t.arity(j - 1);
                for (bool target : {true, false}) {
                    const auto& v = target ? pr.r : pr.s;
                    const auto& vp = target ? pr.rp : pr.sp;
                    double sum = 0.0, sum_p = 0.0;
                    for (int c = first; c < first + count; ++c) {
                        sum += v[j][c];
                        sum_p += vp[j][c];
                    }
                    record(v[i][k], sum, "sum", target, i, k, j);
                    record(vp[i][k], holder_factor(t, i, j, pr.p) * sum_p, "holder", target, i, k, j);
                }
            }
        }
    return rep;
}

GoodXReport goodX_analysis(const TreeProfile& pr, double mu, double Delta, const std::optional<GoodXHypotheses>& hyp) {
    if (!(mu > 0.0 && mu < 1.0) || !(Delta > 0.0 && Delta < 1.0)) throw Error("goodX analysis needs 0 < mu, Delta < 1");
    GoodXReport rep;
    const auto& t = pr.tree;
    const int d = t.depth();
    const double p = pr.p;
    for (int j = 0; j < d; ++j) {
        std::vector<int> Ij;
        const double lf = std::pow(static_cast<double>(t.arity(j)), p - 1.0);
        for (int k = 0; k < t.level_size(j); ++k)
            if (pr.sp[j][k] <= (1.0 - mu) * lf * pr.child_power_sum(j, k, false)) Ij.push_back(k);
        if (static_cast<double>(Ij.size()) >= Delta * t.level_size(j)) rep.B.push_back(j);
        rep.I_sets.push_back(std::move(Ij));
    }
    if (!hyp) return rep;
    rep.certified = true;
    const auto& h = *hyp;
    rep.h_subadditive = subadditive(pr, false);
    rep.h_positive = true;
    for (const auto& lvl : pr.s)
        for (double x : lvl) rep.h_positive = rep.h_positive && x > 0.0;
    rep.h_comparable = h.M > 1.0 && levels_comparable(pr, h.M, d);
    const double tl = std::pow(h.Theta / h.lambda, p);
    rep.h_root_extremal = pr.sp[0][0] > (1.0 - h.nu / 2.0) * tl * leaf_scale(pr);
    rep.h_decay = h.m >= 0 && std::pow(1.0 - mu * Delta / std::pow(h.M, p), static_cast<double>(h.m)) <
                                  (1.0 - h.nu / 2.0) * tl;
    rep.violation = rep.hypotheses_hold() && static_cast<long long>(rep.B.size()) > h.m;
    return rep;
}

YtoXReport ytox_analysis(const TreeProfile& pr, double nu, double Theta, double Delta, double lambda, double M) {
    if (!(nu > 0.0 && nu < 1.0) || !(Delta > 0.0 && Delta < 1.0)) throw Error("ytox analysis needs 0 < nu, Delta < 1");
    YtoXReport rep;
    const auto& t = pr.tree;
    const int d = t.depth();
    const double p = pr.p;
    const double Tp = std::pow(Theta, p);
    for (int j = 0; j < d; ++j) {
        const double lf = std::pow(static_cast<double>(t.arity(j)), p - 1.0);
        int bad = 0;
        for (int k = 0; k < t.level_size(j); ++k)
            if (pr.rp[j][k] <= (1.0 - nu) * lf * Tp * pr.child_power_sum(j, k, false)) ++bad;
        rep.bad_counts.push_back(bad);
    }
    rep.h_lipschitz = true;
    for (int j = 0; j < t.level_count(); ++j)
        for (int k = 0; k < t.level_size(j); ++k) rep.h_lipschitz = rep.h_lipschitz && pr.r[j][k] <= lambda * pr.s[j][k];
    rep.h_subadditive = subadditive(pr, true) && subadditive(pr, false);
    rep.h_comparable = M > 1.0 && levels_comparable(pr, M, d);
    rep.h_small_delta = Delta * std::pow(M, p) <= nu * Tp / (2.0 * std::pow(lambda, p));
    rep.h_root_extremal = pr.rp[0][0] > (1.0 - nu / 2.0) * Tp * leaf_scale(pr);
    if (rep.hypotheses_hold())
        for (int j = 0; j < d; ++j)
            if (!(rep.bad_counts[j] < (1.0 - Delta) * t.level_size(j))) rep.violating_levels.push_back(j);
    return rep;
}

Selection select_good_interval(const TreeProfile& pr, const SelectionParams& q) {
    const auto& t = pr.tree;
    const int d = t.depth();
    if (!(d > q.m + 1)) throw Error("select_good_interval needs d > m + 1 (d = " + std::to_string(d) +
                                    ", m = " + std::to_string(q.m) + ")");
    const double p = pr.p;
    const double Tp = std::pow(q.Theta, p);
    Selection sel;
    sel.goodx = goodX_analysis(pr, q.mu, q.Delta, GoodXHypotheses{q.M, q.nu, q.Theta, q.lambda, q.m});
    sel.ytox = ytox_analysis(pr, q.nu, q.Theta, q.Delta, q.lambda, q.M);

    std::vector<std::vector<char>> inA(d), inB(d);
    for (int j = 0; j < d; ++j) {
        const double lf = std::pow(static_cast<double>(t.arity(j)), p - 1.0);
        int a = 0, b = 0;
        for (int k = 0; k < t.level_size(j); ++k) {
            const double ssum = pr.child_power_sum(j, k, false);
            inA[j].push_back(pr.sp[j][k] <= (1.0 - q.mu) * lf * ssum);
            inB[j].push_back(pr.rp[j][k] <= (1.0 - q.nu) * Tp * lf * ssum);
            a += inA[j].back();
            b += inB[j].back();
        }
        sel.A_sizes.push_back(a);
        sel.B_sizes.push_back(b);
    }

    bool any_sparse_level = false;
    bool any_candidate = false;
    for (int j = 0; j < d && !sel.found; ++j) {
        if (!(sel.A_sizes[j] < q.Delta * t.level_size(j))) continue;
        any_sparse_level = true;
        const double lf = std::pow(static_cast<double>(t.arity(j)), p - 1.0);
        for (int k = 0; k < t.level_size(j); ++k) {
            if (inA[j][k] || inB[j][k]) continue;
            any_candidate = true;
            const double rsum = lf * pr.child_power_sum(j, k, true);
            const double ssum = lf * pr.child_power_sum(j, k, false);
            const bool c1 = pr.rp[j][k] > (1.0 - q.mu) * rsum;
            const bool c2 = pr.sp[j][k] > (1.0 - q.mu) * ssum;
            const bool c3 = rsum >= pr.rp[j][k] * (1.0 - 1e-12) && pr.rp[j][k] > (1.0 - q.nu) * Tp * ssum;
            if (!(c1 && c2 && c3)) continue;
            sel.found = true;
            sel.level = j;
            sel.index = k;
            sel.interval = t.level(j)[k];
            sel.cond_r_additive = c1;
            sel.cond_s_additive = c2;
            sel.cond_scale = c3;
            sel.counting_holds = sel.A_sizes[j] + sel.B_sizes[j] < t.level_size(j);
            break;
        }
    }
    if (sel.found) return sel;

    const auto& gx = sel.goodx;
    const auto& yx = sel.ytox;
    if (!gx.h_subadditive) sel.failure = "s-counting hypothesis: subadditivity of s";
    else if (!gx.h_positive) sel.failure = "s-counting hypothesis: s_I > 0";
    else if (!gx.h_comparable) sel.failure = "s-counting hypothesis: max s <= M min s on every level";
    else if (!gx.h_root_extremal) sel.failure = "s-counting hypothesis: root extremality of s";
    else if (!gx.h_decay) sel.failure = "s-counting hypothesis: (1 - mu Delta / M^p)^m < (1 - nu/2) Theta^p / lambda^p";
    else if (!yx.h_lipschitz) sel.failure = "r-to-s hypothesis: r_I <= lambda s_I";
    else if (!yx.h_subadditive) sel.failure = "r-to-s hypothesis: subadditivity of r and s";
    else if (!yx.h_small_delta) sel.failure = "r-to-s hypothesis: Delta M^p <= nu Theta^p / (2 lambda^p)";
    else if (!yx.h_root_extremal) sel.failure = "r-to-s hypothesis: root extremality of r";
    else if (!any_sparse_level) {
        sel.failure = "no level with |A_j| < Delta |Lambda_j|";
        sel.alarm = true;
    } else if (!any_candidate) {
        sel.failure = "every node of the sparse levels lies in A_j or B_j";
        sel.alarm = true;
    } else {
        // Candidates exist but fail r-additivity, which is only guaranteed by the flatness step.
        sel.failure = "r-additivity fails at every candidate node";
    }
    return sel;
}

}  // namespace hcube
