#pragma once

// Interval trees over [1, L], tree profiles (r_I, s_I) and the level analyses
// that locate a nearly additive node.

#include "hcube/spaces.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hcube {

/// The (l_1, ..., l_{d+1}) interval tree. Level j holds prod_{i<=j} l_i intervals.
class IntervalTree {
public:
    explicit IntervalTree(std::vector<int> branching);

    const std::vector<int>& branching() const { return branching_; }
    /// Number of children of each node at level j, i.e. l_{j+1}.
    int arity(int j) const { return branching_.at(j); }
    /// d, so levels run 0..d+1.
    int depth() const { return static_cast<int>(branching_.size()) - 1; }
    int level_count() const { return static_cast<int>(levels_.size()); }
    int length() const { return L_; }
    const std::vector<SignedInterval>& level(int j) const { return levels_.at(j); }
    int level_size(int j) const { return static_cast<int>(levels_.at(j).size()); }
    /// Index range [first, first + arity(j)) of the children of node k at level j, in level j+1.
    int first_child(int j, int k) const { return k * branching_.at(j); }
    /// Index of the parent of node k at level j >= 1, in level j-1.
    int parent(int j, int k) const { return k / branching_.at(j - 1); }
    std::vector<SignedInterval> children(int j, int k) const;

private:
    std::vector<int> branching_;
    int L_ = 1;
    std::vector<std::vector<SignedInterval>> levels_;
};

IntervalTree build_tree(const std::vector<int>& branching);

/// r_I = [E rho_Y(eps, I eps)^p]^{1/p} and s_I likewise in X, stored per level with p-th powers.
struct TreeProfile {
    IntervalTree tree;
    double p = 2.0;
    std::vector<std::vector<double>> r, s, rp, sp;
    /// Lip(F) on the image set of f, when built from a map; otherwise 0.
    double lambda = 0.0;
    /// r_I <= lambda s_I everywhere (tolerance 1e-9); true for value-built profiles.
    bool lipschitz_consistent = true;

    /// Profile from given values; r and s indexed [level][node].
    static TreeProfile from_values(IntervalTree tree, double p, std::vector<std::vector<double>> r,
                                   std::vector<std::vector<double>> s);

    /// Sum of t_J^p over the children of node k at level j (t = r if `target`, else s).
    double child_power_sum(int j, int k, bool target) const;
    double child_sum(int j, int k, bool target) const;
    /// Sum of t^p over a whole level.
    double level_power_sum(int j, bool target) const;
};

TreeProfile tree_profile(const LipschitzMap& F, const MapOnCube& f, const IntervalTree& tree, double p,
                         const ExpectOptions& opts = {});

struct VaseReport {
    std::size_t checked = 0;
    std::size_t violations = 0;
    double worst_excess = 0.0;  // largest relative amount by which lhs exceeds rhs
    std::string first_violation;
    bool ok() const { return violations == 0; }
};

/// Sum and Holder forms of the subadditivity inequalities between every node and every deeper level.
VaseReport vase_check(const TreeProfile& profile, double tol = 1e-9);

/// Certificate inputs for the additivity-counting statement on s.
struct GoodXHypotheses {
    double M = 2.0;
    double nu = 0.1;
    double Theta = 1.0;
    double lambda = 1.0;
    long long m = 1;
};

struct GoodXReport {
    std::vector<std::vector<int>> I_sets;  // per level j < d
    std::vector<int> B;                    // levels j < d with |I_j| >= Delta |Lambda_j|
    bool certified = false;                // hypotheses supplied
    bool h_subadditive = false;            // (i)
    bool h_positive = false;               // s_I > 0
    bool h_comparable = false;             // (ii) max s <= M min s per level
    bool h_root_extremal = false;          // (iii)
    bool h_decay = false;                  // (iv)
    bool hypotheses_hold() const {
        return certified && h_subadditive && h_positive && h_comparable && h_root_extremal && h_decay;
    }
    bool violation = false;  // hypotheses hold and |B| > m
};

GoodXReport goodX_analysis(const TreeProfile& profile, double mu, double Delta,
                           const std::optional<GoodXHypotheses>& hyp = std::nullopt);

struct YtoXReport {
    std::vector<int> bad_counts;  // per level j < d
    bool h_lipschitz = false;     // (i) r <= lambda s
    bool h_subadditive = false;   // (ii)
    bool h_comparable = false;    // (iii)
    bool h_small_delta = false;   // (iv) Delta M^p <= nu Theta^p / (2 lambda^p)
    bool h_root_extremal = false; // (v)
    bool hypotheses_hold() const {
        return h_lipschitz && h_subadditive && h_comparable && h_small_delta && h_root_extremal;
    }
    std::vector<int> violating_levels;  // levels with count >= (1 - Delta)|Lambda_j| while hypotheses hold
    bool violation() const { return !violating_levels.empty(); }
};

YtoXReport ytox_analysis(const TreeProfile& profile, double nu, double Theta, double Delta, double lambda, double M);

struct SelectionParams {
    double mu = 0.1;
    double nu = 0.1;
    double Theta = 1.0;
    double Delta = 0.1;
    double M = 2.0;
    long long m = 0;
    double lambda = 1.0;
};

struct Selection {
    bool found = false;
    int level = -1;
    int index = -1;
    SignedInterval interval;
    bool cond_r_additive = false;  // r_I^p > (1-mu) l^{p-1} sum r_J^p
    bool cond_s_additive = false;  // s_I^p > (1-mu) l^{p-1} sum s_J^p
    bool cond_scale = false;       // l^{p-1} sum r_J^p >= r_I^p > (1-nu) Theta^p l^{p-1} sum s_J^p
    std::vector<int> A_sizes;      // |A_j| per level j < d
    std::vector<int> B_sizes;      // |B_j| per level j < d
    bool counting_holds = false;   // |A_j0| + |B_j0| < |Lambda_j0|
    GoodXReport goodx;
    YtoXReport ytox;
    std::string failure;           // named violated condition when !found
    bool alarm = false;            // every checked hypothesis held yet no node qualified
};

/// Smallest level with |A_j| < Delta |Lambda_j|, then leftmost node outside A_j and B_j meeting
/// all three additivity conditions. Throws when d <= m + 1.
Selection select_good_interval(const TreeProfile& profile, const SelectionParams& params);

}  // namespace hcube
