#pragma once

// Flat vectors, the sharp-embedding criterion and the near-extremal rigidity check.

#include "hcube/spaces.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hcube {

enum class FlatMethod { ConstrainedOpt, Grid, SampleCheck };

std::string to_string(FlatMethod m);

/// Smallest phi such that ||a||_1^p > phi n^{p-1} ||a||_p^p forces max|a_i| <= Phi min|a_i|.
struct FlatConstant {
    double p = 2.0;
    int n = 1;
    double Phi = 1.0;
    double phi_star = 1.0;
    /// Common value of the interior coordinates at the optimum (extremal vector is (Phi, c, ..., c, 1)).
    double interior = 1.0;
    FlatMethod method = FlatMethod::ConstrainedOpt;
};

/// ||a||_1^p / (n^{p-1} ||a||_p^p), with 0/0 = 0.
double flatness_ratio(std::span<const double> a, double p);

/// 1 - flatness_ratio of (Phi, c x (n-2), 1), stable for very large n.
double flat_deficit(double p, double n, double Phi, double c);

/// phi_star for the given method. SampleCheck gives a sampled lower bound (10^6 draws by default).
FlatConstant flat_phi(double p, int n, double Phi, FlatMethod method = FlatMethod::ConstrainedOpt,
                      std::uint64_t seed = 1, std::uint64_t samples = 1000000);

/// log(1 - sup_{n' <= N} phi_star(p, n', Phi)) where log_N = log N. Handles N far beyond double range.
double log_flat_gap(double p, double log_N, double Phi);

struct FlatCheck {
    double lhs = 0.0;  // ||a||_1^p
    double rhs = 0.0;  // phi n^{p-1} ||a||_p^p
    double ratio = 0.0;
    bool hypothesis_holds = false;
    bool conclusion_holds = false;
};

FlatCheck flat_check(std::span<const double> a, double p, double Phi, double phi);

struct SharpEmbeddingReport {
    int l = 0;
    double a = 0.0;
    double D = 0.0;
    double lip = 0.0;
    double min_antipodal = 0.0;
    bool hypothesis_holds = false;  // (1-a) Lip(h) < min d(h(delta), h(-delta))
    double distortion = kInf;
    double proven_bound = kInf;     // 1 / (1 - a l)
    bool conclusion_holds = false;  // distortion <= D
    /// False only when the hypothesis holds and the conclusion fails.
    bool consistent() const { return !hypothesis_holds || conclusion_holds; }
};

SharpEmbeddingReport sharp_embedding_check(const MapOnCube& h, double a, double D);

/// Certificate for the near-extremal rigidity statement. Scale T satisfies
/// T^p = l^{p-1} sum_i E d(h eps, h d_i eps)^p.
struct RigidityCertificate {
    int l = 0;
    double p = 2.0;
    double a = 0.0;
    double D = 1.0;
    double lhs = 0.0;               // E d(h eps, h(-eps))^p
    double rhs = 0.0;               // (1-a) l^{p-1} sum_i E d(h eps, h d_i eps)^p
    double hypothesis_ratio = 0.0;  // lhs / rhs
    bool hypothesis_holds = false;
    double T = 0.0;
    double min_scaled = 0.0;        // min over pairs of d / (T partial)
    double max_scaled = 0.0;
    bool pass = false;              // all pairs within [1/D, D] (tolerance tol)
};

RigidityCertificate bmw_rigidity_check(const MapOnCube& h, double p, double a, double D, double tol = 1e-9);

struct BmwEstimate {
    double p = 2.0;
    int l = 1;
    double D = 1.0;
    int trials = 0;
    std::uint64_t seed = 0;
    double a_estimate = 1.0;
    /// Some trial fails the D-check. `counterexample` is the failing trial closest to extremality:
    /// it meets the hypothesis at every a above the estimate, so no sampled map below it fails.
    bool counterexample_found = false;
    int failing_trials = 0;
    std::optional<MapOnCube> counterexample;
    int counterexample_trial = -1;
    bool degenerate = false;  // estimate below 1e-6: effectively only exact scalings pass
};

/// Largest a such that every sampled map meeting the hypothesis at level a passes the D-check.
BmwEstimate estimate_bmw_constant(double p, int l, double D, int trials, std::uint64_t seed);

/// The trial map used by estimate_bmw_constant (seed + trial index).
MapOnCube bmw_trial_map(int l, std::uint64_t seed, int trial);

}  // namespace hcube
