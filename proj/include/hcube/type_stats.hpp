#pragma once

// Pair-level subtype statistics for one (F, f) pair, plus the inequality chains
// used to relate them (doubling extension, block exchange, truncation).

#include "hcube/spaces.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hcube {

enum class StatKind { A, B, E };

std::string to_string(StatKind k);

/// Two sides of a subtype inequality and their ratio (0/0 = 0).
struct TypeStatistic {
    StatKind kind = StatKind::B;
    double p = 1.0;
    int n = 1;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;

    /// ratio^{1/p} for kinds b and e, ratio itself for kind a.
    double root() const;
};

/// lhs / rhs with 0/0 = 0.
double safe_ratio(double lhs, double rhs);

/// E rho_Y(eps, -eps)^p.
double antipodal_moment(const MapOnCube& g, double p, const ExpectOptions& opts = {});
/// Sum_i E rho_X(eps, d_i eps)^p.
double edge_moment_sum(const MapOnCube& f, double p, const ExpectOptions& opts = {});

/// lhs = E rho_Y(eps,-eps)^p, rhs = n^{p-1} sum_i E rho_X(eps, d_i eps)^p.
TypeStatistic b_statistic(const LipschitzMap& F, const MapOnCube& f, double p, const ExpectOptions& opts = {});
/// lhs = E rho_Y(eps,-eps), rhs = Lip(f).
TypeStatistic a_statistic(const LipschitzMap& F, const MapOnCube& f, const ExpectOptions& opts = {});
/// As b_statistic but without the n^{p-1} factor.
TypeStatistic e_statistic(const LipschitzMap& F, const MapOnCube& f, double p, const ExpectOptions& opts = {});

/// g(eps) = f(eps(1), ..., eps(k)) on 2^l.
MapOnCube doubling_extension(const MapOnCube& f, int l);

/// Flip-path moments: entry i-1 holds E rho(J_{i-1} eps, J_i eps)^p, J_i flipping coordinates 1..i.
std::vector<double> flip_path_moments(const MapOnCube& f, double p);

struct ExchangeReport {
    int k = 0;  // block size
    int l = 0;  // block count
    double direct = 0.0;               // E_eps rho_Y(eps, -eps)
    double exchanged = 0.0;            // E_delta E_eps rho_Y(g(eps,delta), g(eps,-delta))
    double max_induced_lhs = 0.0;      // max_eps a-statistic lhs of (F, f_eps)
    double mean_induced_lip = 0.0;     // E_eps Lip(f_eps)
    double max_induced_ratio = 0.0;    // max_eps a-ratio of (F, f_eps)
    double lip_f = 0.0;
    bool identity_holds = false;       // |direct - exchanged| <= 1e-12 (relative)
    bool max_bound_holds = false;      // direct <= max_induced_lhs
    bool ratio_chain_holds = false;    // direct <= max_ratio * E Lip(f_eps) <= max_ratio * Lip(f)
    bool ok() const { return identity_holds && max_bound_holds && ratio_chain_holds; }
};

/// Block-exchange identity for f on 2^{kl} with l equal blocks of size k.
ExchangeReport exchange_identity_check(const LipschitzMap& F, const MapOnCube& f, int k, int l);

struct TruncationReport {
    int m = 0, l = 0, k = 0, r = 0;
    Mask pad = 0;
    double lhs = 0.0;          // E rho_Y^f(eps, -eps)
    double g_term = 0.0;       // E rho_Y^G(eps, -eps)
    double h_term = 0.0;       // E rho_Y^H(eps, -eps)
    double correction = 0.0;   // 2 Lip(F) Lip(f) r / m
    double lip_F = 0.0;
    double lip_f = 0.0;
    double lip_G = 0.0;
    double lip_G_bound = 0.0;  // (m / lk) Lip(f)
    bool gh_equal = false;
    bool mean_bound_holds = false;
    bool lip_bound_holds = false;
    bool ok() const { return gh_equal && mean_bound_holds && lip_bound_holds; }
};

/// Restriction of f on 2^m to 2^{lk} by padding the last r coordinates with `pad`.
TruncationReport truncation_bound_check(const LipschitzMap& F, const MapOnCube& f, int l, Mask pad);

/// Seeded random map into a box [-box, box]^m of l_q^m.
MapOnCube random_map(int n, int m, double q, double box, std::uint64_t seed);

/// Largest pair statistic over a catalog, with the index of the maximizing pair.
struct CatalogBound {
    double value = 0.0;
    std::size_t argmax = 0;
};
CatalogBound catalog_lower_bound(const std::vector<TypeStatistic>& stats);

}  // namespace hcube
