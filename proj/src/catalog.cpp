#include "hcube/catalog.hpp"

#include "hcube/type_stats.hpp"

namespace hcube {

const std::vector<CatalogEntry>& catalog_entries() {
    static const std::vector<CatalogEntry> entries{
        {"rademacher-l1", "F = identity, f(eps) = eps/n in l_1^n",
         "The canonical extremal pair: every b-ratio equals 1."},
        {"rademacher-l2", "F = identity, f(eps) = eps/n in l_2^n",
         "Type-2 decay: the b-ratio at exponent p equals n^{-p/2}."},
        {"rademacher-lq", "F = identity, f(eps) = eps/n in l_q^n (option q)",
         "Exponent q >= 1 or inf, set with --q."},
        {"diag-log", "F = diagonal operator on l_1^n with weights 1/log(i+1), f(eps) = eps/n",
         "Weights w_i = 1/log(i+1), i = 1..n, natural logarithm. The b-ratio at p is (mean of w_i)^p: it decays "
         "to zero with n but stays positive at every n."},
        {"random", "F = identity, f uniform random in [-box, box]^m of l_q^m",
         "Coordinates drawn from mt19937_64 seeded with --seed, in vertex mask order then coordinate order; the "
         "same seed gives the same map on every platform. Target l_q^m with --q and --m (m defaults to n)."},
    };
    return entries;
}

const CatalogEntry& catalog_entry(const std::string& name) {
    for (const auto& e : catalog_entries())
        if (e.name == name) return e;
    std::string valid;
    for (const auto& e : catalog_entries()) valid += (valid.empty() ? "" : ", ") + e.name;
    throw Error("unknown catalog family '" + name + "' (valid: " + valid + ")");
}

CatalogPair catalog_pair(const std::string& name, int n, const CatalogOptions& opts) {
    catalog_entry(name);
    if (name == "rademacher-l1") return {name, LipschitzMap::identity(), canonical_map(n, 1.0)};
    if (name == "rademacher-l2") return {name, LipschitzMap::identity(), canonical_map(n, 2.0)};
    if (name == "rademacher-lq") return {name, LipschitzMap::identity(), canonical_map(n, opts.q)};
    if (name == "diag-log") return {name, LipschitzMap::diag_log(n), canonical_map(n, 1.0)};
    const int m = opts.m > 0 ? opts.m : n;
    return {name, LipschitzMap::identity(), random_map(n, m, opts.q, opts.box, opts.seed)};
}

}  // namespace hcube
