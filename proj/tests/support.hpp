#pragma once

// Seeded generators and small oracles shared by the test binaries.

#include "hcube/spaces.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace hcube::test {

/// Pinned tolerances.
inline constexpr double kExact = 1e-12;
inline constexpr double kTight = 1e-9;

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return lo + (hi - lo) * detail::unit_uniform(rng_); }
    int integer(int lo, int hi) { return lo + static_cast<int>(rng_() % static_cast<std::uint64_t>(hi - lo + 1)); }
    std::uint64_t bits() { return rng_(); }
    bool coin(double p = 0.5) { return detail::unit_uniform(rng_) < p; }

    /// Random map into l_q^m with coordinates in [-1, 1].
    MapOnCube map(int n, int m, double q) {
        std::vector<double> coords((std::size_t{1} << n) * m);
        for (auto& x : coords) x = uniform(-1.0, 1.0);
        return MapOnCube(n, LpSpace(m, q), std::move(coords));
    }

    /// q drawn from {1, 1.5, 2, 3, inf}.
    double exponent() {
        static const double qs[] = {1.0, 1.5, 2.0, 3.0, std::numeric_limits<double>::infinity()};
        return qs[integer(0, 4)];
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

/// Brute-force sup over distinct pairs of rho / partial.
inline double brute_lip(const MapOnCube& f) {
    const int n = f.n();
    double best = 0.0;
    for (Mask a = 0; a < f.size(); ++a)
        for (Mask b = a + 1; b < f.size(); ++b)
            best = std::max(best, f.rho(a, b) * n / std::popcount(a ^ b));
    return best;
}

/// Plain (uncompensated) mean over the cube, used as an independent oracle.
inline double naive_mean(const std::vector<double>& v) {
    long double s = 0.0L;
    for (double x : v) s += x;
    return static_cast<double>(s / v.size());
}

/// Relative closeness with an absolute floor.
inline bool close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace hcube::test
