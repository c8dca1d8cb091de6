#pragma once

// Hamming cube 2^n: vertices as bitmasks, the normalized graph metric,
// coordinate/interval flips, block products and exact expectations.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hcube {

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Enumeration over 2^n was requested beyond the configured cap.
class CapExceeded : public Error {
public:
    using Error::Error;
};

using Mask = std::uint64_t;

inline constexpr int kDefaultCap = 20;     // 2^20 vertices
inline constexpr int kPairCap = 13;        // all-pairs operations
inline constexpr int kMaxDim = 62;

/// Vertex of 2^n. Bit i-1 of `mask` is set iff coordinate i is -1.
struct CubePoint {
    int n = 1;
    Mask mask = 0;

    CubePoint() = default;
    CubePoint(int dim, Mask m);

    /// Coordinate i (1-based) as +1 or -1.
    int sign(int i) const;
    bool operator==(const CubePoint&) const = default;
};

/// The cube 2^n with uniform measure. Vertices are enumerated in increasing mask order.
struct Cube {
    int n = 1;

    explicit Cube(int dim);
    Mask size() const { return Mask{1} << n; }
    Mask full_mask() const { return size() - 1; }
    double weight() const { return std::ldexp(1.0, -n); }
    CubePoint vertex(Mask m) const { return CubePoint(n, m); }
};

/// Contiguous 1-based inclusive interval [lo, hi].
struct SignedInterval {
    int lo = 1;
    int hi = 1;

    SignedInterval() = default;
    SignedInterval(int l, int h);

    int size() const { return hi - lo + 1; }
    /// Bitmask of the coordinates in the interval; requires hi <= n.
    Mask mask() const;
    bool operator==(const SignedInterval&) const = default;
};

/// Ordered partition of [1, L] into contiguous intervals.
class BlockPartition {
public:
    BlockPartition(int L, std::vector<SignedInterval> blocks);

    /// L split into `count` consecutive blocks of equal size.
    static BlockPartition equal(int L, int count);

    int length() const { return L_; }
    int count() const { return static_cast<int>(blocks_.size()); }
    const std::vector<SignedInterval>& blocks() const { return blocks_; }
    const std::vector<Mask>& masks() const { return masks_; }

private:
    int L_;
    std::vector<SignedInterval> blocks_;
    std::vector<Mask> masks_;
};

inline int hamming_count(Mask a, Mask b) { return std::popcount(a ^ b); }

/// Normalized graph metric |{i : a(i) != b(i)}| / n.
double hamming_metric(const CubePoint& a, const CubePoint& b);

CubePoint flip_coordinate(const CubePoint& e, int i);
CubePoint flip_interval(const CubePoint& e, const SignedInterval& I);
CubePoint antipode(const CubePoint& e);

/// g(e, d): coordinate i becomes d(k) e(i) for i in block k.
CubePoint block_product(const CubePoint& e, const CubePoint& d, const BlockPartition& blocks);

/// Mask-level block product; `block_masks[k]` is the mask of block k+1.
inline Mask block_product_mask(Mask e, Mask d, const std::vector<Mask>& block_masks) {
    Mask out = e;
    for (std::size_t k = 0; k < block_masks.size(); ++k)
        if ((d >> k) & 1u) out ^= block_masks[k];
    return out;
}

struct ExpectOptions {
    int cap = kDefaultCap;
    bool override_cap = false;
};

/// Throws CapExceeded when n > cap without override.
void check_cap(int n, const ExpectOptions& opts = {});

namespace detail {

/// Neumaier-compensated accumulator.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

inline constexpr int kChunkBits = 10;

/// Worker count from HCUBE_WORKERS, default hardware concurrency.
int worker_count();

/// Uniform double in [0, 1) from the top 53 bits of one 64-bit draw; identical on every platform.
template <class Rng>
double unit_uniform(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Pairwise reduction of chunk partials in a fixed tree order.
double pairwise_reduce(std::vector<double>& partials);

}  // namespace detail

/// Sum of fn over all vertices of the cube. The reduction tree depends only on n,
/// so results are bit-identical for any worker count.
template <class Fn>
double sum_over(Fn&& fn, const Cube& cube, const ExpectOptions& opts = {}) {
    check_cap(cube.n, opts);
    const Mask N = cube.size();
    const Mask chunk = Mask{1} << std::min(cube.n, detail::kChunkBits);
    const Mask chunks = N / chunk;
    std::vector<double> partials(chunks, 0.0);

    auto run = [&](Mask first, Mask last) {
        for (Mask c = first; c < last; ++c) {
            detail::KahanSum acc;
            const Mask base = c * chunk;
            for (Mask v = base; v < base + chunk; ++v) acc.add(static_cast<double>(fn(v)));
            partials[c] = acc.value();
        }
    };

    const int workers = std::min<Mask>(detail::worker_count(), chunks);
    if (workers <= 1) {
        run(0, chunks);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        const Mask per = (chunks + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const Mask first = w * per;
            const Mask last = std::min(chunks, first + per);
            if (first < last) pool.emplace_back(run, first, last);
        }
        for (auto& t : pool) t.join();
    }
    return detail::pairwise_reduce(partials);
}

/// E fn = 2^{-n} * sum of fn over 2^n.
template <class Fn>
double expect(Fn&& fn, const Cube& cube, const ExpectOptions& opts = {}) {
    return sum_over(std::forward<Fn>(fn), cube, opts) * cube.weight();
}

}  // namespace hcube
