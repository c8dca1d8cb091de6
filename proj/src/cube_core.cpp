#include "hcube/cube_core.hpp"

#include <algorithm>
#include <string>

namespace hcube {

namespace {

void check_dim(int n) {
    if (n < 1 || n > kMaxDim) throw Error("cube dimension out of range: " + std::to_string(n));
}

Mask dim_mask(int n) { return (Mask{1} << n) - 1; }

}  // namespace

CubePoint::CubePoint(int dim, Mask m) : n(dim), mask(m) {
    check_dim(n);
    if (mask > dim_mask(n)) throw Error("vertex mask does not fit dimension " + std::to_string(n));
}

int CubePoint::sign(int i) const {
    if (i < 1 || i > n) throw Error("coordinate index out of range");
    return ((mask >> (i - 1)) & 1u) ? -1 : 1;
}

Cube::Cube(int dim) : n(dim) { check_dim(n); }

SignedInterval::SignedInterval(int l, int h) : lo(l), hi(h) {
    if (lo < 1 || hi < lo) throw Error("malformed interval [" + std::to_string(l) + "," + std::to_string(h) + "]");
}

Mask SignedInterval::mask() const {
    if (hi > kMaxDim) throw Error("interval exceeds maximum dimension");
    return dim_mask(hi) & ~dim_mask(lo - 1);
}

BlockPartition::BlockPartition(int L, std::vector<SignedInterval> blocks) : L_(L), blocks_(std::move(blocks)) {
    check_dim(L);
    if (blocks_.empty()) throw Error("partition has no blocks");
    if (blocks_.size() > 63) throw Error("partition has too many blocks");
    int next = 1;
    for (const auto& b : blocks_) {
        if (b.lo != next) throw Error("blocks do not form an ordered contiguous partition");
        next = b.hi + 1;
    }
    if (next != L + 1) throw Error("blocks do not cover [1, L]");
    masks_.reserve(blocks_.size());
    for (const auto& b : blocks_) masks_.push_back(b.mask());
}

BlockPartition BlockPartition::equal(int L, int count) {
    if (count < 1 || L % count != 0) throw Error("cannot split length into equal blocks");
    const int w = L / count;
    std::vector<SignedInterval> blocks;
    for (int k = 0; k < count; ++k) blocks.emplace_back(k * w + 1, (k + 1) * w);
    return BlockPartition(L, std::move(blocks));
}

double hamming_metric(const CubePoint& a, const CubePoint& b) {
    if (a.n != b.n) throw Error("dimension mismatch in hamming_metric");
    return static_cast<double>(hamming_count(a.mask, b.mask)) / a.n;
}

CubePoint flip_coordinate(const CubePoint& e, int i) {
    if (i < 1 || i > e.n) throw Error("flip index out of range");
    return CubePoint(e.n, e.mask ^ (Mask{1} << (i - 1)));
}

CubePoint flip_interval(const CubePoint& e, const SignedInterval& I) {
    if (I.hi > e.n) throw Error("interval out of range");
    return CubePoint(e.n, e.mask ^ I.mask());
}

CubePoint antipode(const CubePoint& e) { return CubePoint(e.n, e.mask ^ dim_mask(e.n)); }

CubePoint block_product(const CubePoint& e, const CubePoint& d, const BlockPartition& blocks) {
    if (e.n != blocks.length()) throw Error("block partition length does not match vertex dimension");
    if (d.n != blocks.count()) throw Error("sign vector length does not match block count");
    return CubePoint(e.n, block_product_mask(e.mask, d.mask, blocks.masks()));
}

void check_cap(int n, const ExpectOptions& opts) {
    if (n > opts.cap && !opts.override_cap)
        throw CapExceeded("dimension " + std::to_string(n) + " exceeds enumeration cap " + std::to_string(opts.cap) +
                          " (set override_cap to proceed)");
}

namespace detail {

int worker_count() {
    if (const char* env = std::getenv("HCUBE_WORKERS")) {
        const int w = std::atoi(env);
        if (w >= 1) return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

double pairwise_reduce(std::vector<double>& partials) {
    if (partials.empty()) return 0.0;
    std::size_t len = partials.size();
    while (len > 1) {
        const std::size_t half = len / 2;
        for (std::size_t i = 0; i < half; ++i) partials[i] = partials[2 * i] + partials[2 * i + 1];
        if (len % 2) {
            partials[half] = partials[len - 1];
            len = half + 1;
        } else {
            len = half;
        }
    }
    return partials[0];
}

}  // namespace detail

}  // namespace hcube
