#pragma once

// Finite metric spaces, maps f: 2^n -> X, and Lipschitz maps F: X -> Y.
//
// Points are stored as flat coordinate rows. A point of an l_q^m space is its m
// coordinates; a point of a tabulated space is a single entry holding its index.
// Image equality (injectivity, tabulated lookups) is exact bit equality.

#include "hcube/cube_core.hpp"

#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace hcube {

using Point = std::vector<double>;
using PointView = std::span<const double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct LpSpace {
    int m = 1;
    double q = 1.0;  // q >= 1, or infinity

    LpSpace() = default;
    LpSpace(int dim, double exponent);
    double distance(PointView x, PointView y) const;
    bool operator==(const LpSpace&) const = default;
};

struct TabulatedSpace {
    int k = 1;
    std::vector<double> table;  // row-major k x k

    TabulatedSpace() = default;
    /// Validates the pseudometric axioms; `metric` additionally requires positive off-diagonal entries.
    TabulatedSpace(int points, std::vector<double> distances, bool metric = false);
    double at(int i, int j) const { return table[static_cast<std::size_t>(i) * k + j]; }
    double distance(PointView x, PointView y) const;
    int index_of(PointView x) const;
    bool operator==(const TabulatedSpace&) const = default;
};

/// Result of checking the pseudometric axioms on a table.
struct PseudometricReport {
    bool symmetric = true;
    bool zero_diagonal = true;
    bool nonnegative = true;
    bool triangle = true;
    bool positive_off_diagonal = true;
    bool is_pseudometric() const { return symmetric && zero_diagonal && nonnegative && triangle; }
    bool is_metric() const { return is_pseudometric() && positive_off_diagonal; }
};

PseudometricReport validate_pseudometric(int k, std::span<const double> table, double tol = 1e-12);

class Space {
public:
    Space(LpSpace s) : impl_(s) {}
    Space(TabulatedSpace s) : impl_(std::move(s)) {}

    /// Number of stored coordinates per point.
    int point_width() const;
    bool is_lp() const { return std::holds_alternative<LpSpace>(impl_); }
    const LpSpace& lp() const { return std::get<LpSpace>(impl_); }
    const TabulatedSpace& tabulated() const { return std::get<TabulatedSpace>(impl_); }
    void check_point(PointView x) const;

    double distance(PointView x, PointView y) const {
        if (auto* lp = std::get_if<LpSpace>(&impl_)) return lp->distance(x, y);
        return std::get<TabulatedSpace>(impl_).distance(x, y);
    }
    bool operator==(const Space&) const = default;

private:
    std::variant<LpSpace, TabulatedSpace> impl_;
};

/// Checked distance between two points of a space.
double dist_point(const Space& space, PointView x, PointView y);

/// Tabulation of f: 2^n -> X, images in mask order.
class MapOnCube {
public:
    MapOnCube(int n, Space space, std::vector<double> coords);
    MapOnCube(int n, Space space, const std::vector<Point>& images);

    int n() const { return n_; }
    Cube cube() const { return Cube(n_); }
    Mask size() const { return Mask{1} << n_; }
    const Space& space() const { return space_; }
    int width() const { return width_; }
    PointView image(Mask v) const { return {coords_.data() + v * width_, static_cast<std::size_t>(width_)}; }
    Point image_point(Mask v) const {
        auto s = image(v);
        return Point(s.begin(), s.end());
    }
    const std::vector<double>& coords() const { return coords_; }

    /// d(f(a), f(b)).
    double rho(Mask a, Mask b) const { return space_.distance(image(a), image(b)); }

private:
    int n_;
    Space space_;
    int width_;
    std::vector<double> coords_;
};

/// F: X -> Y. Identity, diagonal scaling of l_q^m, a finite association, or a chain.
class LipschitzMap {
public:
    struct Identity {};
    struct Diagonal {
        std::vector<double> weights;
    };
    struct Tabulated {
        Space target;
        std::map<std::vector<std::uint64_t>, Point> assoc;  // keyed on bit patterns
    };
    struct Chain {
        std::vector<LipschitzMap> maps;  // applied first to last
    };

    static LipschitzMap identity();
    static LipschitzMap diagonal(std::vector<double> weights);
    /// Diagonal with weights 1/log(i+1), i = 1..m (natural log).
    static LipschitzMap diag_log(int m);
    static LipschitzMap tabulated(Space target, const std::vector<std::pair<Point, Point>>& pairs);
    static LipschitzMap chain(std::vector<LipschitzMap> maps);

    Space target_space(const Space& source) const;
    Point apply(PointView x, const Space& source) const;
    /// A global Lipschitz bound (exact for identity and diagonal maps).
    double lipschitz_bound(const Space& source) const;
    std::string describe() const;

    const auto& variant() const { return v_; }

private:
    std::variant<Identity, Diagonal, Tabulated, Chain> v_;
};

/// F o f as a map on the same cube.
MapOnCube compose(const LipschitzMap& F, const MapOnCube& f);

/// Pseudometric rho(a, b) = d(g(a), g(b)) for a tabulated g on 2^n.
class PulledMetric {
public:
    explicit PulledMetric(MapOnCube g) : g_(std::move(g)) {}
    double operator()(Mask a, Mask b) const { return g_.rho(a, b); }
    int n() const { return g_.n(); }
    const MapOnCube& map() const { return g_; }
    /// Full 2^n x 2^n table; n limited by the pair cap.
    TabulatedSpace to_table() const;

private:
    MapOnCube g_;
};

PulledMetric pseudometric_pull(const MapOnCube& f, const LipschitzMap* F = nullptr);

/// Lip(f) = n * max over edges (eps, d_i eps); the sup over all pairs reduces to edges.
double lip_constant(const MapOnCube& f);
/// Sup over all distinct pairs of rho/partial; the brute-force route.
double lip_constant_all_pairs(const MapOnCube& f, int cap = kPairCap);

/// Max and min of rho/partial over distinct pairs.
struct RatioRange {
    double min = 0.0;
    double max = 0.0;
};
RatioRange pair_ratio_range(const MapOnCube& f, int cap = kPairCap);

bool is_injective(const MapOnCube& f);

/// Lip(f) Lip(f^{-1}), or infinity when f is not injective.
double distortion(const MapOnCube& f, int cap = kPairCap);

/// Some a with (a/D) partial <= rho <= a D partial on all pairs, if one exists.
std::optional<double> scaled_factor_bounds(const MapOnCube& f, double D, int cap = kPairCap);

/// Lip(F) restricted to the image set of f (0/0 = 0 for coincident images).
double lip_on_images(const LipschitzMap& F, const MapOnCube& f);

/// eps -> scale * eps into l_q^n.
MapOnCube rademacher_map(int n, double q, double scale);
/// Canonical map eps -> eps / n into l_q^n.
inline MapOnCube canonical_map(int n, double q) { return rademacher_map(n, q, 1.0 / n); }

/// The cube itself with its normalized metric, as a tabulated space.
MapOnCube cube_identity_map(int n);

}  // namespace hcube
