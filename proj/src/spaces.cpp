#include "hcube/spaces.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace hcube {

LpSpace::LpSpace(int dim, double exponent) : m(dim), q(exponent) {
    if (m < 1) throw Error("l_q space dimension must be positive");
    if (!(q >= 1.0)) throw Error("l_q exponent must be >= 1 or infinity");
}

double LpSpace::distance(PointView x, PointView y) const {
    if (q == 1.0) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += std::abs(x[i] - y[i]);
        return s;
    }
    if (q == 2.0) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) {
            const double d = x[i] - y[i];
            s += d * d;
        }
        return std::sqrt(s);
    }
    if (std::isinf(q)) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s = std::max(s, std::abs(x[i] - y[i]));
        return s;
    }
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += std::pow(std::abs(x[i] - y[i]), q);
    return std::pow(s, 1.0 / q);
}

PseudometricReport validate_pseudometric(int k, std::span<const double> t, double tol) {
    PseudometricReport r;
    auto at = [&](int i, int j) { return t[static_cast<std::size_t>(i) * k + j]; };
    for (int i = 0; i < k; ++i) {
        if (at(i, i) != 0.0) r.zero_diagonal = false;
        for (int j = 0; j < k; ++j) {
            const double d = at(i, j);
            if (!(d >= 0.0)) r.nonnegative = false;
            if (d != at(j, i)) r.symmetric = false;
            if (i != j && !(d > 0.0)) r.positive_off_diagonal = false;
            for (int l = 0; l < k; ++l)
                if (d > at(i, l) + at(l, j) + tol) r.triangle = false;
        }
    }
    return r;
}

TabulatedSpace::TabulatedSpace(int points, std::vector<double> distances, bool metric)
    : k(points), table(std::move(distances)) {
    if (k < 1) throw Error("tabulated space needs at least one point");
    if (table.size() != static_cast<std::size_t>(k) * k) throw Error("distance table must be k x k");
    const auto rep = validate_pseudometric(k, table);
    if (!rep.is_pseudometric()) throw Error("distance table is not a pseudometric");
    if (metric && !rep.is_metric()) throw Error("distance table is not a metric");
}

int TabulatedSpace::index_of(PointView x) const {
    if (x.size() != 1) throw Error("tabulated point must have a single index");
    const double v = x[0];
    if (!(v >= 0.0) || v >= k || v != std::floor(v)) throw Error("unknown point in tabulated space");
    return static_cast<int>(v);
}

double TabulatedSpace::distance(PointView x, PointView y) const { return at(index_of(x), index_of(y)); }

int Space::point_width() const {
    if (auto* lp = std::get_if<LpSpace>(&impl_)) return lp->m;
    return 1;
}

void Space::check_point(PointView x) const {
    if (static_cast<int>(x.size()) != point_width()) throw Error("point dimension mismatch");
    if (!is_lp()) tabulated().index_of(x);
}

double dist_point(const Space& space, PointView x, PointView y) {
    space.check_point(x);
    space.check_point(y);
    return space.distance(x, y);
}

MapOnCube::MapOnCube(int n, Space space, std::vector<double> coords)
    : n_(n), space_(std::move(space)), width_(space_.point_width()), coords_(std::move(coords)) {
    Cube c(n_);
    if (coords_.size() != c.size() * static_cast<std::size_t>(width_))
        throw Error("image sequence length must be 2^n");
    if (!space_.is_lp())
        for (Mask v = 0; v < c.size(); ++v) space_.check_point(image(v));
}

namespace {

std::vector<double> flatten(int n, int width, const std::vector<Point>& images) {
    Cube c(n);
    if (images.size() != c.size()) throw Error("image sequence length must be 2^n");
    std::vector<double> out;
    out.reserve(images.size() * width);
    for (const auto& p : images) {
        if (static_cast<int>(p.size()) != width) throw Error("point dimension mismatch");
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

std::vector<std::uint64_t> bit_key(PointView x) {
    std::vector<std::uint64_t> key(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) key[i] = std::bit_cast<std::uint64_t>(x[i]);
    return key;
}

}  // namespace

MapOnCube::MapOnCube(int n, Space space, const std::vector<Point>& images)
    : MapOnCube(n, space, flatten(n, space.point_width(), images)) {}

LipschitzMap LipschitzMap::identity() {
    LipschitzMap F;
    F.v_ = Identity{};
    return F;
}

LipschitzMap LipschitzMap::diagonal(std::vector<double> weights) {
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw Error("diagonal weights must be finite and nonnegative");
    LipschitzMap F;
    F.v_ = Diagonal{std::move(weights)};
    return F;
}

LipschitzMap LipschitzMap::diag_log(int m) {
    std::vector<double> w(m);
    for (int i = 1; i <= m; ++i) w[i - 1] = 1.0 / std::log(static_cast<double>(i + 1));
    return diagonal(std::move(w));
}

LipschitzMap LipschitzMap::tabulated(Space target, const std::vector<std::pair<Point, Point>>& pairs) {
    Tabulated t{std::move(target), {}};
    for (const auto& [x, y] : pairs) {
        t.target.check_point(y);
        auto [it, inserted] = t.assoc.emplace(bit_key(x), y);
        if (!inserted && it->second != y) throw Error("tabulated map assigns two images to one point");
    }
    LipschitzMap F;
    F.v_ = std::move(t);
    return F;
}

LipschitzMap LipschitzMap::chain(std::vector<LipschitzMap> maps) {
    LipschitzMap F;
    F.v_ = Chain{std::move(maps)};
    return F;
}

Space LipschitzMap::target_space(const Space& source) const {
    return std::visit(
        [&](const auto& v) -> Space {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Identity>) {
                return source;
            } else if constexpr (std::is_same_v<T, Diagonal>) {
                if (!source.is_lp() || source.lp().m != static_cast<int>(v.weights.size()))
                    throw Error("diagonal map needs an l_q space of matching dimension");
                return source;
            } else if constexpr (std::is_same_v<T, Tabulated>) {
                return v.target;
            } else {
                Space s = source;
                for (const auto& F : v.maps) s = F.target_space(s);
                return s;
            }
        },
        v_);
}

Point LipschitzMap::apply(PointView x, const Space& source) const {
    return std::visit(
        [&](const auto& v) -> Point {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Identity>) {
                return Point(x.begin(), x.end());
            } else if constexpr (std::is_same_v<T, Diagonal>) {
                if (x.size() != v.weights.size()) throw Error("point dimension mismatch for diagonal map");
                Point y(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) y[i] = v.weights[i] * x[i];
                return y;
            } else if constexpr (std::is_same_v<T, Tabulated>) {
                auto it = v.assoc.find(bit_key(x));
                if (it == v.assoc.end()) throw Error("tabulated map is undefined at an image point");
                return it->second;
            } else {
                Point cur(x.begin(), x.end());
                Space s = source;
                for (const auto& F : v.maps) {
                    cur = F.apply(cur, s);
                    s = F.target_space(s);
                }
                return cur;
            }
        },
        v_);
}

double LipschitzMap::lipschitz_bound(const Space& source) const {
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Identity>) {
                return 1.0;
            } else if constexpr (std::is_same_v<T, Diagonal>) {
                double w = 0.0;
                for (double x : v.weights) w = std::max(w, x);
                return w;
            } else if constexpr (std::is_same_v<T, Tabulated>) {
                std::vector<Point> dom;
                for (const auto& [key, y] : v.assoc) {
                    Point p(key.size());
                    for (std::size_t i = 0; i < key.size(); ++i) p[i] = std::bit_cast<double>(key[i]);
                    dom.push_back(std::move(p));
                }
                double lip = 0.0;
                auto it_a = v.assoc.begin();
                for (std::size_t a = 0; a < dom.size(); ++a, ++it_a) {
                    auto it_b = v.assoc.begin();
                    for (std::size_t b = 0; b < dom.size(); ++b, ++it_b) {
                        if (a == b) continue;
                        const double dx = source.distance(dom[a], dom[b]);
                        const double dy = v.target.distance(it_a->second, it_b->second);
                        if (dx > 0.0)
                            lip = std::max(lip, dy / dx);
                        else if (dy > 0.0)
                            return kInf;
                    }
                }
                return lip;
            } else {
                double lip = 1.0;
                Space s = source;
                for (const auto& F : v.maps) {
                    lip *= F.lipschitz_bound(s);
                    s = F.target_space(s);
                }
                return lip;
            }
        },
        v_);
}

std::string LipschitzMap::describe() const {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Identity>) {
                return "identity";
            } else if constexpr (std::is_same_v<T, Diagonal>) {
                return "diagonal(m=" + std::to_string(v.weights.size()) + ")";
            } else if constexpr (std::is_same_v<T, Tabulated>) {
                return "tabulated(" + std::to_string(v.assoc.size()) + " points)";
            } else {
                std::string s = "chain(";
                for (std::size_t i = 0; i < v.maps.size(); ++i) s += (i ? "," : "") + v.maps[i].describe();
                return s + ")";
            }
        },
        v_);
}

MapOnCube compose(const LipschitzMap& F, const MapOnCube& f) {
    if (std::holds_alternative<LipschitzMap::Identity>(F.variant())) return f;
    Space target = F.target_space(f.space());
    const int w = target.point_width();
    std::vector<double> coords;
    coords.reserve(f.size() * w);
    for (Mask v = 0; v < f.size(); ++v) {
        Point y = F.apply(f.image(v), f.space());
        coords.insert(coords.end(), y.begin(), y.end());
    }
    return MapOnCube(f.n(), std::move(target), std::move(coords));
}

TabulatedSpace PulledMetric::to_table() const {
    check_cap(n(), {kPairCap, false});
    const int k = static_cast<int>(g_.size());
    std::vector<double> t(static_cast<std::size_t>(k) * k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) t[static_cast<std::size_t>(a) * k + b] = g_.rho(a, b);
    TabulatedSpace s;
    s.k = k;
    s.table = std::move(t);
    return s;
}

PulledMetric pseudometric_pull(const MapOnCube& f, const LipschitzMap* F) {
    return PulledMetric(F ? compose(*F, f) : f);
}

double lip_constant(const MapOnCube& f) {
    double best = 0.0;
    for (Mask v = 0; v < f.size(); ++v)
        for (int i = 0; i < f.n(); ++i) {
            const Mask u = v ^ (Mask{1} << i);
            if (u > v) best = std::max(best, f.rho(v, u));
        }
    return best * f.n();
}

RatioRange pair_ratio_range(const MapOnCube& f, int cap) {
    check_cap(f.n(), {cap, false});
    RatioRange r{kInf, 0.0};
    for (Mask a = 0; a < f.size(); ++a)
        for (Mask b = a + 1; b < f.size(); ++b) {
            const double ratio = f.rho(a, b) * f.n() / hamming_count(a, b);
            r.min = std::min(r.min, ratio);
            r.max = std::max(r.max, ratio);
        }
    if (f.size() < 2) r.min = 0.0;
    return r;
}

double lip_constant_all_pairs(const MapOnCube& f, int cap) { return pair_ratio_range(f, cap).max; }

bool is_injective(const MapOnCube& f) {
    std::vector<std::vector<std::uint64_t>> keys;
    keys.reserve(f.size());
    for (Mask v = 0; v < f.size(); ++v) keys.push_back(bit_key(f.image(v)));
    std::sort(keys.begin(), keys.end());
    return std::adjacent_find(keys.begin(), keys.end()) == keys.end();
}

double distortion(const MapOnCube& f, int cap) {
    if (!is_injective(f)) return kInf;
    const auto r = pair_ratio_range(f, cap);
    if (r.min <= 0.0) return kInf;  // distinct images at zero distance in a pseudometric
    return r.max / r.min;
}

std::optional<double> scaled_factor_bounds(const MapOnCube& f, double D, int cap) {
    if (!(D > 1.0)) throw Error("scaled_factor_bounds requires D > 1");
    const auto r = pair_ratio_range(f, cap);
    if (!(r.min > 0.0)) return std::nullopt;
    const double a = std::sqrt(r.max * r.min);
    if (r.min >= a / D && r.max <= a * D) return a;
    return std::nullopt;
}

double lip_on_images(const LipschitzMap& F, const MapOnCube& f) {
    const MapOnCube Ff = compose(F, f);
    double lip = 0.0;
    for (Mask a = 0; a < f.size(); ++a)
        for (Mask b = a + 1; b < f.size(); ++b) {
            const double dx = f.rho(a, b);
            const double dy = Ff.rho(a, b);
            if (dx > 0.0)
                lip = std::max(lip, dy / dx);
            else if (dy > 0.0)
                return kInf;
        }
    return lip;
}

MapOnCube rademacher_map(int n, double q, double scale) {
    Cube c(n);
    std::vector<double> coords;
    coords.reserve(c.size() * n);
    for (Mask v = 0; v < c.size(); ++v)
        for (int i = 0; i < n; ++i) coords.push_back(((v >> i) & 1u) ? -scale : scale);
    return MapOnCube(n, LpSpace(n, q), std::move(coords));
}

MapOnCube cube_identity_map(int n) {
    check_cap(n, {10, false});
    Cube c(n);
    const int k = static_cast<int>(c.size());
    std::vector<double> t(static_cast<std::size_t>(k) * k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) t[static_cast<std::size_t>(a) * k + b] = static_cast<double>(hamming_count(a, b)) / n;
    // The normalized Hamming metric needs no O(k^3) validation.
    TabulatedSpace s;
    s.k = k;
    s.table = std::move(t);
    std::vector<double> coords(k);
    for (int v = 0; v < k; ++v) coords[v] = v;
    return MapOnCube(n, std::move(s), std::move(coords));
}

}  // namespace hcube
