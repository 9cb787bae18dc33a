#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcm/dynamics.hpp"

namespace mcm {

// Point on the Riemann sphere; infinity is representable.
struct SpherePoint {
    cplx value;
    bool at_infinity = false;

    static SpherePoint finite(const cplx& z) { return {z, false}; }
    static SpherePoint infinity() { return {cplx(0.0, 0.0), true}; }
};

// Position on the unit sphere in R^3 (stereographic). The chordal metric is
// plain Euclidean distance between these.
struct Sphere3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline Sphere3 to_sphere3(const SpherePoint& p) {
    if (p.at_infinity) return {0.0, 0.0, 1.0};
    double a = p.value.real(), b = p.value.imag();
    double n2 = a * a + b * b;
    if (!std::isfinite(n2)) return {0.0, 0.0, 1.0};
    double d = 1.0 + n2;
    return {2.0 * a / d, 2.0 * b / d, (n2 - 1.0) / d};
}

inline double dist3(const Sphere3& p, const Sphere3& q) {
    double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// chordal(x, y) = 2|x-y| / sqrt((1+|x|^2)(1+|y|^2)), range [0, 2].
inline double chordal(const SpherePoint& x, const SpherePoint& y) {
    return dist3(to_sphere3(x), to_sphere3(y));
}

// Closed polyline on the sphere (first vertex = last, stored once).
struct Curve {
    std::vector<SpherePoint> vertices;
    std::optional<int> source_depth;
};

inline Curve make_curve(std::vector<SpherePoint> vertices,
                        std::optional<int> source_depth = std::nullopt) {
    if (vertices.size() < 8)
        throw std::invalid_argument("curve: needs at least 8 vertices");
    return Curve{std::move(vertices), source_depth};
}

inline Curve make_curve_z(const std::vector<cplx>& pts,
                          std::optional<int> source_depth = std::nullopt) {
    std::vector<SpherePoint> v;
    v.reserve(pts.size());
    for (const cplx& z : pts) v.push_back(SpherePoint::finite(z));
    return make_curve(std::move(v), source_depth);
}

namespace detail {

inline std::vector<Sphere3> project_curve(const Curve& c) {
    std::vector<Sphere3> p;
    p.reserve(c.vertices.size());
    for (const auto& v : c.vertices) p.push_back(to_sphere3(v));
    return p;
}

inline double diameter3(const std::vector<Sphere3>& pts) {
    double best = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            best = std::max(best, dist3(pts[i], pts[j]));
    return best;
}

// Diameter of the closed arc of vertices i..j (walking forward, wrapping),
// endpoints included. Long arcs are measured on a stride subsample that
// always keeps both endpoints.
inline double arc_diameter(const std::vector<Sphere3>& pts, int i, int j, int cap) {
    int n = static_cast<int>(pts.size());
    int len = (j - i + n) % n + 1;
    int stride = std::max(1, (len + cap - 1) / cap);
    std::vector<Sphere3> sub;
    sub.reserve(static_cast<std::size_t>(len / stride) + 2);
    for (int k = 0; k < len; k += stride) sub.push_back(pts[(i + k) % n]);
    if ((len - 1) % stride != 0) sub.push_back(pts[j]);
    return diameter3(sub);
}

} // namespace detail

// Maximum pairwise chordal distance over the polyline vertices.
inline double diameter(const Curve& c) {
    if (c.vertices.size() < 2) return 0.0;
    return detail::diameter3(detail::project_curve(c));
}

struct TurningReport {
    double k_estimate = 1.0;
    std::pair<int, int> witness_pair{0, 0};
    long sample_pairs = 0;
};

// Bounded-turning constant: max over sampled vertex pairs (x, y) of
// diam(I) / chordal(x, y) with I the arc of smaller diameter. Pairs are
// stratified by arc separation on power-of-two strides, so a larger budget
// evaluates a superset of pairs; a local refinement around the best pairs
// sharpens cusps.
inline TurningReport turning_constant(const Curve& curve, long pair_budget) {
    if (pair_budget < 100)
        throw std::invalid_argument("turning_constant: pair budget must be >= 100");
    const auto pts = detail::project_curve(curve);
    const int n = static_cast<int>(pts.size());
    if (n < 4) throw std::invalid_argument("turning_constant: degenerate curve");
    const int cap = 160;

    TurningReport rep;
    long evaluated = 0;

    auto ratio_of = [&](int i, int j) -> double {
        if (i == j) return 0.0;
        double chord = dist3(pts[i], pts[j]);
        if (chord <= 0.0) return 0.0;  // coincident sampled vertices: skip
        double d1 = detail::arc_diameter(pts, i, j, cap);
        double d2 = detail::arc_diameter(pts, j, i, cap);
        return std::min(d1, d2) / chord;
    };

    struct Cand { double ratio; int i, j; };
    std::vector<Cand> top;

    auto consider = [&](int i, int j) {
        double r = ratio_of(i, j);
        ++evaluated;
        if (r > rep.k_estimate) {
            rep.k_estimate = r;
            rep.witness_pair = {i, j};
        }
        if (top.size() < 24) {
            top.push_back({r, i, j});
        } else {
            auto worst = std::min_element(top.begin(), top.end(),
                                          [](const Cand& a, const Cand& b) {
                                              return a.ratio < b.ratio;
                                          });
            if (r > worst->ratio) *worst = {r, i, j};
        }
    };

    // strata of arc offsets 2, 4, 8, ..., n/2
    std::vector<int> offsets;
    for (int o = 2; o <= n / 2; o *= 2) offsets.push_back(o);
    if (offsets.empty()) offsets.push_back(1);
    long per_stratum = std::max<long>(1, pair_budget / static_cast<long>(offsets.size()));
    for (int o : offsets) {
        long stride = 1;
        while (n / stride > per_stratum) stride *= 2;
        for (int i = 0; i < n; i += static_cast<int>(stride)) consider(i, (i + o) % n);
    }

    // deterministic hill climb from the best coarse pairs
    std::sort(top.begin(), top.end(),
              [](const Cand& a, const Cand& b) { return a.ratio > b.ratio; });
    const int moves[] = {-4, -2, -1, 1, 2, 4};
    for (const Cand& c : top) {
        int bi = c.i, bj = c.j;
        double br = c.ratio;
        for (int round = 0; round < 48; ++round) {
            bool improved = false;
            for (int di : moves) {
                for (int dj : moves) {
                    int i2 = ((bi + di) % n + n) % n;
                    int j2 = ((bj + dj) % n + n) % n;
                    if (i2 == j2) continue;
                    double r = ratio_of(i2, j2);
                    ++evaluated;
                    if (r > br) {
                        br = r;
                        bi = i2;
                        bj = j2;
                        improved = true;
                    }
                }
            }
            if (!improved) break;
        }
        if (br > rep.k_estimate) {
            rep.k_estimate = br;
            rep.witness_pair = {bi, bj};
        }
    }

    rep.k_estimate = std::max(rep.k_estimate, 1.0);
    rep.sample_pairs = evaluated;
    return rep;
}

struct SeparationReport {
    double s_minimum = 0.0;
    std::pair<int, int> witness_curves{0, 0};
    long pair_count = 0;
};

namespace detail {

// Small kd-tree over sphere points for nearest-distance queries between
// large curves.
class KdTree3 {
  public:
    explicit KdTree3(std::vector<Sphere3> pts) : pts_(std::move(pts)) {
        idx_.resize(pts_.size());
        for (std::size_t i = 0; i < idx_.size(); ++i) idx_[i] = static_cast<int>(i);
        nodes_.reserve(pts_.size() * 2);
        root_ = build(0, static_cast<int>(idx_.size()));
    }

    // squared distance from q to the nearest stored point, pruned by `best2`
    double nearest2(const Sphere3& q, double best2) const {
        search(root_, q, best2);
        return best2;
    }

  private:
    struct Node {
        double lo[3], hi[3];
        int begin = 0, end = 0;
        int left = -1, right = -1;
    };

    static double coord(const Sphere3& p, int axis) {
        return axis == 0 ? p.x : axis == 1 ? p.y : p.z;
    }

    int build(int begin, int end) {
        Node node;
        node.begin = begin;
        node.end = end;
        for (int a = 0; a < 3; ++a) {
            node.lo[a] = 1e30;
            node.hi[a] = -1e30;
        }
        for (int k = begin; k < end; ++k) {
            const Sphere3& p = pts_[idx_[k]];
            for (int a = 0; a < 3; ++a) {
                node.lo[a] = std::min(node.lo[a], coord(p, a));
                node.hi[a] = std::max(node.hi[a], coord(p, a));
            }
        }
        int id = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        if (end - begin > 16) {
            int axis = 0;
            double span = -1.0;
            for (int a = 0; a < 3; ++a) {
                double s = node.hi[a] - node.lo[a];
                if (s > span) { span = s; axis = a; }
            }
            int mid = (begin + end) / 2;
            std::nth_element(idx_.begin() + begin, idx_.begin() + mid, idx_.begin() + end,
                             [&](int a, int b) {
                                 return coord(pts_[a], axis) < coord(pts_[b], axis);
                             });
            int left = build(begin, mid);
            int right = build(mid, end);
            nodes_[id].left = left;
            nodes_[id].right = right;
        }
        return id;
    }

    double box_dist2(const Node& n, const Sphere3& q) const {
        double d2 = 0.0;
        const double qs[3] = {q.x, q.y, q.z};
        for (int a = 0; a < 3; ++a) {
            double d = 0.0;
            if (qs[a] < n.lo[a]) d = n.lo[a] - qs[a];
            else if (qs[a] > n.hi[a]) d = qs[a] - n.hi[a];
            d2 += d * d;
        }
        return d2;
    }

    void search(int id, const Sphere3& q, double& best2) const {
        const Node& n = nodes_[id];
        if (box_dist2(n, q) >= best2) return;
        if (n.left < 0) {
            for (int k = n.begin; k < n.end; ++k) {
                const Sphere3& p = pts_[idx_[k]];
                double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z;
                double d2 = dx * dx + dy * dy + dz * dz;
                if (d2 < best2) best2 = d2;
            }
            return;
        }
        double dl = box_dist2(nodes_[n.left], q);
        double dr = box_dist2(nodes_[n.right], q);
        if (dl <= dr) {
            search(n.left, q, best2);
            if (dr < best2) search(n.right, q, best2);
        } else {
            search(n.right, q, best2);
            if (dl < best2) search(n.left, q, best2);
        }
    }

    std::vector<Sphere3> pts_;
    std::vector<int> idx_;
    std::vector<Node> nodes_;
    int root_ = 0;
};

} // namespace detail

struct CurveIntersectionError : std::runtime_error {
    int curve_a, curve_b;
    CurveIntersectionError(int a, int b)
        : std::runtime_error("curves " + std::to_string(a) + " and " + std::to_string(b)
                             + " intersect at polyline resolution"),
          curve_a(a), curve_b(b) {}
};

// s = min over pairs of dist(ci, cj) / min(diam ci, diam cj), distance taken
// vertex-to-vertex in the chordal metric.
inline SeparationReport separation(const std::vector<Curve>& family) {
    if (family.size() < 2)
        throw std::invalid_argument("separation: needs at least two curves");
    const int n = static_cast<int>(family.size());
    std::vector<std::vector<Sphere3>> pts(n);
    std::vector<double> diam(n);
    std::vector<std::unique_ptr<detail::KdTree3>> trees(n);
    for (int i = 0; i < n; ++i) {
        pts[i] = detail::project_curve(family[i]);
        diam[i] = detail::diameter3(pts[i]);
        trees[i] = std::make_unique<detail::KdTree3>(pts[i]);
    }

    SeparationReport rep;
    rep.s_minimum = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const auto& small = pts[i].size() <= pts[j].size() ? pts[i] : pts[j];
            const auto& tree = pts[i].size() <= pts[j].size() ? trees[j] : trees[i];
            double best2 = std::numeric_limits<double>::infinity();
            for (const auto& q : small) best2 = tree->nearest2(q, best2);
            double dist = std::sqrt(best2);
            if (dist <= 0.0) throw CurveIntersectionError(i, j);
            double denom = std::min(diam[i], diam[j]);
            if (denom <= 0.0) throw std::invalid_argument("separation: degenerate curve diameter");
            double s = dist / denom;
            ++rep.pair_count;
            if (s < rep.s_minimum) {
                rep.s_minimum = s;
                rep.witness_curves = {i, j};
            }
        }
    }
    return rep;
}

struct CurveStats {
    int curve_id = 0;
    int depth = -1;
    int vertex_count = 0;
    double diameter = 0.0;
    double k_estimate = 1.0;
};

// Desk-scale check of the carpet hypotheses: per-curve turning constants
// plus family-wide relative separation. Finite-depth estimates only; they
// bound the computed depths, not the full asymptotic family.
struct CarpetReport {
    double max_k = 1.0;
    int max_k_curve = -1;
    std::optional<SeparationReport> separation;
    std::vector<CurveStats> per_curve;
};

inline CarpetReport carpet_report(const std::vector<Curve>& family, long pair_budget = 2000) {
    if (family.empty()) throw std::invalid_argument("carpet_report: empty family");
    CarpetReport rep;
    for (int i = 0; i < static_cast<int>(family.size()); ++i) {
        TurningReport t = turning_constant(family[i], pair_budget);
        CurveStats st;
        st.curve_id = i;
        st.depth = family[i].source_depth.value_or(-1);
        st.vertex_count = static_cast<int>(family[i].vertices.size());
        st.diameter = diameter(family[i]);
        st.k_estimate = t.k_estimate;
        rep.per_curve.push_back(st);
        if (t.k_estimate > rep.max_k) {
            rep.max_k = t.k_estimate;
            rep.max_k_curve = i;
        }
    }
    if (family.size() >= 2) rep.separation = separation(family);
    return rep;
}

} // namespace mcm
