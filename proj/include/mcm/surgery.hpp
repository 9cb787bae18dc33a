#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "mcm/cantor.hpp"
#include "mcm/dynamics.hpp"
#include "mcm/field_grid.hpp"
#include "mcm/parallel.hpp"

namespace mcm {

// ---------------------------------------------------------------------------
// Piecewise geometry helpers
// ---------------------------------------------------------------------------

namespace surgery_detail {

// Closed or open polyline parameterized by arclength fraction in [0, 1].
struct PolylineParam {
    std::vector<cplx> pts;
    std::vector<double> cum;  // cumulative arclength, cum[0] = 0
    double total = 0.0;

    void finish() {
        cum.assign(pts.size(), 0.0);
        for (std::size_t i = 1; i < pts.size(); ++i)
            cum[i] = cum[i - 1] + std::abs(pts[i] - pts[i - 1]);
        total = cum.back();
    }
    cplx at(double t) const {
        double s = std::clamp(t, 0.0, 1.0) * total;
        std::size_t i = 1;
        while (i + 1 < pts.size() && cum[i] < s) ++i;
        double seg = cum[i] - cum[i - 1];
        double f = seg > 0 ? (s - cum[i - 1]) / seg : 0.0;
        return pts[i - 1] + f * (pts[i] - pts[i - 1]);
    }
    // arclength fraction of vertex k
    double vertex_fraction(std::size_t k) const { return cum[k] / total; }
};

using BoundaryFn = std::function<cplx(double)>;

// Transfinite (Coons) patch interpolating four boundary curves. bottom/top
// run in u, left/right in v; corners must match the curve endpoints.
struct CoonsPatch {
    BoundaryFn bottom, top, left, right;
    cplx p00, p10, p01, p11;

    cplx at(double u, double v) const {
        return (1.0 - v) * bottom(u) + v * top(u) + (1.0 - u) * left(v) + u * right(v)
             - ((1.0 - u) * (1.0 - v) * p00 + u * (1.0 - v) * p10 + (1.0 - u) * v * p01
                + u * v * p11);
    }

    // Newton inversion with numeric Jacobian; seeds from the caller's guess.
    // The boundary curves may carry polyline kinks, so a stalled Newton run
    // falls back to a shrinking grid search before polishing again.
    bool invert(const cplx& w, double& u, double& v, double tol = 1e-12) const {
        double uu = std::clamp(u, 0.0, 1.0), vv = std::clamp(v, 0.0, 1.0);
        newton(w, uu, vv, tol);
        if (std::abs(at(uu, vv) - w) > tol * 100.0) {
            double radius = 0.35;
            for (int round = 0; round < 7; ++round) {
                double bu = uu, bv = vv;
                double best = std::abs(at(uu, vv) - w);
                for (int i = -3; i <= 3; ++i) {
                    for (int j = -3; j <= 3; ++j) {
                        double cu = std::clamp(uu + radius * i / 3.0, -0.25, 1.25);
                        double cv = std::clamp(vv + radius * j / 3.0, -0.25, 1.25);
                        double e = std::abs(at(cu, cv) - w);
                        if (e < best) {
                            best = e;
                            bu = cu;
                            bv = cv;
                        }
                    }
                }
                uu = bu;
                vv = bv;
                radius *= 0.4;
            }
            newton(w, uu, vv, tol);
        }
        u = uu;
        v = vv;
        return std::abs(at(uu, vv) - w) < 1e-9;
    }

  private:
    void newton(const cplx& w, double& uu, double& vv, double tol) const {
        const double h = 1e-7;
        for (int it = 0; it < 60; ++it) {
            cplx r = at(uu, vv) - w;
            double err = std::abs(r);
            if (err < tol) return;
            cplx du = (at(uu + h, vv) - at(uu - h, vv)) / (2.0 * h);
            cplx dv = (at(uu, vv + h) - at(uu, vv - h)) / (2.0 * h);
            double a = du.real(), b = dv.real(), c = du.imag(), d = dv.imag();
            double det = a * d - b * c;
            if (std::abs(det) < 1e-18) return;
            double su = (d * r.real() - b * r.imag()) / det;
            double sv = (-c * r.real() + a * r.imag()) / det;
            double damp = 1.0;
            bool moved = false;
            for (int half = 0; half < 8; ++half) {
                double nu = std::clamp(uu - damp * su, -0.25, 1.25);
                double nv = std::clamp(vv - damp * sv, -0.25, 1.25);
                if (std::abs(at(nu, nv) - w) < err) {
                    uu = nu;
                    vv = nv;
                    moved = true;
                    break;
                }
                damp *= 0.5;
            }
            if (!moved) return;
        }
    }
};

// Affine triangle map w = bary(z) over (s0,s1,s2) -> (t0,t1,t2).
struct TriMap {
    cplx s0, s1, s2, t0, t1, t2;

    bool barycentric(const cplx& z, double& b0, double& b1, double& b2) const {
        double x1 = s0.real(), y1 = s0.imag();
        double x2 = s1.real(), y2 = s1.imag();
        double x3 = s2.real(), y3 = s2.imag();
        double det = (y2 - y3) * (x1 - x3) + (x3 - x2) * (y1 - y3);
        if (std::abs(det) < 1e-30) return false;
        b0 = ((y2 - y3) * (z.real() - x3) + (x3 - x2) * (z.imag() - y3)) / det;
        b1 = ((y3 - y1) * (z.real() - x3) + (x1 - x3) * (z.imag() - y3)) / det;
        b2 = 1.0 - b0 - b1;
        return true;
    }
    bool contains(const cplx& z, double tol = 1e-9) const {
        double b0, b1, b2;
        if (!barycentric(z, b0, b1, b2)) return false;
        return b0 >= -tol && b1 >= -tol && b2 >= -tol;
    }
    cplx apply(const cplx& z) const {
        double b0, b1, b2;
        barycentric(z, b0, b1, b2);
        return b0 * t0 + b1 * t1 + b2 * t2;
    }
    // inverse via the target triangle's barycentric coordinates
    bool invert(const cplx& w, cplx& z, double tol = 1e-9) const {
        TriMap inv{t0, t1, t2, s0, s1, s2};
        if (!inv.contains(w, tol)) return false;
        z = inv.apply(w);
        return true;
    }
};

inline bool point_in_polygon(const std::vector<cplx>& poly, const cplx& z) {
    bool inside = false;
    std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        double xi = poly[i].real(), yi = poly[i].imag();
        double xj = poly[j].real(), yj = poly[j].imag();
        bool cross = ((yi > z.imag()) != (yj > z.imag()))
                  && (z.real() < (xj - xi) * (z.imag() - yi) / (yj - yi) + xi);
        if (cross) inside = !inside;
    }
    return inside;
}

inline double dist_to_polygon(const std::vector<cplx>& poly, const cplx& z) {
    double best = 1e30;
    std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        cplx a = poly[j], b = poly[i];
        cplx ab = b - a;
        double len2 = std::norm(ab);
        double t = 0.0;
        if (len2 > 0)
            t = std::clamp(((z.real() - a.real()) * ab.real()
                            + (z.imag() - a.imag()) * ab.imag())
                               / len2,
                           0.0, 1.0);
        best = std::min(best, std::abs(z - (a + t * ab)));
    }
    return best;
}

} // namespace surgery_detail

// ---------------------------------------------------------------------------
// Cell complex of the middle-annulus extension
// ---------------------------------------------------------------------------

// One mapped cell of the normalized construction (outer quadrilateral,
// inner quadrilateral, or petal polygon) together with its target.
struct SurgeryCell {
    enum Kind { OuterQuad = 0, InnerQuad = 1, Petal = 2 };
    Kind kind = OuterQuad;
    int index = 0;          // s in [0, m) or t in [0, l); 0 for the petal
    int target_sector = 0;  // target quadrilateral G_n; -1 = central polygon B
    surgery_detail::CoonsPatch source, target;
    std::vector<surgery_detail::TriMap> fan;  // petal triangles
    std::vector<cplx> outline;                // closed, for point location
    std::vector<cplx> target_outline;
};

// The degree-(l+m) branched-cover scaffold in normalized coordinates:
// a (l+m)-pointed star around the inner circle, one petal polygon per
// period, m outer and l inner quadrilaterals per period, all mapping onto
// the target wheel (central polygon B plus l+m sectors G_n).
//
// Only the fundamental period [0, 2pi/(l+m)) is stored; the rest of the map
// follows from the rotation rule F(e^{2pi i/(l+m)} z) = e^{2pi i m/(l+m)} F(z).
struct CellComplex {
    Exponents exp;
    double star_scale = 0.55;   // circumradius of the star's outer vertices
    double eps = 0.0;           // normalized inner radius
    double star_inner = 0.0;    // radius of the star's inner vertices
    double target_radius = 0.5; // circumradius of the central polygon B
    std::vector<cplx> star_vertices;   // 2(l+m), alternating outer/inner
    std::vector<cplx> petal_vertices;  // period-0 petal, anticlockwise
    std::vector<cplx> target_polygon;  // vertices z_n of B
    std::vector<SurgeryCell> cells;    // period-0 cells: m outer + l inner + petal

    int periods() const { return exp.degree(); }
    int outer_quad_count() const { return exp.m * exp.degree(); }
    int inner_quad_count() const { return exp.l * exp.degree(); }
    int petal_count() const { return exp.degree(); }
};

namespace surgery_detail {

inline std::vector<cplx> sample_fn(const BoundaryFn& f, int n) {
    std::vector<cplx> out;
    out.reserve(n + 1);
    for (int i = 0; i <= n; ++i) out.push_back(f(static_cast<double>(i) / n));
    return out;
}

inline std::vector<cplx> quad_outline(const CoonsPatch& p, int arc_samples = 48) {
    std::vector<cplx> o;
    auto add = [&](const std::vector<cplx>& v) { o.insert(o.end(), v.begin(), v.end()); };
    add(sample_fn(p.bottom, arc_samples));
    add(sample_fn(p.right, 8));
    auto top = sample_fn(p.top, arc_samples);
    std::reverse(top.begin(), top.end());
    add(top);
    auto left = sample_fn(p.left, 8);
    std::reverse(left.begin(), left.end());
    add(left);
    return o;
}

// Sub-patch of a quad over a u-subinterval. Boundary pieces on the bottom
// and top are restrictions of the parent curves; interior cuts become
// straight segments, so a reflex polyline corner always ends up at a patch
// corner where the transfinite blend stays injective. The original straight
// side segments are kept at the ends.
inline CoonsPatch sub_quad_patch(const CoonsPatch& p, double ua, double ub, bool first,
                                 bool last) {
    CoonsPatch parent = p;
    CoonsPatch sub;
    sub.bottom = [parent, ua, ub](double u) { return parent.bottom(ua + (ub - ua) * u); };
    sub.top = [parent, ua, ub](double u) { return parent.top(ua + (ub - ua) * u); };
    sub.p00 = parent.bottom(ua);
    sub.p10 = parent.bottom(ub);
    sub.p01 = parent.top(ua);
    sub.p11 = parent.top(ub);
    if (first) {
        sub.left = parent.left;
    } else {
        cplx a = sub.p00, b = sub.p01;
        sub.left = [a, b](double v) { return a + v * (b - a); };
    }
    if (last) {
        sub.right = parent.right;
    } else {
        cplx a = sub.p10, b = sub.p11;
        sub.right = [a, b](double v) { return a + v * (b - a); };
    }
    return sub;
}

} // namespace surgery_detail

inline CellComplex build_complex(const Exponents& exp, double r0, double star_scale = 0.0,
                                 double target_radius = 0.5) {
    validate_exponents(exp);
    if (!(r0 > 0.0 && r0 < 1.0))
        throw std::invalid_argument("build_complex: r0 must lie in (0, 1)");

    using namespace surgery_detail;
    CellComplex cc;
    cc.exp = exp;
    cc.target_radius = target_radius;

    const int N = exp.degree();
    const int l = exp.l, m = exp.m;
    const double alpha = kPi / N;

    // Isotoxal star whose inner notches carry the interior angle of a
    // regular (l+m)-gon, so the petals attach exactly: rho = cos(2a)/cos(a).
    const double rho_ratio = std::cos(2.0 * alpha) / std::cos(alpha);
    if (!(rho_ratio > 0.0))
        throw std::invalid_argument("build_complex: degenerate star for these exponents");

    // Everything scales linearly with the star radius; star_scale <= 0 asks
    // for the automatic choice keeping the petals inside the disk.
    if (star_scale <= 0.0) {
        double rho1 = rho_ratio;
        cplx x0u(1.0, 0.0);
        cplx x1u = rho1 * unit_dir(alpha);
        double edge1 = std::abs(x0u - x1u);
        double petal_R1 = edge1 / (2.0 * std::sin(kPi / N));
        cplx c1 = x1u + petal_R1 * unit_dir(alpha);
        double reach = 0.0;
        for (int k = 0; k < N; ++k)
            reach = std::max(reach, std::abs(c1 + (x1u - c1) * unit_dir(2.0 * kPi * k / N)));
        star_scale = std::min(0.55, 0.88 / reach);
    }
    if (!(star_scale > 0.0 && star_scale < 1.0))
        throw std::invalid_argument("build_complex: star scale must lie in (0, 1)");
    cc.star_scale = star_scale;
    cc.star_inner = star_scale * rho_ratio;
    cc.star_vertices.resize(2 * N);
    for (int i = 0; i < 2 * N; ++i) {
        double r = (i % 2 == 0) ? star_scale : cc.star_inner;
        cc.star_vertices[i] = r * unit_dir(alpha * i);
    }
    const cplx x0 = cc.star_vertices[0];
    const cplx x1 = cc.star_vertices[1];
    const cplx x2 = cc.star_vertices[2];

    // Petal: the regular N-gon sharing the notch edges [x0,x1], [x1,x2];
    // its circumcenter sits radially outward of x1.
    const double edge = std::abs(x0 - x1);
    const double petal_R = edge / (2.0 * std::sin(kPi / N));
    const cplx petal_c = x1 + petal_R * unit_dir(alpha);
    cc.petal_vertices.resize(N);
    for (int k = 0; k < N; ++k)
        cc.petal_vertices[k] = petal_c + (x1 - petal_c) * unit_dir(2.0 * kPi * k / N);
    // anticlockwise order is {x1, x0, y_0, ..., y_{N-4}, x2}
    for (const cplx& p : cc.petal_vertices) {
        if (std::abs(p) > 1.0 - 0.02)
            throw std::invalid_argument(
                "build_complex: petal polygons reach the unit circle; shrink star scale");
    }

    // Inner radius: safely inside the star.
    double apothem = 1e30;
    {
        cplx a = x0, b = x1;
        cplx ab = b - a;
        double t = std::clamp(
            (-(a.real() * ab.real() + a.imag() * ab.imag())) / std::norm(ab), 0.0, 1.0);
        apothem = std::abs(a + t * ab);
    }
    cc.eps = 0.5 * apothem;

    cc.target_polygon.resize(N);
    for (int n = 0; n < N; ++n)
        cc.target_polygon[n] = target_radius * unit_dir(2.0 * kPi * n / N);

    // Boundary polylines of the fundamental period.
    PolylineParam frontier;  // x0 -> y_0 -> ... -> x2, along the petal's free edges
    frontier.pts.push_back(cc.petal_vertices[1]);  // x0
    for (int k = 2; k < N; ++k) frontier.pts.push_back(cc.petal_vertices[k]);
    frontier.finish();

    PolylineParam star_arc;  // x0 -> x1 -> x2
    star_arc.pts = {x0, x1, x2};
    star_arc.finish();

    const double eps = cc.eps;
    auto target_vertex = [&](int n) { return cc.target_polygon[((n % N) + N) % N]; };

    // Push a quad cell, splitting it at interior kinks of its bottom
    // polyline piece. Each sub-cell gets a straight cut segment to the
    // matching circle point, so every reflex polyline corner becomes a pair
    // of convex patch corners and the transfinite blends stay injective.
    auto push_quad = [&cc](SurgeryCell cell, std::vector<double> kinks) {
        std::vector<double> cuts{0.0};
        std::sort(kinks.begin(), kinks.end());
        for (double k : kinks)
            if (k > 1e-9 && k < 1.0 - 1e-9) cuts.push_back(k);
        cuts.push_back(1.0);
        if (cuts.size() == 2) {
            cell.outline = surgery_detail::quad_outline(cell.source);
            cell.target_outline = surgery_detail::quad_outline(cell.target);
            cc.cells.push_back(std::move(cell));
            return;
        }
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            bool first = i == 0, last = i + 2 == cuts.size();
            SurgeryCell sub;
            sub.kind = cell.kind;
            sub.index = cell.index;
            sub.target_sector = cell.target_sector;
            sub.source = surgery_detail::sub_quad_patch(cell.source, cuts[i], cuts[i + 1],
                                                        first, last);
            sub.target = surgery_detail::sub_quad_patch(cell.target, cuts[i], cuts[i + 1],
                                                        first, last);
            sub.outline = surgery_detail::quad_outline(sub.source);
            sub.target_outline = surgery_detail::quad_outline(sub.target);
            cc.cells.push_back(std::move(sub));
        }
    };

    // m outer quadrilaterals E_s -> G_s
    for (int s = 0; s < m; ++s) {
        SurgeryCell cell;
        cell.kind = SurgeryCell::OuterQuad;
        cell.index = s;
        cell.target_sector = s % N;
        double f0 = static_cast<double>(s) / m;
        double f1 = static_cast<double>(s + 1) / m;
        PolylineParam fr = frontier;
        cell.source.bottom = [fr, f0, f1](double u) { return fr.at(f0 + (f1 - f0) * u); };
        cell.source.top = [s, m, N](double u) {
            return unit_dir(2.0 * kPi * (s + u) / (m * N));
        };
        cplx b0 = cell.source.bottom(0.0), b1 = cell.source.bottom(1.0);
        cplx t0 = cell.source.top(0.0), t1 = cell.source.top(1.0);
        cell.source.left = [b0, t0](double v) { return b0 + v * (t0 - b0); };
        cell.source.right = [b1, t1](double v) { return b1 + v * (t1 - b1); };
        cell.source.p00 = b0;
        cell.source.p10 = b1;
        cell.source.p01 = t0;
        cell.source.p11 = t1;

        cplx q0 = target_vertex(s), q1 = target_vertex(s + 1);
        cell.target.bottom = [q0, q1](double u) { return q0 + u * (q1 - q0); };
        cell.target.top = [s, N](double u) { return unit_dir(2.0 * kPi * (s + u) / N); };
        cplx tb0 = q0, tb1 = q1;
        cplx tt0 = cell.target.top(0.0), tt1 = cell.target.top(1.0);
        cell.target.left = [tb0, tt0](double v) { return tb0 + v * (tt0 - tb0); };
        cell.target.right = [tb1, tt1](double v) { return tb1 + v * (tt1 - tb1); };
        cell.target.p00 = tb0;
        cell.target.p10 = tb1;
        cell.target.p01 = tt0;
        cell.target.p11 = tt1;

        std::vector<double> kinks;
        for (std::size_t k = 0; k < frontier.pts.size(); ++k) {
            double g = frontier.vertex_fraction(k);
            if (g > f0 + 1e-12 && g < f1 - 1e-12) kinks.push_back((g - f0) / (f1 - f0));
        }
        push_quad(std::move(cell), std::move(kinks));
    }

    // l inner quadrilaterals D_t -> G_{(-1-t) mod N}. The inner circle maps
    // through e^{-i l theta}, so the target indices run backwards.
    for (int t = 0; t < l; ++t) {
        SurgeryCell cell;
        cell.kind = SurgeryCell::InnerQuad;
        cell.index = t;
        cell.target_sector = ((N - 1 - t) % N + N) % N;
        double f0 = static_cast<double>(t) / l;
        double f1 = static_cast<double>(t + 1) / l;
        PolylineParam sa = star_arc;
        cell.source.bottom = [sa, f0, f1](double u) { return sa.at(f0 + (f1 - f0) * u); };
        cell.source.top = [t, l, N, eps](double u) {
            return eps * unit_dir(2.0 * kPi * (t + u) / (l * N));
        };
        cplx b0 = cell.source.bottom(0.0), b1 = cell.source.bottom(1.0);
        cplx t0 = cell.source.top(0.0), t1 = cell.source.top(1.0);
        cell.source.left = [b0, t0](double v) { return b0 + v * (t0 - b0); };
        cell.source.right = [b1, t1](double v) { return b1 + v * (t1 - b1); };
        cell.source.p00 = b0;
        cell.source.p10 = b1;
        cell.source.p01 = t0;
        cell.source.p11 = t1;

        cplx q0 = target_vertex(N - t);      // image of the bottom start
        cplx q1 = target_vertex(N - 1 - t);  // image of the bottom end
        cell.target.bottom = [q0, q1](double u) { return q0 + u * (q1 - q0); };
        cell.target.top = [t, N](double u) { return unit_dir(-2.0 * kPi * (t + u) / N); };
        cplx tt0 = cell.target.top(0.0), tt1 = cell.target.top(1.0);
        cell.target.left = [q0, tt0](double v) { return q0 + v * (tt0 - q0); };
        cell.target.right = [q1, tt1](double v) { return q1 + v * (tt1 - q1); };
        cell.target.p00 = q0;
        cell.target.p10 = q1;
        cell.target.p01 = tt0;
        cell.target.p11 = tt1;

        std::vector<double> kinks;
        for (std::size_t k = 0; k < star_arc.pts.size(); ++k) {
            double g = star_arc.vertex_fraction(k);
            if (g > f0 + 1e-12 && g < f1 - 1e-12) kinks.push_back((g - f0) / (f1 - f0));
        }
        push_quad(std::move(cell), std::move(kinks));
    }

    // Petal -> central polygon B. The boundary correspondence is pinned by
    // the neighbors: the frontier pieces map to the first m polygon edges,
    // the star pieces (walked backwards) to the remaining l. A fan of
    // affine triangles from the centroid fills the interior; for l = 2 the
    // breakpoints are the petal vertices and the fan is a similarity.
    {
        SurgeryCell cell;
        cell.kind = SurgeryCell::Petal;
        cell.target_sector = -1;

        struct BP {
            cplx src, tgt;
        };
        std::vector<BP> bps;
        auto add_bp = [&](cplx s, cplx t) {
            if (!bps.empty() && std::abs(bps.back().src - s) < 1e-14) return;
            bps.push_back({s, t});
        };
        // frontier side: fractions s/m and the polyline corners
        {
            PolylineParam& fr = frontier;
            std::vector<double> fracs;
            for (int s = 0; s <= m; ++s) fracs.push_back(static_cast<double>(s) / m);
            for (std::size_t k = 0; k < fr.pts.size(); ++k)
                fracs.push_back(fr.vertex_fraction(k));
            std::sort(fracs.begin(), fracs.end());
            for (double f : fracs) {
                f = std::clamp(f, 0.0, 1.0);
                int piece = std::min(static_cast<int>(f * m), m - 1);
                double g = f * m - piece;
                cplx tgt = target_vertex(piece)
                         + g * (target_vertex(piece + 1) - target_vertex(piece));
                add_bp(fr.at(f), tgt);
            }
        }
        // star side, walked from x2 back to x0
        {
            PolylineParam& sa = star_arc;
            std::vector<double> fracs;
            for (int t = 0; t <= l; ++t) fracs.push_back(static_cast<double>(t) / l);
            for (std::size_t k = 0; k < sa.pts.size(); ++k)
                fracs.push_back(sa.vertex_fraction(k));
            std::sort(fracs.begin(), fracs.end());
            for (auto it = fracs.rbegin(); it != fracs.rend(); ++it) {
                double f = std::clamp(*it, 0.0, 1.0);
                int piece = std::min(static_cast<int>(f * l), l - 1);
                double g = f * l - piece;
                cplx tgt = target_vertex(N - piece)
                         + g * (target_vertex(N - 1 - piece) - target_vertex(N - piece));
                add_bp(sa.at(f), tgt);
            }
        }
        // drop the duplicated closing point (x0 appears first and last)
        if (bps.size() > 1 && std::abs(bps.front().src - bps.back().src) < 1e-14)
            bps.pop_back();

        cplx centroid(0.0, 0.0);
        for (const cplx& p : cc.petal_vertices) centroid += p;
        centroid /= static_cast<double>(N);

        for (std::size_t k = 0; k < bps.size(); ++k) {
            const BP& a = bps[k];
            const BP& b = bps[(k + 1) % bps.size()];
            cell.fan.push_back(surgery_detail::TriMap{centroid, a.src, b.src,
                                                      cplx(0.0, 0.0), a.tgt, b.tgt});
        }
        for (const BP& bp : bps) cell.outline.push_back(bp.src);
        cc.cells.push_back(std::move(cell));
    }

    return cc;
}

// ---------------------------------------------------------------------------
// The global surgery map
// ---------------------------------------------------------------------------

enum class SurgeryRegion { InnerDisk, LowerAnnulus, MiddleAnnulus, UpperAnnulus, Exterior };

// The degree-(l+m) quasiregular model map, defined in five radial pieces:
//   |z| <= r0        : r0^l / z^l
//   r0 <= |z| <= r1  : degree-l annulus covering (orientation-reversing)
//   r1 <= |z| <= r2  : cell-complex extension onto the closed disk of
//                      radius r0 (radially normalized onto [eps, 1])
//   r2 <= |z| <= 1   : degree-m annulus covering
//   |z| >= 1         : z^m
struct SurgeryMap {
    Exponents exp;
    double r0 = 0.5, r1 = 0.0, r2 = 0.0;
    CellComplex complex;
};

inline SurgeryMap make_surgery_map(int l, int m, double r0, double star_scale = 0.0,
                                   double target_radius = 0.5) {
    Exponents e{l, m};
    validate_exponents(e);
    if (!(r0 > 0.0 && r0 < 1.0))
        throw std::invalid_argument("surgery map: r0 must lie in (0, 1)");
    SurgeryMap f;
    f.exp = e;
    f.r0 = r0;
    f.r1 = r0 + (1.0 - r0) / l;
    f.r2 = 1.0 - (1.0 - r0) / m;
    f.complex = build_complex(e, r0, star_scale, target_radius);
    return f;
}

namespace surgery_detail {

// Evaluate the period-0 normalized cell map at a point of the fundamental
// sector. Returns false if point location or inversion fails.
inline bool eval_period0(const CellComplex& cc, const cplx& zhat, cplx& out) {
    // candidate order: petal triangles first (closed-form containment), then
    // quads by containment, then everything by outline distance
    const SurgeryCell* petal = nullptr;
    for (const auto& c : cc.cells)
        if (c.kind == SurgeryCell::Petal) petal = &c;
    if (petal) {
        for (const auto& tri : petal->fan) {
            if (tri.contains(zhat, 1e-12)) {
                out = tri.apply(zhat);
                return true;
            }
        }
    }

    auto try_quad = [&](const SurgeryCell& c) -> bool {
        if (c.kind == SurgeryCell::Petal) return false;
        const double seeds[6][2] = {{0.5, 0.5},  {0.05, 0.05}, {0.95, 0.05},
                                    {0.05, 0.95}, {0.95, 0.95}, {0.5, 0.02}};
        for (const auto& s : seeds) {
            double u = s[0], v = s[1];
            if (!c.source.invert(zhat, u, v)) continue;
            if (u < -1e-6 || u > 1.0 + 1e-6 || v < -1e-6 || v > 1.0 + 1e-6) continue;
            out = c.target.at(std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0));
            return true;
        }
        return false;
    };
    auto try_petal_relaxed = [&](const SurgeryCell& c, double tol) -> bool {
        double btol = 1e30;
        cplx val;
        for (const auto& tri : c.fan) {
            double b0, b1, b2;
            if (!tri.barycentric(zhat, b0, b1, b2)) continue;
            double viol = std::max({-b0, -b1, -b2, 0.0});
            if (viol < btol) {
                btol = viol;
                val = tri.apply(zhat);
            }
        }
        if (btol < tol) {
            out = val;
            return true;
        }
        return false;
    };

    // containment-guided pass
    for (const auto& c : cc.cells) {
        if (c.kind == SurgeryCell::Petal) continue;
        if (point_in_polygon(c.outline, zhat) && try_quad(c)) return true;
    }
    // fallback: all cells in order of outline distance
    std::vector<std::pair<double, const SurgeryCell*>> order;
    order.reserve(cc.cells.size());
    for (const auto& c : cc.cells)
        order.push_back({dist_to_polygon(c.outline, zhat), &c});
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [d, c] : order) {
        if (c->kind == SurgeryCell::Petal) {
            if (try_petal_relaxed(*c, 1e-6)) return true;
        } else if (try_quad(*c)) {
            return true;
        }
    }
    // last resort: the nearest petal triangle regardless of violation
    for (const auto& [d, c] : order)
        if (c->kind == SurgeryCell::Petal && try_petal_relaxed(*c, 1e30)) return true;
    return false;
}

} // namespace surgery_detail

// Forced-region evaluation; used for two-sided seam checks.
inline cplx surgery_eval_region(const SurgeryMap& f, const cplx& z, SurgeryRegion region) {
    const int l = f.exp.l, m = f.exp.m;
    const int N = f.exp.degree();
    switch (region) {
        case SurgeryRegion::InnerDisk: {
            if (z == cplx(0.0, 0.0)) return complex_infinity();
            return std::pow(f.r0, l) / pow_int(z, l);
        }
        case SurgeryRegion::LowerAnnulus: {
            double r = std::abs(z), t = std::arg(z);
            double s = 1.0 - l * (r - f.r0);
            return s * unit_dir(-l * t);
        }
        case SurgeryRegion::UpperAnnulus: {
            double r = std::abs(z), t = std::arg(z);
            double s = 1.0 - m * (1.0 - r);
            return s * unit_dir(m * t);
        }
        case SurgeryRegion::Exterior: {
            if (is_infinite_point(z)) return complex_infinity();
            return pow_int(z, m);
        }
        case SurgeryRegion::MiddleAnnulus: {
            double r = std::abs(z);
            double th = std::arg(z);
            if (th < 0) th += 2.0 * kPi;
            const double sector = 2.0 * kPi / N;
            int k = std::min(static_cast<int>(th / sector), N - 1);
            double th0 = th - k * sector;
            double rho = f.complex.eps
                       + (1.0 - f.complex.eps) * (r - f.r1) / (f.r2 - f.r1);
            rho = std::clamp(rho, f.complex.eps, 1.0);
            cplx zhat = rho * unit_dir(th0);
            cplx w;
            if (!surgery_detail::eval_period0(f.complex, zhat, w))
                throw std::runtime_error("surgery eval: cell location failed");
            return f.r0 * w * unit_dir(2.0 * kPi * k * m / N);
        }
    }
    throw std::logic_error("unreachable");
}

inline SurgeryRegion surgery_region_of(const SurgeryMap& f, double r) {
    if (r <= f.r0) return SurgeryRegion::InnerDisk;
    if (r <= f.r1) return SurgeryRegion::LowerAnnulus;
    if (r < f.r2) return SurgeryRegion::MiddleAnnulus;
    if (r <= 1.0) return SurgeryRegion::UpperAnnulus;
    return SurgeryRegion::Exterior;
}

inline cplx surgery_eval(const SurgeryMap& f, const cplx& z) {
    if (is_infinite_point(z)) return complex_infinity();
    return surgery_eval_region(f, z, surgery_region_of(f, std::abs(z)));
}

// ---------------------------------------------------------------------------
// Preimages and verification
// ---------------------------------------------------------------------------

namespace surgery_detail {

// All solutions of F(z) = w. Closed-form shells plus cell-wise inversion in
// the middle annulus; coincident roots are deduplicated.
inline std::vector<cplx> surgery_preimages(const SurgeryMap& f, const cplx& w,
                                           int* failures = nullptr) {
    std::vector<cplx> out;
    const int l = f.exp.l, m = f.exp.m;
    const int N = f.exp.degree();
    const double aw = std::abs(w);
    const double arg_w = std::arg(w);

    auto push_unique = [&](const cplx& z) {
        for (const cplx& q : out)
            if (std::abs(q - z) < 1e-7) return;
        out.push_back(z);
    };

    if (aw > 1.0) {
        // exterior: z^m = w
        double r = std::pow(aw, 1.0 / m);
        for (int k = 0; k < m; ++k)
            push_unique(r * unit_dir((arg_w + 2.0 * kPi * k) / m));
        // inner disk: z^l = r0^l / w
        cplx rhs = std::pow(f.r0, l) / w;
        double rr = std::pow(std::abs(rhs), 1.0 / l);
        double at = std::arg(rhs);
        for (int k = 0; k < l; ++k)
            push_unique(rr * unit_dir((at + 2.0 * kPi * k) / l));
        return out;
    }
    if (aw >= f.r0) {
        // lower annulus covering: s = 1 - l (r - r0) = |w|, angle -l t = arg w
        double r = f.r0 + (1.0 - aw) / l;
        for (int k = 0; k < l; ++k)
            push_unique(r * unit_dir((-arg_w + 2.0 * kPi * k) / l));
        // upper annulus: s = 1 - m (1 - r), angle m t = arg w
        double r2 = 1.0 - (1.0 - aw) / m;
        for (int k = 0; k < m; ++k)
            push_unique(r2 * unit_dir((arg_w + 2.0 * kPi * k) / m));
        return out;
    }

    // middle annulus: invert the cell complex, period by period
    const CellComplex& cc = f.complex;
    const cplx what_global = w / f.r0;
    for (int k = 0; k < N; ++k) {
        cplx what = what_global * unit_dir(-2.0 * kPi * k * m / N);
        double th = std::arg(what);
        if (th < 0) th += 2.0 * kPi;
        bool in_B = point_in_polygon(cc.target_polygon, what);
        for (const auto& cell : cc.cells) {
            if (cell.kind == SurgeryCell::Petal) {
                if (!in_B) continue;
                bool found = false;
                for (const auto& tri : cell.fan) {
                    cplx zhat;
                    if (tri.invert(what, zhat, 1e-9)) {
                        double r = f.r1
                                 + (std::abs(zhat) - cc.eps) * (f.r2 - f.r1)
                                       / (1.0 - cc.eps);
                        cplx z = r * unit_dir(std::arg(zhat) + 2.0 * kPi * k / N);
                        push_unique(z);
                        found = true;
                        break;
                    }
                }
                if (!found && failures) ++*failures;
                continue;
            }
            if (in_B) continue;
            int sector = static_cast<int>(th / (2.0 * kPi / N)) % N;
            if (cell.target_sector != sector) continue;
            bool contained = point_in_polygon(cell.target_outline, what);
            if (!contained && dist_to_polygon(cell.target_outline, what) > 1e-6) continue;
            double u = 0.5, v = 0.5;
            if (!cell.target.invert(what, u, v)) {
                if (contained && failures) ++*failures;
                continue;
            }
            if (u < -1e-7 || u > 1.0 + 1e-7 || v < -1e-7 || v > 1.0 + 1e-7) continue;
            cplx zhat = cell.source.at(std::clamp(u, 0.0, 1.0), std::clamp(v, 0.0, 1.0));
            double r = f.r1 + (std::abs(zhat) - cc.eps) * (f.r2 - f.r1) / (1.0 - cc.eps);
            cplx z = r * unit_dir(std::arg(zhat) + 2.0 * kPi * k / N);
            if (std::abs(surgery_eval(f, z) - w) < 1e-6) push_unique(z);
            else if (failures) ++*failures;
        }
    }
    return out;
}

} // namespace surgery_detail

struct QuasiregularReport {
    int degree_count = 0;             // preimage count over generic targets
    double max_dilatation = 0.0;      // max sampled |mu|
    double symmetry_error = 0.0;      // rotation-equivariance residual
    double seam_error = 0.0;          // two-sided mismatch across the circles
    int pass_through_violations = 0;  // orbits visiting the middle annulus twice
    int inversion_failures = 0;
    int degree_mismatches = 0;        // targets whose fiber was not l+m
    int branch_fiber_size = 0;        // fiber size over a branch value
    int dilatation_samples = 0;
};

// Numerical verification of the model-map properties: degree counting over
// random targets, rotation equivariance, seam continuity, Beltrami
// dilatation sampling away from cell edges, and the pass-once property of
// orbits through the middle annulus.
inline QuasiregularReport surgery_verify(const SurgeryMap& f, int sample_budget = 10000,
                                         std::uint64_t seed = 987654321ull) {
    if (sample_budget < 1000)
        throw std::invalid_argument("surgery_verify: sample budget must be >= 1000");
    using namespace surgery_detail;
    QuasiregularReport rep;
    const int N = f.exp.degree();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    // --- degree over generic targets
    const int targets = 100;
    std::vector<int> counts;
    for (int i = 0; i < targets; ++i) {
        double aw, th;
        // targets spread over the three closed-form shells and the disk
        switch (i % 3) {
            case 0: aw = 0.05 + 0.9 * f.r0 * uni(rng); break;
            case 1: aw = f.r0 + (1.0 - f.r0) * (0.1 + 0.8 * uni(rng)); break;
            default: aw = 1.05 + uni(rng); break;
        }
        th = 2.0 * kPi * uni(rng);
        // keep away from sector boundaries and the polygon edge when in the disk
        if (aw < f.r0) {
            double sector = 2.0 * kPi / N;
            double frac = std::fmod(th, sector) / sector;
            if (frac < 0.03 || frac > 0.97) th += 0.05 * sector;
            double pr = aw / f.r0;
            double tr = f.complex.target_radius;
            if (std::abs(pr - tr) < 0.03) aw *= 0.9;
        }
        cplx w = aw * unit_dir(th);
        auto pre = surgery_preimages(f, w, &rep.inversion_failures);
        int cnt = 0;
        for (const cplx& z : pre)
            if (std::abs(surgery_eval(f, z) - w) < 1e-6) ++cnt;
        counts.push_back(cnt);
    }
    std::map<int, int> hist;
    for (int c : counts) ++hist[c];
    int best = 0, best_n = -1;
    for (auto [val, n] : hist)
        if (n > best) {
            best = n;
            best_n = val;
        }
    rep.degree_count = best_n;
    for (int c : counts)
        if (c != best_n) ++rep.degree_mismatches;

    // --- rotation equivariance
    const cplx zeta = unit_dir(2.0 * kPi / N);
    const cplx zeta_m = unit_dir(2.0 * kPi * f.exp.m / N);
    for (int i = 0; i < sample_budget / 4; ++i) {
        double r = 0.02 + 1.3 * uni(rng);
        cplx z = r * unit_dir(2.0 * kPi * uni(rng));
        cplx a = surgery_eval(f, zeta * z);
        cplx b = zeta_m * surgery_eval(f, z);
        if (is_infinite_point(a) || is_infinite_point(b)) continue;
        rep.symmetry_error = std::max(rep.symmetry_error, std::abs(a - b));
    }

    // --- seam continuity across the four interface circles
    struct Seam {
        double r;
        SurgeryRegion lo, hi;
    };
    const Seam seams[4] = {
        {f.r0, SurgeryRegion::InnerDisk, SurgeryRegion::LowerAnnulus},
        {f.r1, SurgeryRegion::LowerAnnulus, SurgeryRegion::MiddleAnnulus},
        {f.r2, SurgeryRegion::MiddleAnnulus, SurgeryRegion::UpperAnnulus},
        {1.0, SurgeryRegion::UpperAnnulus, SurgeryRegion::Exterior},
    };
    for (const Seam& s : seams) {
        for (int i = 0; i < 1000; ++i) {
            double t = 2.0 * kPi * (i + 0.37) / 1000.0;
            cplx z = s.r * unit_dir(t);
            cplx a = surgery_eval_region(f, z, s.lo);
            cplx b = surgery_eval_region(f, z, s.hi);
            rep.seam_error = std::max(rep.seam_error, std::abs(a - b));
        }
    }

    // --- dilatation sampling away from cell edges
    const double h = 1e-6;
    int accepted = 0;
    for (int i = 0; i < sample_budget && accepted < sample_budget / 4; ++i) {
        double r = f.r1 + (f.r2 - f.r1) * uni(rng);
        double th = 2.0 * kPi * uni(rng);
        cplx z = r * unit_dir(th);
        // normalized point, distance to the nearest cell outline
        double rho = f.complex.eps + (1.0 - f.complex.eps) * (r - f.r1) / (f.r2 - f.r1);
        double th0 = std::fmod(th, 2.0 * kPi / N);
        if (th0 < 0) th0 += 2.0 * kPi / N;
        cplx zhat = rho * unit_dir(th0);
        double dmin = 1e30;
        for (const auto& c : f.complex.cells)
            dmin = std::min(dmin, dist_to_polygon(c.outline, zhat));
        if (dmin < 0.01) continue;
        cplx fx = (surgery_eval(f, z + h) - surgery_eval(f, z - h)) / (2.0 * h);
        cplx fy = (surgery_eval(f, z + cplx(0.0, h)) - surgery_eval(f, z - cplx(0.0, h)))
                / (2.0 * h);
        cplx fz = 0.5 * (fx - cplx(0.0, 1.0) * fy);
        cplx fzb = 0.5 * (fx + cplx(0.0, 1.0) * fy);
        double denom = std::abs(fz);
        if (denom < 1e-12) continue;
        rep.max_dilatation = std::max(rep.max_dilatation, std::abs(fzb) / denom);
        ++accepted;
    }
    rep.dilatation_samples = accepted;

    // --- pass-once property of the middle annulus
    int orbits = std::max(1000, sample_budget);
    for (int i = 0; i < orbits; ++i) {
        cplx z = (0.01 + 1.19 * uni(rng)) * unit_dir(2.0 * kPi * uni(rng));
        int entries = 0;
        bool inside_prev = false;
        for (int step = 0; step < 100; ++step) {
            double r = std::abs(z);
            bool inside = r > f.r1 && r < f.r2;
            if (inside && !inside_prev) ++entries;
            inside_prev = inside;
            if (is_infinite_point(z) || r > 1e12) break;
            z = surgery_eval(f, z);
        }
        if (entries > 1) ++rep.pass_through_violations;
    }

    // --- fiber over a branch value (outer star vertex)
    {
        double rstar = f.r1
                     + (f.complex.star_scale - f.complex.eps) * (f.r2 - f.r1)
                           / (1.0 - f.complex.eps);
        cplx zb = rstar * unit_dir(0.0);
        cplx wb = surgery_eval(f, zb);
        int fail = 0;
        auto pre = surgery_preimages(f, wb, &fail);
        int cnt = 0;
        for (const cplx& z : pre)
            if (std::abs(surgery_eval(f, z) - wb) < 1e-5) ++cnt;
        rep.branch_fiber_size = cnt;
    }

    return rep;
}

// Escape-depth raster of the model map: depth is the first iterate with
// modulus >= 1 (the exterior is invariant and repelling outward).
inline FieldGrid surgery_attractor_render(const SurgeryMap& f, double re_min, double re_max,
                                          double im_min, double im_max, int resolution,
                                          int max_iter = 64, int jobs = 1) {
    if (resolution < 16)
        throw std::invalid_argument("attractor_render: resolution must be >= 16");
    FieldGrid grid = make_grid(resolution, resolution, re_min, re_max, im_min, im_max,
                               PayloadKind::EscapeDepth);
    parallel_rows(resolution, jobs, [&](int j) {
        for (int i = 0; i < resolution; ++i) {
            cplx z = grid.pixel_center(i, j);
            std::int32_t depth = -1;
            for (int k = 0; k <= max_iter; ++k) {
                if (std::abs(z) >= 1.0) {
                    depth = k;
                    break;
                }
                if (k == max_iter) break;
                z = surgery_eval(f, z);
                if (is_infinite_point(z)) {
                    depth = k + 1;
                    break;
                }
            }
            grid.at(i, j) = depth;
        }
    });
    return grid;
}

} // namespace mcm
