#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "mcm/field_grid.hpp"
#include "mcm/metrics.hpp"

namespace mcm {

namespace detail {

// One marching-squares contour in lattice coordinates (pixel index space,
// vertices at half-integer edge midpoints).
struct LatticeLoop {
    std::vector<std::pair<double, double>> pts;
};

// Traces the 0.5-level contours of a binary predicate over pixel lattice
// points, padded by one ring of zeros so every contour closes. Inside is
// kept on the left; diagonal saddles are resolved as separated corners.
inline std::vector<LatticeLoop> marching_squares(int x0, int y0, int x1, int y1,
                                                 const std::function<bool(int, int)>& inside) {
    struct Key {
        std::int64_t v;
        bool operator<(const Key& o) const { return v < o.v; }
    };
    auto key_of = [](double x, double y) {
        auto xi = static_cast<std::int64_t>(std::llround(2.0 * x)) + (1ll << 20);
        auto yi = static_cast<std::int64_t>(std::llround(2.0 * y)) + (1ll << 20);
        return Key{(xi << 24) ^ yi};
    };

    std::map<Key, std::pair<std::pair<double, double>, std::pair<double, double>>> segs;
    auto emit = [&](double ax, double ay, double bx, double by) {
        segs[key_of(ax, ay)] = {{ax, ay}, {bx, by}};
    };

    for (int y = y0 - 1; y <= y1; ++y) {
        for (int x = x0 - 1; x <= x1; ++x) {
            int c = 0;
            if (inside(x, y)) c |= 1;          // bottom-left
            if (inside(x + 1, y)) c |= 2;      // bottom-right
            if (inside(x, y + 1)) c |= 4;      // top-left
            if (inside(x + 1, y + 1)) c |= 8;  // top-right
            if (c == 0 || c == 15) continue;
            double B[2] = {x + 0.5, static_cast<double>(y)};
            double T[2] = {x + 0.5, static_cast<double>(y + 1)};
            double L[2] = {static_cast<double>(x), y + 0.5};
            double R[2] = {static_cast<double>(x + 1), y + 0.5};
            switch (c) {
                case 1: emit(B[0], B[1], L[0], L[1]); break;
                case 2: emit(R[0], R[1], B[0], B[1]); break;
                case 4: emit(L[0], L[1], T[0], T[1]); break;
                case 8: emit(T[0], T[1], R[0], R[1]); break;
                case 3: emit(R[0], R[1], L[0], L[1]); break;
                case 12: emit(L[0], L[1], R[0], R[1]); break;
                case 5: emit(B[0], B[1], T[0], T[1]); break;
                case 10: emit(T[0], T[1], B[0], B[1]); break;
                case 6:  // saddle: separate corners
                    emit(R[0], R[1], B[0], B[1]);
                    emit(L[0], L[1], T[0], T[1]);
                    break;
                case 9:
                    emit(B[0], B[1], L[0], L[1]);
                    emit(T[0], T[1], R[0], R[1]);
                    break;
                case 7: emit(R[0], R[1], T[0], T[1]); break;
                case 11: emit(T[0], T[1], L[0], L[1]); break;
                case 13: emit(B[0], B[1], R[0], R[1]); break;
                case 14: emit(L[0], L[1], B[0], B[1]); break;
                default: break;
            }
        }
    }

    std::vector<LatticeLoop> loops;
    while (!segs.empty()) {
        auto it = segs.begin();
        LatticeLoop loop;
        auto start = it->second.first;
        auto cur = it->second;
        segs.erase(it);
        loop.pts.push_back(cur.first);
        while (true) {
            auto next = cur.second;
            if (std::llround(2 * next.first) == std::llround(2 * start.first)
                && std::llround(2 * next.second) == std::llround(2 * start.second))
                break;
            loop.pts.push_back(next);
            auto jt = segs.find(key_of(next.first, next.second));
            if (jt == segs.end()) break;  // should not happen on well-formed masks
            cur = jt->second;
            segs.erase(jt);
        }
        loops.push_back(std::move(loop));
    }
    return loops;
}

} // namespace detail

struct ExtractionResult {
    std::vector<Curve> curves;
    int dropped_open = 0;   // contours clipped by the grid edge
    int dropped_small = 0;  // components below min_pixels or loops below 8 vertices
};

// Peripheral-circle extraction from an escape-depth grid: the pixels with
// depth in [0, max_depth] are split into 4-connected components; each
// component of at least min_pixels pixels has its region boundary traced by
// marching squares. Curves are tagged with the component's minimum depth.
inline ExtractionResult extract_peripheral(const FieldGrid& grid, int max_depth,
                                           int min_pixels) {
    if (grid.payload != PayloadKind::EscapeDepth)
        throw std::invalid_argument("extract_peripheral: grid must carry escape depths");
    if (max_depth < 0) throw std::invalid_argument("extract_peripheral: max_depth must be >= 0");

    const int W = grid.width, H = grid.height;
    auto in_mask = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= W || y >= H) return false;
        std::int32_t d = grid.at(x, y);
        return d >= 0 && d <= max_depth;
    };

    // 4-connected component labels
    std::vector<std::int32_t> label(static_cast<std::size_t>(W) * H, -1);
    auto lab = [&](int x, int y) -> std::int32_t& {
        return label[static_cast<std::size_t>(y) * W + x];
    };
    struct Comp {
        int size = 0;
        std::int32_t min_depth = INT32_MAX;
        int x0 = INT32_MAX, y0 = INT32_MAX, x1 = -1, y1 = -1;
    };
    std::vector<Comp> comps;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (!in_mask(x, y) || lab(x, y) >= 0) continue;
            std::int32_t id = static_cast<std::int32_t>(comps.size());
            comps.emplace_back();
            stack.push_back({x, y});
            lab(x, y) = id;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                Comp& c = comps[id];
                ++c.size;
                c.min_depth = std::min(c.min_depth, grid.at(cx, cy));
                c.x0 = std::min(c.x0, cx);
                c.y0 = std::min(c.y0, cy);
                c.x1 = std::max(c.x1, cx);
                c.y1 = std::max(c.y1, cy);
                const int dx[4] = {1, -1, 0, 0};
                const int dy[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    int nx = cx + dx[k], ny = cy + dy[k];
                    if (nx < 0 || ny < 0 || nx >= W || ny >= H) continue;
                    if (!in_mask(nx, ny) || lab(nx, ny) >= 0) continue;
                    lab(nx, ny) = id;
                    stack.push_back({nx, ny});
                }
            }
        }
    }

    ExtractionResult out;
    for (std::int32_t id = 0; id < static_cast<std::int32_t>(comps.size()); ++id) {
        const Comp& c = comps[id];
        if (c.size < min_pixels) {
            ++out.dropped_small;
            continue;
        }
        auto loops = detail::marching_squares(
            c.x0, c.y0, c.x1 + 1, c.y1 + 1,
            [&](int x, int y) { return x >= 0 && y >= 0 && x < W && y < H && lab(x, y) == id; });
        for (const auto& loop : loops) {
            bool clipped = false;
            for (const auto& p : loop.pts) {
                if (p.first <= -0.5 + 1e-9 || p.first >= W - 0.5 - 1e-9
                    || p.second <= -0.5 + 1e-9 || p.second >= H - 0.5 - 1e-9) {
                    clipped = true;
                    break;
                }
            }
            if (clipped) {
                ++out.dropped_open;
                continue;
            }
            if (loop.pts.size() < 8) {
                ++out.dropped_small;
                continue;
            }
            std::vector<SpherePoint> verts;
            verts.reserve(loop.pts.size());
            for (const auto& p : loop.pts) {
                double re = grid.re_min + (p.first + 0.5) * grid.pixel_width();
                double im = grid.im_min + (p.second + 0.5) * grid.pixel_height();
                verts.push_back(SpherePoint::finite(cplx(re, im)));
            }
            out.curves.push_back(make_curve(std::move(verts), c.min_depth));
        }
    }
    return out;
}

} // namespace mcm
