#pragma once

#include "mcm/dynamics.hpp"
#include "mcm/field_grid.hpp"
#include "mcm/parallel.hpp"
#include "mcm/trichotomy.hpp"

namespace mcm {

// Escape-depth raster of the dynamical plane: per pixel, the number of
// iterations until the modulus first exceeds the escape radius, or -1 if
// the orbit stays bounded within max_iter.
inline FieldGrid render_julia(const MapParams& map, double re_min, double re_max,
                              double im_min, double im_max, int width, int height,
                              int max_iter, int jobs = 1) {
    if (max_iter < 1) throw std::invalid_argument("render_julia: max_iter must be >= 1");
    FieldGrid grid = make_grid(width, height, re_min, re_max, im_min, im_max,
                               PayloadKind::EscapeDepth);
    const double R2 = map.escape_radius * map.escape_radius;
    const int m = map.exp.m, l = map.exp.l;
    const cplx lambda = map.lambda;
    parallel_rows(height, jobs, [&](int j) {
        for (int i = 0; i < width; ++i) {
            cplx z = grid.pixel_center(i, j);
            std::int32_t depth = -1;
            for (int k = 0; k <= max_iter; ++k) {
                double n2 = z.real() * z.real() + z.imag() * z.imag();
                if (!(n2 <= R2)) {  // escape; NaN/overflow lands here too
                    depth = k;
                    break;
                }
                if (k == max_iter) break;
                if (n2 == 0.0) {
                    // exact pole: next iterate is at infinity
                    depth = k + 1;
                    break;
                }
                z = pow_int(z, m) + lambda / pow_int(z, l);
            }
            grid.at(i, j) = depth;
        }
    });
    return grid;
}

// Verdict-code raster of the parameter plane.
inline FieldGrid render_param(const Exponents& exp, double re_min, double re_max,
                              double im_min, double im_max, int width, int height,
                              const ClassifierConfig& cfg = {}, int jobs = 1) {
    return classify_grid(exp, re_min, re_max, im_min, im_max, width, height, cfg, jobs);
}

} // namespace mcm
