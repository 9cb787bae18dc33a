#include <doctest.h>

#include <random>

#include "mcm/cantor.hpp"
#include "mcm/surgery.hpp"

using namespace mcm;

TEST_CASE("build_complex: cell counts match the construction") {
    CellComplex c23 = build_complex({2, 3}, 0.5);
    CHECK(c23.outer_quad_count() == 15);
    CHECK(c23.inner_quad_count() == 10);
    CHECK(c23.petal_count() == 5);
    CHECK(c23.star_vertices.size() == 10);
    CHECK(c23.cells.size() == 3 + 2 + 1);  // per fundamental period

    CellComplex c33 = build_complex({3, 3}, 0.5);
    CHECK(c33.outer_quad_count() == 18);
    CHECK(c33.inner_quad_count() == 18);
    CHECK(c33.petal_count() == 6);

    // the pentagram ratio: inner radius / outer radius = cos(72)/cos(36)
    double expect = std::cos(2.0 * kPi / 5.0) / std::cos(kPi / 5.0);
    CHECK(c23.star_inner / c23.star_scale == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("build_complex: oversized star is rejected with guidance") {
    CHECK_THROWS_WITH_AS(build_complex({2, 3}, 0.5, 0.95),
                         doctest::Contains("shrink star scale"), std::invalid_argument);
}

TEST_CASE("surgery map: exact values in the closed-form regions") {
    SurgeryMap f = make_surgery_map(2, 3, 0.5);
    CHECK(is_infinite_point(surgery_eval(f, {0.0, 0.0})));
    CHECK(is_infinite_point(surgery_eval(f, complex_infinity())));

    // |z| = 1: F(z) = z^m from both sides
    for (double t : {0.1, 2.5, 4.4}) {
        cplx z = unit_dir(t);
        cplx up = surgery_eval_region(f, z, SurgeryRegion::UpperAnnulus);
        cplx ext = surgery_eval_region(f, z, SurgeryRegion::Exterior);
        CHECK(std::abs(up - ext) < 1e-12);
        CHECK(std::abs(ext - unit_dir(3.0 * t)) < 1e-12);
    }

    // |z| = r1: F = r0 e^{-i l t} from the annulus side
    for (double t : {0.3, 1.7}) {
        cplx z = f.r1 * unit_dir(t);
        cplx low = surgery_eval_region(f, z, SurgeryRegion::LowerAnnulus);
        CHECK(std::abs(low - f.r0 * unit_dir(-2.0 * t)) < 1e-12);
    }
}

TEST_CASE("surgery map: seam continuity on all four circles") {
    for (auto [l, m] : std::vector<std::pair<int, int>>{{2, 3}, {3, 3}}) {
        SurgeryMap f = make_surgery_map(l, m, 0.5);
        struct Pair {
            double r;
            SurgeryRegion lo, hi;
        };
        const Pair seams[4] = {
            {f.r0, SurgeryRegion::InnerDisk, SurgeryRegion::LowerAnnulus},
            {f.r1, SurgeryRegion::LowerAnnulus, SurgeryRegion::MiddleAnnulus},
            {f.r2, SurgeryRegion::MiddleAnnulus, SurgeryRegion::UpperAnnulus},
            {1.0, SurgeryRegion::UpperAnnulus, SurgeryRegion::Exterior},
        };
        for (const auto& s : seams) {
            double worst = 0.0;
            for (int i = 0; i < 400; ++i) {
                double t = 2.0 * kPi * (i + 0.13) / 400.0;
                cplx z = s.r * unit_dir(t);
                cplx a = surgery_eval_region(f, z, s.lo);
                cplx b = surgery_eval_region(f, z, s.hi);
                worst = std::max(worst, std::abs(a - b));
            }
            CHECK(worst < 1e-9);
        }
    }
}

TEST_CASE("surgery map: rotation equivariance") {
    SurgeryMap f = make_surgery_map(2, 3, 0.5);
    const int N = 5;
    cplx zeta = unit_dir(2.0 * kPi / N);
    cplx zeta_m = unit_dir(2.0 * kPi * 3 / N);
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        double r = 0.05 + 1.2 * u(rng);
        cplx z = r * unit_dir(2.0 * kPi * u(rng));
        cplx a = surgery_eval(f, zeta * z);
        cplx b = zeta_m * surgery_eval(f, z);
        worst = std::max(worst, std::abs(a - b));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("surgery map: properness of every cell map") {
    SurgeryMap f = make_surgery_map(2, 3, 0.5);
    for (const auto& cell : f.complex.cells) {
        if (cell.kind == SurgeryCell::Petal) {
            // the fan triangles tile the petal; round trip through the
            // affine maps
            for (const auto& tri : cell.fan) {
                cplx mid = (tri.s0 + tri.s1 + tri.s2) / 3.0;
                cplx w = tri.apply(mid);
                cplx back;
                REQUIRE(tri.invert(w, back));
                CHECK(std::abs(back - mid) < 1e-9);
            }
            continue;
        }
        for (int iu = 1; iu < 10; ++iu) {
            for (int iv = 1; iv < 10; ++iv) {
                double u = iu / 10.0, v = iv / 10.0;
                cplx z = cell.source.at(u, v);
                double uu = 0.5, vv = 0.5;
                REQUIRE(cell.source.invert(z, uu, vv));
                CHECK(std::abs(cell.source.at(uu, vv) - z) < 1e-9);
                CHECK(uu == doctest::Approx(u).epsilon(1e-6));
                CHECK(vv == doctest::Approx(v).epsilon(1e-6));

                cplx w = cell.target.at(u, v);
                uu = vv = 0.5;
                REQUIRE(cell.target.invert(w, uu, vv));
                CHECK(std::abs(cell.target.at(uu, vv) - w) < 1e-9);
            }
        }
    }
}

TEST_CASE("surgery verify: degree, symmetry, seams, dilatation, pass-once") {
    SurgeryMap f = make_surgery_map(2, 3, 0.5);
    QuasiregularReport rep = surgery_verify(f, 2000);
    CHECK(rep.degree_count == 5);
    CHECK(rep.degree_mismatches == 0);
    CHECK(rep.symmetry_error < 1e-9);
    CHECK(rep.seam_error < 1e-9);
    CHECK(rep.max_dilatation < 1.0);
    CHECK(rep.pass_through_violations == 0);
    CHECK(rep.dilatation_samples > 100);
    CHECK(rep.branch_fiber_size > 0);
    CHECK(rep.branch_fiber_size < 5);
}

TEST_CASE("surgery verify: degree 6 for the symmetric exponents") {
    SurgeryMap f = make_surgery_map(3, 3, 0.5);
    QuasiregularReport rep = surgery_verify(f, 1000);
    CHECK(rep.degree_count == 6);
    CHECK(rep.degree_mismatches == 0);
    CHECK(rep.pass_through_violations == 0);
}

TEST_CASE("attractor_render: region chain depths") {
    SurgeryMap f = make_surgery_map(2, 3, 0.5);
    FieldGrid g = surgery_attractor_render(f, -1.2, 1.2, -1.2, 1.2, 128, 32);
    int middle_checked = 0;
    for (int j = 0; j < g.height; j += 3) {
        for (int i = 0; i < g.width; i += 3) {
            double r = std::abs(g.pixel_center(i, j));
            if (r >= 1.0) CHECK(g.at(i, j) == 0);
            if (r > f.r1 + 0.01 && r < f.r2 - 0.01) {
                CHECK(g.at(i, j) == 2);  // middle -> disk -> exterior
                ++middle_checked;
            }
        }
    }
    CHECK(middle_checked > 20);
}

TEST_CASE("attractor_render: radial slices nest in the Cantor levels") {
    SurgeryMap f = make_surgery_map(2, 3, 0.5);
    const int res = 512;
    FieldGrid g = surgery_attractor_render(f, -1.05, 1.05, -1.05, 1.05, res, 40);
    CantorIFS ifs = make_cantor_ifs(2, 3);
    double px = g.pixel_width();
    int row = res / 2;  // centers sit half a pixel above the axis
    // A point escaping through the middle annulus at radial step j exits two
    // iterations later (middle -> disk -> exterior), so pixels with depth at
    // least k + 2 have survived k radial steps and sit in level set I_k.
    for (int k : {1, 2, 3, 4}) {
        IntervalUnion levels = radial_level_set(ifs, Rational(1, 2), k);
        for (int i = 0; i < res; ++i) {
            std::int32_t depth = g.at(i, row);
            if (depth >= 0 && depth < k + 2) continue;
            double r = std::abs(g.pixel_center(i, row));
            if (r < f.r0 || r > 1.0) continue;
            double tol = 1.5 * px;
            bool near = false;
            for (const auto& iv : levels.intervals) {
                if (r >= iv.a.to_double() - tol && r <= iv.b.to_double() + tol) {
                    near = true;
                    break;
                }
            }
            CHECK(near);
        }
    }
}

TEST_CASE("surgery map: seams stay exact for off-default inner radii") {
    for (double r0 : {0.3, 0.7}) {
        SurgeryMap f = make_surgery_map(2, 3, r0);
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            double t = 2.0 * kPi * (i + 0.41) / 200.0;
            worst = std::max(worst,
                             std::abs(surgery_eval_region(f, f.r1 * unit_dir(t),
                                                          SurgeryRegion::LowerAnnulus)
                                      - surgery_eval_region(f, f.r1 * unit_dir(t),
                                                            SurgeryRegion::MiddleAnnulus)));
            worst = std::max(worst,
                             std::abs(surgery_eval_region(f, f.r2 * unit_dir(t),
                                                          SurgeryRegion::MiddleAnnulus)
                                      - surgery_eval_region(f, f.r2 * unit_dir(t),
                                                            SurgeryRegion::UpperAnnulus)));
        }
        CHECK(worst < 1e-9);
        QuasiregularReport rep = surgery_verify(f, 1000);
        CHECK(rep.degree_count == 5);
        CHECK(rep.pass_through_violations == 0);
    }
}

TEST_CASE("attractor_render: rejects tiny resolutions") {
    SurgeryMap f = make_surgery_map(2, 3, 0.5);
    CHECK_THROWS_AS(surgery_attractor_render(f, -1, 1, -1, 1, 8), std::invalid_argument);
}
