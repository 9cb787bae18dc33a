#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "mcm/grid_io.hpp"
#include "mcm/png.hpp"
#include "mcm/render.hpp"

using namespace mcm;

namespace {

std::string temp_path(const std::string& name) {
    return std::string("/tmp/mcm_test_") + name;
}

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("pixel-center convention on 1x1 and 2x2 grids") {
    FieldGrid one = make_grid(1, 1, 0.0, 1.0, 0.0, 2.0, PayloadKind::EscapeDepth);
    CHECK(one.pixel_center(0, 0) == cplx(0.5, 1.0));

    FieldGrid four = make_grid(2, 2, 0.0, 1.0, 0.0, 1.0, PayloadKind::EscapeDepth);
    CHECK(four.pixel_center(0, 0) == cplx(0.25, 0.25));
    CHECK(four.pixel_center(1, 1) == cplx(0.75, 0.75));
}

TEST_CASE("render_julia: immediate escape and trap-door depths") {
    MapParams map = make_map({1.0, 0.0}, 3, 3);
    FieldGrid g = render_julia(map, -3.0, 3.0, -3.0, 3.0, 64, 64, 50);
    // corner pixel has modulus > R: depth 0
    CHECK(std::abs(g.pixel_center(0, 0)) > map.escape_radius);
    CHECK(g.at(0, 0) == 0);

    MapParams mc = make_map({1e-5, 0.0}, 3, 3);
    FieldGrid h = render_julia(mc, -1.5, 1.5, -1.5, 1.5, 256, 256, 50);
    // pixels near the origin are in the trap door: depth 1
    CHECK(h.at(128, 128) == 1);
    CHECK(h.at(127, 128) == 1);
}

TEST_CASE("render_julia: deterministic across worker counts") {
    MapParams map = make_map({0.04, 0.02}, 3, 3);
    FieldGrid a = render_julia(map, -1.5, 1.5, -1.5, 1.5, 96, 96, 300, 1);
    FieldGrid b = render_julia(map, -1.5, 1.5, -1.5, 1.5, 96, 96, 300, 2);
    FieldGrid c = render_julia(map, -1.5, 1.5, -1.5, 1.5, 96, 96, 300, 8);
    CHECK(grid_hash(a) == grid_hash(b));
    CHECK(grid_hash(a) == grid_hash(c));
}

TEST_CASE("render_param: verdict codes with the classify oracle") {
    ClassifierConfig cfg;
    cfg.max_iter = 1500;
    FieldGrid g = render_param({3, 3}, -0.1, 0.1, -0.1, 0.1, 17, 17, cfg);
    CHECK(g.payload == PayloadKind::VerdictCode);
    // a pixel close to 0 codes CantorCircles
    cplx lam = g.pixel_center(8, 9);  // just above the center row
    Verdict v = classify(make_map(lam, 3, 3), cfg);
    CHECK(g.at(8, 9) == static_cast<std::int32_t>(v.cls));
}

TEST_CASE("render_param: real-axis pixels in the bounded window code NonEscaping") {
    ClassifierConfig cfg;
    FieldGrid g = render_param({3, 3}, 0.02, 0.035, -0.005, 0.005, 31, 3, cfg);
    int row = 1;  // centers on the real axis
    CHECK(g.pixel_center(15, row).imag() == 0.0);
    int hits = 0;
    for (int i = 0; i < g.width; ++i) {
        double re = g.pixel_center(i, row).real();
        if (std::abs(re - 0.0275) > 0.002) continue;
        CHECK(g.at(i, row) == static_cast<std::int32_t>(TopologyClass::NonEscaping));
        ++hits;
    }
    CHECK(hits > 3);
}

TEST_CASE("grid io: round trip is bit exact") {
    MapParams map = make_map({0.1, -0.2}, 2, 3);
    FieldGrid g = render_julia(map, -1.2, 1.1, -0.9, 1.3, 33, 21, 80);
    std::string path = temp_path("roundtrip.mcmg");
    write_grid(g, path);
    FieldGrid r = read_grid(path);
    CHECK(r.width == g.width);
    CHECK(r.height == g.height);
    CHECK(r.re_min == g.re_min);
    CHECK(r.re_max == g.re_max);
    CHECK(r.im_min == g.im_min);
    CHECK(r.im_max == g.im_max);
    CHECK(r.payload == g.payload);
    CHECK(r.data == g.data);
    CHECK(grid_hash(r) == grid_hash(g));
    std::remove(path.c_str());
}

TEST_CASE("grid io: verdict payload round trips too") {
    ClassifierConfig cfg;
    cfg.max_iter = 600;
    FieldGrid g = render_param({3, 3}, -0.05, 0.05, -0.05, 0.05, 9, 7, cfg);
    std::string path = temp_path("verdict_roundtrip.mcmg");
    write_grid(g, path);
    FieldGrid r = read_grid(path);
    CHECK(r.payload == PayloadKind::VerdictCode);
    CHECK(r.data == g.data);
    std::remove(path.c_str());
}

TEST_CASE("grid io: structured failures") {
    FieldGrid g = make_grid(4, 4, 0, 1, 0, 1, PayloadKind::EscapeDepth);
    std::string path = temp_path("corrupt.mcmg");
    write_grid(g, path);

    auto bytes = slurp(path);
    SUBCASE("bad magic") {
        bytes[0] = 'X';
        std::ofstream(path, std::ios::binary | std::ios::trunc)
            .write(reinterpret_cast<char*>(bytes.data()), bytes.size());
        CHECK_THROWS_WITH_AS(read_grid(path), doctest::Contains("bad magic"), GridIoError);
    }
    SUBCASE("unsupported version") {
        bytes[4] = 2;
        std::ofstream(path, std::ios::binary | std::ios::trunc)
            .write(reinterpret_cast<char*>(bytes.data()), bytes.size());
        CHECK_THROWS_WITH_AS(read_grid(path), doctest::Contains("unsupported version"),
                             GridIoError);
    }
    SUBCASE("truncation") {
        std::ofstream(path, std::ios::binary | std::ios::trunc)
            .write(reinterpret_cast<char*>(bytes.data()), bytes.size() - 9);
        CHECK_THROWS_WITH_AS(read_grid(path), doctest::Contains("truncated"), GridIoError);
    }
    std::remove(path.c_str());
}

TEST_CASE("png: verdict palette, size header, unmapped value") {
    FieldGrid g = make_grid(3, 2, 0, 1, 0, 1, PayloadKind::VerdictCode);
    g.data = {0, 1, 2, 3, 4, 5};
    std::string path = temp_path("verdict.png");
    encode_png(g, ImageSpec::verdict_default(), path);
    auto bytes = slurp(path);
    REQUIRE(bytes.size() > 33);
    CHECK(bytes[1] == 'P');
    // width/height are big-endian at offsets 16 and 20
    auto be32 = [&](std::size_t off) {
        return (bytes[off] << 24) | (bytes[off + 1] << 16) | (bytes[off + 2] << 8)
             | bytes[off + 3];
    };
    CHECK(be32(16) == 3);
    CHECK(be32(20) == 2);

    g.data[5] = 9;
    CHECK_THROWS_WITH_AS(encode_png(g, ImageSpec::verdict_default(), path),
                         doctest::Contains("9"), PngError);
    std::remove(path.c_str());
}

TEST_CASE("png: escape shading gamma changes colors, not geometry") {
    MapParams map = make_map({1e-5, 0.0}, 3, 3);
    FieldGrid g = render_julia(map, -1.5, 1.5, -1.5, 1.5, 32, 32, 60);
    std::string p1 = temp_path("g1.png"), p2 = temp_path("g2.png");
    encode_png(g, ImageSpec::escape_default(1.0), p1);
    encode_png(g, ImageSpec::escape_default(2.0), p2);
    auto b1 = slurp(p1), b2 = slurp(p2);
    // same header (dimensions), different payload bytes
    CHECK(std::equal(b1.begin(), b1.begin() + 33, b2.begin()));
    CHECK(b1 != b2);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("png: single pixel image") {
    FieldGrid g = make_grid(1, 1, 0, 1, 0, 1, PayloadKind::VerdictCode);
    g.data = {4};
    std::string path = temp_path("one.png");
    encode_png(g, ImageSpec::verdict_default(), path);
    auto bytes = slurp(path);
    auto be32 = [&](std::size_t off) {
        return (bytes[off] << 24) | (bytes[off + 1] << 16) | (bytes[off + 2] << 8)
             | bytes[off + 3];
    };
    CHECK(be32(16) == 1);
    CHECK(be32(20) == 1);
    std::remove(path.c_str());
}

TEST_CASE("grid memory budget is enforced before allocation") {
    CHECK_THROWS_AS(make_grid(1 << 14, 1 << 14, 0, 1, 0, 1, PayloadKind::EscapeDepth),
                    std::length_error);
}
