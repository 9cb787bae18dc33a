#include <doctest.h>

#include <random>

#include "mcm/render.hpp"
#include "mcm/trichotomy.hpp"

using namespace mcm;

TEST_CASE("classify: the three fast verdicts for l = m = 3") {
    ClassifierConfig cfg;

    Verdict cantor = classify(make_map({100.0, 0.0}, 3, 3), cfg);
    CHECK(cantor.cls == TopologyClass::CantorSet);
    REQUIRE(cantor.escape_index.has_value());
    CHECK(*cantor.escape_index == 0);
    CHECK(!cantor.entry_index.has_value());

    Verdict circles = classify(make_map({1e-5, 0.0}, 3, 3), cfg);
    CHECK(circles.cls == TopologyClass::CantorCircles);
    REQUIRE(circles.entry_index.has_value());
    CHECK(*circles.entry_index == 0);

    Verdict bounded = classify(make_map({0.02749275, 0.0}, 3, 3), cfg);
    CHECK(bounded.cls == TopologyClass::NonEscaping);
    CHECK(!bounded.escape_index.has_value());
}

TEST_CASE("classify: direct-iteration oracle for the McMullen-domain example") {
    // v = 2 sqrt(lambda) must sit well inside the critical circle and jump
    // beyond the escape radius in one step.
    MapParams map = make_map({1e-5, 0.0}, 3, 3);
    cplx v = critical_values(map)[0];
    CHECK(std::abs(v) == doctest::Approx(2.0 * std::sqrt(1e-5)).epsilon(1e-12));
    CHECK(std::abs(v) < map.crit_radius * 0.95);
    CHECK(std::abs(evaluate(map, v)) > map.escape_radius);
}

TEST_CASE("classify: verdict independent of the seeding critical point") {
    std::mt19937_64 rng(555);
    std::uniform_real_distribution<double> u(-0.6, 0.6);
    ClassifierConfig cfg;
    cfg.max_iter = 2000;
    int tested = 0;
    for (int trial = 0; trial < 80 && tested < 50; ++trial) {
        cplx lambda(u(rng), u(rng));
        if (std::abs(lambda) < 1e-5) continue;
        int l = 2 + trial % 2, m = 3 + trial % 2;
        MapParams map = make_map(lambda, l, m);
        Verdict ref = classify(map, cfg, 0);
        for (int j = 1; j < map.degree(); ++j)
            CHECK(classify(map, cfg, j).cls == ref.cls);
        ++tested;
    }
    CHECK(tested == 50);
}

TEST_CASE("classify: conjugation invariance") {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    ClassifierConfig cfg;
    cfg.max_iter = 2000;
    for (int trial = 0; trial < 40; ++trial) {
        cplx lambda(u(rng), u(rng));
        if (std::abs(lambda) < 1e-5) continue;
        Verdict a = classify(make_map(lambda, 3, 3), cfg);
        Verdict b = classify(make_map(std::conj(lambda), 3, 3), cfg);
        CHECK(a.cls == b.cls);
    }
}

TEST_CASE("classify: verdict structural invariants on a parameter sample") {
    std::mt19937_64 rng(31415);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ClassifierConfig cfg;
    cfg.max_iter = 3000;
    for (int trial = 0; trial < 200; ++trial) {
        cplx lambda(u(rng), u(rng));
        if (std::abs(lambda) < 1e-5) continue;
        Verdict v = classify(make_map(lambda, 3, 3), cfg);
        switch (v.cls) {
            case TopologyClass::CantorSet:
                CHECK(!v.entry_index.has_value());
                CHECK(v.escape_index.has_value());
                break;
            case TopologyClass::CantorCircles:
                REQUIRE(v.entry_index.has_value());
                CHECK(*v.entry_index == 0);
                break;
            case TopologyClass::SierpinskiEscaping:
                REQUIRE(v.entry_index.has_value());
                CHECK(*v.entry_index >= 1);
                break;
            case TopologyClass::NonEscaping:
                CHECK(!v.escape_index.has_value());
                break;
            default:
                break;
        }
    }
}

TEST_CASE("classify: real-slice verdict sequence is monotone") {
    ClassifierConfig cfg;
    cfg.max_iter = 4000;
    bool seen_cantor = false;
    TopologyClass prev = TopologyClass::Undefined;
    int transitions = 0;
    for (int i = 0; i < 1000; ++i) {
        double lam = 1e-4 * std::pow(1.0 / 1e-4, i / 999.0);
        Verdict v = classify(make_map({lam, 0.0}, 3, 3), cfg);
        if (v.cls == TopologyClass::CantorSet) seen_cantor = true;
        if (seen_cantor) CHECK(v.cls != TopologyClass::CantorCircles);
        if (v.cls != prev) {
            ++transitions;
            prev = v.cls;
        }
    }
    CHECK(seen_cantor);
    CHECK(transitions >= 2);  // CantorCircles regime, bounded window, Cantor regime
}

TEST_CASE("classify_grid: 1x1 grid equals classify at the center") {
    ClassifierConfig cfg;
    FieldGrid g = classify_grid({3, 3}, 0.09, 0.11, -0.01, 0.01, 1, 1, cfg);
    Verdict v = classify(make_map({0.1, 0.0}, 3, 3), cfg);
    CHECK(g.at(0, 0) == static_cast<std::int32_t>(v.cls));
}

TEST_CASE("classify_grid: spot checks against the classify oracle") {
    ClassifierConfig cfg;
    cfg.max_iter = 2000;
    FieldGrid g = classify_grid({3, 3}, -0.1, 0.1, -0.1, 0.1, 33, 33, cfg);
    for (int j : {3, 16, 29}) {
        for (int i : {3, 16, 29}) {
            cplx lambda = g.pixel_center(i, j);
            if (lambda == cplx(0.0, 0.0)) {
                CHECK(g.at(i, j) == 0);
                continue;
            }
            Verdict v = classify(make_map(lambda, 3, 3), cfg);
            CHECK(g.at(i, j) == static_cast<std::int32_t>(v.cls));
        }
    }
}

TEST_CASE("classify_grid: pixel at the origin is coded undefined") {
    ClassifierConfig cfg;
    cfg.max_iter = 500;
    // 1x1 grid centered exactly at 0
    FieldGrid g = classify_grid({3, 3}, -0.05, 0.05, -0.05, 0.05, 1, 1, cfg);
    CHECK(g.at(0, 0) == static_cast<std::int32_t>(TopologyClass::Undefined));
}

TEST_CASE("classify_grid: deterministic across worker counts") {
    ClassifierConfig cfg;
    cfg.max_iter = 1500;
    FieldGrid a = classify_grid({3, 3}, -0.08, 0.08, -0.08, 0.08, 48, 48, cfg, 1);
    FieldGrid b = classify_grid({3, 3}, -0.08, 0.08, -0.08, 0.08, 48, 48, cfg, 8);
    CHECK(grid_hash(a) == grid_hash(b));
    CHECK(a.data == b.data);
}

TEST_CASE("bracket_real: locates the window around the figure parameters") {
    ClassifierConfig cfg;
    RealBracket br = bracket_real({3, 3}, 1e-6, cfg);
    CHECK(br.lambda0 < 0.02583244);
    CHECK(br.lambda1 > 0.02749275);
    CHECK(br.lambda0 < br.lambda1);
    CHECK(br.lambda0 > 0.0);

    CHECK(classify(make_map({br.lambda0 * 0.99, 0.0}, 3, 3), cfg).cls
          == TopologyClass::CantorCircles);
    CHECK(classify(make_map({br.lambda1 * 1.01, 0.0}, 3, 3), cfg).cls
          == TopologyClass::CantorSet);
}

TEST_CASE("bracket_real: tolerance halving tightens the bracket") {
    ClassifierConfig cfg;
    cfg.max_iter = 3000;
    RealBracket coarse = bracket_real({3, 3}, 2e-5, cfg);
    RealBracket fine = bracket_real({3, 3}, 1e-5, cfg);
    // same boundary, tighter interval: the fine result lies within one
    // coarse step of the coarse result
    CHECK(std::abs(fine.lambda0 - coarse.lambda0) <= 2e-5);
    CHECK(std::abs(fine.lambda1 - coarse.lambda1) <= 2e-5);
}

TEST_CASE("bracket_real: validates preconditions") {
    CHECK_THROWS_AS(bracket_real({2, 3}, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(bracket_real({3, 3}, 0.0), std::invalid_argument);
}

TEST_CASE("detect_hyperbolic: figure parameters and precondition") {
    ClassifierConfig cfg;

    // superattracting center near 0.02749275 (secant-refined)
    auto crit_gap = [](double lam) {
        MapParams map = make_map({lam, 0.0}, 3, 3);
        cplx w = critical_points(map)[0];
        cplx z = w;
        for (int i = 0; i < 3; ++i) z = evaluate(map, z);
        return (z - w).real();
    };
    double a = 0.0274, b = 0.0276, fa = crit_gap(a);
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (a + b);
        double fm = crit_gap(mid);
        if ((fm < 0) == (fa < 0)) { a = mid; fa = fm; }
        else b = mid;
    }
    double lam_star = 0.5 * (a + b);
    auto super = detect_hyperbolic(make_map({lam_star, 0.0}, 3, 3), cfg);
    REQUIRE(super.has_value());
    CHECK(super->kind == CycleKind::Superattracting);
    CHECK(std::abs(super->multiplier) < 1e-6);

    // strictly pre-periodic parameter: no attracting cycle
    auto none = detect_hyperbolic(make_map({0.02583244, 0.0}, 3, 3), cfg);
    CHECK(!none.has_value());

    CHECK_THROWS_AS(detect_hyperbolic(make_map({100.0, 0.0}, 3, 3), cfg),
                    std::invalid_argument);
}

TEST_CASE("classify: NonEscaping verdict stable under a 10x budget") {
    ClassifierConfig base;
    ClassifierConfig big;
    big.max_iter = 100000;
    for (double lam : {0.02749275, 0.02583244}) {
        CHECK(classify(make_map({lam, 0.0}, 3, 3), base).cls == TopologyClass::NonEscaping);
        CHECK(classify(make_map({lam, 0.0}, 3, 3), big).cls == TopologyClass::NonEscaping);
    }
}

TEST_CASE("classify: ambiguity band turns a marginal entry into Indeterminate") {
    // entry modulus sits at ~0.74 of the critical radius here, inside a
    // 0.30 band but outside the default one
    cplx lam(0.0951468407712, 0.0549330541318);
    ClassifierConfig narrow;
    CHECK(classify(make_map(lam, 3, 3), narrow).cls == TopologyClass::SierpinskiEscaping);
    ClassifierConfig wide;
    wide.ambiguity_band = 0.30;
    Verdict v = classify(make_map(lam, 3, 3), wide);
    CHECK(v.cls == TopologyClass::Indeterminate);
    CHECK(v.escape_index.has_value());
    CHECK(!v.entry_index.has_value());
}

TEST_CASE("detect_hyperbolic: plain attracting cycles near the window top") {
    ClassifierConfig cfg;
    auto fixed_pt = detect_hyperbolic(make_map({0.1, 0.0}, 3, 3), cfg);
    REQUIRE(fixed_pt.has_value());
    CHECK(fixed_pt->period == 1);
    CHECK(fixed_pt->kind == CycleKind::Attracting);
    CHECK(std::abs(fixed_pt->multiplier) < 1.0);
    // the representative is an actual fixed point
    MapParams map = make_map({0.1, 0.0}, 3, 3);
    CHECK(std::abs(evaluate(map, fixed_pt->representative) - fixed_pt->representative)
          < 1e-10);

    auto two_cycle = detect_hyperbolic(make_map({0.05, 0.0}, 3, 3), cfg);
    REQUIRE(two_cycle.has_value());
    CHECK(two_cycle->period == 2);
    CHECK(two_cycle->kind == CycleKind::Attracting);
}

TEST_CASE("classifier config validation") {
    ClassifierConfig bad;
    bad.max_iter = 10;
    CHECK_THROWS_AS(classify(make_map({1.0, 0.0}, 3, 3), bad), std::invalid_argument);
    bad.max_iter = 1000;
    bad.ambiguity_band = 0.7;
    CHECK_THROWS_AS(classify(make_map({1.0, 0.0}, 3, 3), bad), std::invalid_argument);
}
