#pragma once

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcm/dynamics.hpp"
#include "mcm/field_grid.hpp"
#include "mcm/parallel.hpp"

namespace mcm {

// Stable wire codes; grid files, palettes and CSV reports all use these.
enum class TopologyClass : std::int32_t {
    Undefined = 0,
    CantorSet = 1,
    CantorCircles = 2,
    SierpinskiEscaping = 3,
    NonEscaping = 4,
    Indeterminate = 5,
};

inline const char* topology_class_name(TopologyClass c) {
    switch (c) {
        case TopologyClass::Undefined: return "Undefined";
        case TopologyClass::CantorSet: return "CantorSet";
        case TopologyClass::CantorCircles: return "CantorCircles";
        case TopologyClass::SierpinskiEscaping: return "SierpinskiEscaping";
        case TopologyClass::NonEscaping: return "NonEscaping";
        case TopologyClass::Indeterminate: return "Indeterminate";
    }
    return "?";
}

struct Verdict {
    TopologyClass cls = TopologyClass::Indeterminate;
    std::optional<int> escape_index;   // first index of the critical-value orbit beyond R
    std::optional<int> entry_index;    // step at which the orbit enters the trap door
    std::optional<double> entry_modulus;
    int iterations_used = 0;
};

struct ClassifierConfig {
    int max_iter = 10000;
    double ambiguity_band = 0.05;
};

inline void validate_config(const ClassifierConfig& cfg) {
    if (cfg.max_iter < 100) throw std::invalid_argument("classifier: max_iter must be >= 100");
    if (!(cfg.ambiguity_band > 0.0 && cfg.ambiguity_band < 0.5))
        throw std::invalid_argument("classifier: ambiguity_band must be in (0, 0.5)");
}

// Escape-trichotomy classification of the orbit of the critical value
// v = f(w_crit). Pre-escape points with modulus above crit_radius*(1+band)
// are attributed to the basin of infinity, points below crit_radius*(1-band)
// to the trap door; the band in between yields Indeterminate.
inline Verdict classify(const MapParams& map, const ClassifierConfig& cfg = {},
                        int crit_index = 0) {
    validate_config(cfg);
    cplx w = critical_points(map)[crit_index % map.degree()];
    cplx v = evaluate(map, w);
    OrbitTrace orbit = iterate(map, v, cfg.max_iter);

    Verdict verdict;
    verdict.iterations_used = static_cast<int>(orbit.points.size());

    const double hi = map.crit_radius * (1.0 + cfg.ambiguity_band);
    const double lo = map.crit_radius * (1.0 - cfg.ambiguity_band);

    if (orbit.hit_pole) {
        // An exact landing on 0 is an entry into the trap door; the next
        // iterate is already past every escape radius.
        int k = static_cast<int>(orbit.points.size()) - 1;
        verdict.escape_index = k + 1;
        verdict.entry_index = k;
        verdict.entry_modulus = 0.0;
        verdict.cls = (k == 0) ? TopologyClass::CantorCircles
                               : TopologyClass::SierpinskiEscaping;
        return verdict;
    }
    if (!orbit.escape_index.has_value()) {
        verdict.cls = TopologyClass::NonEscaping;
        return verdict;
    }

    int n = *orbit.escape_index;
    verdict.escape_index = n;
    while (n > 0 && std::abs(orbit.points[n - 1]) > hi) --n;
    if (n == 0) {
        verdict.cls = TopologyClass::CantorSet;
        return verdict;
    }
    double mod = std::abs(orbit.points[n - 1]);
    if (mod < lo) {
        verdict.entry_index = n - 1;
        verdict.entry_modulus = mod;
        verdict.cls = (n - 1 == 0) ? TopologyClass::CantorCircles
                                   : TopologyClass::SierpinskiEscaping;
        return verdict;
    }
    verdict.cls = TopologyClass::Indeterminate;
    return verdict;
}

// Per-pixel verdict codes over a parameter rectangle. Deterministic for any
// worker count: rows are partitioned statically and pixels are pure.
inline FieldGrid classify_grid(const Exponents& exp, double re_min, double re_max,
                               double im_min, double im_max, int width, int height,
                               const ClassifierConfig& cfg = {}, int jobs = 1) {
    validate_exponents(exp);
    validate_config(cfg);
    FieldGrid grid = make_grid(width, height, re_min, re_max, im_min, im_max,
                               PayloadKind::VerdictCode);
    parallel_rows(height, jobs, [&](int j) {
        for (int i = 0; i < width; ++i) {
            cplx lambda = grid.pixel_center(i, j);
            if (lambda == cplx(0.0, 0.0)) {
                grid.at(i, j) = static_cast<std::int32_t>(TopologyClass::Undefined);
                continue;
            }
            Verdict v = classify(make_map(lambda, exp.l, exp.m), cfg);
            grid.at(i, j) = static_cast<std::int32_t>(v.cls);
        }
    });
    return grid;
}

struct RealBracket {
    double lambda0 = 0.0;  // boundary CantorCircles / non-CantorCircles
    double lambda1 = 0.0;  // boundary non-CantorSet / CantorSet
    double tol = 0.0;
};

struct BracketingError : std::runtime_error {
    explicit BracketingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bisection on the positive real axis for the two regime boundaries.
// A geometric pre-scan locates the verdict pattern CantorCircles ...
// NonEscaping ... CantorSet; bisection then sharpens both edges to tol.
inline RealBracket bracket_real(const Exponents& exp, double tol,
                                const ClassifierConfig& cfg = {}) {
    validate_exponents(exp);
    if (exp.l != exp.m) throw std::invalid_argument("bracket_real: requires l = m");
    if (exp.l < 3) throw std::invalid_argument("bracket_real: requires l = m >= 3");
    if (!(tol > 0.0)) throw std::invalid_argument("bracket_real: tol must be positive");

    const int pre = 200;
    const double lo = 1e-8, hi = 10.0;
    std::vector<double> xs(pre);
    std::vector<TopologyClass> vs(pre);
    for (int i = 0; i < pre; ++i) {
        xs[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (pre - 1));
        vs[i] = classify(make_map(cplx(xs[i], 0.0), exp.l, exp.m), cfg).cls;
    }

    auto log_samples = [&]() {
        std::ostringstream os;
        for (int i = 0; i < pre; ++i)
            os << xs[i] << " -> " << topology_class_name(vs[i]) << "\n";
        return os.str();
    };

    int last_cc = -1, first_cantor = -1;
    for (int i = 0; i < pre; ++i) {
        if (vs[i] == TopologyClass::CantorCircles) last_cc = i;
        if (first_cantor < 0 && vs[i] == TopologyClass::CantorSet) first_cantor = i;
    }
    if (last_cc < 0 || first_cantor < 0 || last_cc + 1 >= pre || first_cantor == 0
        || last_cc >= first_cantor)
        throw BracketingError("bracketing failed: verdict pattern not monotone\n" + log_samples());
    for (int i = first_cantor; i < pre; ++i)
        if (vs[i] == TopologyClass::CantorCircles)
            throw BracketingError("bracketing failed: CantorCircles above CantorSet regime\n"
                                  + log_samples());

    auto is_cc = [&](double x) {
        return classify(make_map(cplx(x, 0.0), exp.l, exp.m), cfg).cls
               == TopologyClass::CantorCircles;
    };
    auto is_cantor = [&](double x) {
        return classify(make_map(cplx(x, 0.0), exp.l, exp.m), cfg).cls
               == TopologyClass::CantorSet;
    };

    double a = xs[last_cc], b = xs[last_cc + 1];
    while (b - a > tol) {
        double mid = 0.5 * (a + b);
        (is_cc(mid) ? a : b) = mid;
    }
    double lambda0 = 0.5 * (a + b);

    a = xs[first_cantor - 1];
    b = xs[first_cantor];
    while (b - a > tol) {
        double mid = 0.5 * (a + b);
        (is_cantor(mid) ? b : a) = mid;
    }
    double lambda1 = 0.5 * (a + b);

    return RealBracket{lambda0, lambda1, tol};
}

// Attracting-cycle detection on the free critical orbit; requires a
// NonEscaping parameter.
inline std::optional<CycleReport> detect_hyperbolic(const MapParams& map,
                                                    const ClassifierConfig& cfg = {},
                                                    int max_period = 64) {
    if (classify(map, cfg).cls != TopologyClass::NonEscaping)
        throw std::invalid_argument("not in non-escaping locus");
    cplx w = critical_points(map)[0];
    OrbitTrace orbit = iterate(map, w, cfg.max_iter);
    CycleSearch search = find_cycle(map, orbit, max_period, 1e-8);
    if (!search.report) return std::nullopt;
    if (search.report->kind == CycleKind::Attracting
        || search.report->kind == CycleKind::Superattracting)
        return search.report;
    return std::nullopt;
}

} // namespace mcm
