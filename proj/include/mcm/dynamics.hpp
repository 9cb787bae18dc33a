#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mcm {

using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;

inline cplx complex_infinity() {
    return cplx(std::numeric_limits<double>::infinity(), 0.0);
}

inline bool is_infinite_point(const cplx& z) {
    return !std::isfinite(z.real()) || !std::isfinite(z.imag());
}

// Integer power by repeated squaring; exact structure of z^k without
// going through exp/log.
inline cplx pow_int(cplx z, int k) {
    cplx acc(1.0, 0.0);
    while (k > 0) {
        if (k & 1) acc *= z;
        k >>= 1;
        if (k > 0) z *= z;
    }
    return acc;
}

inline cplx unit_dir(double angle) { return cplx(std::cos(angle), std::sin(angle)); }

// Exponent pair (l, m) of z^m + lambda / z^l. Both at least 2 and
// 1/l + 1/m < 1 in integer form.
struct Exponents {
    int l = 3;
    int m = 3;

    int degree() const { return l + m; }
};

inline void validate_exponents(const Exponents& e) {
    if (e.l < 2 || e.m < 2)
        throw std::invalid_argument("exponents: l and m must be at least 2");
    if (static_cast<long long>(e.l) * e.m <= e.l + e.m)
        throw std::invalid_argument("exponents: require 1/l + 1/m < 1");
}

// Parameters of one map of the family plus the derived constants used
// everywhere: the radius of the critical circle and a sound escape radius.
struct MapParams {
    cplx lambda;
    Exponents exp;
    double crit_radius = 0.0;
    double escape_radius = 0.0;

    int degree() const { return exp.degree(); }
};

// R = max(1, (2+|lambda|)^(1/(m-1))). For |z| >= R the modulus at least
// doubles each step, so crossing R certifies escape.
inline double escape_radius(const cplx& lambda, const Exponents& exp) {
    return std::max(1.0, std::pow(2.0 + std::abs(lambda), 1.0 / (exp.m - 1)));
}

inline MapParams make_map(const cplx& lambda, int l, int m) {
    Exponents e{l, m};
    validate_exponents(e);
    if (lambda == cplx(0.0, 0.0))
        throw std::invalid_argument("map: lambda must be nonzero");
    MapParams p;
    p.lambda = lambda;
    p.exp = e;
    int n = e.degree();
    p.crit_radius = std::pow(std::abs(lambda) * e.l / e.m, 1.0 / n);
    p.escape_radius = escape_radius(lambda, e);
    return p;
}

// f(z) = z^m + lambda / z^l on the extended plane. Poles are a flagged
// infinity, never a fault.
inline cplx evaluate(const MapParams& map, const cplx& z) {
    if (is_infinite_point(z)) return complex_infinity();
    if (z == cplx(0.0, 0.0)) return complex_infinity();
    return pow_int(z, map.exp.m) + map.lambda / pow_int(z, map.exp.l);
}

// f'(z) = m z^(m-1) - l lambda z^-(l+1)
inline cplx derivative(const MapParams& map, const cplx& z) {
    if (is_infinite_point(z) || z == cplx(0.0, 0.0))
        throw std::domain_error("derivative undefined at pole");
    return static_cast<double>(map.exp.m) * pow_int(z, map.exp.m - 1)
         - static_cast<double>(map.exp.l) * map.lambda / pow_int(z, map.exp.l + 1);
}

// The l+m free critical points, equally spaced on the circle of radius
// crit_radius; index 0 is the principal (l+m)-th root of lambda*l/m.
inline std::vector<cplx> critical_points(const MapParams& map) {
    int n = map.degree();
    cplx w0 = std::pow(map.lambda * static_cast<double>(map.exp.l)
                           / static_cast<double>(map.exp.m),
                       1.0 / n);
    std::vector<cplx> pts(n);
    for (int j = 0; j < n; ++j) pts[j] = w0 * unit_dir(2.0 * kPi * j / n);
    return pts;
}

inline std::vector<cplx> critical_values(const MapParams& map) {
    std::vector<cplx> vals;
    for (const cplx& w : critical_points(map)) vals.push_back(evaluate(map, w));
    return vals;
}

// Orbit record: points[0] is the seed, escape_index the first index whose
// modulus exceeds the escape radius, hit_pole marks an exact landing on 0.
struct OrbitTrace {
    std::vector<cplx> points;
    std::optional<int> escape_index;
    bool hit_pole = false;
};

inline OrbitTrace iterate(const MapParams& map, const cplx& z0, int max_iter) {
    if (max_iter < 1) throw std::invalid_argument("iterate: max_iter must be >= 1");
    OrbitTrace tr;
    tr.points.reserve(static_cast<std::size_t>(std::min(max_iter + 1, 1 << 20)));
    cplx z = z0;
    for (int k = 0;; ++k) {
        tr.points.push_back(z);
        if (is_infinite_point(z)) {  // overflow counts as escape at this index
            tr.escape_index = k;
            break;
        }
        if (std::abs(z) > map.escape_radius) {
            tr.escape_index = k;
            break;
        }
        if (z == cplx(0.0, 0.0)) {
            tr.hit_pole = true;
            break;
        }
        if (k == max_iter) break;
        z = evaluate(map, z);
    }
    return tr;
}

enum class CycleKind { Attracting, Superattracting, Indifferent, Repelling };

inline const char* cycle_kind_name(CycleKind k) {
    switch (k) {
        case CycleKind::Attracting: return "attracting";
        case CycleKind::Superattracting: return "superattracting";
        case CycleKind::Indifferent: return "indifferent";
        case CycleKind::Repelling: return "repelling";
    }
    return "?";
}

struct CycleReport {
    int period = 0;
    cplx representative;
    cplx multiplier;
    CycleKind kind = CycleKind::Repelling;
};

// find_cycle outcome; polish_failed distinguishes "periodic tail seen but
// refinement diverged" from "no periodic tail at all".
struct CycleSearch {
    std::optional<CycleReport> report;
    bool polish_failed = false;
};

namespace detail {

// Tolerance ladder for cycle handling.
constexpr double kCyclePolishTol = 1e-12;
constexpr double kSuperattractingTol = 1e-6;
constexpr double kIndifferentTol = 1e-8;

inline cplx iterate_n(const MapParams& map, cplx z, int n) {
    for (int i = 0; i < n; ++i) z = evaluate(map, z);
    return z;
}

// Newton refinement of f^p(z) - z = 0. Returns true on convergence.
inline bool polish_cycle(const MapParams& map, int p, cplx& z) {
    for (int it = 0; it < 64; ++it) {
        cplx w = z;
        cplx deriv(1.0, 0.0);
        bool bad = false;
        for (int i = 0; i < p; ++i) {
            if (is_infinite_point(w) || w == cplx(0.0, 0.0)) { bad = true; break; }
            deriv *= derivative(map, w);
            w = evaluate(map, w);
        }
        if (bad || is_infinite_point(w)) return false;
        cplx g = w - z;
        double scale = std::max(1.0, std::abs(z));
        if (std::abs(g) < kCyclePolishTol * scale) return true;
        cplx gp = deriv - cplx(1.0, 0.0);
        if (std::abs(gp) < 1e-300) return false;
        cplx step = g / gp;
        if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) return false;
        z -= step;
    }
    return false;
}

inline cplx cycle_multiplier(const MapParams& map, cplx z, int p) {
    cplx mult(1.0, 0.0);
    for (int i = 0; i < p; ++i) {
        mult *= derivative(map, z);
        z = evaluate(map, z);
    }
    return mult;
}

inline CycleKind classify_multiplier(const cplx& mult) {
    double a = std::abs(mult);
    if (a < kSuperattractingTol) return CycleKind::Superattracting;
    if (std::abs(a - 1.0) <= kIndifferentTol) return CycleKind::Indifferent;
    return a < 1.0 ? CycleKind::Attracting : CycleKind::Repelling;
}

} // namespace detail

// Detects eventual periodicity of a bounded orbit tail, refines the cycle by
// Newton on f^p(z) - z and reduces the period to its primitive value.
inline CycleSearch find_cycle(const MapParams& map, const OrbitTrace& orbit,
                              int max_period, double tol) {
    if (orbit.escape_index.has_value())
        throw std::invalid_argument("find_cycle: seed orbit escapes");
    if (max_period < 1) throw std::invalid_argument("find_cycle: max_period must be >= 1");
    const auto& pts = orbit.points;
    const int len = static_cast<int>(pts.size());

    int period = 0;
    for (int p = 1; p <= max_period; ++p) {
        int window = std::max(2 * p, 16);
        if (len < p + window + 1) break;
        bool ok = true;
        for (int i = 0; i < window; ++i) {
            int k = len - 1 - i;
            if (std::abs(pts[k] - pts[k - p]) >= tol) { ok = false; break; }
        }
        if (ok) { period = p; break; }
    }
    if (period == 0) return {};

    cplx z = pts[len - 1];
    if (!detail::polish_cycle(map, period, z)) return {std::nullopt, true};

    // Reduce to the primitive period.
    for (int d = 1; d < period; ++d) {
        if (period % d != 0) continue;
        cplx w = detail::iterate_n(map, z, d);
        if (std::abs(w - z) < 1e-9 * std::max(1.0, std::abs(z))) {
            cplx zd = z;
            if (detail::polish_cycle(map, d, zd)) {
                z = zd;
                period = d;
                break;
            }
        }
    }

    CycleReport rep;
    rep.period = period;
    rep.representative = z;
    rep.multiplier = detail::cycle_multiplier(map, z, period);
    rep.kind = detail::classify_multiplier(rep.multiplier);
    return {rep, false};
}

// Real-slice levels p < q with f(p) = f(q) = q for real positive lambda,
// l = m. q is the largest positive real fixed point, p its preimage below
// the critical circle.
struct RealLevels {
    double p = 0.0;
    double q = 0.0;
};

namespace detail {

inline double eval_real(const MapParams& map, double x) {
    double xm = 1.0, xl = 1.0;
    for (int i = 0; i < map.exp.m; ++i) xm *= x;
    for (int i = 0; i < map.exp.l; ++i) xl *= x;
    return xm + map.lambda.real() / xl;
}

inline double eval_real_deriv(const MapParams& map, double x) {
    double xm1 = 1.0, xl1 = 1.0;
    for (int i = 0; i < map.exp.m - 1; ++i) xm1 *= x;
    for (int i = 0; i < map.exp.l + 1; ++i) xl1 *= x;
    return map.exp.m * xm1 - map.exp.l * map.lambda.real() / xl1;
}

// Bisection + Newton polish for g(x) = eval_real(x) - target on [a, b]
// with g(a), g(b) of opposite sign.
inline double solve_real(const MapParams& map, double target, double a, double b,
                         double ga) {
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (a + b);
        double gm = eval_real(map, mid) - target;
        if ((gm < 0) == (ga < 0)) { a = mid; ga = gm; }
        else b = mid;
        if (b - a < 1e-16 * std::max(1.0, b)) break;
    }
    double x = 0.5 * (a + b);
    for (int i = 0; i < 8; ++i) {
        double g = eval_real(map, x) - target;
        double gp = eval_real_deriv(map, x);
        if (std::abs(gp) < 1e-300) break;
        double nx = x - g / gp;
        if (!(nx > 0.0) || !std::isfinite(nx)) break;
        x = nx;
    }
    return x;
}

} // namespace detail

inline RealLevels real_levels(const MapParams& map) {
    if (map.lambda.imag() != 0.0 || map.lambda.real() <= 0.0)
        throw std::invalid_argument("real_levels: lambda must be real positive");
    if (map.exp.l != map.exp.m)
        throw std::invalid_argument("real_levels: requires l = m");

    const double c = map.crit_radius;
    const double R = map.escape_radius;

    // q: rightmost fixed point of x -> f(x) on [c, R]. h(R) > 0 always; scan
    // down from R for a sign change of h(x) = f(x) - x.
    const int scan = 2048;
    double xhi = R, hhi = detail::eval_real(map, R) - R;
    double q = -1.0;
    for (int i = 1; i <= scan; ++i) {
        double x = R + (c - R) * i / scan;
        double h = detail::eval_real(map, x) - x;
        if ((h < 0) != (hhi < 0)) {
            double a = x, b = xhi, ha = h;
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (a + b);
                double hm = detail::eval_real(map, mid) - mid;
                if ((hm < 0) == (ha < 0)) { a = mid; ha = hm; }
                else b = mid;
            }
            q = 0.5 * (a + b);
            for (int it = 0; it < 8; ++it) {
                double g = detail::eval_real(map, q) - q;
                double gp = detail::eval_real_deriv(map, q) - 1.0;
                if (std::abs(gp) < 1e-300) break;
                q -= g / gp;
            }
            break;
        }
        xhi = x;
        hhi = h;
    }
    if (q < 0.0)
        throw std::domain_error("real levels absent");

    // p: solution of f(p) = q on (0, c); f decreases from +inf to f(c) there.
    double b = c, gb = detail::eval_real(map, c) - q;
    if (gb >= 0.0)
        throw std::domain_error("real levels absent");
    double a = c;
    double ga = gb;
    for (int i = 0; i < 2000 && ga < 0.0; ++i) {
        b = a;
        gb = ga;
        a *= 0.5;
        ga = detail::eval_real(map, a) - q;
    }
    if (ga < 0.0)
        throw std::domain_error("real levels absent");
    double p = detail::solve_real(map, q, a, b, ga);

    RealLevels lv{p, q};
    if (!(0.0 < lv.p && lv.p < lv.q))
        throw std::domain_error("real levels absent");
    return lv;
}

} // namespace mcm
