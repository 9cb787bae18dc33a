#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "mcm/dynamics.hpp"
#include "mcm/rational.hpp"

namespace mcm {

// Closed rational interval [a, b] inside [0, 1].
struct Interval {
    Rational a, b;
};

// Ordered list of pairwise disjoint closed intervals.
struct IntervalUnion {
    std::vector<Interval> intervals;

    Rational total_length() const {
        Rational s(0);
        for (const auto& iv : intervals) s = s + (iv.b - iv.a);
        return s;
    }
    bool contains(const Rational& x) const {
        for (const auto& iv : intervals)
            if (iv.a <= x && x <= iv.b) return true;
        return false;
    }
};

// The interval IFS g0(x) = (1-x)/l, g1(x) = 1 + (x-1)/m on [0, 1]. g0 is
// orientation-reversing onto [0, 1/l], g1 orientation-preserving onto
// [1 - 1/m, 1]; the intersection of the level sets is the standard Cantor
// set for the exponent pair.
struct CantorIFS {
    Exponents exp;
};

inline CantorIFS make_cantor_ifs(int l, int m) {
    Exponents e{l, m};
    validate_exponents(e);
    return CantorIFS{e};
}

constexpr int kMaxCantorLevel = 24;

// Exact level set I_n with 2^n intervals, built by n pullbacks of [0, 1].
inline IntervalUnion level_set(const CantorIFS& ifs, int n) {
    if (n < 0) throw std::invalid_argument("level_set: n must be >= 0");
    if (n > kMaxCantorLevel)
        throw std::length_error("level_set: level exceeds limit " + std::to_string(kMaxCantorLevel));
    const Rational one(1);
    const Rational rl(1, ifs.exp.l);
    const Rational rm(1, ifs.exp.m);

    IntervalUnion cur;
    cur.intervals.push_back({Rational(0), one});
    for (int step = 0; step < n; ++step) {
        IntervalUnion next;
        next.intervals.reserve(cur.intervals.size() * 2);
        // g0 reverses order: map in reverse to keep the list sorted.
        for (auto it = cur.intervals.rbegin(); it != cur.intervals.rend(); ++it)
            next.intervals.push_back({(one - it->b) * rl, (one - it->a) * rl});
        for (const auto& iv : cur.intervals)
            next.intervals.push_back({one + (iv.a - one) * rm, one + (iv.b - one) * rm});
        cur = std::move(next);
    }
    return cur;
}

// Exact membership of x in I_n by greedy inverse iteration, no floating
// point: points in [0, 1/l] pull back through g0, points in [1-1/m, 1]
// through g1, anything else is already outside.
inline bool member(const CantorIFS& ifs, Rational x, int n) {
    if (x < Rational(0) || Rational(1) < x)
        throw std::invalid_argument("member: x must lie in [0, 1]");
    const Rational one(1);
    const Rational left_hi(1, ifs.exp.l);
    const Rational right_lo = one - Rational(1, ifs.exp.m);
    for (int i = 0; i < n; ++i) {
        if (x <= left_hi) {
            x = one - Rational(ifs.exp.l) * x;       // g0^{-1}
        } else if (right_lo <= x) {
            x = one + Rational(ifs.exp.m) * (x - one); // g1^{-1}
        } else {
            return false;
        }
    }
    return true;
}

// Lebesgue measure of I_n, exactly (1/l + 1/m)^n.
inline Rational total_length(const CantorIFS& ifs, int n) {
    if (n < 0) throw std::invalid_argument("total_length: n must be >= 0");
    return rational_pow(Rational(1, ifs.exp.l) + Rational(1, ifs.exp.m), n);
}

// Radial annulus IFS of the surgery construction: on [r0, 1] the maps
// g0(r) = (1-r)/l + r0 and g1(r) = 1 - (1-r)/m contract onto
// [r0, r1] and [r2, 1].
struct AnnulusModel {
    Exponents exp;
    double r0 = 0.5;
    double r1 = 0.0;
    double r2 = 0.0;
};

inline AnnulusModel make_annulus_model(int l, int m, double r0 = 0.5) {
    Exponents e{l, m};
    validate_exponents(e);
    if (!(r0 > 0.0 && r0 < 1.0))
        throw std::invalid_argument("annulus model: r0 must lie in (0, 1)");
    AnnulusModel mod;
    mod.exp = e;
    mod.r0 = r0;
    mod.r1 = r0 + (1.0 - r0) / l;
    mod.r2 = 1.0 - (1.0 - r0) / m;
    return mod;
}

inline double annulus_g0(const AnnulusModel& mod, double r) {
    return (1.0 - r) / mod.exp.l + mod.r0;
}
inline double annulus_g1(const AnnulusModel& mod, double r) {
    return 1.0 - (1.0 - r) / mod.exp.m;
}
inline double annulus_g0_inv(const AnnulusModel& mod, double s) {
    return 1.0 - mod.exp.l * (s - mod.r0);
}
inline double annulus_g1_inv(const AnnulusModel& mod, double s) {
    return 1.0 - mod.exp.m * (1.0 - s);
}

// The two covering maps of the annulus A = {r0 <= |w| <= 1}:
//   on A0 = {r0 <= |z| <= r1}:  r e^{it} -> g0^{-1}(r) e^{-i l t}   (degree l)
//   on A1 = {r2 <= |z| <= 1}:   r e^{it} -> g1^{-1}(r) e^{ i m t}   (degree m)
inline cplx annulus_map(const AnnulusModel& mod, const cplx& z) {
    double r = std::abs(z);
    double t = std::arg(z);
    const double eps = 1e-12;
    if (r >= mod.r0 - eps && r <= mod.r1 + eps) {
        double s = annulus_g0_inv(mod, std::clamp(r, mod.r0, mod.r1));
        return s * unit_dir(-mod.exp.l * t);
    }
    if (r >= mod.r2 - eps && r <= 1.0 + eps) {
        double s = annulus_g1_inv(mod, std::clamp(r, mod.r2, 1.0));
        return s * unit_dir(mod.exp.m * t);
    }
    if (r > mod.r1 && r < mod.r2)
        throw std::domain_error("annulus_map: modulus in middle annulus, handled by the surgery map");
    throw std::domain_error("annulus_map: modulus outside [r0, 1]");
}

// Random inverse-branch sampling of the attractor of {(F|A0)^-1, (F|A1)^-1}.
// All sampled moduli lie in the level-`depth` radial set.
inline std::vector<cplx> attractor_sample(const AnnulusModel& mod, int depth, int count,
                                          std::uint64_t seed = 20240601ull) {
    if (depth < 1) throw std::invalid_argument("attractor_sample: depth must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<cplx> out;
    out.reserve(count);
    for (int s = 0; s < count; ++s) {
        double r = mod.r0 + (1.0 - mod.r0) * uni(rng);
        double t = 2.0 * kPi * uni(rng);
        for (int d = 0; d < depth; ++d) {
            if (uni(rng) < 0.5) {
                int branch = static_cast<int>(uni(rng) * mod.exp.l) % mod.exp.l;
                t = (-t + 2.0 * kPi * branch) / mod.exp.l;
                r = annulus_g0(mod, r);
            } else {
                int branch = static_cast<int>(uni(rng) * mod.exp.m) % mod.exp.m;
                t = (t + 2.0 * kPi * branch) / mod.exp.m;
                r = annulus_g1(mod, r);
            }
        }
        out.push_back(r * unit_dir(t));
    }
    return out;
}

// Level-n radial set of the annulus IFS for exact rational r0: the affine
// image of the interval level set under x -> r0 + (1 - r0) x.
inline IntervalUnion radial_level_set(const CantorIFS& ifs, const Rational& r0, int n) {
    IntervalUnion base = level_set(ifs, n);
    Rational span = Rational(1) - r0;
    IntervalUnion out;
    out.intervals.reserve(base.intervals.size());
    for (const auto& iv : base.intervals)
        out.intervals.push_back({r0 + span * iv.a, r0 + span * iv.b});
    return out;
}

} // namespace mcm
