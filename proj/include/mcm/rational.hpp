#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mcm {

// Exact rational on int64 storage. Intermediate products go through
// __int128; if a reduced result still does not fit in 64 bits we throw
// instead of silently wrapping.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n) : num(n), den(1) {}
    Rational(std::int64_t n, std::int64_t d) { assign(n, d); }

    void assign(__int128 n, __int128 d) {
        if (d == 0) throw std::invalid_argument("rational: zero denominator");
        if (d < 0) { n = -n; d = -d; }
        __int128 g = gcd128(n < 0 ? -n : n, d);
        if (g > 1) { n /= g; d /= g; }
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
            throw std::overflow_error("rational: value exceeds 64-bit range");
        num = static_cast<std::int64_t>(n);
        den = static_cast<std::int64_t>(d);
    }

    static __int128 gcd128(__int128 a, __int128 b) {
        while (b != 0) { __int128 t = a % b; a = b; b = t; }
        return a < 0 ? -a : a;
    }

    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        Rational r;
        r.assign(static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den,
                 static_cast<__int128>(a.den) * b.den);
        return r;
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        Rational r;
        r.assign(static_cast<__int128>(a.num) * b.den - static_cast<__int128>(b.num) * a.den,
                 static_cast<__int128>(a.den) * b.den);
        return r;
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        Rational r;
        r.assign(static_cast<__int128>(a.num) * b.num, static_cast<__int128>(a.den) * b.den);
        return r;
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num == 0) throw std::invalid_argument("rational: division by zero");
        Rational r;
        r.assign(static_cast<__int128>(a.num) * b.den, static_cast<__int128>(a.den) * b.num);
        return r;
    }
    Rational operator-() const { Rational r; r.num = -num; r.den = den; return r; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
    }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    std::string str() const {
        return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
    }
};

inline Rational rational_pow(const Rational& base, int exp) {
    if (exp < 0) throw std::invalid_argument("rational_pow: negative exponent");
    Rational acc(1);
    Rational b = base;
    int e = exp;
    while (e > 0) {
        if (e & 1) acc = acc * b;
        e >>= 1;
        if (e > 0) b = b * b;
    }
    return acc;
}

} // namespace mcm
