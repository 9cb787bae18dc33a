#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "mcm/field_grid.hpp"

namespace mcm {

struct GridIoError : std::runtime_error {
    explicit GridIoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Binary grid format, little-endian throughout:
//   magic "MCMG" | u32 version=1 | u32 width | u32 height
//   f64 re_min | f64 re_max | f64 im_min | f64 im_max
//   u8 payload kind (0 escape depth, 1 verdict code) | i32 payload[w*h]
constexpr char kGridMagic[4] = {'M', 'C', 'M', 'G'};
constexpr std::uint32_t kGridVersion = 1;

namespace detail {

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is, const char* what) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw GridIoError(std::string("grid file truncated reading ") + what);
    return v;
}

} // namespace detail

inline void write_grid(const FieldGrid& g, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw GridIoError("cannot open for writing: " + path);
    os.write(kGridMagic, 4);
    detail::put<std::uint32_t>(os, kGridVersion);
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(g.width));
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(g.height));
    detail::put<double>(os, g.re_min);
    detail::put<double>(os, g.re_max);
    detail::put<double>(os, g.im_min);
    detail::put<double>(os, g.im_max);
    detail::put<std::uint8_t>(os, static_cast<std::uint8_t>(g.payload));
    os.write(reinterpret_cast<const char*>(g.data.data()),
             static_cast<std::streamsize>(g.data.size() * sizeof(std::int32_t)));
    if (!os) throw GridIoError("write failed: " + path);
}

inline FieldGrid read_grid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw GridIoError("cannot open for reading: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kGridMagic, 4) != 0)
        throw GridIoError("bad magic in " + path);
    auto version = detail::get<std::uint32_t>(is, "version");
    if (version != kGridVersion)
        throw GridIoError("unsupported version " + std::to_string(version) + " in " + path);
    auto width = detail::get<std::uint32_t>(is, "width");
    auto height = detail::get<std::uint32_t>(is, "height");
    double re_min = detail::get<double>(is, "re_min");
    double re_max = detail::get<double>(is, "re_max");
    double im_min = detail::get<double>(is, "im_min");
    double im_max = detail::get<double>(is, "im_max");
    auto payload = detail::get<std::uint8_t>(is, "payload kind");
    if (payload > 1) throw GridIoError("unknown payload kind in " + path);
    FieldGrid g = make_grid(static_cast<int>(width), static_cast<int>(height),
                            re_min, re_max, im_min, im_max,
                            static_cast<PayloadKind>(payload));
    is.read(reinterpret_cast<char*>(g.data.data()),
            static_cast<std::streamsize>(g.data.size() * sizeof(std::int32_t)));
    if (!is || static_cast<std::size_t>(is.gcount()) != g.data.size() * sizeof(std::int32_t))
        throw GridIoError("grid file truncated reading payload of " + path);
    return g;
}

} // namespace mcm
