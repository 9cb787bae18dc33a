#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "mcm/field_grid.hpp"

namespace mcm {

struct PngError : std::runtime_error {
    explicit PngError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

// Palette and shading for grid images. Verdict grids map codes through
// `palette`; escape grids shade depth with a log ramp controlled by gamma
// (cosmetic only, analysis always uses raw depths).
struct ImageSpec {
    std::map<std::int32_t, Rgb> palette;
    double gamma = 1.0;

    static ImageSpec verdict_default() {
        ImageSpec s;
        s.palette = {
            {0, {0, 0, 0}},        // undefined
            {1, {230, 60, 40}},    // Cantor set
            {2, {60, 120, 230}},   // Cantor circles
            {3, {240, 200, 60}},   // Sierpinski (escaping)
            {4, {20, 20, 20}},     // non-escaping
            {5, {140, 140, 140}},  // indeterminate
        };
        return s;
    }
    static ImageSpec escape_default(double gamma = 1.0) {
        ImageSpec s;
        s.gamma = gamma;
        return s;
    }
};

namespace detail {

inline void put_u32_be(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 24));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}

inline void write_chunk(std::ofstream& os, const char type[4],
                        const std::vector<std::uint8_t>& payload) {
    std::vector<std::uint8_t> head;
    put_u32_be(head, static_cast<std::uint32_t>(payload.size()));
    os.write(reinterpret_cast<const char*>(head.data()), 4);
    os.write(type, 4);
    if (!payload.empty())
        os.write(reinterpret_cast<const char*>(payload.data()),
                 static_cast<std::streamsize>(payload.size()));
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!payload.empty()) crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
    std::vector<std::uint8_t> tail;
    put_u32_be(tail, static_cast<std::uint32_t>(crc));
    os.write(reinterpret_cast<const char*>(tail.data()), 4);
}

inline Rgb escape_shade(std::int32_t depth, double gamma) {
    if (depth < 0) return {0, 0, 0};
    // smooth log ramp through a fixed blue-gold cycle
    double t = std::pow(std::log2(1.0 + depth), gamma >= 1e-9 ? 1.0 / gamma : 1.0);
    double phase = t * 0.7;
    auto chan = [&](double shift) {
        return static_cast<std::uint8_t>(
            std::round(127.5 + 127.5 * std::sin(phase + shift)));
    };
    return {chan(0.0), chan(2.094), chan(4.189)};
}

} // namespace detail

// 8-bit RGB PNG; row order top = im_max. The payload->color mapping must be
// total on verdict grids: an unmapped value is an error naming the value.
inline void encode_png(const FieldGrid& g, const ImageSpec& spec, const std::string& path) {
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(g.height) * (1 + 3 * g.width));
    for (int j = g.height - 1; j >= 0; --j) {
        raw.push_back(0);  // filter: none
        for (int i = 0; i < g.width; ++i) {
            std::int32_t val = g.at(i, j);
            Rgb c;
            if (g.payload == PayloadKind::VerdictCode) {
                auto it = spec.palette.find(val);
                if (it == spec.palette.end())
                    throw PngError("palette has no entry for payload value "
                                   + std::to_string(val));
                c = it->second;
            } else {
                c = detail::escape_shade(val, spec.gamma);
            }
            raw.push_back(c.r);
            raw.push_back(c.g);
            raw.push_back(c.b);
        }
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9)
        != Z_OK)
        throw PngError("deflate failed for " + path);
    compressed.resize(bound);

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw PngError("cannot open for writing: " + path);
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    os.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<std::uint8_t> ihdr;
    detail::put_u32_be(ihdr, static_cast<std::uint32_t>(g.width));
    detail::put_u32_be(ihdr, static_cast<std::uint32_t>(g.height));
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // color type RGB
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // interlace
    detail::write_chunk(os, "IHDR", ihdr);
    detail::write_chunk(os, "IDAT", compressed);
    detail::write_chunk(os, "IEND", {});
    if (!os) throw PngError("write failed: " + path);
}

} // namespace mcm
