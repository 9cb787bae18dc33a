#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mcm/dynamics.hpp"

namespace mcm {

enum class PayloadKind : std::uint8_t { EscapeDepth = 0, VerdictCode = 1 };

// Rectangular raster of per-point dynamical data. data is row-major,
// row 0 at the bottom of the bounds (imMin); -1 marks bounded/undefined.
struct FieldGrid {
    int width = 0;
    int height = 0;
    double re_min = 0.0, re_max = 0.0, im_min = 0.0, im_max = 0.0;
    PayloadKind payload = PayloadKind::EscapeDepth;
    std::vector<std::int32_t> data;

    std::int32_t at(int i, int j) const { return data[static_cast<std::size_t>(j) * width + i]; }
    std::int32_t& at(int i, int j) { return data[static_cast<std::size_t>(j) * width + i]; }

    // Pixel-center convention: pixel (i, j) samples
    //   re_min + (i + 0.5) (re_max - re_min) / width
    //   im_min + (j + 0.5) (im_max - im_min) / height
    cplx pixel_center(int i, int j) const {
        double re = re_min + (i + 0.5) * (re_max - re_min) / width;
        double im = im_min + (j + 0.5) * (im_max - im_min) / height;
        return cplx(re, im);
    }
    double pixel_width() const { return (re_max - re_min) / width; }
    double pixel_height() const { return (im_max - im_min) / height; }
};

// 2^26 payload entries (256 MiB of i32) is the allocation ceiling.
constexpr std::int64_t kMaxGridCells = 1ll << 26;

inline FieldGrid make_grid(int width, int height, double re_min, double re_max,
                           double im_min, double im_max, PayloadKind payload) {
    if (width < 1 || height < 1)
        throw std::invalid_argument("grid: width and height must be >= 1");
    if (!(re_min < re_max) || !(im_min < im_max))
        throw std::invalid_argument("grid: degenerate bounds");
    if (static_cast<std::int64_t>(width) * height > kMaxGridCells)
        throw std::length_error("grid: size exceeds memory budget of 2^26 cells");
    FieldGrid g;
    g.width = width;
    g.height = height;
    g.re_min = re_min;
    g.re_max = re_max;
    g.im_min = im_min;
    g.im_max = im_max;
    g.payload = payload;
    g.data.assign(static_cast<std::size_t>(width) * height, -1);
    return g;
}

inline std::uint64_t fnv1a(const void* bytes, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t grid_hash(const FieldGrid& g) {
    std::uint64_t h = fnv1a(g.data.data(), g.data.size() * sizeof(std::int32_t));
    std::int32_t hdr[2] = {g.width, g.height};
    h ^= fnv1a(hdr, sizeof hdr);
    return h;
}

} // namespace mcm
