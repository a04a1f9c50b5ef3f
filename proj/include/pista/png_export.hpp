#pragma once

// 8-bit grayscale PNG export of magnitude images and amplified error maps.

#include <pista/numerics.hpp>

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

namespace pista {

struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;
};

/// Maps |x| · gain / scale_max onto [0, 255], clipping above.
inline GrayImage to_gray(const ComplexImage& x, double scale_max, double gain = 1.0)
{
    detail::require_config(scale_max > 0.0, "to_gray: scale maximum must be positive");
    GrayImage g{x.height(), x.width(), std::vector<std::uint8_t>(x.size())};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = std::clamp(gain * std::abs(x[i]) / scale_max, 0.0, 1.0);
        g.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    return g;
}

inline double peak_magnitude(const ComplexImage& x) noexcept
{
    double peak = 0.0;
    for (const auto& v : x.values()) peak = std::max(peak, std::abs(v));
    return peak;
}

/// |truth − estimate| amplified by gain, scaled by the truth maximum.
inline GrayImage error_map(const ComplexImage& truth, const ComplexImage& estimate, double gain = 5.0)
{
    return to_gray(truth - estimate, peak_magnitude(truth), gain);
}

inline void write_png(const std::filesystem::path& path, const GrayImage& img)
{
    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!file) throw IoError("cannot open " + path.string() + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng error while writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < img.height; ++r)
        png_write_row(png, const_cast<png_bytep>(img.pixels.data() + static_cast<std::size_t>(r) * img.width));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace pista
