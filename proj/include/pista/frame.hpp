#pragma once

// Single-level undecimated Haar tight frame (analysis/synthesis pair) and complex soft-thresholding.

#include <pista/numerics.hpp>

#include <array>

namespace pista {

/// Undecimated subbands, each the size of the source image.
struct FrameCoefficients {
    enum Band { LL = 0, LH = 1, HL = 2, HH = 3 };

    std::array<ComplexImage, 4> bands;

    ComplexImage& operator[](int b) noexcept { return bands[b]; }
    const ComplexImage& operator[](int b) const noexcept { return bands[b]; }

    double l1_norm() const noexcept
    {
        double acc = 0.0;
        for (const auto& band : bands)
            for (const auto& v : band.values()) acc += std::abs(v);
        return acc;
    }

    double squared_norm() const noexcept
    {
        double acc = 0.0;
        for (const auto& band : bands) acc += pista::squared_norm(band);
        return acc;
    }
};

inline Complex inner(const FrameCoefficients& a, const FrameCoefficients& b)
{
    Complex acc{0.0, 0.0};
    for (int k = 0; k < 4; ++k) acc += inner(a[k], b[k]);
    return acc;
}

/// Haar analysis with taps (x[r,c], x[r,c+1], x[r+1,c], x[r+1,c+1]) / 4 and periodic wrap.
/// LH is high-pass along columns (horizontal), HL along rows, HH along both.
inline FrameCoefficients analyze(const ComplexImage& x)
{
    const int h = x.height();
    const int w = x.width();
    detail::require_shape(h % 2 == 0 && w % 2 == 0, "analyze: image dimensions must be even");
    FrameCoefficients a{{ComplexImage(h, w), ComplexImage(h, w), ComplexImage(h, w), ComplexImage(h, w)}};
    for (int r = 0; r < h; ++r) {
        const int r1 = (r + 1) % h;
        for (int c = 0; c < w; ++c) {
            const int c1 = (c + 1) % w;
            const Complex x00 = x(r, c);
            const Complex x01 = x(r, c1);
            const Complex x10 = x(r1, c);
            const Complex x11 = x(r1, c1);
            a[FrameCoefficients::LL](r, c) = 0.25 * (x00 + x01 + x10 + x11);
            a[FrameCoefficients::LH](r, c) = 0.25 * (x00 - x01 + x10 - x11);
            a[FrameCoefficients::HL](r, c) = 0.25 * (x00 + x01 - x10 - x11);
            a[FrameCoefficients::HH](r, c) = 0.25 * (x00 - x01 - x10 + x11);
        }
    }
    return a;
}

/// Adjoint of analyze; because the frame is tight with constant 1 it is also its left inverse.
inline ComplexImage synthesize(const FrameCoefficients& a)
{
    const int h = a[0].height();
    const int w = a[0].width();
    for (int k = 1; k < 4; ++k)
        detail::require_shape(a[k].same_shape(a[0]), "synthesize: subband shape mismatch");
    ComplexImage x(h, w);
    for (int r = 0; r < h; ++r) {
        const int rm = (r - 1 + h) % h;
        for (int c = 0; c < w; ++c) {
            const int cm = (c - 1 + w) % w;
            // Coefficient (r', c') touched pixel (r'+dr, c'+dc); gather the four contributors.
            const auto tap = [&](int band, Complex s00, Complex s01, Complex s10, Complex s11) {
                const ComplexImage& b = a[band];
                return s00 * b(r, c) + s01 * b(r, cm) + s10 * b(rm, c) + s11 * b(rm, cm);
            };
            x(r, c) = 0.25 * (tap(FrameCoefficients::LL, 1, 1, 1, 1) + tap(FrameCoefficients::LH, 1, -1, 1, -1) +
                              tap(FrameCoefficients::HL, 1, 1, -1, -1) + tap(FrameCoefficients::HH, 1, -1, -1, 1));
        }
    }
    return x;
}

/// max(|β| - t, 0) β/|β|, with T_t(0) = 0.
inline Complex soft_threshold(Complex beta, double t) noexcept
{
    const double mag = std::abs(beta);
    if (mag <= t) return {0.0, 0.0};
    return beta * ((mag - t) / mag);
}

inline FrameCoefficients soft_threshold(const FrameCoefficients& a, double t)
{
    detail::require_config(t >= 0.0, "soft_threshold: threshold must be nonnegative");
    FrameCoefficients out = a;
    for (auto& band : out.bands)
        for (auto& v : band.values()) v = soft_threshold(v, t);
    return out;
}

} // namespace pista
