#pragma once

// Synthetic acquisitions: ellipse phantoms, smooth coil maps, variable-density Cartesian
// masks and noisy multi-coil k-space.

#include <pista/sample.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace pista {

/// SplitMix64 finalizer; derives independent stream seeds from (base, index, stream).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t stream) noexcept
{
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1) + 0xbf58476d1ce4e5b9ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct PhantomSpec {
    int height = 64;
    int width = 64;
    std::uint64_t seed = 0;
    int min_ellipses = 4;
    int max_ellipses = 10;
    double intensity_min = 0.0;
    double intensity_max = 1.0;
    bool smooth_phase = false;
    bool shepp_logan = false; ///< fixed modified Shepp-Logan layout instead of random ellipses

    void validate() const
    {
        detail::require_config(height >= 16 && width >= 16 && height % 2 == 0 && width % 2 == 0,
                               "PhantomSpec: dimensions must be even and at least 16");
        detail::require_config(min_ellipses >= 1 && max_ellipses >= min_ellipses,
                               "PhantomSpec: invalid ellipse count range");
        detail::require_config(intensity_min >= 0.0 && intensity_max <= 1.0 && intensity_min < intensity_max,
                               "PhantomSpec: intensity range must be a nonempty subrange of [0, 1]");
    }
};

struct AcquisitionSpec {
    int coils = 4;
    double af = 4.0;
    int center_lines = -1; ///< negative selects default_center_lines
    double noise = 0.01;   ///< standard deviation per real component
    std::uint64_t seed = 0;

    void validate(int height) const
    {
        detail::require_config(coils >= 1, "AcquisitionSpec: at least one coil required");
        detail::require_config(af >= 1.0, "AcquisitionSpec: acceleration factor must be >= 1");
        detail::require_config(center_lines <= height, "AcquisitionSpec: more center lines than rows");
        detail::require_config(noise >= 0.0, "AcquisitionSpec: noise must be nonnegative");
    }
};

/// Calibration band scaled from 24 of 320 rows, capped by the line budget.
inline int default_center_lines(int height, double af)
{
    const long budget = std::lround(height / af);
    const long band = std::max(1L, std::lround(height * 24.0 / 320.0));
    return static_cast<int>(std::min(budget, band));
}

namespace detail {

struct Ellipse {
    double intensity, a, b, x0, y0, angle;
};

inline void paint(std::vector<double>& img, int h, int w, const Ellipse& e)
{
    const double cs = std::cos(e.angle);
    const double sn = std::sin(e.angle);
    for (int r = 0; r < h; ++r) {
        const double v = (h / 2.0 - r) / (h / 2.0);
        for (int c = 0; c < w; ++c) {
            const double u = (c - w / 2.0) / (w / 2.0);
            const double du = u - e.x0;
            const double dv = v - e.y0;
            const double p = (du * cs + dv * sn) / e.a;
            const double q = (-du * sn + dv * cs) / e.b;
            if (p * p + q * q <= 1.0) img[static_cast<std::size_t>(r) * w + c] += e.intensity;
        }
    }
}

inline const std::vector<Ellipse>& modified_shepp_logan()
{
    constexpr double deg = std::numbers::pi / 180.0;
    static const std::vector<Ellipse> table{
        {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},          {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
        {-0.2, 0.11, 0.31, 0.22, 0.0, -18 * deg},  {-0.2, 0.16, 0.41, -0.22, 0.0, 18 * deg},
        {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},         {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
        {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},       {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
        {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},     {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
    };
    return table;
}

} // namespace detail

/// Random-ellipse (or Shepp-Logan) magnitude clipped to the intensity range, with optional smooth phase.
inline ComplexImage gen_phantom(const PhantomSpec& spec)
{
    spec.validate();
    const int h = spec.height;
    const int w = spec.width;
    std::mt19937_64 rng(spec.seed);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

    std::vector<double> mag(static_cast<std::size_t>(h) * w, 0.0);
    if (spec.shepp_logan) {
        for (const auto& e : detail::modified_shepp_logan()) detail::paint(mag, h, w, e);
    } else {
        const double span = spec.intensity_max - spec.intensity_min;
        const int count = std::uniform_int_distribution<int>(spec.min_ellipses, spec.max_ellipses)(rng);
        // body
        detail::paint(mag, h, w,
                      {spec.intensity_min + uniform(0.4, 0.8) * span, uniform(0.6, 0.9), uniform(0.6, 0.9),
                       uniform(-0.05, 0.05), uniform(-0.05, 0.05), uniform(-0.5, 0.5)});
        for (int k = 1; k < count; ++k) {
            const double radius = uniform(0.0, 0.55);
            const double theta = uniform(0.0, 2.0 * std::numbers::pi);
            detail::paint(mag, h, w,
                          {uniform(-0.5, 0.5) * span, uniform(0.05, 0.3), uniform(0.05, 0.3), radius * std::cos(theta),
                           radius * std::sin(theta), uniform(0.0, std::numbers::pi)});
        }
    }
    for (auto& m : mag) m = std::clamp(m, spec.intensity_min, spec.intensity_max);

    ComplexImage img(h, w);
    if (!spec.smooth_phase) {
        for (std::size_t i = 0; i < mag.size(); ++i) img[i] = mag[i];
        return img;
    }
    const double quarter = std::numbers::pi / 4.0;
    const double c0 = uniform(-std::numbers::pi, std::numbers::pi);
    const double cu = uniform(-quarter, quarter), cv = uniform(-quarter, quarter);
    const double cuu = uniform(-quarter, quarter), cuv = uniform(-quarter, quarter), cvv = uniform(-quarter, quarter);
    for (int r = 0; r < h; ++r) {
        const double v = (h / 2.0 - r) / (h / 2.0);
        for (int c = 0; c < w; ++c) {
            const double u = (c - w / 2.0) / (w / 2.0);
            const double phi = c0 + cu * u + cv * v + cuu * u * u + cuv * u * v + cvv * v * v;
            const std::size_t i = static_cast<std::size_t>(r) * w + c;
            img[i] = std::polar(mag[i], phi);
        }
    }
    return img;
}

/// Gaussian magnitude bumps centered at equally spaced angles near the FOV edge with
/// linear phase ramps, normalized pixelwise so that Σ_j |C_j|² = 1.
inline CoilSensitivities gen_coils(int coils, int height, int width, std::uint64_t seed)
{
    detail::require_config(coils >= 1, "gen_coils: at least one coil required");
    detail::require_config(height >= 1 && width >= 1, "gen_coils: dimensions must be positive");
    constexpr double ring = 0.9;  // normalized radius of the coil centers
    constexpr double spread = 0.6; // normalized Gaussian width
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

    const double offset = uniform(0.0, 2.0 * std::numbers::pi / coils);
    std::vector<ComplexImage> maps;
    maps.reserve(coils);
    for (int j = 0; j < coils; ++j) {
        const double angle = offset + 2.0 * std::numbers::pi * j / coils;
        const double cx = ring * std::cos(angle);
        const double cy = ring * std::sin(angle);
        const double phase0 = uniform(-std::numbers::pi, std::numbers::pi);
        const double ku = uniform(-std::numbers::pi / 2, std::numbers::pi / 2);
        const double kv = uniform(-std::numbers::pi / 2, std::numbers::pi / 2);
        ComplexImage map(height, width);
        for (int r = 0; r < height; ++r) {
            const double v = (height / 2.0 - r) / (height / 2.0);
            for (int c = 0; c < width; ++c) {
                const double u = (c - width / 2.0) / (width / 2.0);
                const double d2 = (u - cx) * (u - cx) + (v - cy) * (v - cy);
                map(r, c) = std::polar(std::exp(-d2 / (2.0 * spread * spread)), phase0 + ku * u + kv * v);
            }
        }
        maps.push_back(std::move(map));
    }
    return CoilSensitivities::normalized(std::move(maps));
}

/// round(H/AF) fully sampled rows: the center_lines rows around H/2, plus rows drawn without
/// replacement with weight exp(-(d / (H/4))²), d the distance to the center row.
inline SamplingMask gen_mask(int height, int width, double af, int center_lines, std::uint64_t seed)
{
    detail::require_config(height >= 1 && width >= 1, "gen_mask: dimensions must be positive");
    detail::require_config(af >= 1.0, "gen_mask: acceleration factor must be >= 1");
    const long total = std::lround(height / af);
    detail::require_config(total >= 1, "gen_mask: acceleration leaves no lines to sample");
    detail::require_config(center_lines >= 0 && center_lines <= total,
                           "gen_mask: center_lines must lie in [0, round(H/AF)]");

    const int center = height / 2;
    std::vector<std::uint8_t> chosen(height, 0);
    std::vector<int> lines;
    const int start = center - center_lines / 2;
    for (int r = start; r < start + center_lines; ++r) {
        chosen[r] = 1;
        lines.push_back(r);
    }

    const double scale = height / 4.0;
    std::vector<double> weight(height);
    for (int r = 0; r < height; ++r) {
        const double d = (r - center) / scale;
        weight[r] = std::exp(-d * d);
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (static_cast<long>(lines.size()) < total) {
        double sum = 0.0;
        for (int r = 0; r < height; ++r)
            if (!chosen[r]) sum += weight[r];
        double target = unit(rng) * sum;
        int pick = -1;
        for (int r = 0; r < height; ++r) {
            if (chosen[r]) continue;
            pick = r;
            target -= weight[r];
            if (target < 0.0) break;
        }
        chosen[pick] = 1;
        lines.push_back(pick);
    }
    return {height, width, std::move(lines)};
}

/// sense_forward plus complex Gaussian noise (σ per real component) on sampled entries only.
inline MultiCoilKSpace simulate_acquisition(const ComplexImage& x, const CoilSensitivities& coils,
                                            const SamplingMask& mask, double sigma, std::uint64_t seed)
{
    detail::require_config(sigma >= 0.0, "simulate_acquisition: sigma must be nonnegative");
    MultiCoilKSpace clean = sense_forward(x, coils, mask);
    if (sigma == 0.0) return clean;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<ComplexImage> noisy = clean.data();
    for (auto& k : noisy)
        for (int r : mask.lines())
            for (int c = 0; c < k.width(); ++c) {
                const double re = noise(rng);
                const double im = noise(rng);
                k(r, c) += Complex{re, im};
            }
    return {std::move(noisy), mask};
}

/// Complete sample k of a synthetic dataset; every generator draws from its own derived seed.
inline Sample make_sample(const PhantomSpec& phantom_base, const AcquisitionSpec& acq, std::uint64_t index)
{
    acq.validate(phantom_base.height);
    PhantomSpec phantom = phantom_base;
    phantom.seed = derive_seed(acq.seed, index, 0);
    const int h = phantom.height;
    const int w = phantom.width;
    const int center = acq.center_lines < 0 ? default_center_lines(h, acq.af) : acq.center_lines;

    Sample s;
    s.truth = gen_phantom(phantom);
    s.coils = gen_coils(acq.coils, h, w, derive_seed(acq.seed, index, 1));
    s.mask = gen_mask(h, w, acq.af, center, derive_seed(acq.seed, index, 2));
    s.kspace = simulate_acquisition(s.truth, s.coils, s.mask, acq.noise, derive_seed(acq.seed, index, 3));
    return s;
}

inline std::vector<Sample> make_dataset(const PhantomSpec& phantom, const AcquisitionSpec& acq, int count,
                                        std::uint64_t first_index = 0)
{
    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(std::max(0, count)));
    for (int k = 0; k < count; ++k) out.push_back(make_sample(phantom, acq, first_index + static_cast<std::uint64_t>(k)));
    return out;
}

} // namespace pista
