#pragma once

// SENSE encoding operator A_j = U F C_j, its adjoint and the data-consistency step.

#include <pista/numerics.hpp>

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace pista {

/// J complex coil maps of one shape, pixelwise normalized so that Σ_j |C_j(p)|² = 1.
class CoilSensitivities {
public:
    static constexpr double normalization_tolerance = 1e-10;

    CoilSensitivities() = default;

    explicit CoilSensitivities(std::vector<ComplexImage> maps) : maps_(std::move(maps))
    {
        detail::require_shape(!maps_.empty(), "CoilSensitivities: at least one coil required");
        for (const auto& m : maps_)
            detail::require_shape(m.same_shape(maps_.front()), "CoilSensitivities: coil maps differ in shape");
        const double dev = max_normalization_error();
        if (!(dev <= normalization_tolerance))
            throw ConfigError("CoilSensitivities: maps are not pixelwise normalized (max |Σ|C|²-1| = " +
                              std::to_string(dev) + ")");
    }

    /// Rescales arbitrary maps so their pixelwise energy is 1. Pixels with zero energy get coil 0 = 1.
    static CoilSensitivities normalized(std::vector<ComplexImage> maps)
    {
        detail::require_shape(!maps.empty(), "CoilSensitivities: at least one coil required");
        for (const auto& m : maps)
            detail::require_shape(m.same_shape(maps.front()), "CoilSensitivities: coil maps differ in shape");
        const std::size_t n = maps.front().size();
        for (std::size_t i = 0; i < n; ++i) {
            double energy = 0.0;
            for (const auto& m : maps) energy += std::norm(m[i]);
            if (energy > 0.0) {
                const double inv = 1.0 / std::sqrt(energy);
                for (auto& m : maps) m[i] *= inv;
            } else {
                for (auto& m : maps) m[i] = 0.0;
                maps.front()[i] = 1.0;
            }
        }
        return CoilSensitivities(std::move(maps));
    }

    int coils() const noexcept { return static_cast<int>(maps_.size()); }
    int height() const noexcept { return maps_.empty() ? 0 : maps_.front().height(); }
    int width() const noexcept { return maps_.empty() ? 0 : maps_.front().width(); }
    const ComplexImage& operator[](int j) const noexcept { return maps_[j]; }
    const std::vector<ComplexImage>& maps() const noexcept { return maps_; }

    double max_normalization_error() const noexcept
    {
        double worst = 0.0;
        const std::size_t n = maps_.front().size();
        for (std::size_t i = 0; i < n; ++i) {
            double energy = 0.0;
            for (const auto& m : maps_) energy += std::norm(m[i]);
            worst = std::max(worst, std::abs(energy - 1.0));
        }
        return worst;
    }

private:
    std::vector<ComplexImage> maps_;
};

/// Cartesian mask: a sorted set of fully sampled phase-encode rows.
class SamplingMask {
public:
    SamplingMask() = default;

    SamplingMask(int height, int width, std::vector<int> lines)
        : height_(height), width_(width), lines_(std::move(lines))
    {
        detail::require_shape(height > 0 && width > 0, "SamplingMask: dimensions must be positive");
        detail::require_config(!lines_.empty(), "SamplingMask: no sampled lines");
        std::sort(lines_.begin(), lines_.end());
        detail::require_config(std::adjacent_find(lines_.begin(), lines_.end()) == lines_.end(),
                               "SamplingMask: duplicate line index");
        detail::require_config(lines_.front() >= 0 && lines_.back() < height,
                               "SamplingMask: line index out of range");
        sampled_.assign(height, 0);
        for (int r : lines_) sampled_[r] = 1;
    }

    static SamplingMask full(int height, int width)
    {
        std::vector<int> all(height);
        for (int r = 0; r < height; ++r) all[r] = r;
        return {height, width, std::move(all)};
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    const std::vector<int>& lines() const noexcept { return lines_; }
    bool row_sampled(int row) const noexcept { return sampled_[row] != 0; }

    /// Fully sampled over sampled lines: H / number of lines.
    double acceleration() const noexcept { return static_cast<double>(height_) / static_cast<double>(lines_.size()); }

    /// Realized binary mask value at (row, col).
    double at(int row, int /*col*/) const noexcept { return sampled_[row] ? 1.0 : 0.0; }

    bool matches(const ComplexImage& img) const noexcept
    {
        return img.height() == height_ && img.width() == width_;
    }

    /// Zeroes every unsampled row in place (U^T U).
    void apply(ComplexImage& k) const noexcept
    {
        for (int r = 0; r < height_; ++r) {
            if (sampled_[r]) continue;
            for (int c = 0; c < width_; ++c) k(r, c) = 0.0;
        }
    }

    friend bool operator==(const SamplingMask& a, const SamplingMask& b)
    {
        return a.height_ == b.height_ && a.width_ == b.width_ && a.lines_ == b.lines_;
    }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<int> lines_;
    std::vector<std::uint8_t> sampled_;
};

/// Per-coil k-space samples; entries on unsampled lines are exactly zero.
class MultiCoilKSpace {
public:
    MultiCoilKSpace() = default;

    MultiCoilKSpace(std::vector<ComplexImage> coils, SamplingMask mask)
        : coils_(std::move(coils)), mask_(std::move(mask))
    {
        detail::require_shape(!coils_.empty(), "MultiCoilKSpace: at least one coil required");
        for (const auto& k : coils_) {
            detail::require_shape(mask_.matches(k), "MultiCoilKSpace: coil data does not match mask shape");
            for (int r = 0; r < k.height(); ++r) {
                if (mask_.row_sampled(r)) continue;
                for (int c = 0; c < k.width(); ++c)
                    if (k(r, c) != Complex{0.0, 0.0})
                        throw ConfigError("MultiCoilKSpace: nonzero sample on an unsampled line");
            }
        }
    }

    int coils() const noexcept { return static_cast<int>(coils_.size()); }
    const ComplexImage& operator[](int j) const noexcept { return coils_[j]; }
    const std::vector<ComplexImage>& data() const noexcept { return coils_; }
    const SamplingMask& mask() const noexcept { return mask_; }

    friend bool operator==(const MultiCoilKSpace&, const MultiCoilKSpace&) = default;

private:
    std::vector<ComplexImage> coils_;
    SamplingMask mask_;
};

namespace detail {

inline void require_operands(const ComplexImage& x, const CoilSensitivities& coils, const SamplingMask& mask)
{
    require_shape(coils.coils() > 0, "SENSE: empty coil set");
    require_shape(x.height() == coils.height() && x.width() == coils.width(), "SENSE: image/coil shape mismatch");
    require_shape(mask.matches(x), "SENSE: image/mask shape mismatch");
}

} // namespace detail

/// y_j = U F (C_j ⊙ x)
inline MultiCoilKSpace sense_forward(const ComplexImage& x, const CoilSensitivities& coils, const SamplingMask& mask)
{
    detail::require_operands(x, coils, mask);
    std::vector<ComplexImage> out;
    out.reserve(coils.coils());
    ComplexImage weighted(x.height(), x.width());
    for (int j = 0; j < coils.coils(); ++j) {
        const ComplexImage& map = coils[j];
        for (std::size_t i = 0; i < x.size(); ++i) weighted[i] = map[i] * x[i];
        ComplexImage k = fft2c(weighted);
        mask.apply(k);
        out.push_back(std::move(k));
    }
    return {std::move(out), mask};
}

/// x = Σ_j conj(C_j) ⊙ F^H U^T y_j, summed in coil order.
inline ComplexImage sense_adjoint(const MultiCoilKSpace& y, const CoilSensitivities& coils, const SamplingMask& mask)
{
    detail::require_shape(y.coils() == coils.coils(), "sense_adjoint: coil count mismatch");
    detail::require_operands(y[0], coils, mask);
    ComplexImage x(coils.height(), coils.width());
    for (int j = 0; j < coils.coils(); ++j) {
        ComplexImage k = y[j];
        mask.apply(k);
        const ComplexImage img = ifft2c(k);
        const ComplexImage& map = coils[j];
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += std::conj(map[i]) * img[i];
    }
    return x;
}

/// A^H A x, the Gram operator of the encoding.
inline ComplexImage sense_normal(const ComplexImage& x, const CoilSensitivities& coils, const SamplingMask& mask)
{
    return sense_adjoint(sense_forward(x, coils, mask), coils, mask);
}

/// A^H (y - A x)
inline ComplexImage sense_residual(const ComplexImage& x, const MultiCoilKSpace& y, const CoilSensitivities& coils,
                                   const SamplingMask& mask)
{
    detail::require_shape(y.coils() == coils.coils(), "sense_residual: coil count mismatch");
    MultiCoilKSpace predicted = sense_forward(x, coils, mask);
    std::vector<ComplexImage> diff;
    diff.reserve(y.coils());
    for (int j = 0; j < y.coils(); ++j) {
        detail::require_shape(y[j].same_shape(x), "sense_residual: k-space/image shape mismatch");
        diff.push_back(y[j] - predicted[j]);
    }
    return sense_adjoint(MultiCoilKSpace(std::move(diff), mask), coils, mask);
}

/// t = x + γ Σ_j C_j^H F^H U^T (y_j - U F C_j x)
inline ComplexImage data_consistency(const ComplexImage& x, const MultiCoilKSpace& y, const CoilSensitivities& coils,
                                     const SamplingMask& mask, double gamma)
{
    ComplexImage t = x;
    t.add_scaled(gamma, sense_residual(x, y, coils, mask));
    return t;
}

} // namespace pista
