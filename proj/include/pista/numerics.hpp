#pragma once

// Complex images, real feature maps and the centered unitary 2D FFT.

#include <pista/error.hpp>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <fftw3.h>

namespace pista {

using Complex = std::complex<double>;

/// Row-major H×W complex image.
class ComplexImage {
public:
    ComplexImage() = default;

    ComplexImage(int height, int width)
        : height_(height), width_(width), data_(checked_size(height, width))
    {
    }

    ComplexImage(int height, int width, std::vector<Complex> data)
        : height_(height), width_(width), data_(std::move(data))
    {
        detail::require_shape(data_.size() == checked_size(height, width),
                              "ComplexImage: data length does not match height*width");
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    Complex& operator()(int row, int col) noexcept { return data_[index(row, col)]; }
    const Complex& operator()(int row, int col) const noexcept { return data_[index(row, col)]; }
    Complex& operator[](std::size_t i) noexcept { return data_[i]; }
    const Complex& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<Complex> values() noexcept { return data_; }
    std::span<const Complex> values() const noexcept { return data_; }
    const std::vector<Complex>& vector() const noexcept { return data_; }

    bool same_shape(const ComplexImage& other) const noexcept
    {
        return height_ == other.height_ && width_ == other.width_;
    }

    ComplexImage& operator+=(const ComplexImage& rhs)
    {
        require_same(rhs, "operator+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
        return *this;
    }

    ComplexImage& operator-=(const ComplexImage& rhs)
    {
        require_same(rhs, "operator-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
        return *this;
    }

    ComplexImage& operator*=(Complex s) noexcept
    {
        for (auto& v : data_) v *= s;
        return *this;
    }

    /// this += alpha * x
    ComplexImage& add_scaled(Complex alpha, const ComplexImage& x)
    {
        require_same(x, "add_scaled");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * x.data_[i];
        return *this;
    }

    friend ComplexImage operator+(ComplexImage lhs, const ComplexImage& rhs) { return lhs += rhs; }
    friend ComplexImage operator-(ComplexImage lhs, const ComplexImage& rhs) { return lhs -= rhs; }
    friend ComplexImage operator*(Complex s, ComplexImage x) { return x *= s; }

    friend bool operator==(const ComplexImage&, const ComplexImage&) = default;

private:
    static std::size_t checked_size(int height, int width)
    {
        detail::require_shape(height > 0 && width > 0, "ComplexImage: dimensions must be positive");
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    }

    std::size_t index(int row, int col) const noexcept
    {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
    }

    void require_same(const ComplexImage& other, const char* op) const
    {
        detail::require_shape(same_shape(other), std::string("ComplexImage ") + op + ": shape mismatch");
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<Complex> data_;
};

/// Channel-major C×H×W real tensor (row-major within a channel).
class RealFeatureMap {
public:
    RealFeatureMap() = default;

    RealFeatureMap(int channels, int height, int width)
        : channels_(channels), height_(height), width_(width), data_(checked_size(channels, height, width))
    {
    }

    RealFeatureMap(int channels, int height, int width, std::vector<double> data)
        : channels_(channels), height_(height), width_(width), data_(std::move(data))
    {
        detail::require_shape(data_.size() == checked_size(channels, height, width),
                              "RealFeatureMap: data length does not match channels*height*width");
    }

    int channels() const noexcept { return channels_; }
    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(height_) * width_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(int ch, int row, int col) noexcept { return data_[index(ch, row, col)]; }
    double operator()(int ch, int row, int col) const noexcept { return data_[index(ch, row, col)]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    std::span<double> channel(int ch) noexcept { return {data_.data() + ch * plane_size(), plane_size()}; }
    std::span<const double> channel(int ch) const noexcept { return {data_.data() + ch * plane_size(), plane_size()}; }

    friend bool operator==(const RealFeatureMap&, const RealFeatureMap&) = default;

private:
    static std::size_t checked_size(int channels, int height, int width)
    {
        detail::require_shape(channels > 0 && height > 0 && width > 0,
                              "RealFeatureMap: dimensions must be positive");
        return static_cast<std::size_t>(channels) * height * width;
    }

    std::size_t index(int ch, int row, int col) const noexcept
    {
        return (static_cast<std::size_t>(ch) * height_ + row) * width_ + col;
    }

    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// Σ conj(a_i) b_i
inline Complex inner(const ComplexImage& a, const ComplexImage& b)
{
    detail::require_shape(a.same_shape(b), "inner: shape mismatch");
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
}

inline double squared_norm(const ComplexImage& a) noexcept
{
    double acc = 0.0;
    for (const auto& v : a.values()) acc += std::norm(v);
    return acc;
}

inline double norm(const ComplexImage& a) noexcept { return std::sqrt(squared_norm(a)); }

inline bool is_finite(const ComplexImage& a) noexcept
{
    for (const auto& v : a.values())
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

namespace detail {

/// In-place FFTW plan over an aligned scratch buffer, one per (H, W, direction) and thread.
class FftPlan {
public:
    FftPlan(int height, int width, bool inverse)
        : size_(static_cast<std::size_t>(height) * width),
          buffer_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size_)))
    {
        if (!buffer_) throw std::bad_alloc();
        // The FFTW planner is not reentrant; execution on distinct plans is.
        static std::mutex planner;
        std::lock_guard lock(planner);
        plan_ = fftw_plan_dft_2d(height, width, buffer_, buffer_, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                 FFTW_ESTIMATE);
    }

    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    ~FftPlan()
    {
        fftw_destroy_plan(plan_);
        fftw_free(buffer_);
    }

    Complex* buffer() noexcept { return reinterpret_cast<Complex*>(buffer_); }
    void execute() noexcept { fftw_execute(plan_); }

private:
    std::size_t size_;
    fftw_complex* buffer_;
    fftw_plan plan_;
};

inline FftPlan& plan_for(int height, int width, bool inverse)
{
    thread_local std::map<std::tuple<int, int, bool>, std::unique_ptr<FftPlan>> cache;
    auto& slot = cache[{height, width, inverse}];
    if (!slot) slot = std::make_unique<FftPlan>(height, width, inverse);
    return *slot;
}

inline ComplexImage centered_transform(const ComplexImage& in, bool inverse)
{
    const int h = in.height();
    const int w = in.width();
    const int ch = h / 2;
    const int cw = w / 2;
    FftPlan& plan = plan_for(h, w, inverse);
    Complex* buf = plan.buffer();

    // ifftshift: input (r, c) moves to ((r - ch) mod h, (c - cw) mod w)
    for (int r = 0; r < h; ++r) {
        const Complex* src = &in((r + ch) % h, 0);
        Complex* dst = buf + static_cast<std::size_t>(r) * w;
        std::copy(src + cw, src + w, dst);
        std::copy(src, src + cw, dst + (w - cw));
    }
    plan.execute();

    // fftshift with unitary scaling
    const double scale = 1.0 / std::sqrt(static_cast<double>(h) * w);
    const int sh = h - ch; // fftshift rolls by ceil(N/2) = N - floor(N/2)
    const int sw = w - cw;
    ComplexImage out(h, w);
    for (int r = 0; r < h; ++r) {
        const Complex* src = buf + static_cast<std::size_t>((r + sh) % h) * w;
        Complex* dst = &out(r, 0);
        for (int c = 0; c < cw; ++c) dst[c] = src[c + sw] * scale;
        for (int c = cw; c < w; ++c) dst[c] = src[c - cw] * scale;
    }
    return out;
}

} // namespace detail

/// Centered unitary forward DFT: DC lands at (H/2, W/2), scaled by 1/sqrt(HW).
inline ComplexImage fft2c(const ComplexImage& img) { return detail::centered_transform(img, false); }

/// Exact inverse (and adjoint) of fft2c.
inline ComplexImage ifft2c(const ComplexImage& k) { return detail::centered_transform(k, true); }

} // namespace pista
