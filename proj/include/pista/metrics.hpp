#pragma once

// Image quality metrics (RLNE, MSSIM) and test-set reports.

#include <pista/sample.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <chrono>
#include <functional>
#include <string>
#include <vector>

namespace pista {

/// ‖x_truth − x_hat‖₂ / ‖x_truth‖₂
inline double rlne(const ComplexImage& truth, const ComplexImage& estimate)
{
    detail::require_shape(truth.same_shape(estimate), "rlne: shape mismatch");
    const double ref = norm(truth);
    detail::require_config(ref > 0.0, "rlne: reference image has zero norm");
    double err = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) err += std::norm(truth[i] - estimate[i]);
    return std::sqrt(err) / ref;
}

struct SsimWindow {
    static constexpr int size = 11;
    static constexpr double sigma = 1.5;
    static constexpr double k1 = 0.01;
    static constexpr double k2 = 0.03;

    /// Normalized 11×11 Gaussian weights, row-major.
    static const std::array<double, size * size>& weights()
    {
        static const std::array<double, size * size> w = [] {
            std::array<double, size * size> out{};
            const int half = size / 2;
            double total = 0.0;
            for (int r = 0; r < size; ++r)
                for (int c = 0; c < size; ++c) {
                    const double d2 = static_cast<double>((r - half) * (r - half) + (c - half) * (c - half));
                    out[r * size + c] = std::exp(-d2 / (2.0 * sigma * sigma));
                    total += out[r * size + c];
                }
            for (auto& v : out) v /= total;
            return out;
        }();
        return w;
    }
};

/// Magnitudes of both images divided by the reference maximum, so the dynamic range is 1.
inline std::pair<std::vector<double>, std::vector<double>> normalized_magnitudes(const ComplexImage& truth,
                                                                                 const ComplexImage& estimate)
{
    detail::require_shape(truth.same_shape(estimate), "mssim: shape mismatch");
    double peak = 0.0;
    for (const auto& v : truth.values()) peak = std::max(peak, std::abs(v));
    detail::require_config(peak > 0.0, "mssim: reference image is identically zero");
    std::vector<double> a(truth.size()), b(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        a[i] = std::abs(truth[i]) / peak;
        b[i] = std::abs(estimate[i]) / peak;
    }
    return {std::move(a), std::move(b)};
}

/// Mean SSIM over all valid 11×11 Gaussian windows (σ = 1.5, K1 = 0.01, K2 = 0.03, L = 1).
inline double mssim(const ComplexImage& truth, const ComplexImage& estimate)
{
    constexpr int n = SsimWindow::size;
    const int h = truth.height();
    const int w = truth.width();
    detail::require_shape(h >= n && w >= n, "mssim: image smaller than the 11x11 window");
    const auto [x, y] = normalized_magnitudes(truth, estimate);
    const auto& weight = SsimWindow::weights();
    const double c1 = SsimWindow::k1 * SsimWindow::k1;
    const double c2 = SsimWindow::k2 * SsimWindow::k2;

    double total = 0.0;
    std::size_t windows = 0;
    for (int r0 = 0; r0 + n <= h; ++r0) {
        for (int c0 = 0; c0 + n <= w; ++c0) {
            double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (int r = 0; r < n; ++r) {
                for (int c = 0; c < n; ++c) {
                    const std::size_t i = static_cast<std::size_t>(r0 + r) * w + (c0 + c);
                    const double wt = weight[r * n + c];
                    mx += wt * x[i];
                    my += wt * y[i];
                    sxx += wt * x[i] * x[i];
                    syy += wt * y[i] * y[i];
                    sxy += wt * x[i] * y[i];
                }
            }
            sxx -= mx * mx;
            syy -= my * my;
            sxy -= mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0; ///< sample standard deviation (divisor n−1); 0 for a single value
};

inline MeanStd mean_std(const std::vector<double>& values)
{
    detail::require_config(!values.empty(), "mean_std: no values");
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

struct ImageScore {
    double rlne = 0.0;
    double mssim = 0.0;
};

struct ReconReport {
    std::string method;
    double af = 0.0;
    std::vector<ImageScore> per_image;
    double mean_rlne = 0.0;
    double std_rlne = 0.0;
    double mean_mssim = 0.0;
    double std_mssim = 0.0;
    double sec_per_slice = 0.0;

    /// Fills the aggregate fields from per_image.
    void aggregate()
    {
        std::vector<double> r, m;
        for (const auto& s : per_image) {
            r.push_back(s.rlne);
            m.push_back(s.mssim);
        }
        const MeanStd rs = mean_std(r);
        const MeanStd ms = mean_std(m);
        mean_rlne = rs.mean;
        std_rlne = rs.std;
        mean_mssim = ms.mean;
        std_mssim = ms.std;
    }
};

inline nlohmann::json to_json(const ReconReport& report)
{
    nlohmann::json per = nlohmann::json::array();
    for (const auto& s : report.per_image) per.push_back({{"rlne", s.rlne}, {"mssim", s.mssim}});
    return {{"method", report.method},       {"af", report.af},
            {"per_image", per},              {"mean_rlne", report.mean_rlne},
            {"std_rlne", report.std_rlne},   {"mean_mssim", report.mean_mssim},
            {"std_mssim", report.std_mssim}, {"sec_per_slice", report.sec_per_slice}};
}

inline ReconReport report_from_json(const nlohmann::json& j)
{
    ReconReport r;
    r.method = j.at("method").get<std::string>();
    r.af = j.at("af").get<double>();
    for (const auto& s : j.at("per_image")) r.per_image.push_back({s.at("rlne").get<double>(), s.at("mssim").get<double>()});
    r.mean_rlne = j.at("mean_rlne").get<double>();
    r.std_rlne = j.at("std_rlne").get<double>();
    r.mean_mssim = j.at("mean_mssim").get<double>();
    r.std_mssim = j.at("std_mssim").get<double>();
    r.sec_per_slice = j.at("sec_per_slice").get<double>();
    return r;
}

using ReconstructionProcedure = std::function<ComplexImage(const Sample&)>;

/// Runs the procedure on every sample in order, scores it against the truth, and aggregates.
inline ReconReport evaluate(const std::vector<Sample>& test_set, const ReconstructionProcedure& procedure,
                            std::string method, double af)
{
    detail::require_config(!test_set.empty(), "evaluate: empty test set");
    ReconReport report;
    report.method = std::move(method);
    report.af = af;
    double seconds = 0.0;
    for (const auto& sample : test_set) {
        const auto start = std::chrono::steady_clock::now();
        const ComplexImage estimate = procedure(sample);
        seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        report.per_image.push_back({rlne(sample.truth, estimate), mssim(sample.truth, estimate)});
    }
    report.aggregate();
    report.sec_per_slice = seconds / static_cast<double>(test_set.size());
    return report;
}

} // namespace pista
