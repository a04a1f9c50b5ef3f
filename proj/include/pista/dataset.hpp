#pragma once

// On-disk dataset layout:
//   <dir>/sample_<k>/{truth, coils, mask, kspace}.{hdr,dat}
// truth  c64 [H, W]      coils  c64 [J, H, W]
// mask   f64 [H, W] (0/1, rows uniform)      kspace c64 [J, H, W]

#include <pista/array_io.hpp>
#include <pista/sample.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace pista {

inline std::filesystem::path sample_dir(const std::filesystem::path& root, std::size_t k)
{
    return root / ("sample_" + std::to_string(k));
}

namespace detail {

inline void write_stack(const std::filesystem::path& base, const std::vector<ComplexImage>& planes)
{
    std::vector<Complex> all;
    for (const auto& p : planes) all.insert(all.end(), p.values().begin(), p.values().end());
    write_complex_array(base, {static_cast<std::int64_t>(planes.size()), planes.front().height(), planes.front().width()},
                        all);
}

inline std::vector<ComplexImage> read_stack(const std::filesystem::path& base)
{
    ComplexArray a = read_complex_array(base);
    if (a.shape.size() != 3 || a.shape[0] < 1) throw ShapeError(base.string() + ": expected a [J, H, W] stack");
    const int h = static_cast<int>(a.shape[1]);
    const int w = static_cast<int>(a.shape[2]);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<ComplexImage> out;
    for (std::int64_t j = 0; j < a.shape[0]; ++j)
        out.emplace_back(h, w, std::vector<Complex>(a.data.begin() + j * plane, a.data.begin() + (j + 1) * plane));
    return out;
}

} // namespace detail

inline void write_mask(const std::filesystem::path& base, const SamplingMask& mask)
{
    std::vector<double> realized(static_cast<std::size_t>(mask.height()) * mask.width());
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c) realized[static_cast<std::size_t>(r) * mask.width() + c] = mask.at(r, c);
    write_real_array(base, {mask.height(), mask.width()}, realized);
}

inline SamplingMask read_mask(const std::filesystem::path& base)
{
    RealArray a = read_real_array(base);
    if (a.shape.size() != 2) throw ShapeError(base.string() + ": expected a 2D mask");
    const int h = static_cast<int>(a.shape[0]);
    const int w = static_cast<int>(a.shape[1]);
    std::vector<int> lines;
    for (int r = 0; r < h; ++r) {
        const double first = a.data[static_cast<std::size_t>(r) * w];
        if (first != 0.0 && first != 1.0) throw FormatError(base.string() + ": mask values must be 0 or 1");
        for (int c = 1; c < w; ++c)
            if (a.data[static_cast<std::size_t>(r) * w + c] != first)
                throw FormatError(base.string() + ": mask rows must be fully sampled or empty");
        if (first == 1.0) lines.push_back(r);
    }
    return {h, w, std::move(lines)};
}

inline void write_sample(const std::filesystem::path& dir, const Sample& s)
{
    std::filesystem::create_directories(dir);
    write_image(dir / "truth", s.truth);
    detail::write_stack(dir / "coils", s.coils.maps());
    write_mask(dir / "mask", s.mask);
    detail::write_stack(dir / "kspace", s.kspace.data());
}

inline Sample read_sample(const std::filesystem::path& dir)
{
    Sample s;
    s.truth = read_image(dir / "truth");
    s.coils = CoilSensitivities(detail::read_stack(dir / "coils"));
    s.mask = read_mask(dir / "mask");
    s.kspace = MultiCoilKSpace(detail::read_stack(dir / "kspace"), s.mask);
    return s;
}

/// Number of consecutive sample_<k> directories starting at k = 0.
inline std::size_t count_samples(const std::filesystem::path& root)
{
    std::size_t k = 0;
    while (std::filesystem::is_directory(sample_dir(root, k))) ++k;
    return k;
}

inline std::vector<Sample> read_dataset(const std::filesystem::path& root)
{
    const std::size_t n = count_samples(root);
    if (n == 0) throw IoError("no samples found under " + root.string());
    std::vector<Sample> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) out.push_back(read_sample(sample_dir(root, k)));
    return out;
}

} // namespace pista
