#pragma once

// Raw array files: <base>.hdr holds a JSON header, <base>.dat the little-endian IEEE-754 payload.
//   {"dtype":"c64"|"f64","endian":"little","order":"row-major","shape":[...],"version":1}
// "c64" elements are interleaved (re, im) pairs of 64-bit floats.

#include <pista/numerics.hpp>

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace pista {

enum class Dtype { C64, F64 };

inline const char* dtype_name(Dtype d) { return d == Dtype::C64 ? "c64" : "f64"; }

struct ArrayHeader {
    Dtype dtype = Dtype::F64;
    std::vector<std::int64_t> shape;

    std::size_t element_count() const
    {
        std::size_t n = 1;
        for (auto d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }
    std::size_t payload_bytes() const { return element_count() * (dtype == Dtype::C64 ? 16 : 8); }
};

template <class T>
struct Array {
    std::vector<std::int64_t> shape;
    std::vector<T> data;
};

using RealArray = Array<double>;
using ComplexArray = Array<Complex>;

namespace detail {

inline std::filesystem::path with_suffix(const std::filesystem::path& base, const char* suffix)
{
    return std::filesystem::path(base.string() + suffix);
}

inline std::uint64_t to_little(std::uint64_t v) noexcept
{
    if constexpr (std::endian::native == std::endian::little)
        return v;
    else
        return __builtin_bswap64(v);
}

inline void append_le(std::string& out, double v)
{
    const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.append(buf, 8);
}

inline double read_le(const char* p) noexcept
{
    std::uint64_t bits;
    std::memcpy(&bits, p, 8);
    return std::bit_cast<double>(to_little(bits));
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on " + path.string());
    return bytes;
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failure on " + path.string());
}

inline void write_array(const std::filesystem::path& base, Dtype dtype, const std::vector<std::int64_t>& shape,
                        std::span<const double> interleaved)
{
    nlohmann::json hdr = {{"dtype", dtype_name(dtype)},
                          {"shape", shape},
                          {"order", "row-major"},
                          {"endian", "little"},
                          {"version", 1}};
    ArrayHeader h{dtype, shape};
    require_shape(h.payload_bytes() == interleaved.size() * 8, "write_array: shape does not match data length");
    std::string payload;
    payload.reserve(interleaved.size() * 8);
    for (double v : interleaved) append_le(payload, v);
    write_file(with_suffix(base, ".hdr"), hdr.dump());
    write_file(with_suffix(base, ".dat"), payload);
}

} // namespace detail

inline ArrayHeader read_array_header(const std::filesystem::path& base)
{
    const std::string text = detail::read_file(detail::with_suffix(base, ".hdr"));
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed array header " + base.string() + ".hdr: " + e.what());
    }
    try {
        if (j.at("version").get<int>() != 1)
            throw VersionError("unsupported array header version in " + base.string() + ".hdr");
        if (j.at("order").get<std::string>() != "row-major" || j.at("endian").get<std::string>() != "little")
            throw FormatError("array " + base.string() + " is not row-major little-endian");
        ArrayHeader h;
        const auto dtype = j.at("dtype").get<std::string>();
        if (dtype == "c64")
            h.dtype = Dtype::C64;
        else if (dtype == "f64")
            h.dtype = Dtype::F64;
        else
            throw FormatError("unknown dtype '" + dtype + "' in " + base.string() + ".hdr");
        h.shape = j.at("shape").get<std::vector<std::int64_t>>();
        for (auto d : h.shape)
            if (d < 0) throw FormatError("negative extent in " + base.string() + ".hdr");
        return h;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed array header " + base.string() + ".hdr: " + e.what());
    }
}

namespace detail {

inline std::string read_payload(const std::filesystem::path& base, const ArrayHeader& h)
{
    std::string bytes = read_file(with_suffix(base, ".dat"));
    if (bytes.size() != h.payload_bytes())
        throw TruncationError("payload of " + base.string() + " has " + std::to_string(bytes.size()) +
                              " bytes, header implies " + std::to_string(h.payload_bytes()));
    return bytes;
}

} // namespace detail

inline void write_real_array(const std::filesystem::path& base, const std::vector<std::int64_t>& shape,
                             std::span<const double> values)
{
    detail::write_array(base, Dtype::F64, shape, values);
}

inline void write_complex_array(const std::filesystem::path& base, const std::vector<std::int64_t>& shape,
                                std::span<const Complex> values)
{
    // std::complex<double> is layout-compatible with double[2]
    detail::write_array(base, Dtype::C64, shape,
                        std::span<const double>(reinterpret_cast<const double*>(values.data()), values.size() * 2));
}

inline RealArray read_real_array(const std::filesystem::path& base)
{
    const ArrayHeader h = read_array_header(base);
    if (h.dtype != Dtype::F64) throw DtypeError(base.string() + ": expected f64, found " + dtype_name(h.dtype));
    const std::string bytes = detail::read_payload(base, h);
    RealArray out{h.shape, std::vector<double>(h.element_count())};
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = detail::read_le(bytes.data() + 8 * i);
    return out;
}

inline ComplexArray read_complex_array(const std::filesystem::path& base)
{
    const ArrayHeader h = read_array_header(base);
    if (h.dtype != Dtype::C64) throw DtypeError(base.string() + ": expected c64, found " + dtype_name(h.dtype));
    const std::string bytes = detail::read_payload(base, h);
    ComplexArray out{h.shape, std::vector<Complex>(h.element_count())};
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = {detail::read_le(bytes.data() + 16 * i), detail::read_le(bytes.data() + 16 * i + 8)};
    return out;
}

inline void write_image(const std::filesystem::path& base, const ComplexImage& img)
{
    write_complex_array(base, {img.height(), img.width()}, img.values());
}

inline ComplexImage read_image(const std::filesystem::path& base)
{
    ComplexArray a = read_complex_array(base);
    if (a.shape.size() != 2) throw ShapeError(base.string() + ": expected a 2D image");
    return {static_cast<int>(a.shape[0]), static_cast<int>(a.shape[1]), std::move(a.data)};
}

} // namespace pista
