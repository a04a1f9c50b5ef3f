#include "oracles.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

using namespace pista;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "pista_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) { std::ofstream(p, std::ios::binary) << bytes; }

std::string le_bytes(double v)
{
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    std::string out(8, '\0');
    for (int i = 0; i < 8; ++i) out[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    return out;
}

double from_le(const char* p)
{
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return std::bit_cast<double>(bits);
}

} // namespace

TEST(ArrayIo, RoundTripBitExact)
{
    std::mt19937_64 rng(80);
    const ComplexImage img = oracle::random_image(7, 5, rng);
    write_image(scratch("img"), img);
    EXPECT_EQ(read_image(scratch("img")), img);

    std::vector<double> real{0.0, -0.0, 1e-310, std::numeric_limits<double>::max(), -3.25, 1.0 / 3.0};
    write_real_array(scratch("real"), {2, 3}, real);
    const RealArray back = read_real_array(scratch("real"));
    EXPECT_EQ(back.shape, (std::vector<std::int64_t>{2, 3}));
    for (std::size_t i = 0; i < real.size(); ++i)
        EXPECT_EQ(std::bit_cast<std::uint64_t>(back.data[i]), std::bit_cast<std::uint64_t>(real[i]));
}

TEST(ArrayIo, HeaderLayout)
{
    write_complex_array(scratch("hdr"), {2, 3}, std::vector<Complex>(6));
    EXPECT_EQ(slurp(scratch("hdr.hdr")),
              R"({"dtype":"c64","endian":"little","order":"row-major","shape":[2,3],"version":1})");
    EXPECT_EQ(slurp(scratch("hdr.dat")).size(), 6u * 16);
}

TEST(ArrayIo, IndependentReaderAgreesOnGoldenFile)
{
    // library writes, hand-rolled reader decodes
    const std::vector<Complex> values{{1.5, -2.0}, {0.0, 3.0}, {-0.125, 1e-3}, {7.0, 8.0}};
    write_complex_array(scratch("golden_w"), {2, 2}, values);
    const auto header = nlohmann::json::parse(slurp(scratch("golden_w.hdr")));
    EXPECT_EQ(header["dtype"], "c64");
    EXPECT_EQ(header["shape"], nlohmann::json::array({2, 2}));
    const std::string payload = slurp(scratch("golden_w.dat"));
    ASSERT_EQ(payload.size(), 64u);
    for (std::size_t i = 0; i < values.size(); ++i) {
        EXPECT_EQ(from_le(payload.data() + 16 * i), values[i].real());
        EXPECT_EQ(from_le(payload.data() + 16 * i + 8), values[i].imag());
    }

    // hand-written file, library decodes
    spit(scratch("golden_r.hdr"), R"({"version":1,"shape":[3],"dtype":"f64","order":"row-major","endian":"little"})");
    spit(scratch("golden_r.dat"), le_bytes(0.5) + le_bytes(-4.0) + le_bytes(1e100));
    const RealArray a = read_real_array(scratch("golden_r"));
    EXPECT_EQ(a.data, (std::vector<double>{0.5, -4.0, 1e100}));
}

TEST(ArrayIo, DistinctErrors)
{
    write_real_array(scratch("base"), {4}, std::vector<double>{1, 2, 3, 4});
    EXPECT_THROW(read_complex_array(scratch("base")), DtypeError);

    spit(scratch("short.hdr"), slurp(scratch("base.hdr")));
    spit(scratch("short.dat"), slurp(scratch("base.dat")).substr(0, 24));
    EXPECT_THROW(read_real_array(scratch("short")), TruncationError);

    spit(scratch("long.hdr"), R"({"dtype":"f64","endian":"little","order":"row-major","shape":[5],"version":1})");
    spit(scratch("long.dat"), slurp(scratch("base.dat")));
    EXPECT_THROW(read_real_array(scratch("long")), TruncationError);

    spit(scratch("bad.hdr"), "{\"dtype\": ");
    spit(scratch("bad.dat"), "");
    EXPECT_THROW(read_real_array(scratch("bad")), FormatError);

    spit(scratch("nofield.hdr"), R"({"dtype":"f64","shape":[1],"version":1})");
    EXPECT_THROW(read_array_header(scratch("nofield")), FormatError);

    spit(scratch("ver.hdr"), R"({"dtype":"f64","endian":"little","order":"row-major","shape":[4],"version":2})");
    EXPECT_THROW(read_array_header(scratch("ver")), VersionError);

    spit(scratch("kind.hdr"), R"({"dtype":"i32","endian":"little","order":"row-major","shape":[4],"version":1})");
    EXPECT_THROW(read_array_header(scratch("kind")), FormatError);

    EXPECT_THROW(read_real_array(scratch("does_not_exist")), IoError);
    EXPECT_THROW(write_real_array(scratch("x"), {3}, std::vector<double>{1, 2}), ShapeError);
}

TEST(Dataset, SampleRoundTrip)
{
    PhantomSpec p;
    p.height = p.width = 16;
    p.smooth_phase = true;
    AcquisitionSpec a;
    a.coils = 3;
    a.seed = 81;
    const fs::path root = scratch("dataset");
    fs::remove_all(root);
    const auto set = make_dataset(p, a, 3);
    for (std::size_t k = 0; k < set.size(); ++k) write_sample(sample_dir(root, k), set[k]);
    EXPECT_EQ(count_samples(root), 3u);
    const auto back = read_dataset(root);
    for (std::size_t k = 0; k < set.size(); ++k) {
        EXPECT_EQ(back[k].truth, set[k].truth);
        EXPECT_EQ(back[k].coils.maps(), set[k].coils.maps());
        EXPECT_EQ(back[k].mask, set[k].mask);
        EXPECT_EQ(back[k].kspace, set[k].kspace);
    }
    EXPECT_THROW(read_dataset(scratch("empty_dataset")), IoError);
}

TEST(Dataset, MaskFormatChecks)
{
    write_real_array(scratch("mask_bad"), {2, 2}, std::vector<double>{1, 0, 0, 0});
    EXPECT_THROW(read_mask(scratch("mask_bad")), FormatError);
    write_real_array(scratch("mask_val"), {2, 2}, std::vector<double>{0.5, 0.5, 0, 0});
    EXPECT_THROW(read_mask(scratch("mask_val")), FormatError);
    const SamplingMask m(4, 3, {0, 2});
    write_mask(scratch("mask_ok"), m);
    EXPECT_EQ(read_mask(scratch("mask_ok")), m);
}
