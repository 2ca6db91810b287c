#include "dynct/io.hpp"
#include "dynct/phantoms.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

using namespace dynct;
namespace fs = std::filesystem;

namespace {

class IoTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("dynct_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

Sinogram random_sinogram(int m, int nt, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> d;
    Sinogram s;
    s.geometry = FanBeamGeometry{3.0, 5.0, 3.5, m};
    s.data.resize(m, nt);
    for (Eigen::Index i = 0; i < s.data.size(); ++i) {
        s.data.data()[i] = d(gen);
    }
    s.angles = angle_schedule({SamplingKind::random, 0.0, seed}, nt);
    s.times = TimeAxis(nt, 1.0).times();
    return s;
}

CasoratiImage random_volume(int n, int nt, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> d;
    CasoratiImage u(ImageGrid(n, n, {-2.0, 2.0, -1.0, 3.0}), TimeAxis(nt, 3.0));
    for (Eigen::Index i = 0; i < u.values.size(); ++i) {
        u.values.data()[i] = d(gen);
    }
    return u;
}

void corrupt(const fs::path& p, std::size_t offset, char byte) {
    std::string s = read_text(p);
    s[offset] = byte;
    write_text(p, s);
}

} // namespace

TEST_F(IoTest, SinogramRoundTripIsBitExact) {
    const Sinogram s = random_sinogram(7, 5, 1);
    write_sinogram(dir_ / "a.dsin", s);
    const Sinogram r = read_sinogram(dir_ / "a.dsin");
    EXPECT_EQ(std::memcmp(r.data.data(), s.data.data(), sizeof(double) * s.data.size()), 0);
    EXPECT_EQ(r.angles, s.angles);
    EXPECT_EQ(r.times, s.times);
    EXPECT_EQ(r.geometry.dso, s.geometry.dso);
    EXPECT_EQ(r.geometry.dsd, s.geometry.dsd);
    EXPECT_EQ(r.geometry.detector_width, s.geometry.detector_width);
    EXPECT_EQ(r.geometry.n_sensors, 7);
}

TEST_F(IoTest, SinogramFileSize) {
    const Sinogram s = random_sinogram(64, 100, 2);
    write_sinogram(dir_ / "s.dsin", s);
    const std::uintmax_t expect = 8 + 4 + 4 + 3 * 8 + 100 * 8 + 100 * 8 + 64 * 100 * 8;
    EXPECT_EQ(expect, 52840u);
    EXPECT_EQ(fs::file_size(dir_ / "s.dsin"), expect);
}

TEST_F(IoTest, SinogramLayoutIsRowMajor) {
    Sinogram s = random_sinogram(2, 3, 3);
    write_sinogram(dir_ / "s.dsin", s);
    const std::string bytes = read_text(dir_ / "s.dsin");
    EXPECT_EQ(bytes.substr(0, 8), std::string("DYNSIN1\0", 8));
    const std::size_t data_at = 8 + 8 + 24 + 2 * 3 * 8;
    double second;
    std::memcpy(&second, bytes.data() + data_at + 8, 8);
    EXPECT_EQ(second, s.data(0, 1));
}

TEST_F(IoTest, SinogramRejectsCorruption) {
    write_sinogram(dir_ / "s.dsin", random_sinogram(4, 3, 4));
    fs::copy_file(dir_ / "s.dsin", dir_ / "magic.dsin");
    corrupt(dir_ / "magic.dsin", 0, 'X');
    EXPECT_THROW(read_sinogram(dir_ / "magic.dsin"), FormatError);

    std::string bytes = read_text(dir_ / "s.dsin");
    write_text(dir_ / "short.dsin", bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(read_sinogram(dir_ / "short.dsin"), FormatError);
    write_text(dir_ / "long.dsin", bytes + "x");
    EXPECT_THROW(read_sinogram(dir_ / "long.dsin"), FormatError);

    const double nan = std::nan("");
    std::memcpy(bytes.data() + bytes.size() - 8, &nan, 8);
    write_text(dir_ / "nan.dsin", bytes);
    EXPECT_THROW(read_sinogram(dir_ / "nan.dsin"), FormatError);

    // Huge dimensions with a tiny payload must not allocate first.
    std::string header = read_text(dir_ / "s.dsin").substr(0, 16);
    const std::uint32_t big = 0xFFFFFFFFu;
    std::memcpy(header.data() + 8, &big, 4);
    std::memcpy(header.data() + 12, &big, 4);
    write_text(dir_ / "big.dsin", header);
    EXPECT_THROW(read_sinogram(dir_ / "big.dsin"), FormatError);
    EXPECT_THROW(read_sinogram(dir_ / "missing.dsin"), std::exception);
}

TEST_F(IoTest, VolumeRoundTripAndPooling) {
    const CasoratiImage u = random_volume(8, 4, 5);
    write_volume(dir_ / "u.dvol", u);
    const CasoratiImage r = read_volume(dir_ / "u.dvol");
    EXPECT_TRUE(r.grid == u.grid);
    EXPECT_TRUE(r.time == u.time);
    EXPECT_EQ(std::memcmp(r.values.data(), u.values.data(), sizeof(double) * u.values.size()), 0);
    EXPECT_EQ(pool_average(r, 4).values, pool_average(u, 4).values);
}

TEST_F(IoTest, VolumeRejectsHeaderPayloadMismatch) {
    write_volume(dir_ / "u.dvol", random_volume(4, 2, 6));
    std::string bytes = read_text(dir_ / "u.dvol");
    const std::uint32_t three = 3;
    std::memcpy(bytes.data() + 16, &three, 4); // N_T 2 -> 3
    write_text(dir_ / "bad.dvol", bytes);
    EXPECT_THROW(read_volume(dir_ / "bad.dvol"), FormatError);
    // A sinogram is not a volume.
    write_sinogram(dir_ / "s.dsin", random_sinogram(4, 2, 1));
    EXPECT_THROW(read_volume(dir_ / "s.dsin"), FormatError);
}

TEST_F(IoTest, VelocityRoundTrip) {
    VelocityGrid v(ImageGrid::square(3), TimeAxis(2, 1.0));
    for (Eigen::Index i = 0; i < v.vx.size(); ++i) {
        v.vx.data()[i] = 0.1 * i;
        v.vy.data()[i] = -0.2 * i;
    }
    write_velocity(dir_ / "v.dvel", v);
    const VelocityGrid r = read_velocity(dir_ / "v.dvel");
    EXPECT_EQ(r.vx, v.vx);
    EXPECT_EQ(r.vy, v.vy);
    EXPECT_TRUE(r.grid == v.grid);
}

TEST(Quantize, FloorConvention) {
    const Window w{0.0, 1.0};
    EXPECT_EQ(quantize(0.5, w), 32768);
    EXPECT_EQ(quantize(0.0, w), 0);
    EXPECT_EQ(quantize(1.0, w), 65535);
    EXPECT_EQ(quantize(-3.0, w), 0);
    EXPECT_EQ(quantize(7.0, w), 65535);
    EXPECT_EQ(quantize(std::nextafter(0.5, 0.0), w), 32767);
}

TEST(Quantize, RoundTripBound) {
    const Window w{-0.3, 1.7};
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> d(-0.3, 1.7);
    for (int k = 0; k < 10000; ++k) {
        const double x = d(gen);
        EXPECT_LE(std::abs(dequantize(quantize(x, w), w) - x), (w.hi - w.lo) / 65536.0);
    }
}

TEST_F(IoTest, ExportFrames) {
    CasoratiImage u(ImageGrid::square(3), TimeAxis(2, 1.0));
    u.values.setConstant(0.5);
    u.values(1, 0) = -1.0;  // clamps to 0
    u.values(1, 8) = 2.0;   // clamps to 65535
    const auto ranges = export_frames(u, dir_ / "frames", Window{0.0, 1.0});
    ASSERT_EQ(ranges.size(), 2u);
    EXPECT_EQ(ranges[1].min, -1.0);
    EXPECT_EQ(ranges[1].max, 2.0);
    const Pgm16 f0 = read_pgm16(dir_ / "frames" / "frame_0000.pgm");
    EXPECT_EQ(f0.width, 3);
    EXPECT_EQ(f0.height, 3);
    for (auto p : f0.pixels) {
        EXPECT_EQ(p, 32768);
    }
    const Pgm16 f1 = read_pgm16(dir_ / "frames" / "frame_0001.pgm");
    // Pixel (0, 0) is the bottom-left cell, i.e. the first pixel of the last PGM row.
    EXPECT_EQ(f1.pixels[6], 0);
    // Pixel (2, 2) is the top-right cell, the last pixel of the first PGM row.
    EXPECT_EQ(f1.pixels[2], 65535);
    const std::string csv = read_text(dir_ / "frames" / "frames.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "frame,min,max");
    EXPECT_EQ(csv.find('\r'), std::string::npos);
}

TEST_F(IoTest, ExportAutoWindowReimport) {
    const CasoratiImage u = random_volume(5, 3, 9);
    export_frames(u, dir_ / "auto");
    const Window w = auto_window(u);
    EXPECT_EQ(w.lo, u.values.minCoeff());
    EXPECT_EQ(w.hi, u.values.maxCoeff());
    for (int i = 0; i < 3; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04d.pgm", i);
        const Pgm16 f = read_pgm16(dir_ / "auto" / name);
        for (int iy = 0; iy < 5; ++iy) {
            for (int ix = 0; ix < 5; ++ix) {
                const double x = u.values(i, iy * 5 + ix);
                const double back = dequantize(f.pixels[(4 - iy) * 5 + ix], w);
                EXPECT_LE(std::abs(back - x), (w.hi - w.lo) / 65536.0);
            }
        }
    }
    CasoratiImage flat(ImageGrid::square(2), TimeAxis(1, 1.0));
    flat.values.setConstant(0.25);
    const Window fw = auto_window(flat);
    EXPECT_EQ(fw.lo, 0.25);
    EXPECT_EQ(fw.hi, 1.25);
}

TEST(Hash, FnvKnownValues) {
    EXPECT_EQ(fnv1a(std::string_view("")), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a(std::string_view("a")), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a(std::string_view("foobar")), 0x85944171f73967e8ULL);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST_F(IoTest, FileHashMatchesContent) {
    write_text(dir_ / "x.txt", "foobar");
    EXPECT_EQ(file_hash(dir_ / "x.txt"), 0x85944171f73967e8ULL);
    EXPECT_EQ(read_text(dir_ / "x.txt"), "foobar");
}
