#include "dynct/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace dynct;

namespace {

CasoratiImage random_volume(int n, int frames, unsigned seed) {
    CasoratiImage u(ImageGrid::square(n), TimeAxis(frames, 1.0));
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (Eigen::Index i = 0; i < u.values.size(); ++i) {
        u.values.data()[i] = d(gen);
    }
    return u;
}

} // namespace

TEST(Psnr, IdenticalIsInfinite) {
    const CasoratiImage u = random_volume(4, 3, 1);
    EXPECT_TRUE(std::isinf(psnr(u, u)));
    EXPECT_GT(psnr(u, u), 0.0);
}

TEST(Psnr, ConstantOffsetPeakOne) {
    const CasoratiImage ref = random_volume(4, 3, 2);
    CasoratiImage x = ref;
    x.values.array() += 0.1;
    EXPECT_NEAR(psnr(x, ref, {1.0, false}), 20.0, 1e-9);
    EXPECT_NEAR(psnr(x.values, ref.values, 1.0), 20.0, 1e-9);
}

TEST(Psnr, ThirtyDecibels) {
    RowMatrix ref = RowMatrix::Zero(2, 50);
    RowMatrix x = ref;
    x.setConstant(std::sqrt(1e-3));
    EXPECT_NEAR(mse(x, ref), 1e-3, 1e-15);
    EXPECT_NEAR(psnr(x, ref, 1.0), 30.0, 1e-9);
}

TEST(Psnr, DefaultPeakIsReferenceMaximum) {
    const CasoratiImage ref = random_volume(5, 2, 3);
    CasoratiImage x = ref;
    x.values.array() += 0.05;
    const double peak = ref.values.maxCoeff();
    EXPECT_NEAR(psnr(x, ref), 10.0 * std::log10(peak * peak / 0.0025), 1e-9);
}

TEST(Psnr, PerFrameMean) {
    CasoratiImage ref(ImageGrid::square(2), TimeAxis(2, 1.0));
    ref.values.setConstant(1.0);
    CasoratiImage x = ref;
    x.values.row(0).array() += 0.1;  // 20 dB
    x.values.row(1).array() += 0.01; // 40 dB
    const auto per = psnr_per_frame(x, ref, 1.0);
    ASSERT_EQ(per.size(), 2u);
    EXPECT_NEAR(per[0], 20.0, 1e-9);
    EXPECT_NEAR(per[1], 40.0, 1e-9);
    EXPECT_NEAR(psnr(x, ref, {1.0, true}), 30.0, 1e-9);
    // Whole-volume MSE is (0.01 + 0.0001) / 2.
    EXPECT_NEAR(psnr(x, ref, {1.0, false}), 10.0 * std::log10(2.0 / 0.0101), 1e-9);
}

TEST(Psnr, SymmetricInArguments) {
    const CasoratiImage a = random_volume(6, 3, 4);
    const CasoratiImage b = random_volume(6, 3, 5);
    EXPECT_DOUBLE_EQ(psnr(a.values, b.values, 1.0), psnr(b.values, a.values, 1.0));
}

TEST(Psnr, DecreasesWithNoiseVariance) {
    const CasoratiImage ref = random_volume(16, 4, 6);
    std::mt19937 gen(7);
    std::normal_distribution<double> n01;
    RowMatrix z(ref.values.rows(), ref.values.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z.data()[i] = n01(gen);
    }
    double last = std::numeric_limits<double>::infinity();
    for (double sigma : {0.001, 0.01, 0.05, 0.2}) {
        const RowMatrix x = ref.values + sigma * z;
        const double p = psnr(x, ref.values, 1.0);
        EXPECT_LT(p, last);
        last = p;
    }
}

TEST(Psnr, RejectsBadInputs) {
    const CasoratiImage a = random_volume(4, 3, 1);
    const CasoratiImage b = random_volume(4, 2, 1);
    const CasoratiImage c = random_volume(5, 3, 1);
    EXPECT_THROW(psnr(a, b), std::invalid_argument);
    EXPECT_THROW(psnr(a, c), std::invalid_argument);
    EXPECT_THROW(psnr(a.values, a.values, 0.0), std::invalid_argument);
    EXPECT_THROW(psnr(a.values, a.values, -1.0), std::invalid_argument);
}

TEST(TemporalStd, StaticAndAlternating) {
    CasoratiImage u(ImageGrid::square(3), TimeAxis(4, 1.0));
    u.values.setConstant(0.3);
    EXPECT_NEAR(mean_temporal_std(u), 0.0, 1e-15);
    for (int i = 0; i < 4; ++i) {
        u.values.row(i).setConstant(i % 2 == 0 ? 1.0 : -1.0);
    }
    EXPECT_NEAR(mean_temporal_std(u), 1.0, 1e-15);
}
