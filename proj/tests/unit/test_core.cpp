#include "dynct/core.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dynct;

TEST(Geometry, RejectsInvalid) {
    EXPECT_NO_THROW(FanBeamGeometry::two_square().validate());
    EXPECT_THROW((FanBeamGeometry{0.0, 5.0, 3.5, 64}).validate(), std::invalid_argument);
    EXPECT_THROW((FanBeamGeometry{3.0, 3.0, 3.5, 64}).validate(), std::invalid_argument);
    EXPECT_THROW((FanBeamGeometry{3.0, 5.0, 0.0, 64}).validate(), std::invalid_argument);
    EXPECT_THROW((FanBeamGeometry{3.0, 5.0, 3.5, 0}).validate(), std::invalid_argument);
}

TEST(Geometry, SourceAndSensorPlacement) {
    const FanBeamGeometry g{3.0, 5.0, 4.0, 4};
    const Point2 s = g.source(0.0);
    EXPECT_DOUBLE_EQ(s.x, 3.0);
    EXPECT_DOUBLE_EQ(s.y, 0.0);
    // Detector line at x = 3 - 5 = -2, offsets (j - 1/2)/4 - 1/2 times 4: -1.5, -0.5, 0.5, 1.5.
    for (int j = 1; j <= 4; ++j) {
        const Point2 d = g.sensor(0.0, j);
        EXPECT_NEAR(d.x, -2.0, 1e-15);
        EXPECT_NEAR(d.y, j - 2.5, 1e-15);
    }
    const Point2 q = g.source(kPi / 2);
    EXPECT_NEAR(q.x, 0.0, 1e-15);
    EXPECT_NEAR(q.y, 3.0, 1e-15);
    EXPECT_THROW(g.sensor(0.0, 0), std::out_of_range);
    EXPECT_THROW(g.sensor(0.0, 5), std::out_of_range);
}

TEST(Geometry, Presets) {
    const auto a = FanBeamGeometry::stempo();
    EXPECT_EQ(a.n_sensors, 70);
    EXPECT_DOUBLE_EQ(a.dso, 9.88);
    const auto b = FanBeamGeometry::xcat();
    EXPECT_EQ(b.n_sensors, 150);
    EXPECT_DOUBLE_EQ(b.dsd, 8.0);
}

TEST(ImageGrid, PixelCenters) {
    const auto one = pixel_centers(ImageGrid::square(1));
    ASSERT_EQ(one.size(), 1u);
    EXPECT_DOUBLE_EQ(one[0].x, 0.0);
    EXPECT_DOUBLE_EQ(one[0].y, 0.0);

    const auto two = pixel_centers(ImageGrid::square(2));
    ASSERT_EQ(two.size(), 4u);
    const double expect[4][2] = {{-0.5, -0.5}, {0.5, -0.5}, {-0.5, 0.5}, {0.5, 0.5}};
    for (int i = 0; i < 4; ++i) {
        EXPECT_DOUBLE_EQ(two[i].x, expect[i][0]);
        EXPECT_DOUBLE_EQ(two[i].y, expect[i][1]);
    }

    const auto big = pixel_centers(ImageGrid::square(64));
    EXPECT_DOUBLE_EQ(big[0].x, -0.984375);
    EXPECT_DOUBLE_EQ(big[0].y, -0.984375);
}

TEST(ImageGrid, SpacingEqualsPixelSize) {
    const ImageGrid g(8, 4, {-2.0, 2.0, 0.0, 2.0});
    const auto c = pixel_centers(g);
    ASSERT_EQ(c.size(), 32u);
    EXPECT_DOUBLE_EQ(g.pixel_size(), 0.5);
    for (int iy = 0; iy < 4; ++iy) {
        for (int ix = 0; ix + 1 < 8; ++ix) {
            EXPECT_NEAR(c[iy * 8 + ix + 1].x - c[iy * 8 + ix].x, 0.5, 1e-15);
        }
    }
    for (int iy = 0; iy + 1 < 4; ++iy) {
        EXPECT_NEAR(c[(iy + 1) * 8].y - c[iy * 8].y, 0.5, 1e-15);
    }
}

TEST(ImageGrid, RejectsNonSquarePixels) {
    EXPECT_THROW(ImageGrid(4, 4, {-1.0, 1.0, -1.0, 3.0}), std::invalid_argument);
    EXPECT_THROW(ImageGrid(0, 4), std::invalid_argument);
}

TEST(TimeAxis, EndpointsAndSpacing) {
    const TimeAxis t(5, 2.0);
    EXPECT_DOUBLE_EQ(t.time(0), 0.0);
    EXPECT_DOUBLE_EQ(t.time(4), 2.0);
    EXPECT_DOUBLE_EQ(t.dt(), 0.5);
    const auto ts = t.times();
    for (std::size_t i = 1; i < ts.size(); ++i) {
        EXPECT_GT(ts[i], ts[i - 1]);
    }
    const TimeAxis single(1, 1.0);
    EXPECT_DOUBLE_EQ(single.time(0), 0.0);
    EXPECT_DOUBLE_EQ(single.extent(), 1.0);
    EXPECT_THROW(TimeAxis(0, 1.0), std::invalid_argument);
}

TEST(AngleSchedule, SequentialNineDegrees) {
    const auto a = angle_schedule({SamplingKind::sequential, degrees(9.0), 0}, 3);
    ASSERT_EQ(a.size(), 3u);
    EXPECT_NEAR(a[0], 0.0, 1e-15);
    EXPECT_NEAR(a[1], degrees(9.0), 1e-15);
    EXPECT_NEAR(a[2], degrees(18.0), 1e-15);
}

TEST(AngleSchedule, SequentialZeroRejected) {
    EXPECT_THROW(angle_schedule({SamplingKind::sequential, 0.0, 0}, 3), std::invalid_argument);
    EXPECT_THROW(angle_schedule({SamplingKind::random, 0.0, 0}, 0), std::invalid_argument);
}

TEST(AngleSchedule, RandomIsSeededAndInRange) {
    const SamplingSchedule s{SamplingKind::random, 0.0, 42};
    const auto a = angle_schedule(s, 500);
    const auto b = angle_schedule(s, 500);
    EXPECT_EQ(a, b);
    double mean = 0.0;
    for (double x : a) {
        EXPECT_GE(x, 0.0);
        EXPECT_LT(x, 2 * kPi);
        mean += x / a.size();
    }
    EXPECT_NEAR(mean, kPi, 0.2);
    EXPECT_NE(a, angle_schedule({SamplingKind::random, 0.0, 43}, 500));
}

TEST(Rng, NormalMoments) {
    Rng rng(3);
    const int n = 200000;
    double m = 0.0;
    double m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        m += z / n;
        m2 += z * z / n;
    }
    EXPECT_NEAR(m, 0.0, 0.01);
    EXPECT_NEAR(m2, 1.0, 0.02);
}

TEST(Rng, BelowIsUniformAndBounded) {
    Rng rng(5);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto k = rng.below(7);
        ASSERT_LT(k, 7u);
        ++counts[k];
    }
    for (int c : counts) {
        EXPECT_NEAR(c, 10000, 400);
    }
}

TEST(Containers, ValidateShapes) {
    Sinogram s;
    s.geometry = FanBeamGeometry{3.0, 5.0, 3.5, 4};
    s.data = Eigen::MatrixXd::Zero(4, 2);
    s.angles = {0.0, 1.0};
    s.times = {0.0, 1.0};
    EXPECT_NO_THROW(s.validate());
    s.times.pop_back();
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s.times = {0.0, 1.0};
    s.data(0, 0) = std::nan("");
    EXPECT_THROW(s.validate(), std::invalid_argument);

    CasoratiImage u(ImageGrid::square(3), TimeAxis(2, 1.0));
    EXPECT_EQ(u.values.rows(), 2);
    EXPECT_EQ(u.values.cols(), 9);
    EXPECT_THROW(CasoratiImage(RowMatrix::Zero(3, 9), ImageGrid::square(3), TimeAxis(2, 1.0)),
                 std::invalid_argument);
}
