#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace dynct {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Flat-detector fan-beam scanner. Distances are in domain units.
///
/// The source sits at dso * (cos a, sin a) for source angle a (counterclockwise
/// from +x). The detector line is perpendicular to the central ray, at distance
/// dsd from the source; sensor j (1-based) is centered at offset
/// ((j - 1/2) / M - 1/2) * detector_width along (-sin a, cos a).
struct FanBeamGeometry {
    double dso = 3.0;
    double dsd = 5.0;
    double detector_width = 3.5;
    int n_sensors = 64;

    void validate() const;

    Point2 source(double angle) const;
    Point2 sensor(double angle, int sensor_index) const;
    double sensor_offset(int sensor_index) const;

    // Scanner setups used for the synthetic phantoms and the real-data scans.
    static FanBeamGeometry two_square();
    static FanBeamGeometry stempo();
    static FanBeamGeometry xcat();
};

struct Extent {
    double x0 = -1.0;
    double x1 = 1.0;
    double y0 = -1.0;
    double y1 = 1.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    bool operator==(const Extent&) const = default;
};

/// Uniform square-pixel grid. Pixel (ix, iy) has row-major index iy * nx + ix,
/// with iy increasing along +y.
class ImageGrid {
public:
    ImageGrid(int nx, int ny, Extent extent = {});
    static ImageGrid square(int n) { return ImageGrid(n, n); }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int n_pixels() const { return nx_ * ny_; }
    const Extent& extent() const { return extent_; }
    double pixel_size() const { return extent_.width() / nx_; }
    Point2 center(int ix, int iy) const;

    bool operator==(const ImageGrid&) const = default;

private:
    int nx_;
    int ny_;
    Extent extent_;
};

/// Frame times t_i = i * T / (N_T - 1), i = 0..N_T-1. A single frame sits at t = 0.
class TimeAxis {
public:
    TimeAxis(int n_frames, double t_final);

    int n_frames() const { return n_frames_; }
    double t_final() const { return t_final_; }
    double time(int i) const;
    double dt() const;
    std::vector<double> times() const;

    /// Length of the time interval used for space-time integrals. A single frame
    /// counts as a unit interval.
    double extent() const { return n_frames_ > 1 ? t_final_ : 1.0; }

    bool operator==(const TimeAxis&) const = default;

private:
    int n_frames_;
    double t_final_;
};

/// Line integrals f (M x N_T): column i holds the frame acquired at angles[i], times[i].
struct Sinogram {
    Eigen::MatrixXd data;
    std::vector<double> angles;
    std::vector<double> times;
    FanBeamGeometry geometry;

    int n_sensors() const { return static_cast<int>(data.rows()); }
    int n_frames() const { return static_cast<int>(data.cols()); }
    void validate() const;
};

/// Space-time image on a uniform grid, one frame per row (N_T x N).
struct CasoratiImage {
    RowMatrix values;
    ImageGrid grid;
    TimeAxis time;

    CasoratiImage(ImageGrid g, TimeAxis t);
    CasoratiImage(RowMatrix v, ImageGrid g, TimeAxis t);

    int n_frames() const { return time.n_frames(); }
    std::span<double> frame(int i) { return {values.row(i).data(), static_cast<size_t>(values.cols())}; }
    std::span<const double> frame(int i) const {
        return {values.row(i).data(), static_cast<size_t>(values.cols())};
    }
    void validate() const;
};

/// Velocity field sampled like CasoratiImage: one (vx, vy) pair per pixel and frame.
struct VelocityGrid {
    RowMatrix vx;
    RowMatrix vy;
    ImageGrid grid;
    TimeAxis time;

    VelocityGrid(ImageGrid g, TimeAxis t);
    void validate() const;
};

enum class SamplingKind { random, sequential };

struct SamplingSchedule {
    SamplingKind kind = SamplingKind::random;
    double delta = 0.0; // radians, sequential only
    std::uint64_t seed = 0;
};

std::vector<Point2> pixel_centers(const ImageGrid& grid);
std::vector<double> angle_schedule(const SamplingSchedule& schedule, int n_frames);

constexpr double kPi = 3.14159265358979323846;
inline double degrees(double deg) { return deg * kPi / 180.0; }

/// mt19937_64 with hand-rolled transforms, so draws are identical on every
/// standard library (std distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal (Box-Muller, second variate cached).
    double normal();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

    template <class It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            std::swap(first[i - 1], first[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace dynct
