#include "dynct/core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dynct {

void FanBeamGeometry::validate() const {
    if (!(dso > 0.0)) {
        throw std::invalid_argument("geometry: source-origin distance must be positive");
    }
    if (!(dsd > dso)) {
        throw std::invalid_argument("geometry: source-detector distance must exceed source-origin distance");
    }
    if (!(detector_width > 0.0)) {
        throw std::invalid_argument("geometry: detector width must be positive");
    }
    if (n_sensors < 1) {
        throw std::invalid_argument("geometry: need at least one sensor");
    }
}

Point2 FanBeamGeometry::source(double angle) const {
    return {dso * std::cos(angle), dso * std::sin(angle)};
}

double FanBeamGeometry::sensor_offset(int sensor_index) const {
    if (sensor_index < 1 || sensor_index > n_sensors) {
        throw std::out_of_range("sensor index " + std::to_string(sensor_index) + " outside [1, " +
                                std::to_string(n_sensors) + "]");
    }
    return ((sensor_index - 0.5) / n_sensors - 0.5) * detector_width;
}

Point2 FanBeamGeometry::sensor(double angle, int sensor_index) const {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double offset = sensor_offset(sensor_index);
    const double r = dso - dsd; // detector center along the central ray
    return {r * c - offset * s, r * s + offset * c};
}

FanBeamGeometry FanBeamGeometry::two_square() { return {3.0, 5.0, 3.5, 64}; }
FanBeamGeometry FanBeamGeometry::stempo() { return {9.88, 13.33, 2.69, 70}; }
FanBeamGeometry FanBeamGeometry::xcat() { return {6.0, 8.0, 3.5, 150}; }

ImageGrid::ImageGrid(int nx, int ny, Extent extent) : nx_(nx), ny_(ny), extent_(extent) {
    if (nx < 1 || ny < 1) {
        throw std::invalid_argument("grid: pixel counts must be >= 1");
    }
    if (!(extent.width() > 0.0) || !(extent.height() > 0.0)) {
        throw std::invalid_argument("grid: extent must have positive width and height");
    }
    const double hx = extent.width() / nx;
    const double hy = extent.height() / ny;
    if (std::abs(hx - hy) > 1e-12 * std::max(hx, hy)) {
        throw std::invalid_argument("grid: pixels must be square");
    }
}

Point2 ImageGrid::center(int ix, int iy) const {
    const double h = pixel_size();
    return {extent_.x0 + (ix + 0.5) * h, extent_.y0 + (iy + 0.5) * h};
}

TimeAxis::TimeAxis(int n_frames, double t_final) : n_frames_(n_frames), t_final_(t_final) {
    if (n_frames < 1) {
        throw std::invalid_argument("time axis: need at least one frame");
    }
    if (n_frames > 1 && !(t_final > 0.0)) {
        throw std::invalid_argument("time axis: final time must be positive");
    }
    if (n_frames == 1) {
        t_final_ = 0.0;
    }
}

double TimeAxis::time(int i) const {
    if (n_frames_ == 1) {
        return 0.0;
    }
    if (i == n_frames_ - 1) {
        return t_final_;
    }
    return i * t_final_ / (n_frames_ - 1);
}

double TimeAxis::dt() const { return n_frames_ > 1 ? t_final_ / (n_frames_ - 1) : 1.0; }

std::vector<double> TimeAxis::times() const {
    std::vector<double> out(n_frames_);
    for (int i = 0; i < n_frames_; ++i) {
        out[i] = time(i);
    }
    return out;
}

void Sinogram::validate() const {
    geometry.validate();
    if (data.rows() != geometry.n_sensors) {
        throw std::invalid_argument("sinogram: row count differs from sensor count");
    }
    if (static_cast<size_t>(data.cols()) != angles.size() || angles.size() != times.size()) {
        throw std::invalid_argument("sinogram: frame, angle and time counts differ");
    }
    if (!data.allFinite()) {
        throw std::invalid_argument("sinogram: non-finite entries");
    }
}

CasoratiImage::CasoratiImage(ImageGrid g, TimeAxis t)
    : values(RowMatrix::Zero(t.n_frames(), g.n_pixels())), grid(g), time(t) {}

CasoratiImage::CasoratiImage(RowMatrix v, ImageGrid g, TimeAxis t)
    : values(std::move(v)), grid(g), time(t) {
    validate();
}

void CasoratiImage::validate() const {
    if (values.rows() != time.n_frames() || values.cols() != grid.n_pixels()) {
        throw std::invalid_argument("casorati image: dimensions inconsistent with grid/time axis");
    }
    if (!values.allFinite()) {
        throw std::invalid_argument("casorati image: non-finite entries");
    }
}

VelocityGrid::VelocityGrid(ImageGrid g, TimeAxis t)
    : vx(RowMatrix::Zero(t.n_frames(), g.n_pixels())),
      vy(RowMatrix::Zero(t.n_frames(), g.n_pixels())),
      grid(g),
      time(t) {}

void VelocityGrid::validate() const {
    for (const RowMatrix* m : {&vx, &vy}) {
        if (m->rows() != time.n_frames() || m->cols() != grid.n_pixels()) {
            throw std::invalid_argument("velocity grid: dimensions inconsistent with grid/time axis");
        }
        if (!m->allFinite()) {
            throw std::invalid_argument("velocity grid: non-finite entries");
        }
    }
}

std::vector<Point2> pixel_centers(const ImageGrid& grid) {
    std::vector<Point2> out;
    out.reserve(grid.n_pixels());
    for (int iy = 0; iy < grid.ny(); ++iy) {
        for (int ix = 0; ix < grid.nx(); ++ix) {
            out.push_back(grid.center(ix, iy));
        }
    }
    return out;
}

std::vector<double> angle_schedule(const SamplingSchedule& schedule, int n_frames) {
    if (n_frames < 1) {
        throw std::invalid_argument("angle schedule: need at least one frame");
    }
    std::vector<double> angles(n_frames);
    if (schedule.kind == SamplingKind::sequential) {
        if (schedule.delta == 0.0 || !std::isfinite(schedule.delta)) {
            throw std::invalid_argument("angle schedule: sequential sampling needs a nonzero increment");
        }
        for (int i = 0; i < n_frames; ++i) {
            angles[i] = i * schedule.delta;
        }
    } else {
        Rng rng(schedule.seed);
        for (double& a : angles) {
            a = 2.0 * kPi * rng.uniform();
            if (a >= 2.0 * kPi) {
                a = 0.0; // rounding at the top of [0, 1)
            }
        }
    }
    return angles;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Reject the top partial block to avoid modulo bias.
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t x = 0;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

} // namespace dynct
