#include "dynct/phantoms.hpp"

#include "dynct/projector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dynct {
namespace {

// 1 inside (d <= 0), 0 outside; C^1 smoothstep across |d| < ramp.
double coverage(double signed_distance, double ramp) {
    if (ramp <= 0.0) {
        return signed_distance <= 0.0 ? 1.0 : 0.0;
    }
    const double s = std::clamp((ramp - signed_distance) / (2.0 * ramp), 0.0, 1.0);
    return s * s * (3.0 - 2.0 * s);
}

bool in_support(double signed_distance, double ramp) {
    return ramp <= 0.0 ? signed_distance <= 0.0 : signed_distance < ramp;
}

double distance(const Square& s, double x, double y) {
    return std::max(std::abs(x - s.cx), std::abs(y - s.cy)) - 0.5 * s.side;
}

double distance(const Circle& c, double x, double y) { return std::hypot(x - c.cx, y - c.cy) - c.radius; }

// Scaled radial level set; exact on the axes for circles, adequate as a ramp coordinate.
double distance(const Ellipse& e, double x, double y) {
    const double r = std::hypot((x - e.cx) / e.ax, (y - e.cy) / e.ay);
    return (r - 1.0) * std::min(e.ax, e.ay);
}

struct SpiralState {
    double shift_x;
    double shift_y;
    double vx;
    double vy;
};

SpiralState spiral_state(double t) {
    const double c = std::cos(2.0 * kPi * t);
    const double s = std::sin(2.0 * kPi * t);
    return {t / 5.0 * c, 3.0 * t / 4.0 * s, c / 5.0 - 2.0 * kPi * t / 5.0 * s, 0.75 * s + 1.5 * kPi * t * c};
}

constexpr double kDiagonalVx = 0.3;
constexpr double kDiagonalVy = 0.8;

double two_square_at(double x, double y, const SpiralState& spiral, double t, const SceneConfig& scene) {
    const double w = scene.edge_ramp;
    const Square& s1 = scene.squares[0];
    const Square& s2 = scene.squares[1];
    const double c1 = coverage(distance(s1, x - spiral.shift_x, y - spiral.shift_y), w);
    const double c2 = coverage(distance(s2, x - kDiagonalVx * t, y - kDiagonalVy * t), w);
    const double bg = scene.background.intensity * coverage(distance(scene.background, x, y), w);
    return c1 * s1.intensity + (1.0 - c1) * (c2 * s2.intensity + (1.0 - c2) * bg);
}

double initial_cardiac(double x, double y, const SceneConfig& scene) {
    const double w = scene.edge_ramp;
    double u = scene.background.intensity * coverage(distance(scene.background, x, y), w);
    for (const Circle& c : scene.circles) {
        const double cov = coverage(distance(c, x, y), w);
        u = cov * c.intensity + (1.0 - cov) * u;
    }
    return u;
}

// Periodic-part profile of the irregular beat, tau in [0, 1].
double arrhythmia_profile(double tau) {
    const double s = std::sin(2.0 * kPi * tau);
    return s * s * (1.0 + 0.5 * std::sin(4.0 * kPi * tau));
}

double arrhythmia_profile_rate(double tau) {
    const double s = std::sin(2.0 * kPi * tau);
    const double s4 = std::sin(4.0 * kPi * tau);
    return 2.0 * kPi * s4 * (1.0 + 0.5 * s4) + 2.0 * kPi * s * s * std::cos(4.0 * kPi * tau);
}

} // namespace

SceneConfig SceneConfig::two_square() {
    SceneConfig s;
    s.kind = PhantomKind::two_square;
    s.background = {0.0, 0.0, 0.85, 0.65, 0.3};
    s.squares = {Square{-0.4, -0.1, 0.25, 1.0}, Square{0.1, -0.55, 0.25, 0.7}};
    return s;
}

SceneConfig SceneConfig::cardiac() {
    SceneConfig s;
    s.kind = PhantomKind::cardiac;
    s.background = {0.0, 0.0, 0.55, 0.4, 0.4};
    s.circles = {Circle{-0.2, 0.1, 0.1, 1.0}, Circle{0.2, 0.1, 0.1, 0.8}, Circle{0.0, -0.18, 0.1, 0.6}};
    return s;
}

void SceneConfig::validate() const {
    auto check_intensity = [](double v) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("scene: intensities must lie in [0, 1]");
        }
    };
    auto check_inside = [this](double x, double y) {
        if (distance(background, x, y) > 0.0) {
            throw std::invalid_argument("scene: object center outside the background ellipse");
        }
    };
    if (!(background.ax > 0.0 && background.ay > 0.0) || edge_ramp < 0.0) {
        throw std::invalid_argument("scene: invalid background or edge ramp");
    }
    check_intensity(background.intensity);
    if (kind == PhantomKind::two_square) {
        for (const Square& s : squares) {
            check_intensity(s.intensity);
            check_inside(s.cx, s.cy);
            if (!(s.side > 0.0)) {
                throw std::invalid_argument("scene: square side must be positive");
            }
        }
    } else {
        for (const Circle& c : circles) {
            check_intensity(c.intensity);
            check_inside(c.cx, c.cy);
            if (!(c.radius > 0.0)) {
                throw std::invalid_argument("scene: circle radius must be positive");
            }
        }
    }
}

Point2 spiral_inverse(double x, double y, double t) {
    const SpiralState s = spiral_state(t);
    return {x - s.shift_x, y - s.shift_y};
}

Point2 diagonal_inverse(double x, double y, double t) { return {x - kDiagonalVx * t, y - kDiagonalVy * t}; }

double two_square_intensity(double x, double y, double t, const SceneConfig& scene) {
    return two_square_at(x, y, spiral_state(t), t, scene);
}

Point2 two_square_velocity(double x, double y, double t, const SceneConfig& scene) {
    const SpiralState spiral = spiral_state(t);
    if (in_support(distance(scene.squares[0], x - spiral.shift_x, y - spiral.shift_y), scene.edge_ramp)) {
        return {spiral.vx, spiral.vy};
    }
    const Point2 p2 = diagonal_inverse(x, y, t);
    if (in_support(distance(scene.squares[1], p2.x, p2.y), scene.edge_ramp)) {
        return {kDiagonalVx, kDiagonalVy};
    }
    return {0.0, 0.0};
}

double cardiac_scale(double t, const MotionLaw& motion) {
    const CardiacScale& c = motion.scale;
    if (t < c.beat) {
        const double s = std::sin(kPi * t / c.beat);
        return 1.0 - c.amplitude * s * s;
    }
    if (t < c.beat + c.arrhythmia) {
        const double tau = (t - c.beat) / c.arrhythmia;
        return std::max(c.floor, 1.0 - c.amplitude * arrhythmia_profile(tau));
    }
    const double s = std::sin(kPi * (t - c.beat - c.arrhythmia) / c.beat);
    return 1.0 - c.amplitude * s * s;
}

double cardiac_scale_rate(double t, const MotionLaw& motion) {
    const CardiacScale& c = motion.scale;
    if (t < c.beat) {
        return -c.amplitude * kPi / c.beat * std::sin(2.0 * kPi * t / c.beat);
    }
    if (t < c.beat + c.arrhythmia) {
        const double tau = (t - c.beat) / c.arrhythmia;
        if (1.0 - c.amplitude * arrhythmia_profile(tau) <= c.floor) {
            return 0.0;
        }
        return -c.amplitude * arrhythmia_profile_rate(tau) / c.arrhythmia;
    }
    return -c.amplitude * kPi / c.beat * std::sin(2.0 * kPi * (t - c.beat - c.arrhythmia) / c.beat);
}

double cardiac_intensity(double x, double y, double t, const SceneConfig& scene, const MotionLaw& motion) {
    const double a = cardiac_scale(t, motion);
    return initial_cardiac(x / a, y / a, scene);
}

Point2 cardiac_velocity(double x, double y, double t, const MotionLaw& motion) {
    const double rate = cardiac_scale_rate(t, motion) / cardiac_scale(t, motion);
    return {rate * x, rate * y};
}

Phantom::Phantom(SceneConfig scene, MotionLaw motion) : scene_(scene), motion_(motion) {
    scene_.validate();
    if (scene_.kind != motion_.kind) {
        throw std::invalid_argument("phantom: scene and motion kinds differ");
    }
    if (!(motion_.t_final > 0.0)) {
        throw std::invalid_argument("phantom: final time must be positive");
    }
}

double Phantom::intensity(double x, double y, double t) const {
    return scene_.kind == PhantomKind::two_square ? two_square_intensity(x, y, t, scene_)
                                                  : cardiac_intensity(x, y, t, scene_, motion_);
}

Point2 Phantom::velocity(double x, double y, double t) const {
    return scene_.kind == PhantomKind::two_square ? two_square_velocity(x, y, t, scene_)
                                                  : cardiac_velocity(x, y, t, motion_);
}

std::vector<double> render_frame(const Phantom& phantom, const ImageGrid& grid, double t) {
    std::vector<double> out(grid.n_pixels());
    const double h = grid.pixel_size();
    const Extent& e = grid.extent();
    if (phantom.kind() == PhantomKind::two_square) {
        const SpiralState spiral = spiral_state(t);
        for (int iy = 0; iy < grid.ny(); ++iy) {
            const double y = e.y0 + (iy + 0.5) * h;
            for (int ix = 0; ix < grid.nx(); ++ix) {
                out[iy * grid.nx() + ix] = two_square_at(e.x0 + (ix + 0.5) * h, y, spiral, t, phantom.scene());
            }
        }
    } else {
        const double inv_a = 1.0 / cardiac_scale(t, phantom.motion());
        for (int iy = 0; iy < grid.ny(); ++iy) {
            const double y = e.y0 + (iy + 0.5) * h;
            for (int ix = 0; ix < grid.nx(); ++ix) {
                out[iy * grid.nx() + ix] =
                    initial_cardiac((e.x0 + (ix + 0.5) * h) * inv_a, y * inv_a, phantom.scene());
            }
        }
    }
    return out;
}

CasoratiImage render_ground_truth(const Phantom& phantom, int hi_res, const TimeAxis& time) {
    const ImageGrid grid = ImageGrid::square(hi_res);
    CasoratiImage out(grid, time);
    for (int i = 0; i < time.n_frames(); ++i) {
        const std::vector<double> f = render_frame(phantom, grid, time.time(i));
        std::copy(f.begin(), f.end(), out.frame(i).begin());
    }
    return out;
}

CasoratiImage render_pooled_ground_truth(const Phantom& phantom, int hi_res, int out_res, const TimeAxis& time) {
    if (out_res < 1 || hi_res % out_res != 0) {
        throw std::invalid_argument("render_pooled_ground_truth: resolution must divide the rendering size");
    }
    const ImageGrid hi = ImageGrid::square(hi_res);
    CasoratiImage out(ImageGrid::square(out_res), time);
    for (int i = 0; i < time.n_frames(); ++i) {
        const std::vector<double> f = render_frame(phantom, hi, time.time(i));
        const std::vector<double> p = pool_average(f, hi, hi_res / out_res);
        std::copy(p.begin(), p.end(), out.frame(i).begin());
    }
    return out;
}

std::vector<double> pool_average(std::span<const double> frame, const ImageGrid& grid, int factor) {
    if (factor < 1 || grid.nx() % factor != 0 || grid.ny() % factor != 0) {
        throw std::invalid_argument("pool_average: grid dimensions not divisible by the factor");
    }
    if (frame.size() != static_cast<size_t>(grid.n_pixels())) {
        throw std::invalid_argument("pool_average: frame size differs from grid");
    }
    const int ox = grid.nx() / factor;
    const int oy = grid.ny() / factor;
    std::vector<double> out(static_cast<size_t>(ox) * oy, 0.0);
    for (int iy = 0; iy < grid.ny(); ++iy) {
        for (int ix = 0; ix < grid.nx(); ++ix) {
            out[(iy / factor) * ox + ix / factor] += frame[iy * grid.nx() + ix];
        }
    }
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (double& v : out) {
        v *= inv;
    }
    return out;
}

CasoratiImage pool_average(const CasoratiImage& image, int factor) {
    if (factor < 1 || image.grid.nx() % factor != 0 || image.grid.ny() % factor != 0) {
        throw std::invalid_argument("pool_average: grid dimensions not divisible by the factor");
    }
    const ImageGrid coarse(image.grid.nx() / factor, image.grid.ny() / factor, image.grid.extent());
    CasoratiImage out(coarse, image.time);
    for (int i = 0; i < image.n_frames(); ++i) {
        const std::vector<double> p = pool_average(image.frame(i), image.grid, factor);
        std::copy(p.begin(), p.end(), out.frame(i).begin());
    }
    return out;
}

Sinogram synthesize_sinogram(const Phantom& phantom, const FanBeamGeometry& geometry,
                             const SamplingSchedule& schedule, const TimeAxis& time, double noise_std,
                             std::uint64_t seed, int hi_res) {
    if (!(noise_std >= 0.0)) {
        throw std::invalid_argument("synthesize_sinogram: noise standard deviation must be >= 0");
    }
    geometry.validate();
    const ImageGrid hi = ImageGrid::square(hi_res);
    Sinogram sino;
    sino.geometry = geometry;
    sino.angles = angle_schedule(schedule, time.n_frames());
    sino.times = time.times();
    sino.data.resize(geometry.n_sensors, time.n_frames());
    Rng rng(seed);
    for (int i = 0; i < time.n_frames(); ++i) {
        const std::vector<double> frame = render_frame(phantom, hi, sino.times[i]);
        const FrameSystem system(geometry, hi, sino.angles[i]);
        system.forward(frame, {sino.data.col(i).data(), static_cast<size_t>(geometry.n_sensors)});
        if (noise_std > 0.0) {
            for (int j = 0; j < geometry.n_sensors; ++j) {
                sino.data(j, i) += noise_std * rng.normal();
            }
        }
    }
    return sino;
}

} // namespace dynct
