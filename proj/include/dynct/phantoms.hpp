#pragma once

#include "dynct/core.hpp"

#include <array>
#include <cstdint>

namespace dynct {

enum class PhantomKind { two_square, cardiac };

struct Ellipse {
    double cx = 0.0;
    double cy = 0.0;
    double ax = 1.0;
    double ay = 1.0;
    double intensity = 0.0;
};

struct Square {
    double cx = 0.0;
    double cy = 0.0;
    double side = 0.0;
    double intensity = 0.0;
};

struct Circle {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;
    double intensity = 0.0;
};

/// Initial frame u_0. Squares are used by the two-square phantom, circles by the
/// cardiac one. `edge_ramp` > 0 replaces hard indicator edges by a C^1 smoothstep
/// of that half-width.
struct SceneConfig {
    PhantomKind kind = PhantomKind::two_square;
    Ellipse background;
    std::array<Square, 2> squares{};
    std::array<Circle, 3> circles{};
    double edge_ramp = 0.0;

    static SceneConfig two_square();
    static SceneConfig cardiac();
    void validate() const;
};

/// Radial scale a(t) of the cardiac motion: one regular beat on [0, beat),
/// an irregular double beat on [beat, beat + arrhythmia), and the first beat
/// again afterwards.
struct CardiacScale {
    double amplitude = 0.25;
    double beat = 1.1;
    double arrhythmia = 0.8;
    double floor = 0.5;
};

struct MotionLaw {
    PhantomKind kind = PhantomKind::two_square;
    CardiacScale scale;
    double t_final = 1.0;

    static MotionLaw two_square() { return {PhantomKind::two_square, {}, 1.0}; }
    static MotionLaw cardiac() { return {PhantomKind::cardiac, {}, 3.0}; }
};

double two_square_intensity(double x, double y, double t, const SceneConfig& scene);
Point2 two_square_velocity(double x, double y, double t, const SceneConfig& scene);

/// Inverse motions of the two squares (spiral and straight diagonal).
Point2 spiral_inverse(double x, double y, double t);
Point2 diagonal_inverse(double x, double y, double t);

double cardiac_scale(double t, const MotionLaw& motion);
double cardiac_scale_rate(double t, const MotionLaw& motion);
double cardiac_intensity(double x, double y, double t, const SceneConfig& scene, const MotionLaw& motion);
Point2 cardiac_velocity(double x, double y, double t, const MotionLaw& motion);

/// Analytic ground truth: intensity and the velocity that transports it.
class Phantom {
public:
    Phantom(SceneConfig scene, MotionLaw motion);

    static Phantom two_square() { return {SceneConfig::two_square(), MotionLaw::two_square()}; }
    static Phantom cardiac() { return {SceneConfig::cardiac(), MotionLaw::cardiac()}; }

    double intensity(double x, double y, double t) const;
    Point2 velocity(double x, double y, double t) const;

    const SceneConfig& scene() const { return scene_; }
    const MotionLaw& motion() const { return motion_; }
    PhantomKind kind() const { return scene_.kind; }

private:
    SceneConfig scene_;
    MotionLaw motion_;
};

/// Point samples of one frame at the pixel centers of `grid`.
std::vector<double> render_frame(const Phantom& phantom, const ImageGrid& grid, double t);

/// Point samples of every frame on a hi_res x hi_res grid over [-1, 1]^2.
CasoratiImage render_ground_truth(const Phantom& phantom, int hi_res, const TimeAxis& time);

/// Same as pool_average(render_ground_truth(...), hi_res / out_res) without
/// holding the high-resolution volume in memory.
CasoratiImage render_pooled_ground_truth(const Phantom& phantom, int hi_res, int out_res, const TimeAxis& time);

/// Block means over factor x factor pixel blocks.
std::vector<double> pool_average(std::span<const double> frame, const ImageGrid& grid, int factor);
CasoratiImage pool_average(const CasoratiImage& image, int factor);

/// Fan-beam data of the phantom, rendered at hi_res to avoid the inverse crime,
/// plus i.i.d. N(0, noise_std^2) noise.
Sinogram synthesize_sinogram(const Phantom& phantom, const FanBeamGeometry& geometry,
                             const SamplingSchedule& schedule, const TimeAxis& time, double noise_std,
                             std::uint64_t seed, int hi_res = 1024);

} // namespace dynct
