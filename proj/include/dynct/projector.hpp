#pragma once

#include "dynct/core.hpp"

#include <functional>
#include <span>
#include <vector>

namespace dynct {

struct RaySegment {
    int cell_index = 0;
    double length = 0.0;
};

/// Exact intersection of the source->sensor segment with the grid cells,
/// ordered from the source. Empty when the ray misses the grid.
/// Throws if the source lies inside the grid extent.
std::vector<RaySegment> ray_path(const FanBeamGeometry& geometry, const ImageGrid& grid, double angle,
                                 int sensor_index);

std::vector<double> project_frame(std::span<const double> image, const FanBeamGeometry& geometry,
                                  const ImageGrid& grid, double angle);

std::vector<double> backproject_frame(std::span<const double> measurement, const FanBeamGeometry& geometry,
                                      const ImageGrid& grid, double angle);

/// Sparse ray/pixel weights for one source angle (CSR, one row per sensor).
class FrameSystem {
public:
    FrameSystem(const FanBeamGeometry& geometry, const ImageGrid& grid, double angle);

    int rows() const { return static_cast<int>(row_start_.size()) - 1; }
    int cols() const { return n_pixels_; }

    void forward(std::span<const double> image, std::span<double> out) const;
    /// out += A^T y
    void adjoint_add(std::span<const double> measurement, std::span<double> out) const;

private:
    int n_pixels_;
    std::vector<int> row_start_;
    std::vector<int> cell_;
    std::vector<double> weight_;
};

/// Per-frame fan-beam operators K_t for a whole acquisition.
class SpacetimeProjector {
public:
    SpacetimeProjector(const FanBeamGeometry& geometry, const ImageGrid& grid, std::span<const double> angles);

    int n_frames() const { return static_cast<int>(frames_.size()); }
    int n_sensors() const { return n_sensors_; }
    const ImageGrid& grid() const { return grid_; }
    const FrameSystem& frame(int i) const { return frames_.at(i); }

    /// Columns of the returned matrix are frames.
    Eigen::MatrixXd forward(const RowMatrix& u) const;
    RowMatrix adjoint(const Eigen::MatrixXd& y) const;

private:
    ImageGrid grid_;
    int n_sensors_;
    std::vector<FrameSystem> frames_;
};

/// Projects every frame of u with the geometry and angles of `layout`; data of
/// the template is ignored.
Sinogram project_spacetime(const CasoratiImage& u, const Sinogram& layout);

/// Matrix-free linear map R^cols -> R^rows with its transpose.
struct LinearOperator {
    int rows = 0;
    int cols = 0;
    std::function<void(std::span<const double>, std::span<double>)> apply;
    std::function<void(std::span<const double>, std::span<double>)> adjoint;
};

struct NormEstimate {
    double value = 0.0;
    std::vector<double> history; // ||A x_k|| for unit x_k, non-decreasing
};

/// Power iteration on A^T A from a seeded random start.
NormEstimate power_iteration(const LinearOperator& op, int n_iters, std::uint64_t seed);
double operator_norm(const LinearOperator& op, int n_iters, std::uint64_t seed);

} // namespace dynct
