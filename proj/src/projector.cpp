#include "dynct/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dynct {
namespace {

struct Interval {
    double lo;
    double hi;
};

// Parametric range of p0 + a * d inside [lo, hi] along one axis.
bool slab(double p0, double d, double lo, double hi, Interval& range) {
    if (d == 0.0) {
        return p0 >= lo && p0 <= hi;
    }
    double a0 = (lo - p0) / d;
    double a1 = (hi - p0) / d;
    if (a0 > a1) {
        std::swap(a0, a1);
    }
    range.lo = std::max(range.lo, a0);
    range.hi = std::min(range.hi, a1);
    return true;
}

// Plane crossings x = origin + k * h with parameter strictly inside (a_lo, a_hi),
// appended in increasing parameter order.
void plane_crossings(double p0, double d, double origin, double h, int n, Interval range,
                     std::vector<double>& out) {
    if (d == 0.0) {
        return;
    }
    const double c_lo = p0 + range.lo * d;
    const double c_hi = p0 + range.hi * d;
    const double lo = std::min(c_lo, c_hi);
    const double hi = std::max(c_lo, c_hi);
    int k0 = static_cast<int>(std::ceil((lo - origin) / h));
    int k1 = static_cast<int>(std::floor((hi - origin) / h));
    k0 = std::max(k0, 0);
    k1 = std::min(k1, n);
    const size_t first = out.size();
    for (int k = k0; k <= k1; ++k) {
        const double a = (origin + k * h - p0) / d;
        if (a > range.lo && a < range.hi) {
            out.push_back(a);
        }
    }
    if (d < 0.0) {
        std::reverse(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
    }
}

bool inside(const Extent& e, Point2 p) { return p.x >= e.x0 && p.x <= e.x1 && p.y >= e.y0 && p.y <= e.y1; }

} // namespace

std::vector<RaySegment> ray_path(const FanBeamGeometry& geometry, const ImageGrid& grid, double angle,
                                 int sensor_index) {
    geometry.validate();
    const Point2 src = geometry.source(angle);
    const Point2 dst = geometry.sensor(angle, sensor_index);
    const Extent& box = grid.extent();
    if (inside(box, src)) {
        throw std::invalid_argument("ray_path: source lies inside the image extent");
    }

    const double dx = dst.x - src.x;
    const double dy = dst.y - src.y;
    Interval range{0.0, 1.0};
    if (!slab(src.x, dx, box.x0, box.x1, range) || !slab(src.y, dy, box.y0, box.y1, range) ||
        !(range.lo < range.hi)) {
        return {};
    }

    const double h = grid.pixel_size();
    std::vector<double> xs;
    std::vector<double> ys;
    plane_crossings(src.x, dx, box.x0, h, grid.nx(), range, xs);
    plane_crossings(src.y, dy, box.y0, h, grid.ny(), range, ys);

    std::vector<double> params;
    params.reserve(xs.size() + ys.size() + 2);
    params.push_back(range.lo);
    std::merge(xs.begin(), xs.end(), ys.begin(), ys.end(), std::back_inserter(params));
    params.push_back(range.hi);

    const double ray_length = std::hypot(dx, dy);
    std::vector<RaySegment> segments;
    segments.reserve(params.size());
    for (size_t k = 0; k + 1 < params.size(); ++k) {
        const double a0 = params[k];
        const double a1 = params[k + 1];
        const double length = (a1 - a0) * ray_length;
        if (!(length > 1e-14 * h)) {
            continue; // corner crossings produce duplicate parameters
        }
        const double am = 0.5 * (a0 + a1);
        const double mx = src.x + am * dx;
        const double my = src.y + am * dy;
        const int ix = std::clamp(static_cast<int>(std::floor((mx - box.x0) / h)), 0, grid.nx() - 1);
        const int iy = std::clamp(static_cast<int>(std::floor((my - box.y0) / h)), 0, grid.ny() - 1);
        segments.push_back({iy * grid.nx() + ix, length});
    }
    return segments;
}

std::vector<double> project_frame(std::span<const double> image, const FanBeamGeometry& geometry,
                                  const ImageGrid& grid, double angle) {
    if (image.size() != static_cast<size_t>(grid.n_pixels())) {
        throw std::invalid_argument("project_frame: image size differs from grid");
    }
    std::vector<double> out(geometry.n_sensors, 0.0);
    for (int j = 0; j < geometry.n_sensors; ++j) {
        double acc = 0.0;
        for (const RaySegment& s : ray_path(geometry, grid, angle, j + 1)) {
            acc += s.length * image[s.cell_index];
        }
        out[j] = acc;
    }
    return out;
}

std::vector<double> backproject_frame(std::span<const double> measurement, const FanBeamGeometry& geometry,
                                      const ImageGrid& grid, double angle) {
    if (measurement.size() != static_cast<size_t>(geometry.n_sensors)) {
        throw std::invalid_argument("backproject_frame: measurement size differs from sensor count");
    }
    std::vector<double> out(grid.n_pixels(), 0.0);
    for (int j = 0; j < geometry.n_sensors; ++j) {
        for (const RaySegment& s : ray_path(geometry, grid, angle, j + 1)) {
            out[s.cell_index] += s.length * measurement[j];
        }
    }
    return out;
}

FrameSystem::FrameSystem(const FanBeamGeometry& geometry, const ImageGrid& grid, double angle)
    : n_pixels_(grid.n_pixels()) {
    row_start_.reserve(geometry.n_sensors + 1);
    row_start_.push_back(0);
    for (int j = 0; j < geometry.n_sensors; ++j) {
        for (const RaySegment& s : ray_path(geometry, grid, angle, j + 1)) {
            cell_.push_back(s.cell_index);
            weight_.push_back(s.length);
        }
        row_start_.push_back(static_cast<int>(cell_.size()));
    }
}

void FrameSystem::forward(std::span<const double> image, std::span<double> out) const {
    for (int j = 0; j < rows(); ++j) {
        double acc = 0.0;
        for (int k = row_start_[j]; k < row_start_[j + 1]; ++k) {
            acc += weight_[k] * image[cell_[k]];
        }
        out[j] = acc;
    }
}

void FrameSystem::adjoint_add(std::span<const double> measurement, std::span<double> out) const {
    for (int j = 0; j < rows(); ++j) {
        const double y = measurement[j];
        for (int k = row_start_[j]; k < row_start_[j + 1]; ++k) {
            out[cell_[k]] += weight_[k] * y;
        }
    }
}

SpacetimeProjector::SpacetimeProjector(const FanBeamGeometry& geometry, const ImageGrid& grid,
                                       std::span<const double> angles)
    : grid_(grid), n_sensors_(geometry.n_sensors) {
    frames_.reserve(angles.size());
    for (double a : angles) {
        frames_.emplace_back(geometry, grid, a);
    }
}

Eigen::MatrixXd SpacetimeProjector::forward(const RowMatrix& u) const {
    if (u.rows() != n_frames() || u.cols() != grid_.n_pixels()) {
        throw std::invalid_argument("SpacetimeProjector::forward: shape mismatch");
    }
    Eigen::MatrixXd out(n_sensors_, n_frames());
    for (int i = 0; i < n_frames(); ++i) {
        frames_[i].forward({u.row(i).data(), static_cast<size_t>(u.cols())},
                           {out.col(i).data(), static_cast<size_t>(n_sensors_)});
    }
    return out;
}

RowMatrix SpacetimeProjector::adjoint(const Eigen::MatrixXd& y) const {
    if (y.rows() != n_sensors_ || y.cols() != n_frames()) {
        throw std::invalid_argument("SpacetimeProjector::adjoint: shape mismatch");
    }
    RowMatrix out = RowMatrix::Zero(n_frames(), grid_.n_pixels());
    for (int i = 0; i < n_frames(); ++i) {
        frames_[i].adjoint_add({y.col(i).data(), static_cast<size_t>(n_sensors_)},
                               {out.row(i).data(), static_cast<size_t>(out.cols())});
    }
    return out;
}

Sinogram project_spacetime(const CasoratiImage& u, const Sinogram& layout) {
    if (static_cast<int>(layout.angles.size()) != u.n_frames()) {
        throw std::invalid_argument("project_spacetime: frame count differs from template");
    }
    const SpacetimeProjector op(layout.geometry, u.grid, layout.angles);
    Sinogram out;
    out.data = op.forward(u.values);
    out.angles = layout.angles;
    out.times = layout.times;
    out.geometry = layout.geometry;
    return out;
}

NormEstimate power_iteration(const LinearOperator& op, int n_iters, std::uint64_t seed) {
    NormEstimate est;
    Eigen::VectorXd x(op.cols);
    Rng rng(seed);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x[i] = rng.normal();
    }
    x.normalize();
    Eigen::VectorXd ax(op.rows);
    Eigen::VectorXd atax(op.cols);
    for (int it = 0; it < n_iters; ++it) {
        op.apply({x.data(), static_cast<size_t>(x.size())}, {ax.data(), static_cast<size_t>(ax.size())});
        est.value = ax.norm();
        est.history.push_back(est.value);
        op.adjoint({ax.data(), static_cast<size_t>(ax.size())}, {atax.data(), static_cast<size_t>(atax.size())});
        const double n = atax.norm();
        if (!std::isfinite(n)) {
            throw std::runtime_error("power_iteration: non-finite operator output");
        }
        if (n == 0.0) {
            break; // zero operator
        }
        x = atax / n;
    }
    return est;
}

double operator_norm(const LinearOperator& op, int n_iters, std::uint64_t seed) {
    return power_iteration(op, n_iters, seed).value;
}

} // namespace dynct
