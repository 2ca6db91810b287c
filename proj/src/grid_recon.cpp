#include "dynct/grid_recon.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace dynct {

void grad_space(std::span<const double> u, const ImageGrid& grid, std::span<double> gx, std::span<double> gy) {
    const int nx = grid.nx();
    const int ny = grid.ny();
    const double inv_h = 1.0 / grid.pixel_size();
    for (int iy = 0; iy < ny; ++iy) {
        const int row = iy * nx;
        for (int ix = 0; ix < nx; ++ix) {
            const int k = row + ix;
            gx[k] = ix + 1 < nx ? (u[k + 1] - u[k]) * inv_h : 0.0;
            gy[k] = iy + 1 < ny ? (u[k + nx] - u[k]) * inv_h : 0.0;
        }
    }
}

void div_space(std::span<const double> qx, std::span<const double> qy, const ImageGrid& grid, std::span<double> out) {
    const int nx = grid.nx();
    const int ny = grid.ny();
    const double inv_h = 1.0 / grid.pixel_size();
    for (int iy = 0; iy < ny; ++iy) {
        const int row = iy * nx;
        for (int ix = 0; ix < nx; ++ix) {
            const int k = row + ix;
            double d = 0.0;
            if (ix + 1 < nx) {
                d += qx[k];
            }
            if (ix > 0) {
                d -= qx[k - 1];
            }
            if (iy + 1 < ny) {
                d += qy[k];
            }
            if (iy > 0) {
                d -= qy[k - nx];
            }
            out[k] = d * inv_h;
        }
    }
}

namespace {

std::span<const double> row_span(const RowMatrix& m, Eigen::Index i) {
    return {m.row(i).data(), static_cast<size_t>(m.cols())};
}

std::span<double> row_span(RowMatrix& m, Eigen::Index i) { return {m.row(i).data(), static_cast<size_t>(m.cols())}; }

void check_frames(const RowMatrix& u, const ImageGrid& grid) {
    if (u.cols() != grid.n_pixels()) {
        throw std::invalid_argument("finite differences: frame size differs from grid");
    }
}

} // namespace

void grad_space(const RowMatrix& u, const ImageGrid& grid, RowMatrix& gx, RowMatrix& gy) {
    check_frames(u, grid);
    gx.resize(u.rows(), u.cols());
    gy.resize(u.rows(), u.cols());
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        grad_space(row_span(u, i), grid, row_span(gx, i), row_span(gy, i));
    }
}

RowMatrix div_space(const RowMatrix& qx, const RowMatrix& qy, const ImageGrid& grid) {
    check_frames(qx, grid);
    check_frames(qy, grid);
    RowMatrix out(qx.rows(), qx.cols());
    for (Eigen::Index i = 0; i < qx.rows(); ++i) {
        div_space(row_span(qx, i), row_span(qy, i), grid, row_span(out, i));
    }
    return out;
}

RowMatrix grad_time(const RowMatrix& u, double dt) {
    RowMatrix out = RowMatrix::Zero(u.rows(), u.cols());
    if (u.rows() > 1) {
        out.topRows(u.rows() - 1) = (u.bottomRows(u.rows() - 1) - u.topRows(u.rows() - 1)) / dt;
    }
    return out;
}

RowMatrix grad_time_adjoint(const RowMatrix& q, double dt) {
    const Eigen::Index n = q.rows();
    RowMatrix out = RowMatrix::Zero(n, q.cols());
    if (n > 1) {
        out.topRows(n - 1) -= q.topRows(n - 1);
        out.bottomRows(n - 1) += q.topRows(n - 1);
    }
    return out / dt;
}

double cell_weight(const ImageGrid& grid, const TimeAxis& time) {
    return grid.extent().area() * time.extent() / (static_cast<double>(time.n_frames()) * grid.n_pixels());
}

namespace {

double sum_norms(const RowMatrix& gx, const RowMatrix& gy) { return (gx.array().square() + gy.array().square()).sqrt().sum(); }

RowMatrix flow_residual(const RowMatrix& rho, const RowMatrix& gx, const RowMatrix& gy, const RowMatrix& vx,
                        const RowMatrix& vy) {
    return rho.array() + gx.array() * vx.array() + gy.array() * vy.array();
}

void check_velocity(const CasoratiImage& u, const VelocityGrid& v) {
    if (!(u.grid == v.grid) || u.n_frames() != v.vx.rows() || v.vx.rows() != v.vy.rows()) {
        throw std::invalid_argument("image and velocity differ in grid or frame count");
    }
}

} // namespace

GridTerms discrete_regularizers(const CasoratiImage& u, const VelocityGrid& v) {
    check_velocity(u, v);
    const double c = cell_weight(u.grid, u.time);
    RowMatrix gx;
    RowMatrix gy;
    GridTerms t;
    grad_space(u.values, u.grid, gx, gy);
    t.r = c * sum_norms(gx, gy);
    const RowMatrix rho = grad_time(u.values, u.time.dt());
    t.a = c * flow_residual(rho, gx, gy, v.vx, v.vy).cwiseAbs().sum();
    grad_space(v.vx, v.grid, gx, gy);
    t.s = sum_norms(gx, gy);
    grad_space(v.vy, v.grid, gx, gy);
    t.s = c * (t.s + sum_norms(gx, gy));
    return t;
}

double prox_soft_threshold(double x, double tau) {
    const double m = std::abs(x) - tau;
    return m > 0.0 ? std::copysign(m, x) : 0.0;
}

void project_l2ball_rows(std::span<double> qx, std::span<double> qy, double r) {
    for (size_t k = 0; k < qx.size(); ++k) {
        const double n = std::hypot(qx[k], qy[k]);
        if (n > r) {
            const double s = r / n;
            qx[k] *= s;
            qy[k] *= s;
        }
    }
}

FrameOperators FrameOperators::projector(const SpacetimeProjector& proj) {
    FrameOperators k;
    k.n_frames = proj.n_frames();
    k.rows = proj.n_sensors();
    k.cols = proj.grid().n_pixels();
    const SpacetimeProjector* p = &proj;
    k.forward = [p](int i, std::span<const double> x, std::span<double> y) { p->frame(i).forward(x, y); };
    k.adjoint_add = [p](int i, std::span<const double> y, std::span<double> x) { p->frame(i).adjoint_add(y, x); };
    return k;
}

FrameOperators FrameOperators::identity(int n_frames, int n_pixels) {
    FrameOperators k;
    k.n_frames = n_frames;
    k.rows = n_pixels;
    k.cols = n_pixels;
    k.forward = [](int, std::span<const double> x, std::span<double> y) { std::copy(x.begin(), x.end(), y.begin()); };
    k.adjoint_add = [](int, std::span<const double> y, std::span<double> x) {
        for (size_t j = 0; j < x.size(); ++j) {
            x[j] += y[j];
        }
    };
    return k;
}

namespace {

void check_data(const FrameOperators& k, const RowMatrix& u, const Eigen::MatrixXd& f) {
    if (u.rows() != k.n_frames || u.cols() != k.cols) {
        throw std::invalid_argument("data term: image shape differs from the frame operators");
    }
    if (f.rows() != k.rows || f.cols() != k.n_frames) {
        throw std::invalid_argument("data term: measurement shape differs from the frame operators");
    }
}

Eigen::MatrixXd apply_frames(const FrameOperators& k, const RowMatrix& u) {
    Eigen::MatrixXd out(k.rows, k.n_frames);
    for (int i = 0; i < k.n_frames; ++i) {
        k.forward(i, row_span(u, i), {out.col(i).data(), static_cast<size_t>(k.rows)});
    }
    return out;
}

void adjoint_frames_add(const FrameOperators& k, const Eigen::MatrixXd& y, RowMatrix& out) {
    for (int i = 0; i < k.n_frames; ++i) {
        k.adjoint_add(i, {y.col(i).data(), static_cast<size_t>(k.rows)}, row_span(out, i));
    }
}

} // namespace

double data_term(const FrameOperators& k, const RowMatrix& u, const Eigen::MatrixXd& f) {
    check_data(k, u, f);
    return 0.5 * (apply_frames(k, u) - f).squaredNorm() / k.n_frames;
}

double grid_objective(const FrameOperators& k, const Eigen::MatrixXd& f, const CasoratiImage& u,
                      const VelocityGrid& v, const RegWeights& w) {
    const GridTerms t = discrete_regularizers(u, v);
    return data_term(k, u.values, f) + w.alpha * t.r + w.beta * t.s + w.gamma * t.a;
}

namespace {

// Structured images of the stacked u-operator.
struct UImage {
    Eigen::MatrixXd data;
    RowMatrix tv_x;
    RowMatrix tv_y;
    RowMatrix flow;
};

struct UBlocks {
    bool data = true;
    bool tv = false;
    bool flow = false;
};

// Multipliers applied to each block's output.
struct UScales {
    double data = 1.0;
    double tv = 1.0;
    double flow = 1.0;
};

class UOperator {
public:
    UOperator(const FrameOperators& k, const VelocityGrid& v, UBlocks blocks, UScales scales = {})
        : k_(k), v_(v), blocks_(blocks), scales_(scales) {}

    const UBlocks& blocks() const { return blocks_; }

    void apply(const RowMatrix& u, UImage& out) const {
        if (blocks_.data) {
            out.data = apply_frames(k_, u);
            if (scales_.data != 1.0) {
                out.data *= scales_.data;
            }
        }
        if (!blocks_.tv && !blocks_.flow) {
            return;
        }
        grad_space(u, v_.grid, gx_, gy_);
        if (blocks_.tv) {
            out.tv_x = scales_.tv * gx_;
            out.tv_y = scales_.tv * gy_;
        }
        if (blocks_.flow) {
            out.flow = scales_.flow * flow_residual(grad_time(u, v_.time.dt()), gx_, gy_, v_.vx, v_.vy).array();
        }
    }

    RowMatrix adjoint(const UImage& y) const {
        RowMatrix out = RowMatrix::Zero(k_.n_frames, k_.cols);
        if (blocks_.data) {
            adjoint_frames_add(k_, y.data, out);
            if (scales_.data != 1.0) {
                out *= scales_.data;
            }
        }
        if (blocks_.tv) {
            out -= scales_.tv * div_space(y.tv_x, y.tv_y, v_.grid);
        }
        if (blocks_.flow) {
            const RowMatrix q = scales_.flow * y.flow;
            out += grad_time_adjoint(q, v_.time.dt());
            const RowMatrix qx = v_.vx.array() * q.array();
            const RowMatrix qy = v_.vy.array() * q.array();
            out -= div_space(qx, qy, v_.grid);
        }
        return out;
    }

    int rows() const {
        const int n = k_.n_frames * k_.cols;
        return (blocks_.data ? k_.rows * k_.n_frames : 0) + (blocks_.tv ? 2 * n : 0) + (blocks_.flow ? n : 0);
    }

    LinearOperator linear() const {
        const int nt = k_.n_frames;
        const int n = k_.cols;
        LinearOperator op;
        op.rows = rows();
        op.cols = nt * n;
        op.apply = [this, nt, n](std::span<const double> x, std::span<double> y) {
            const RowMatrix u = Eigen::Map<const RowMatrix>(x.data(), nt, n);
            UImage img;
            apply(u, img);
            auto out = y.begin();
            auto put = [&](const auto& m) { out = std::copy(m.data(), m.data() + m.size(), out); };
            if (blocks_.data) {
                put(img.data);
            }
            if (blocks_.tv) {
                put(img.tv_x);
                put(img.tv_y);
            }
            if (blocks_.flow) {
                put(img.flow);
            }
        };
        op.adjoint = [this, nt, n](std::span<const double> y, std::span<double> x) {
            UImage img;
            const double* in = y.data();
            if (blocks_.data) {
                img.data = Eigen::Map<const Eigen::MatrixXd>(in, k_.rows, nt);
                in += static_cast<std::ptrdiff_t>(k_.rows) * nt;
            }
            auto take = [&](RowMatrix& m) {
                m = Eigen::Map<const RowMatrix>(in, nt, n);
                in += static_cast<std::ptrdiff_t>(nt) * n;
            };
            if (blocks_.tv) {
                take(img.tv_x);
                take(img.tv_y);
            }
            if (blocks_.flow) {
                take(img.flow);
            }
            const RowMatrix u = adjoint(img);
            std::copy(u.data(), u.data() + u.size(), x.begin());
        };
        return op;
    }

private:
    const FrameOperators& k_;
    const VelocityGrid& v_;
    UBlocks blocks_;
    UScales scales_;
    mutable RowMatrix gx_;
    mutable RowMatrix gy_;
};

struct VImage {
    RowMatrix tv1_x;
    RowMatrix tv1_y;
    RowMatrix tv2_x;
    RowMatrix tv2_y;
    RowMatrix flow;
};

class VOperator {
public:
    VOperator(const RowMatrix& gx, const RowMatrix& gy, const ImageGrid& grid, bool tv, bool flow,
              double tv_scale = 1.0, double flow_scale = 1.0)
        : gx_(gx), gy_(gy), grid_(grid), tv_(tv), flow_(flow), tv_scale_(tv_scale), flow_scale_(flow_scale) {}

    bool tv() const { return tv_; }
    bool flow() const { return flow_; }

    void apply(const RowMatrix& v1, const RowMatrix& v2, VImage& out) const {
        if (tv_) {
            grad_space(v1, grid_, out.tv1_x, out.tv1_y);
            grad_space(v2, grid_, out.tv2_x, out.tv2_y);
            if (tv_scale_ != 1.0) {
                out.tv1_x *= tv_scale_;
                out.tv1_y *= tv_scale_;
                out.tv2_x *= tv_scale_;
                out.tv2_y *= tv_scale_;
            }
        }
        if (flow_) {
            out.flow = flow_scale_ * (gx_.array() * v1.array() + gy_.array() * v2.array());
        }
    }

    void adjoint(const VImage& y, RowMatrix& v1, RowMatrix& v2) const {
        v1 = RowMatrix::Zero(gx_.rows(), gx_.cols());
        v2 = RowMatrix::Zero(gx_.rows(), gx_.cols());
        if (tv_) {
            v1 -= tv_scale_ * div_space(y.tv1_x, y.tv1_y, grid_);
            v2 -= tv_scale_ * div_space(y.tv2_x, y.tv2_y, grid_);
        }
        if (flow_) {
            v1.array() += flow_scale_ * gx_.array() * y.flow.array();
            v2.array() += flow_scale_ * gy_.array() * y.flow.array();
        }
    }

    LinearOperator linear() const {
        const int nt = static_cast<int>(gx_.rows());
        const int n = static_cast<int>(gx_.cols());
        const int block = nt * n;
        LinearOperator op;
        op.cols = 2 * block;
        op.rows = (tv_ ? 4 * block : 0) + (flow_ ? block : 0);
        op.apply = [this, nt, n, block](std::span<const double> x, std::span<double> y) {
            const RowMatrix v1 = Eigen::Map<const RowMatrix>(x.data(), nt, n);
            const RowMatrix v2 = Eigen::Map<const RowMatrix>(x.data() + block, nt, n);
            VImage img;
            apply(v1, v2, img);
            auto out = y.begin();
            auto put = [&](const RowMatrix& m) { out = std::copy(m.data(), m.data() + m.size(), out); };
            if (tv_) {
                put(img.tv1_x);
                put(img.tv1_y);
                put(img.tv2_x);
                put(img.tv2_y);
            }
            if (flow_) {
                put(img.flow);
            }
        };
        op.adjoint = [this, nt, n, block](std::span<const double> y, std::span<double> x) {
            VImage img;
            const double* in = y.data();
            auto take = [&](RowMatrix& m) {
                m = Eigen::Map<const RowMatrix>(in, nt, n);
                in += block;
            };
            if (tv_) {
                take(img.tv1_x);
                take(img.tv1_y);
                take(img.tv2_x);
                take(img.tv2_y);
            }
            if (flow_) {
                take(img.flow);
            }
            RowMatrix v1;
            RowMatrix v2;
            adjoint(img, v1, v2);
            std::copy(v1.data(), v1.data() + v1.size(), x.begin());
            std::copy(v2.data(), v2.data() + v2.size(), x.begin() + block);
        };
        return op;
    }

private:
    const RowMatrix& gx_;
    const RowMatrix& gy_;
    const ImageGrid& grid_;
    bool tv_;
    bool flow_;
    double tv_scale_;
    double flow_scale_;
};

struct Steps {
    double norm;
    double tau;
    double sigma;
};

Steps choose_steps(const LinearOperator& op, const PdhgOptions& o) {
    Steps s{};
    s.norm = power_iteration(op, o.power_iterations, o.power_seed).value;
    if (o.tau.has_value() != o.sigma.has_value()) {
        throw std::invalid_argument("pdhg: give both tau and sigma or neither");
    }
    if (o.tau) {
        s.tau = *o.tau;
        s.sigma = *o.sigma;
        if (!(s.tau > 0.0) || !(s.sigma > 0.0) || s.tau * s.sigma * s.norm * s.norm > 1.0) {
            throw std::invalid_argument("pdhg: step sizes violate tau * sigma * L^2 <= 1 (L = " +
                                        std::to_string(s.norm) + ")");
        }
    } else {
        if (!(o.step_scale > 0.0) || o.step_scale > 1.0) {
            throw std::invalid_argument("pdhg: step scale must lie in (0, 1]");
        }
        s.tau = s.sigma = s.norm > 0.0 ? o.step_scale / s.norm : 0.0;
    }
    return s;
}

// 1 / ||block||, or 1 for a vanishing block.
double unit_scale(const LinearOperator& op, const PdhgOptions& o) {
    const double n = power_iteration(op, o.block_power_iterations, o.power_seed).value;
    return n > 0.0 ? 1.0 / n : 1.0;
}

template <class M>
void ensure_zero(M& m, Eigen::Index rows, Eigen::Index cols) {
    if (m.rows() != rows || m.cols() != cols) {
        m = M::Zero(rows, cols);
    }
}

LinearOperator owning(std::shared_ptr<const void> holder, LinearOperator inner) {
    LinearOperator op;
    op.rows = inner.rows;
    op.cols = inner.cols;
    op.apply = [holder, f = std::move(inner.apply)](std::span<const double> x, std::span<double> y) { f(x, y); };
    op.adjoint = [holder, f = std::move(inner.adjoint)](std::span<const double> y, std::span<double> x) { f(y, x); };
    return op;
}

} // namespace

LinearOperator stacked_u_operator(const FrameOperators& k, const VelocityGrid& v, const RegWeights& w) {
    // The returned operator may outlive the arguments, so it keeps its own copies.
    struct Owned {
        FrameOperators k;
        VelocityGrid v;
        UOperator op;
        Owned(const FrameOperators& k0, const VelocityGrid& v0, UBlocks b) : k(k0), v(v0), op(k, v, b) {}
    };
    auto holder = std::make_shared<Owned>(k, v, UBlocks{true, w.alpha > 0.0, w.gamma > 0.0});
    return owning(holder, holder->op.linear());
}

LinearOperator stacked_v_operator(const RowMatrix& gx, const RowMatrix& gy, const ImageGrid& grid,
                                  const RegWeights& w) {
    struct Owned {
        RowMatrix gx;
        RowMatrix gy;
        ImageGrid grid;
        VOperator op;
        Owned(const RowMatrix& x, const RowMatrix& y, const ImageGrid& g, bool tv, bool flow)
            : gx(x), gy(y), grid(g), op(gx, gy, grid, tv, flow) {}
    };
    auto holder = std::make_shared<Owned>(gx, gy, grid, w.beta > 0.0, w.gamma > 0.0);
    return owning(holder, holder->op.linear());
}

PdhgReport pdhg_u(CasoratiImage& u, const VelocityGrid& v, const FrameOperators& k, const Eigen::MatrixXd& f,
                  const RegWeights& w, const PdhgOptions& options, UDuals* duals) {
    check_velocity(u, v);
    check_data(k, u.values, f);
    if (options.iterations < 0) {
        throw std::invalid_argument("pdhg_u: negative iteration count");
    }
    const UBlocks blocks{true, w.alpha > 0.0, w.gamma > 0.0};
    UScales sc;
    if (options.balance_blocks) {
        sc.data = unit_scale(UOperator(k, v, {true, false, false}).linear(), options);
        if (blocks.tv) {
            sc.tv = unit_scale(UOperator(k, v, {false, true, false}).linear(), options);
        }
        if (blocks.flow) {
            sc.flow = unit_scale(UOperator(k, v, {false, false, true}).linear(), options);
        }
    }
    const UOperator op(k, v, blocks, sc);
    const Steps st = choose_steps(op.linear(), options);
    PdhgReport report{st.norm, st.tau, st.sigma, 0, {}};
    if (st.norm == 0.0) {
        return report;
    }

    UDuals local;
    UDuals& y = duals ? *duals : local;
    const Eigen::Index nt = u.n_frames();
    const Eigen::Index n = u.grid.n_pixels();
    ensure_zero(y.data, k.rows, nt);
    if (blocks.tv) {
        ensure_zero(y.tv_x, nt, n);
        ensure_zero(y.tv_y, nt, n);
    }
    if (blocks.flow) {
        ensure_zero(y.flow, nt, n);
    }
    // Duals are kept in unscaled form outside this solver: y_block = scale * y_scaled.
    y.data /= sc.data;
    y.tv_x /= sc.tv;
    y.tv_y /= sc.tv;
    y.flow /= sc.flow;

    const double c = cell_weight(u.grid, u.time);
    // Block b carries F_b(z / s_b): the quadratic weight becomes lambda / s^2 with
    // target s f, and the ball radii shrink by 1 / s.
    const double lambda = 1.0 / (static_cast<double>(nt) * sc.data * sc.data);
    const Eigen::MatrixXd f_scaled = sc.data * f;
    const double r_tv = w.alpha * c / sc.tv;
    const double r_flow = w.gamma * c / sc.flow;
    const double s = st.sigma;

    RowMatrix ubar = u.values;
    UImage ku;
    for (int it = 0; it < options.iterations; ++it) {
        op.apply(ubar, ku);
        y.data = ((y.data + s * ku.data) - s * f_scaled) / (1.0 + s / lambda);
        if (blocks.tv) {
            y.tv_x += s * ku.tv_x;
            y.tv_y += s * ku.tv_y;
            project_l2ball_rows({y.tv_x.data(), static_cast<size_t>(y.tv_x.size())},
                                {y.tv_y.data(), static_cast<size_t>(y.tv_y.size())}, r_tv);
        }
        if (blocks.flow) {
            y.flow = (y.flow + s * ku.flow).cwiseMax(-r_flow).cwiseMin(r_flow);
        }
        RowMatrix next = u.values - st.tau * op.adjoint(UImage{y.data, y.tv_x, y.tv_y, y.flow});
        ubar = 2.0 * next - u.values;
        u.values = std::move(next);
        ++report.iterations;
        if (options.log_every > 0 && (it + 1) % options.log_every == 0) {
            const GridTerms t = discrete_regularizers(u, v);
            report.objective.push_back(data_term(k, u.values, f) + w.alpha * t.r + w.gamma * t.a);
        }
    }
    y.data *= sc.data;
    y.tv_x *= sc.tv;
    y.tv_y *= sc.tv;
    y.flow *= sc.flow;
    return report;
}

PdhgReport pdhg_flow(VelocityGrid& v, const RowMatrix& rho, const RowMatrix& gx, const RowMatrix& gy,
                     const RegWeights& w, const PdhgOptions& options, VDuals* duals) {
    const Eigen::Index nt = v.vx.rows();
    const Eigen::Index n = v.vx.cols();
    for (const RowMatrix* m : std::initializer_list<const RowMatrix*>{&rho, &gx, &gy, &v.vy}) {
        if (m->rows() != nt || m->cols() != n) {
            throw std::invalid_argument("pdhg_flow: rho, g and v must share one shape");
        }
    }
    if (options.iterations < 0) {
        throw std::invalid_argument("pdhg_flow: negative iteration count");
    }
    const bool tv = w.beta > 0.0;
    const bool flow = w.gamma > 0.0;
    PdhgReport report;
    if (!tv && !flow) {
        return report; // v does not enter the objective
    }
    double s_tv = 1.0;
    double s_flow = 1.0;
    if (options.balance_blocks) {
        if (tv) {
            s_tv = unit_scale(VOperator(gx, gy, v.grid, true, false).linear(), options);
        }
        if (flow) {
            s_flow = unit_scale(VOperator(gx, gy, v.grid, false, true).linear(), options);
        }
    }
    const VOperator op(gx, gy, v.grid, tv, flow, s_tv, s_flow);
    const Steps st = choose_steps(op.linear(), options);
    report.norm = st.norm;
    report.tau = st.tau;
    report.sigma = st.sigma;
    if (st.norm == 0.0) {
        return report;
    }

    VDuals local;
    VDuals& y = duals ? *duals : local;
    if (tv) {
        ensure_zero(y.tv1_x, nt, n);
        ensure_zero(y.tv1_y, nt, n);
        ensure_zero(y.tv2_x, nt, n);
        ensure_zero(y.tv2_y, nt, n);
    }
    if (flow) {
        ensure_zero(y.flow, nt, n);
    }
    for (RowMatrix* m : {&y.tv1_x, &y.tv1_y, &y.tv2_x, &y.tv2_y}) {
        *m /= s_tv;
    }
    y.flow /= s_flow;

    const double c = cell_weight(v.grid, v.time);
    const double r_tv = w.beta * c / s_tv;
    const double r_flow = w.gamma * c / s_flow;
    const RowMatrix rho_scaled = s_flow * rho;
    const double s = st.sigma;
    auto objective = [&] {
        double obj = 0.0;
        RowMatrix a;
        RowMatrix b;
        if (tv) {
            grad_space(v.vx, v.grid, a, b);
            obj += w.beta * c * sum_norms(a, b);
            grad_space(v.vy, v.grid, a, b);
            obj += w.beta * c * sum_norms(a, b);
        }
        if (flow) {
            obj += w.gamma * c * flow_residual(rho, gx, gy, v.vx, v.vy).cwiseAbs().sum();
        }
        return obj;
    };

    RowMatrix b1 = v.vx;
    RowMatrix b2 = v.vy;
    VImage kv;
    RowMatrix a1;
    RowMatrix a2;
    for (int it = 0; it < options.iterations; ++it) {
        op.apply(b1, b2, kv);
        if (tv) {
            y.tv1_x += s * kv.tv1_x;
            y.tv1_y += s * kv.tv1_y;
            y.tv2_x += s * kv.tv2_x;
            y.tv2_y += s * kv.tv2_y;
            project_l2ball_rows({y.tv1_x.data(), static_cast<size_t>(y.tv1_x.size())},
                                {y.tv1_y.data(), static_cast<size_t>(y.tv1_y.size())}, r_tv);
            project_l2ball_rows({y.tv2_x.data(), static_cast<size_t>(y.tv2_x.size())},
                                {y.tv2_y.data(), static_cast<size_t>(y.tv2_y.size())}, r_tv);
        }
        if (flow) {
            y.flow = (y.flow + s * (kv.flow + rho_scaled)).cwiseMax(-r_flow).cwiseMin(r_flow);
        }
        op.adjoint(VImage{y.tv1_x, y.tv1_y, y.tv2_x, y.tv2_y, y.flow}, a1, a2);
        RowMatrix n1 = v.vx - st.tau * a1;
        RowMatrix n2 = v.vy - st.tau * a2;
        b1 = 2.0 * n1 - v.vx;
        b2 = 2.0 * n2 - v.vy;
        v.vx = std::move(n1);
        v.vy = std::move(n2);
        ++report.iterations;
        if (options.log_every > 0 && (it + 1) % options.log_every == 0) {
            report.objective.push_back(objective());
        }
    }
    for (RowMatrix* m : {&y.tv1_x, &y.tv1_y, &y.tv2_x, &y.tv2_y}) {
        *m *= s_tv;
    }
    y.flow *= s_flow;
    return report;
}

PdhgReport pdhg_v(VelocityGrid& v, const CasoratiImage& u, const RegWeights& w, const PdhgOptions& options,
                  VDuals* duals) {
    check_velocity(u, v);
    RowMatrix gx;
    RowMatrix gy;
    grad_space(u.values, u.grid, gx, gy);
    const RowMatrix rho = grad_time(u.values, u.time.dt());
    return pdhg_flow(v, rho, gx, gy, w, options, duals);
}

AlternationResult alternate(const CasoratiImage& u0, const VelocityGrid& v0, const FrameOperators& k,
                            const Eigen::MatrixXd& f, const RegWeights& w, const AlternationOptions& options) {
    if (options.rounds < 0 || options.inner_iterations < 0) {
        throw std::invalid_argument("alternate: rounds and inner iterations must be >= 0");
    }
    AlternationResult res{u0, v0, {}, 0.0};
    res.initial_objective = grid_objective(k, f, res.u, res.v, w);
    PdhgOptions inner = options.pdhg;
    inner.iterations = options.inner_iterations;
    UDuals ud;
    VDuals vd;
    for (int r = 0; r < options.rounds; ++r) {
        RoundLog log;
        log.round = r + 1;
        pdhg_u(res.u, res.v, k, f, w, inner, &ud);
        log.objective_after_u = grid_objective(k, f, res.u, res.v, w);
        pdhg_v(res.v, res.u, w, inner, &vd);
        log.data = data_term(k, res.u.values, f);
        log.terms = discrete_regularizers(res.u, res.v);
        log.objective_after_v = log.data + w.alpha * log.terms.r + w.beta * log.terms.s + w.gamma * log.terms.a;
        res.rounds.push_back(log);
    }
    return res;
}

AlternationResult reconstruct_grid(const Sinogram& sinogram, const ImageGrid& grid, const RegWeights& w,
                                   const AlternationOptions& options) {
    sinogram.validate();
    const int nt = sinogram.n_frames();
    const TimeAxis time(nt, nt > 1 ? sinogram.times.back() : 0.0);
    const SpacetimeProjector proj(sinogram.geometry, grid, sinogram.angles);
    const FrameOperators k = FrameOperators::projector(proj);
    return alternate(CasoratiImage(grid, time), VelocityGrid(grid, time), k, sinogram.data, w, options);
}

} // namespace dynct
