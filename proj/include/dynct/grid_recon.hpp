#pragma once

#include "dynct/core.hpp"
#include "dynct/nf_recon.hpp"
#include "dynct/projector.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace dynct {

// Finite differences. Frames are row-major (iy * nx + ix). D uses forward
// differences scaled by 1/h with a zero last difference (Neumann); D_t does the
// same across frames with 1/dt.

void grad_space(std::span<const double> u, const ImageGrid& grid, std::span<double> gx, std::span<double> gy);
/// div = -D^T
void div_space(std::span<const double> qx, std::span<const double> qy, const ImageGrid& grid, std::span<double> out);

/// Frame-wise versions on Casorati matrices (N_T x N).
void grad_space(const RowMatrix& u, const ImageGrid& grid, RowMatrix& gx, RowMatrix& gy);
RowMatrix div_space(const RowMatrix& qx, const RowMatrix& qy, const ImageGrid& grid);

RowMatrix grad_time(const RowMatrix& u, double dt);
RowMatrix grad_time_adjoint(const RowMatrix& q, double dt);

/// |Omega_T| / (N_T N): quadrature weight of one space-time pixel.
double cell_weight(const ImageGrid& grid, const TimeAxis& time);

/// Discretized R, S and A (unweighted).
struct GridTerms {
    double r = 0.0;
    double s = 0.0;
    double a = 0.0;
};
GridTerms discrete_regularizers(const CasoratiImage& u, const VelocityGrid& v);

double prox_soft_threshold(double x, double tau);
/// Scales each (qx_k, qy_k) pair to norm <= r.
void project_l2ball_rows(std::span<double> qx, std::span<double> qy, double r);
/// prox of sigma F* for F(z) = lambda/2 (z - f)^2.
inline double prox_quad_conjugate(double p, double sigma, double f, double lambda) {
    return (p - sigma * f) / (1.0 + sigma / lambda);
}

/// Per-frame linear maps K_i: R^N -> R^rows (projector frames, or identity for denoising).
struct FrameOperators {
    int n_frames = 0;
    int rows = 0;
    int cols = 0;
    std::function<void(int, std::span<const double>, std::span<double>)> forward;
    /// out += K_i^T y
    std::function<void(int, std::span<const double>, std::span<double>)> adjoint_add;

    /// Refers to `proj`, which must outlive the result.
    static FrameOperators projector(const SpacetimeProjector& proj);
    static FrameOperators identity(int n_frames, int n_pixels);
};

/// (1 / N_T) sum_i 1/2 ||K_i u_i - f_i||^2, f with one column per frame.
double data_term(const FrameOperators& k, const RowMatrix& u, const Eigen::MatrixXd& f);

/// Discretized joint objective: data + alpha R + beta S + gamma A.
double grid_objective(const FrameOperators& k, const Eigen::MatrixXd& f, const CasoratiImage& u,
                      const VelocityGrid& v, const RegWeights& w);

struct PdhgOptions {
    int iterations = 2000;
    double step_scale = 0.99; // tau = sigma = step_scale / L
    int power_iterations = 100;
    std::uint64_t power_seed = 0;
    /// Rescale every operator block to unit norm (with the matching change of
    /// its proximal term) before estimating L. The objective is unchanged.
    bool balance_blocks = true;
    int block_power_iterations = 30;
    /// Explicit steps; rejected when tau * sigma * L^2 > 1.
    std::optional<double> tau;
    std::optional<double> sigma;
    /// Objective is recorded every `log_every` iterations (0 = never).
    int log_every = 0;
};

struct PdhgReport {
    double norm = 0.0;
    double tau = 0.0;
    double sigma = 0.0;
    int iterations = 0;
    std::vector<double> objective;
};

/// Dual variables of the u-subproblem; empty members are (re)initialized to zero.
struct UDuals {
    Eigen::MatrixXd data; // rows x N_T
    RowMatrix tv_x;
    RowMatrix tv_y;
    RowMatrix flow;
};

/// Dual variables of the v-subproblem.
struct VDuals {
    RowMatrix tv1_x;
    RowMatrix tv1_y;
    RowMatrix tv2_x;
    RowMatrix tv2_y;
    RowMatrix flow;
};

/// [K; D; T_v] with T_v u = D_t u + v . D u, restricted to blocks with nonzero
/// weight (alpha for D, gamma for T_v). Output order: data (frame-major), D_x,
/// D_y, T_v.
LinearOperator stacked_u_operator(const FrameOperators& k, const VelocityGrid& v, const RegWeights& w);
/// [D v_1; D v_2; g . v] with g = D u, TV blocks present when beta > 0 and the
/// flow block when gamma > 0. Input is (v_1, v_2) stacked.
LinearOperator stacked_v_operator(const RowMatrix& gx, const RowMatrix& gy, const ImageGrid& grid,
                                  const RegWeights& w);

/// min_u data(u) + alpha R(u) + gamma A(u, v) by PDHG, starting from and updating `u`.
PdhgReport pdhg_u(CasoratiImage& u, const VelocityGrid& v, const FrameOperators& k, const Eigen::MatrixXd& f,
                  const RegWeights& w, const PdhgOptions& options, UDuals* duals = nullptr);

/// min_v beta S(v) + gamma c sum |rho + g . v| with pointwise rho and g = (gx, gy).
PdhgReport pdhg_flow(VelocityGrid& v, const RowMatrix& rho, const RowMatrix& gx, const RowMatrix& gy,
                     const RegWeights& w, const PdhgOptions& options, VDuals* duals = nullptr);

/// v-subproblem for fixed u: rho = D_t u, g = D u.
PdhgReport pdhg_v(VelocityGrid& v, const CasoratiImage& u, const RegWeights& w, const PdhgOptions& options,
                  VDuals* duals = nullptr);

struct RoundLog {
    int round = 0;
    double objective_after_u = 0.0;
    double objective_after_v = 0.0;
    double data = 0.0;
    GridTerms terms;
};

struct AlternationResult {
    CasoratiImage u;
    VelocityGrid v;
    std::vector<RoundLog> rounds;
    double initial_objective = 0.0;
};

struct AlternationOptions {
    int rounds = 5;
    int inner_iterations = 2000;
    PdhgOptions pdhg;
};

/// Alternates u- and v-solves from (u0, v0) with duals warm-started across rounds.
AlternationResult alternate(const CasoratiImage& u0, const VelocityGrid& v0, const FrameOperators& k,
                            const Eigen::MatrixXd& f, const RegWeights& w, const AlternationOptions& options);

/// Convenience: zero initial image and velocity on `grid`, projector from the sinogram.
AlternationResult reconstruct_grid(const Sinogram& sinogram, const ImageGrid& grid, const RegWeights& w,
                                   const AlternationOptions& options);

} // namespace dynct
