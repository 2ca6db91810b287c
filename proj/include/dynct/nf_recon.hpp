#pragma once

#include "dynct/core.hpp"
#include "dynct/field.hpp"
#include "dynct/metrics.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace dynct {

/// Space-time box Omega x [t0, t1].
struct SpaceTimeBox {
    Extent space;
    double t0 = 0.0;
    double t1 = 1.0;

    double volume() const { return space.area() * (t1 - t0); }
};

struct RegWeights {
    double alpha = 0.0; // spatial TV of u (or spatio-temporal TV, see SpatialPrior)
    double beta = 0.0;  // TV of each velocity component
    double gamma = 0.0; // optical-flow residual
};

/// Which gradient the alpha term penalizes: |grad u| or |(grad u, u_t)|.
enum class SpatialPrior { tv, stv };

enum class Precision { float64, float32 };

/// One-shot gamma increase when the optical-flow error starts growing. The
/// flow error is averaged over consecutive windows of `window` log records; once
/// the latest window mean exceeds the previous one by more than `trigger`
/// (relative), gamma jumps to `target`.
struct AdaptiveGamma {
    bool enabled = false;
    int window = 10;
    double trigger = 0.05;
    double target = 1e-2;
    long min_step = 0; // no switch before this iteration
};

struct NfReconConfig {
    RegWeights weights{0.0, 0.0, 1e-2};
    SpatialPrior prior = SpatialPrior::tv;
    int batch_size = 1;           // frames per iteration, N_B
    double sampling_rate = 0.1;   // collocation points per space-time pixel
    long epochs = 100;            // passes over the frames; full batch: one iteration each
    double lr = 1e-3;
    double smoothing = 1e-6;      // Charbonnier epsilon for |.| and ||.||; 0 = plain norms
    std::uint64_t seed_u = 1;
    std::uint64_t seed_v = 2;
    std::uint64_t seed_sampling = 3;
    FieldArch u_arch;
    FieldArch v_arch{.out_dim = 2};
    AdaptiveGamma adaptive;
    Precision precision = Precision::float64;
    /// Full-batch log cadence in iterations; mini-batch runs log once per epoch.
    int log_every = 100;
    PsnrOptions psnr;

    void validate(int n_frames) const;
    /// Collocation points per iteration: round(SR * N_T * N), at least 1.
    long collocation_points(int n_frames, int n_pixels) const;
};

struct TrainingRecord {
    long step = 0;
    long epoch = 0;
    double data = 0.0;       // mean data fidelity since the previous record
    double reg_r = 0.0;      // alpha-weighted TV (or STV) term
    double reg_s = 0.0;      // beta-weighted velocity TV term
    double reg_a = 0.0;      // gamma-weighted optical-flow term
    double flow_error = 0.0; // optical-flow integral without the gamma weight
    double loss = 0.0;
    double psnr = 0.0;       // NaN without ground truth
    double gamma = 0.0;
    double seconds = 0.0;
};

struct TrainingHistory {
    std::vector<TrainingRecord> records;
    std::vector<double> loss_trace; // every iteration
    bool aborted = false;
    std::string diagnostic;
    long best_step = -1;
    double best_psnr = -std::numeric_limits<double>::infinity();
    long gamma_switch_step = -1;
};

struct TrainingResult {
    NeuralField<double> u;
    NeuralField<double> v;
    /// Parameters at the best logged PSNR; the final ones without ground truth.
    NeuralField<double> best_u;
    NeuralField<double> best_v;
    TrainingHistory history;
};

/// Latin hypercube sample: in every coordinate each of the n strata
/// [lo + k (hi - lo) / n, lo + (k + 1)(hi - lo) / n) holds exactly one point.
Points<double> lhs_sample(long n, const SpaceTimeBox& box, Rng& rng);
Points<double> lhs_sample(long n, const SpaceTimeBox& box, std::uint64_t seed);

/// (1/|B|) sum_i 1/2 ||K_i u(., t_i) - f_i||^2 over 0-based frame indices,
/// with u rasterized at the pixel centers of `grid`.
double data_fidelity_batch(const NeuralField<double>& u, const Sinogram& sinogram, std::span<const int> frames,
                           const ImageGrid& grid);

/// Unweighted space-time integrals estimated from collocation points.
struct RegularizerTerms {
    double tv_u = 0.0;   // int ||grad u||
    double tv_v = 0.0;   // int sum_j ||grad v_j||
    double flow = 0.0;   // int |u_t + v . grad u|
    double stv_u = 0.0;  // int ||(grad u, u_t)||

    double weighted(const RegWeights& w, SpatialPrior prior) const {
        return w.alpha * (prior == SpatialPrior::tv ? tv_u : stv_u) + w.beta * tv_v + w.gamma * flow;
    }
};

/// (volume / N_C) sum_c of each integrand. `v` may be null when only u terms are wanted.
RegularizerTerms regularizer_terms(const NeuralField<double>& u, const NeuralField<double>* v,
                                   const Points<double>& points, double volume, double smoothing);

/// eta at one point: alpha ||grad u|| + beta sum_j ||grad v_j|| + gamma |u_t + v . grad u|.
double eta(const NeuralField<double>& u, const NeuralField<double>& v, double x, double y, double t,
           const RegWeights& weights, double smoothing);

/// (volume / N_C) sum_c eta(point_c).
double mc_regularizer(const NeuralField<double>& u, const NeuralField<double>& v, const Points<double>& points,
                      const RegWeights& weights, double volume, double smoothing);

/// Monte-Carlo estimate of int sqrt(||grad u||^2 + u_t^2).
double stv_regularizer(const NeuralField<double>& u, const Points<double>& points, double volume,
                       double smoothing = 0.0);

/// One training objective evaluation: data fidelity over `frames` plus the
/// weighted Monte-Carlo regularizer over `points`, with parameter gradients.
struct ObjectiveGradient {
    double data = 0.0;
    RegularizerTerms terms;
    double loss = 0.0;
    MlpParams<double> grad_u;
    MlpParams<double> grad_v;
};
ObjectiveGradient objective_gradient(const NeuralField<double>& u, const NeuralField<double>& v,
                                     const Sinogram& sinogram, std::span<const int> frames, const ImageGrid& grid,
                                     const Points<double>& points, const RegWeights& weights, SpatialPrior prior,
                                     double smoothing);

/// Gamma after inspecting the history (see AdaptiveGamma). Returns the current
/// gamma when disabled, already switched, or the trigger is not met.
double adaptive_gamma(const TrainingHistory& history, const NfReconConfig& config, double current_gamma);

/// Frame i holds the field at the pixel centers of `grid` at time t_i.
CasoratiImage render_field(const NeuralField<double>& u, const ImageGrid& grid, const TimeAxis& time);
VelocityGrid render_velocity(const NeuralField<double>& v, const ImageGrid& grid, const TimeAxis& time);

/// Called after every log record; return false to stop early.
using TrainingCallback = std::function<bool(const TrainingRecord&)>;

/// Adam on data fidelity + Monte-Carlo regularizer. The time domain is
/// [0, last acquisition time] (a unit interval for a single frame).
TrainingResult train(const NfReconConfig& config, const Sinogram& sinogram, const ImageGrid& grid,
                     const CasoratiImage* ground_truth = nullptr, const TrainingCallback& callback = {});

/// Space-time box used by `train` for this acquisition.
SpaceTimeBox training_domain(const Sinogram& sinogram, const ImageGrid& grid);

} // namespace dynct
