#include "dynct/nf_recon.hpp"

#include "dynct/projector.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dynct {

void NfReconConfig::validate(int n_frames) const {
    if (!(weights.alpha >= 0.0) || !(weights.beta >= 0.0) || !(weights.gamma >= 0.0)) {
        throw std::invalid_argument("nf config: regularization weights must be >= 0");
    }
    if (batch_size < 1 || batch_size > n_frames) {
        throw std::invalid_argument("nf config: batch size must lie in [1, N_T]");
    }
    if (!(sampling_rate > 0.0) || sampling_rate > 1.0) {
        throw std::invalid_argument("nf config: sampling rate must lie in (0, 1]");
    }
    if (epochs < 0) {
        throw std::invalid_argument("nf config: epochs must be >= 0");
    }
    if (!(lr > 0.0) || !(smoothing >= 0.0)) {
        throw std::invalid_argument("nf config: learning rate must be > 0 and smoothing >= 0");
    }
    if (log_every < 1) {
        throw std::invalid_argument("nf config: log_every must be >= 1");
    }
    if (u_arch.out_dim != 1 || v_arch.out_dim != 2) {
        throw std::invalid_argument("nf config: u has one output and v two");
    }
    if (adaptive.enabled && (adaptive.window < 1 || !(adaptive.trigger >= 0.0))) {
        throw std::invalid_argument("nf config: adaptive gamma needs window >= 1 and trigger >= 0");
    }
    u_arch.validate();
    v_arch.validate();
}

long NfReconConfig::collocation_points(int n_frames, int n_pixels) const {
    const double n = sampling_rate * static_cast<double>(n_frames) * static_cast<double>(n_pixels);
    return std::max(1L, std::lround(n));
}

Points<double> lhs_sample(long n, const SpaceTimeBox& box, Rng& rng) {
    if (n < 1) {
        throw std::invalid_argument("lhs_sample: need at least one point");
    }
    const double lo[3] = {box.space.x0, box.space.y0, box.t0};
    const double hi[3] = {box.space.x1, box.space.y1, box.t1};
    Points<double> p(3, n);
    std::vector<long> perm(n);
    for (int d = 0; d < 3; ++d) {
        std::iota(perm.begin(), perm.end(), 0L);
        rng.shuffle(perm.begin(), perm.end());
        const double w = (hi[d] - lo[d]) / static_cast<double>(n);
        for (long k = 0; k < n; ++k) {
            const double a = lo[d] + static_cast<double>(perm[k]) * w;
            const double b = lo[d] + static_cast<double>(perm[k] + 1) * w;
            double x = a + rng.uniform() * w;
            if (x >= b) {
                x = std::nextafter(b, a); // rounding can land on the upper edge
            }
            p(d, k) = std::max(x, a);
        }
    }
    return p;
}

Points<double> lhs_sample(long n, const SpaceTimeBox& box, std::uint64_t seed) {
    Rng rng(seed);
    return lhs_sample(n, box, rng);
}

SpaceTimeBox training_domain(const Sinogram& sinogram, const ImageGrid& grid) {
    SpaceTimeBox box;
    box.space = grid.extent();
    box.t0 = 0.0;
    box.t1 = sinogram.n_frames() > 1 ? sinogram.times.back() : 1.0;
    if (!(box.t1 > box.t0)) {
        throw std::invalid_argument("training domain: acquisition times must end after t = 0");
    }
    return box;
}

namespace {

// sin/cos of the spatial phases at every pixel center, reused for every frame.
template <class T>
class RasterCache {
public:
    RasterCache(const FourierEmbedding<T>& emb, const ImageGrid& grid) : n_(grid.n_pixels()) {
        Points<T> p(3, n_);
        const auto centers = pixel_centers(grid);
        for (int j = 0; j < n_; ++j) {
            p(0, j) = static_cast<T>(centers[j].x);
            p(1, j) = static_cast<T>(centers[j].y);
            p(2, j) = T(0);
        }
        const Mat<T> full = embed_batch(emb, p, Tangents::none);
        spatial_ = full.topRows(2 * emb.bx.rows());
    }

    int n_pixels() const { return n_; }

    Mat<T> embed(const FourierEmbedding<T>& emb, std::span<const double> times) const {
        const Eigen::Index sx = spatial_.rows();
        const Eigen::Index mt = emb.bt.rows();
        Mat<T> out(sx + 2 * mt, static_cast<Eigen::Index>(times.size()) * n_);
        for (size_t b = 0; b < times.size(); ++b) {
            const Eigen::Index c0 = static_cast<Eigen::Index>(b) * n_;
            out.block(0, c0, sx, n_) = spatial_;
            const Vec<T> phase = static_cast<T>(2.0 * kPi) * static_cast<T>(times[b]) * emb.bt;
            out.block(sx, c0, mt, n_) = phase.array().sin().matrix().replicate(1, n_);
            out.block(sx + mt, c0, mt, n_) = phase.array().cos().matrix().replicate(1, n_);
        }
        return out;
    }

private:
    int n_;
    Mat<T> spatial_;
};

template <class T>
double data_pass(const NeuralField<T>& u, const RasterCache<T>& cache, const SpacetimeProjector& proj,
                 const Sinogram& sino, std::span<const int> frames, MlpParams<T>* grads) {
    const int n = cache.n_pixels();
    const int nb = static_cast<int>(frames.size());
    std::vector<double> times(nb);
    for (int b = 0; b < nb; ++b) {
        times[b] = sino.times[frames[b]];
    }
    const FieldTape<T> tape = forward_embedded(u, cache.embed(u.embedding, times), nb * n, Tangents::none);
    const Mat<T>& out = tape.output();
    Mat<T> cot;
    if (grads) {
        cot.resize(1, static_cast<Eigen::Index>(nb) * n);
    }
    std::vector<double> img(n);
    std::vector<double> back(n);
    std::vector<double> r(proj.n_sensors());
    double loss = 0.0;
    for (int b = 0; b < nb; ++b) {
        const FrameSystem& k = proj.frame(frames[b]);
        for (int j = 0; j < n; ++j) {
            img[j] = static_cast<double>(out(0, static_cast<Eigen::Index>(b) * n + j));
        }
        k.forward(img, r);
        for (int m = 0; m < proj.n_sensors(); ++m) {
            r[m] -= sino.data(m, frames[b]);
        }
        double s = 0.0;
        for (double x : r) {
            s += x * x;
        }
        loss += 0.5 * s;
        if (grads) {
            std::fill(back.begin(), back.end(), 0.0);
            k.adjoint_add(r, back);
            for (int j = 0; j < n; ++j) {
                cot(0, static_cast<Eigen::Index>(b) * n + j) = static_cast<T>(back[j] / nb);
            }
        }
    }
    if (grads) {
        backward(u, tape, cot, *grads);
    }
    return loss / nb;
}

struct TermMask {
    bool tv_u = false;
    bool tv_v = false;
    bool flow = false;
    bool stv_u = false;

    bool needs_v() const { return tv_v || flow; }
    bool any() const { return tv_u || tv_v || flow || stv_u; }
};

// Charbonnier-smoothed Euclidean norm and its gradient factor (d norm / d x_k = x_k * factor).
struct SmoothNorm {
    double value;
    double factor;
};

SmoothNorm smooth_norm(double s, double eps) {
    const double r = std::sqrt(s + eps * eps);
    return {r - eps, r > 0.0 ? 1.0 / r : 0.0};
}

// Term integrals over the points and, when `weights` is set, their weighted
// parameter gradients accumulated into gu / gv.
template <class T>
RegularizerTerms reg_pass(const NeuralField<T>& u, const NeuralField<T>* v, const Points<T>& pts, double volume,
                          double eps, TermMask mask, const RegWeights* weights, SpatialPrior prior,
                          MlpParams<T>* gu, MlpParams<T>* gv) {
    RegularizerTerms terms;
    if (!mask.any()) {
        return terms;
    }
    if (mask.needs_v() && v == nullptr) {
        throw std::invalid_argument("regularizer: velocity field required for the requested terms");
    }
    const int n = static_cast<int>(pts.cols());
    const double scale = volume / n;
    const Tangents tu = (mask.flow || mask.stv_u) ? Tangents::full : Tangents::spatial;
    const Tangents tv = mask.tv_v ? Tangents::spatial : Tangents::none;
    const bool use_u = mask.tv_u || mask.flow || mask.stv_u;

    FieldTape<T> tape_u = use_u ? forward(u, pts, tu) : FieldTape<T>{};
    FieldTape<T> tape_v = mask.needs_v() ? forward(*v, pts, tv) : FieldTape<T>{};

    const bool grad = weights != nullptr;
    Mat<T> cu;
    Mat<T> cv;
    if (grad && use_u) {
        cu = Mat<T>::Zero(1, tape_u.output().cols());
    }
    if (grad && mask.needs_v()) {
        cv = Mat<T>::Zero(2, tape_v.output().cols());
    }
    const double wa = grad ? weights->alpha * scale : 0.0;
    const double wb = grad ? weights->beta * scale : 0.0;
    const double wg = grad ? weights->gamma * scale : 0.0;

    double sum_tv = 0.0;
    double sum_tvv = 0.0;
    double sum_flow = 0.0;
    double sum_stv = 0.0;
    for (int c = 0; c < n; ++c) {
        double ux = 0.0;
        double uy = 0.0;
        double ut = 0.0;
        if (use_u) {
            const Mat<T>& o = tape_u.output();
            ux = static_cast<double>(o(0, n + c));
            uy = static_cast<double>(o(0, 2 * n + c));
            if (tu == Tangents::full) {
                ut = static_cast<double>(o(0, 3 * n + c));
            }
        }
        if (mask.tv_u) {
            const SmoothNorm g = smooth_norm(ux * ux + uy * uy, eps);
            sum_tv += g.value;
            if (grad && prior == SpatialPrior::tv) {
                cu(0, n + c) += static_cast<T>(wa * ux * g.factor);
                cu(0, 2 * n + c) += static_cast<T>(wa * uy * g.factor);
            }
        }
        if (mask.stv_u) {
            const SmoothNorm g = smooth_norm(ux * ux + uy * uy + ut * ut, eps);
            sum_stv += g.value;
            if (grad && prior == SpatialPrior::stv) {
                cu(0, n + c) += static_cast<T>(wa * ux * g.factor);
                cu(0, 2 * n + c) += static_cast<T>(wa * uy * g.factor);
                cu(0, 3 * n + c) += static_cast<T>(wa * ut * g.factor);
            }
        }
        if (mask.tv_v) {
            const Mat<T>& o = tape_v.output();
            for (int j = 0; j < 2; ++j) {
                const double vx = static_cast<double>(o(j, n + c));
                const double vy = static_cast<double>(o(j, 2 * n + c));
                const SmoothNorm g = smooth_norm(vx * vx + vy * vy, eps);
                sum_tvv += g.value;
                if (grad) {
                    cv(j, n + c) += static_cast<T>(wb * vx * g.factor);
                    cv(j, 2 * n + c) += static_cast<T>(wb * vy * g.factor);
                }
            }
        }
        if (mask.flow) {
            const Mat<T>& o = tape_v.output();
            const double v1 = static_cast<double>(o(0, c));
            const double v2 = static_cast<double>(o(1, c));
            const double r = ut + v1 * ux + v2 * uy;
            const SmoothNorm g = smooth_norm(r * r, eps);
            sum_flow += g.value;
            if (grad) {
                const double d = wg * r * g.factor; // d/dr of gamma-weighted |r|
                cu(0, n + c) += static_cast<T>(d * v1);
                cu(0, 2 * n + c) += static_cast<T>(d * v2);
                cu(0, 3 * n + c) += static_cast<T>(d);
                cv(0, c) += static_cast<T>(d * ux);
                cv(1, c) += static_cast<T>(d * uy);
            }
        }
    }
    terms.tv_u = scale * sum_tv;
    terms.tv_v = scale * sum_tvv;
    terms.flow = scale * sum_flow;
    terms.stv_u = scale * sum_stv;
    if (grad) {
        if (use_u) {
            backward(u, tape_u, cu, *gu);
        }
        if (mask.needs_v()) {
            backward(*v, tape_v, cv, *gv);
        }
    }
    return terms;
}

TermMask training_mask(const RegWeights& w, SpatialPrior prior) {
    TermMask m;
    m.tv_u = w.alpha > 0.0 && prior == SpatialPrior::tv;
    m.stv_u = w.alpha > 0.0 && prior == SpatialPrior::stv;
    m.tv_v = w.beta > 0.0;
    m.flow = w.gamma > 0.0;
    return m;
}

template <class T>
CasoratiImage render_cached(const NeuralField<T>& u, const RasterCache<T>& cache, const ImageGrid& grid,
                            const TimeAxis& time, std::span<const double> times) {
    CasoratiImage out(grid, time);
    const int n = cache.n_pixels();
    for (int i = 0; i < time.n_frames(); ++i) {
        const FieldTape<T> tape = forward_embedded(u, cache.embed(u.embedding, times.subspan(i, 1)), n,
                                                   Tangents::none);
        for (int j = 0; j < n; ++j) {
            out.values(i, j) = static_cast<double>(tape.output()(0, j));
        }
    }
    return out;
}

template <class T>
TrainingResult train_impl(const NfReconConfig& cfg, const Sinogram& sino, const ImageGrid& grid,
                          const CasoratiImage* gt, const TrainingCallback& callback) {
    using Clock = std::chrono::steady_clock;
    const auto t_start = Clock::now();
    sino.validate();
    const int n_frames = sino.n_frames();
    cfg.validate(n_frames);
    if (gt && (!(gt->grid == grid) || gt->n_frames() != n_frames)) {
        throw std::invalid_argument("train: ground truth must be on the reconstruction grid with N_T frames");
    }
    const SpaceTimeBox box = training_domain(sino, grid);
    const double volume = box.volume();
    const TimeAxis time_axis(n_frames, n_frames > 1 ? sino.times.back() : 0.0);

    NeuralField<T> u = init_field<T>(cfg.seed_u, cfg.u_arch);
    NeuralField<T> v = init_field<T>(cfg.seed_v, cfg.v_arch);
    const SpacetimeProjector proj(sino.geometry, grid, sino.angles);
    const RasterCache<T> cache(u.embedding, grid);
    AdamState<T> adam_u(u.params, AdamConfig{.lr = cfg.lr});
    AdamState<T> adam_v(v.params, AdamConfig{.lr = cfg.lr});
    MlpParams<T> gu = MlpParams<T>::zeros_like(u.params);
    MlpParams<T> gv = MlpParams<T>::zeros_like(v.params);

    Rng frame_rng(cfg.seed_sampling);
    Rng point_rng(cfg.seed_sampling ^ 0x9E3779B97F4A7C15ULL);
    const long n_points = cfg.collocation_points(n_frames, grid.n_pixels());
    const bool full_batch = cfg.batch_size == n_frames;
    const int per_epoch = (n_frames + cfg.batch_size - 1) / cfg.batch_size;
    std::vector<int> perm(n_frames);
    std::iota(perm.begin(), perm.end(), 0);

    TrainingResult result;
    TrainingHistory& hist = result.history;
    NeuralField<T> best_u = u;
    NeuralField<T> best_v = v;
    double gamma = cfg.weights.gamma;

    double acc_data = 0.0;
    double acc_r = 0.0;
    double acc_s = 0.0;
    double acc_a = 0.0;
    double acc_flow = 0.0;
    long acc_n = 0;
    long step = 0;
    const long total_steps = cfg.epochs * per_epoch;
    bool stop = false;

    for (long epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
        if (!full_batch) {
            frame_rng.shuffle(perm.begin(), perm.end());
        }
        for (int b = 0; b < per_epoch && !stop; ++b) {
            const int first = b * cfg.batch_size;
            const int count = std::min(cfg.batch_size, n_frames - first);
            const std::span<const int> frames(perm.data() + first, count);

            gu.set_zero();
            gv.set_zero();
            const double data = data_pass(u, cache, proj, sino, frames, &gu);
            const RegWeights w{cfg.weights.alpha, cfg.weights.beta, gamma};
            const TermMask mask = training_mask(w, cfg.prior);
            RegularizerTerms terms;
            if (mask.any()) {
                const Points<T> pts = lhs_sample(n_points, box, point_rng).template cast<T>();
                terms = reg_pass(u, &v, pts, volume, cfg.smoothing, mask, &w, cfg.prior, &gu, &gv);
            }
            const double loss = data + terms.weighted(w, cfg.prior);
            ++step;
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "non-finite loss at iteration " << step << " (data " << data << ", R "
                    << terms.weighted({w.alpha, 0, 0}, cfg.prior) << ", S " << w.beta * terms.tv_v << ", A "
                    << w.gamma * terms.flow << ")";
                hist.aborted = true;
                hist.diagnostic = msg.str();
                break;
            }
            try {
                adam_step(adam_u, u.params, gu);
                if (mask.needs_v()) {
                    adam_step(adam_v, v.params, gv);
                }
            } catch (const std::domain_error& e) {
                hist.aborted = true;
                hist.diagnostic = e.what();
                break;
            }
            hist.loss_trace.push_back(loss);
            acc_data += data;
            acc_r += terms.weighted({w.alpha, 0, 0}, cfg.prior);
            acc_s += w.beta * terms.tv_v;
            acc_a += w.gamma * terms.flow;
            acc_flow += terms.flow;
            ++acc_n;

            const bool log_now = full_batch ? (step % cfg.log_every == 0 || step == total_steps) : b == per_epoch - 1;
            if (!log_now) {
                continue;
            }
            TrainingRecord rec;
            rec.step = step;
            rec.epoch = epoch + 1;
            rec.data = acc_data / acc_n;
            rec.reg_r = acc_r / acc_n;
            rec.reg_s = acc_s / acc_n;
            rec.reg_a = acc_a / acc_n;
            rec.flow_error = acc_flow / acc_n;
            rec.loss = rec.data + rec.reg_r + rec.reg_s + rec.reg_a;
            rec.gamma = gamma;
            rec.psnr = std::numeric_limits<double>::quiet_NaN();
            acc_data = acc_r = acc_s = acc_a = acc_flow = 0.0;
            acc_n = 0;
            if (gt) {
                const CasoratiImage img = render_cached(u, cache, grid, time_axis, sino.times);
                rec.psnr = psnr(img, *gt, cfg.psnr);
                if (rec.psnr > hist.best_psnr) {
                    hist.best_psnr = rec.psnr;
                    hist.best_step = step;
                    best_u = u;
                    best_v = v;
                }
            }
            rec.seconds = std::chrono::duration<double>(Clock::now() - t_start).count();
            hist.records.push_back(rec);

            const double g2 = adaptive_gamma(hist, cfg, gamma);
            if (g2 != gamma) {
                gamma = g2;
                hist.gamma_switch_step = step;
            }
            if (callback && !callback(rec)) {
                stop = true;
            }
        }
        if (hist.aborted) {
            break;
        }
    }

    result.u = cast_field<double>(u);
    result.v = cast_field<double>(v);
    if (gt && hist.best_step >= 0) {
        result.best_u = cast_field<double>(best_u);
        result.best_v = cast_field<double>(best_v);
    } else {
        result.best_u = result.u;
        result.best_v = result.v;
    }
    return result;
}

void check_frames(std::span<const int> frames, int n_frames) {
    if (frames.empty()) {
        throw std::invalid_argument("empty frame batch");
    }
    std::vector<int> sorted(frames.begin(), frames.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() || sorted.front() < 0 ||
        sorted.back() >= n_frames) {
        throw std::invalid_argument("frame indices must be distinct and in [0, N_T)");
    }
}

} // namespace

double data_fidelity_batch(const NeuralField<double>& u, const Sinogram& sinogram, std::span<const int> frames,
                           const ImageGrid& grid) {
    sinogram.validate();
    check_frames(frames, sinogram.n_frames());
    const SpacetimeProjector proj(sinogram.geometry, grid, sinogram.angles);
    const RasterCache<double> cache(u.embedding, grid);
    return data_pass<double>(u, cache, proj, sinogram, frames, nullptr);
}

RegularizerTerms regularizer_terms(const NeuralField<double>& u, const NeuralField<double>* v,
                                   const Points<double>& points, double volume, double smoothing) {
    TermMask mask;
    mask.tv_u = true;
    mask.stv_u = true;
    mask.tv_v = v != nullptr;
    mask.flow = v != nullptr;
    return reg_pass<double>(u, v, points, volume, smoothing, mask, nullptr, SpatialPrior::tv, nullptr, nullptr);
}

double mc_regularizer(const NeuralField<double>& u, const NeuralField<double>& v, const Points<double>& points,
                      const RegWeights& weights, double volume, double smoothing) {
    const TermMask mask = training_mask(weights, SpatialPrior::tv);
    return reg_pass<double>(u, &v, points, volume, smoothing, mask, nullptr, SpatialPrior::tv, nullptr, nullptr)
        .weighted(weights, SpatialPrior::tv);
}

double eta(const NeuralField<double>& u, const NeuralField<double>& v, double x, double y, double t,
           const RegWeights& weights, double smoothing) {
    Points<double> p(3, 1);
    p << x, y, t;
    return mc_regularizer(u, v, p, weights, 1.0, smoothing);
}

double stv_regularizer(const NeuralField<double>& u, const Points<double>& points, double volume, double smoothing) {
    TermMask mask;
    mask.stv_u = true;
    return reg_pass<double>(u, nullptr, points, volume, smoothing, mask, nullptr, SpatialPrior::stv, nullptr, nullptr)
        .stv_u;
}

ObjectiveGradient objective_gradient(const NeuralField<double>& u, const NeuralField<double>& v,
                                     const Sinogram& sinogram, std::span<const int> frames, const ImageGrid& grid,
                                     const Points<double>& points, const RegWeights& weights, SpatialPrior prior,
                                     double smoothing) {
    sinogram.validate();
    check_frames(frames, sinogram.n_frames());
    ObjectiveGradient out;
    out.grad_u = MlpParams<double>::zeros_like(u.params);
    out.grad_v = MlpParams<double>::zeros_like(v.params);
    const SpacetimeProjector proj(sinogram.geometry, grid, sinogram.angles);
    const RasterCache<double> cache(u.embedding, grid);
    out.data = data_pass<double>(u, cache, proj, sinogram, frames, &out.grad_u);
    const TermMask mask = training_mask(weights, prior);
    if (mask.any()) {
        const double volume = training_domain(sinogram, grid).volume();
        out.terms = reg_pass<double>(u, &v, points, volume, smoothing, mask, &weights, prior, &out.grad_u,
                                     &out.grad_v);
    }
    out.loss = out.data + out.terms.weighted(weights, prior);
    return out;
}

double adaptive_gamma(const TrainingHistory& history, const NfReconConfig& config, double current_gamma) {
    const AdaptiveGamma& a = config.adaptive;
    if (!a.enabled || history.gamma_switch_step >= 0 || current_gamma >= a.target) {
        return current_gamma;
    }
    const auto& r = history.records;
    const size_t w = static_cast<size_t>(a.window);
    if (r.size() < 2 * w || r.back().step < a.min_step) {
        return current_gamma;
    }
    double prev = 0.0;
    double last = 0.0;
    for (size_t k = 0; k < w; ++k) {
        last += r[r.size() - 1 - k].flow_error;
        prev += r[r.size() - 1 - w - k].flow_error;
    }
    return last > prev * (1.0 + a.trigger) ? a.target : current_gamma;
}

CasoratiImage render_field(const NeuralField<double>& u, const ImageGrid& grid, const TimeAxis& time) {
    if (u.arch.out_dim != 1) {
        throw std::invalid_argument("render_field: expected a scalar field");
    }
    const RasterCache<double> cache(u.embedding, grid);
    const std::vector<double> times = time.times();
    return render_cached(u, cache, grid, time, times);
}

VelocityGrid render_velocity(const NeuralField<double>& v, const ImageGrid& grid, const TimeAxis& time) {
    if (v.arch.out_dim != 2) {
        throw std::invalid_argument("render_velocity: expected a two-component field");
    }
    VelocityGrid out(grid, time);
    const RasterCache<double> cache(v.embedding, grid);
    const std::vector<double> times = time.times();
    const int n = grid.n_pixels();
    for (int i = 0; i < time.n_frames(); ++i) {
        const auto tape = forward_embedded(v, cache.embed(v.embedding, std::span(times).subspan(i, 1)), n,
                                           Tangents::none);
        out.vx.row(i) = tape.output().row(0);
        out.vy.row(i) = tape.output().row(1);
    }
    return out;
}

TrainingResult train(const NfReconConfig& config, const Sinogram& sinogram, const ImageGrid& grid,
                     const CasoratiImage* ground_truth, const TrainingCallback& callback) {
    if (config.precision == Precision::float32) {
        return train_impl<float>(config, sinogram, grid, ground_truth, callback);
    }
    return train_impl<double>(config, sinogram, grid, ground_truth, callback);
}

} // namespace dynct
