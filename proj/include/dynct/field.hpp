#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace dynct {

/// Sizes of a coordinate network (x, y, t) -> R^out_dim: a fixed Fourier
/// embedding of width 2*m_x + 2*m_t followed by `hidden_layers` tanh layers of
/// `width` units and an affine output layer.
struct FieldArch {
    int m_x = 32;
    int m_t = 32;
    double sigma_x = 0.1;
    double sigma_t = 0.1;
    int hidden_layers = 3;
    int width = 128;
    int out_dim = 1;

    int embedding_dim() const { return 2 * m_x + 2 * m_t; }
    void validate() const;
    bool operator==(const FieldArch&) const = default;
};

/// Input directions carried as forward-mode tangents. The numeric value is the
/// number of tangent blocks.
enum class Tangents { none = 0, spatial = 2, full = 3 };

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
/// Batch of (x, y, t) columns.
template <class T>
using Points = Eigen::Matrix<T, 3, Eigen::Dynamic>;

template <class T>
struct FourierEmbedding {
    Eigen::Matrix<T, Eigen::Dynamic, 2> bx;
    Vec<T> bt;
    double sigma_x = 0.0;
    double sigma_t = 0.0;

    int dim() const { return static_cast<int>(2 * bx.rows() + 2 * bt.rows()); }
};

/// Weights W^1..W^{L+1} (fan_out x fan_in) and biases of the dense layers.
template <class T>
struct MlpParams {
    std::vector<Mat<T>> weights;
    std::vector<Vec<T>> biases;

    static MlpParams zeros_like(const MlpParams& other);
    void set_zero();
    std::size_t size() const;
    bool all_finite() const;
    /// this += scale * other
    void add_scaled(const MlpParams& other, T scale);
    /// Flattened copy in declaration order (W^1, b^1, W^2, ...), W column-major.
    std::vector<T> flatten() const;
    void unflatten(const std::vector<T>& values);
};

template <class T>
struct NeuralField {
    FieldArch arch;
    std::uint64_t seed = 0;
    FourierEmbedding<T> embedding;
    MlpParams<T> params;
};

template <class U, class T>
NeuralField<U> cast_field(const NeuralField<T>& f) {
    NeuralField<U> out;
    out.arch = f.arch;
    out.seed = f.seed;
    out.embedding.bx = f.embedding.bx.template cast<U>();
    out.embedding.bt = f.embedding.bt.template cast<U>();
    out.embedding.sigma_x = f.embedding.sigma_x;
    out.embedding.sigma_t = f.embedding.sigma_t;
    for (const auto& w : f.params.weights) {
        out.params.weights.push_back(w.template cast<U>());
    }
    for (const auto& b : f.params.biases) {
        out.params.biases.push_back(b.template cast<U>());
    }
    return out;
}

/// Gaussian embedding matrices and Xavier-uniform weights (zero biases), all
/// drawn from `seed`.
template <class T>
NeuralField<T> init_field(std::uint64_t seed, const FieldArch& arch);

/// (sin 2pi Bx p, cos 2pi Bx p, sin 2pi Bt t, cos 2pi Bt t)
template <class T>
Vec<T> embed(T x, T y, T t, const FourierEmbedding<T>& emb);

/// Embedding of a batch plus its derivatives along the requested directions,
/// laid out as [value | d/dx | d/dy | d/dt] column blocks.
template <class T>
Mat<T> embed_batch(const FourierEmbedding<T>& emb, const Points<T>& points, Tangents tangents);

/// Network outputs, out_dim x batch.
template <class T>
Mat<T> field_eval(const NeuralField<T>& field, const Points<T>& points);

template <class T>
struct InputDerivatives {
    Vec<T> value;
    Vec<T> dx;
    Vec<T> dy;
    Vec<T> dt;
};

template <class T>
InputDerivatives<T> field_input_derivs(const NeuralField<T>& field, T x, T y, T t);

/// Activations recorded by a forward pass, needed by `backward`.
///
/// Every stored matrix has (1 + n_tangents) column blocks of `batch` columns:
/// block 0 holds values, block k the tangent along direction k.
template <class T>
class FieldTape {
public:
    int batch() const { return batch_; }
    Tangents tangents() const { return tangents_; }
    int blocks() const { return 1 + static_cast<int>(tangents_); }

    /// out_dim x (blocks * batch)
    const Mat<T>& output() const { return output_; }
    auto value() const { return output_.leftCols(batch_); }
    /// Tangent block k (0 = x, 1 = y, 2 = t).
    auto tangent(int k) const { return output_.middleCols((1 + k) * batch_, batch_); }

private:
    template <class U>
    friend FieldTape<U> forward_embedded(const NeuralField<U>&, Mat<U>, int, Tangents);
    template <class U>
    friend void backward(const NeuralField<U>&, const FieldTape<U>&, const Mat<U>&, MlpParams<U>&);

    int batch_ = 0;
    Tangents tangents_ = Tangents::none;
    std::vector<Mat<T>> hidden_;         // layer inputs h_0..h_L, all blocks
    std::vector<Mat<T>> pre_tangent_;    // tangents of the pre-activations, per hidden layer
    Mat<T> output_;
};

template <class T>
FieldTape<T> forward(const NeuralField<T>& field, const Points<T>& points, Tangents tangents);

/// Forward pass from a precomputed `embed_batch` result.
template <class T>
FieldTape<T> forward_embedded(const NeuralField<T>& field, Mat<T> embedded, int batch, Tangents tangents);

/// Reverse sweep. `cotangent` holds dLoss/d(output) for every block of the tape
/// (including the tangent blocks, which carries the loss through the input
/// derivatives); parameter gradients are accumulated into `grads`.
/// Throws std::invalid_argument when the cotangent shape differs from the tape.
template <class T>
void backward(const NeuralField<T>& field, const FieldTape<T>& tape, const Mat<T>& cotangent, MlpParams<T>& grads);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <class T>
struct AdamState {
    AdamConfig config;
    MlpParams<T> m;
    MlpParams<T> v;
    long step = 0;

    AdamState() = default;
    AdamState(const MlpParams<T>& like, AdamConfig cfg);
};

/// One bias-corrected Adam update. Throws std::domain_error on non-finite gradients.
template <class T>
void adam_step(AdamState<T>& state, MlpParams<T>& params, const MlpParams<T>& grads);

/// Checkpoint layout (little-endian): "NFCKPT1\0", u32 version, u32 m_x, m_t,
/// hidden_layers, width, out_dim, f64 sigma_x, sigma_t, u64 seed, then Bx
/// (row-major m_x x 2), Bt, and for each layer W (row-major) followed by b, all f64.
template <class T>
void write_checkpoint(const std::filesystem::path& path, const NeuralField<T>& field);
template <class T>
NeuralField<T> read_checkpoint(const std::filesystem::path& path);

} // namespace dynct
