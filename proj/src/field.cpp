#include "dynct/field.hpp"

#include "dynct/core.hpp"

#include <cmath>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace dynct {

void FieldArch::validate() const {
    if (m_x < 1 || m_t < 1 || hidden_layers < 1 || width < 1 || out_dim < 1) {
        throw std::invalid_argument("FieldArch: all sizes must be >= 1");
    }
    if (!(sigma_x >= 0.0) || !(sigma_t >= 0.0) || !std::isfinite(sigma_x) || !std::isfinite(sigma_t)) {
        throw std::invalid_argument("FieldArch: frequency scales must be finite and >= 0");
    }
}

namespace {

constexpr double kTwoPi = 2.0 * kPi;

// Eigen's double tanh is scalar; this form vectorizes through exp and keeps the
// absolute error at a few ulp of 1.
template <class Derived>
void tanh_into(const Eigen::MatrixBase<Derived>& z, Mat<double>& out) {
    out = (-2.0 * z.array().abs()).exp().matrix();
    const Eigen::Index n = out.size();
    double* o = out.data();
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            const Eigen::Index k = j * z.rows() + i;
            o[k] = std::copysign((1.0 - o[k]) / (1.0 + o[k]), z(i, j));
        }
    }
    static_cast<void>(n);
}

template <class Derived>
void tanh_into(const Eigen::MatrixBase<Derived>& z, Mat<float>& out) {
    out = z.array().tanh().matrix();
}

} // namespace

template <class T>
MlpParams<T> MlpParams<T>::zeros_like(const MlpParams& other) {
    MlpParams out;
    for (const auto& w : other.weights) {
        out.weights.push_back(Mat<T>::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : other.biases) {
        out.biases.push_back(Vec<T>::Zero(b.size()));
    }
    return out;
}

template <class T>
void MlpParams<T>::set_zero() {
    for (auto& w : weights) {
        w.setZero();
    }
    for (auto& b : biases) {
        b.setZero();
    }
}

template <class T>
std::size_t MlpParams<T>::size() const {
    std::size_t n = 0;
    for (const auto& w : weights) {
        n += static_cast<std::size_t>(w.size());
    }
    for (const auto& b : biases) {
        n += static_cast<std::size_t>(b.size());
    }
    return n;
}

template <class T>
bool MlpParams<T>::all_finite() const {
    for (const auto& w : weights) {
        if (!w.allFinite()) {
            return false;
        }
    }
    for (const auto& b : biases) {
        if (!b.allFinite()) {
            return false;
        }
    }
    return true;
}

template <class T>
void MlpParams<T>::add_scaled(const MlpParams& other, T scale) {
    if (other.weights.size() != weights.size()) {
        throw std::invalid_argument("MlpParams::add_scaled: layer count mismatch");
    }
    for (size_t l = 0; l < weights.size(); ++l) {
        weights[l] += scale * other.weights[l];
        biases[l] += scale * other.biases[l];
    }
}

template <class T>
std::vector<T> MlpParams<T>::flatten() const {
    std::vector<T> out;
    out.reserve(size());
    for (size_t l = 0; l < weights.size(); ++l) {
        out.insert(out.end(), weights[l].data(), weights[l].data() + weights[l].size());
        out.insert(out.end(), biases[l].data(), biases[l].data() + biases[l].size());
    }
    return out;
}

template <class T>
void MlpParams<T>::unflatten(const std::vector<T>& values) {
    if (values.size() != size()) {
        throw std::invalid_argument("MlpParams::unflatten: size mismatch");
    }
    const T* p = values.data();
    for (size_t l = 0; l < weights.size(); ++l) {
        std::copy(p, p + weights[l].size(), weights[l].data());
        p += weights[l].size();
        std::copy(p, p + biases[l].size(), biases[l].data());
        p += biases[l].size();
    }
}

template <class T>
NeuralField<T> init_field(std::uint64_t seed, const FieldArch& arch) {
    arch.validate();
    NeuralField<T> f;
    f.arch = arch;
    f.seed = seed;
    Rng rng(seed);
    auto& emb = f.embedding;
    emb.sigma_x = arch.sigma_x;
    emb.sigma_t = arch.sigma_t;
    emb.bx.resize(arch.m_x, 2);
    for (int i = 0; i < arch.m_x; ++i) {
        for (int j = 0; j < 2; ++j) {
            emb.bx(i, j) = static_cast<T>(arch.sigma_x * rng.normal());
        }
    }
    emb.bt.resize(arch.m_t);
    for (int i = 0; i < arch.m_t; ++i) {
        emb.bt[i] = static_cast<T>(arch.sigma_t * rng.normal());
    }

    int fan_in = arch.embedding_dim();
    for (int l = 0; l <= arch.hidden_layers; ++l) {
        const int fan_out = l < arch.hidden_layers ? arch.width : arch.out_dim;
        const double r = std::sqrt(6.0 / (fan_in + fan_out));
        Mat<T> w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i) {
            for (int j = 0; j < fan_in; ++j) {
                w(i, j) = static_cast<T>(rng.uniform(-r, r));
            }
        }
        f.params.weights.push_back(std::move(w));
        f.params.biases.push_back(Vec<T>::Zero(fan_out));
        fan_in = fan_out;
    }
    return f;
}

template <class T>
Vec<T> embed(T x, T y, T t, const FourierEmbedding<T>& emb) {
    Points<T> p(3, 1);
    p << x, y, t;
    return embed_batch(emb, p, Tangents::none).col(0);
}

template <class T>
Mat<T> embed_batch(const FourierEmbedding<T>& emb, const Points<T>& points, Tangents tangents) {
    const Eigen::Index n = points.cols();
    const Eigen::Index mx = emb.bx.rows();
    const Eigen::Index mt = emb.bt.rows();
    const int nt = static_cast<int>(tangents);
    Mat<T> out = Mat<T>::Zero(2 * mx + 2 * mt, (1 + nt) * n);

    const T two_pi = static_cast<T>(kTwoPi);
    const Mat<T> phase_x = two_pi * (emb.bx * points.topRows(2));
    const Mat<T> phase_t = two_pi * (emb.bt * points.row(2));
    const Mat<T> sx = phase_x.array().sin().matrix();
    const Mat<T> cx = phase_x.array().cos().matrix();
    const Mat<T> st = phase_t.array().sin().matrix();
    const Mat<T> ct = phase_t.array().cos().matrix();
    out.block(0, 0, mx, n) = sx;
    out.block(mx, 0, mx, n) = cx;
    out.block(2 * mx, 0, mt, n) = st;
    out.block(2 * mx + mt, 0, mt, n) = ct;

    for (int k = 0; k < nt; ++k) {
        const Eigen::Index c0 = (1 + k) * n;
        if (k < 2) {
            const Vec<T> w = two_pi * emb.bx.col(k);
            out.block(0, c0, mx, n) = cx.array().colwise() * w.array();
            out.block(mx, c0, mx, n) = -(sx.array().colwise() * w.array());
        } else {
            const Vec<T> w = two_pi * emb.bt;
            out.block(2 * mx, c0, mt, n) = ct.array().colwise() * w.array();
            out.block(2 * mx + mt, c0, mt, n) = -(st.array().colwise() * w.array());
        }
    }
    return out;
}

template <class T>
FieldTape<T> forward_embedded(const NeuralField<T>& field, Mat<T> embedded, int batch, Tangents tangents) {
    const int nb = 1 + static_cast<int>(tangents);
    if (embedded.cols() != static_cast<Eigen::Index>(nb) * batch ||
        embedded.rows() != field.arch.embedding_dim()) {
        throw std::invalid_argument("forward: embedded batch has the wrong shape");
    }
    const auto& W = field.params.weights;
    const auto& b = field.params.biases;
    const int L = static_cast<int>(W.size()) - 1;

    FieldTape<T> tape;
    tape.batch_ = batch;
    tape.tangents_ = tangents;
    tape.hidden_.reserve(L + 1);
    tape.pre_tangent_.reserve(L);
    tape.hidden_.push_back(std::move(embedded));

    Mat<T> a;
    for (int l = 0; l < L; ++l) {
        Mat<T> z = W[l] * tape.hidden_.back();
        z.leftCols(batch).colwise() += b[l];
        tanh_into(z.leftCols(batch), a);
        Mat<T> h(z.rows(), z.cols());
        h.leftCols(batch) = a;
        if (nb > 1) {
            const auto s = (T(1) - a.array().square()).eval();
            for (int k = 1; k < nb; ++k) {
                h.middleCols(k * batch, batch) = (z.middleCols(k * batch, batch).array() * s).matrix();
            }
            tape.pre_tangent_.push_back(z.rightCols((nb - 1) * batch));
        } else {
            tape.pre_tangent_.emplace_back();
        }
        tape.hidden_.push_back(std::move(h));
    }
    tape.output_ = W[L] * tape.hidden_.back();
    tape.output_.leftCols(batch).colwise() += b[L];
    return tape;
}

template <class T>
FieldTape<T> forward(const NeuralField<T>& field, const Points<T>& points, Tangents tangents) {
    return forward_embedded(field, embed_batch(field.embedding, points, tangents), static_cast<int>(points.cols()),
                            tangents);
}

template <class T>
Mat<T> field_eval(const NeuralField<T>& field, const Points<T>& points) {
    return forward(field, points, Tangents::none).output();
}

template <class T>
InputDerivatives<T> field_input_derivs(const NeuralField<T>& field, T x, T y, T t) {
    Points<T> p(3, 1);
    p << x, y, t;
    const FieldTape<T> tape = forward(field, p, Tangents::full);
    const Mat<T>& out = tape.output();
    return {out.col(0), out.col(1), out.col(2), out.col(3)};
}

template <class T>
void backward(const NeuralField<T>& field, const FieldTape<T>& tape, const Mat<T>& cotangent, MlpParams<T>& grads) {
    const int batch = tape.batch_;
    const int nb = tape.blocks();
    if (cotangent.rows() != tape.output_.rows() || cotangent.cols() != tape.output_.cols()) {
        throw std::invalid_argument("backward: cotangent shape " + std::to_string(cotangent.rows()) + "x" +
                                    std::to_string(cotangent.cols()) + " does not match the tape output " +
                                    std::to_string(tape.output_.rows()) + "x" +
                                    std::to_string(tape.output_.cols()));
    }
    const auto& W = field.params.weights;
    const int L = static_cast<int>(W.size()) - 1;
    if (grads.weights.size() != W.size()) {
        grads = MlpParams<T>::zeros_like(field.params);
    }

    grads.weights[L].noalias() += cotangent * tape.hidden_[L].transpose();
    grads.biases[L] += cotangent.leftCols(batch).rowwise().sum();
    Mat<T> hbar = W[L].transpose() * cotangent;

    Mat<T> gz;
    for (int l = L - 1; l >= 0; --l) {
        const auto a = tape.hidden_[l + 1].leftCols(batch).array();
        const auto s = (T(1) - a.square()).eval();
        gz.resize(hbar.rows(), hbar.cols());
        if (nb > 1) {
            Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic> sbar =
                Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic>::Zero(hbar.rows(), batch);
            for (int k = 1; k < nb; ++k) {
                const auto dabar = hbar.middleCols(k * batch, batch).array();
                gz.middleCols(k * batch, batch) = (dabar * s).matrix();
                sbar += dabar * tape.pre_tangent_[l].middleCols((k - 1) * batch, batch).array();
            }
            gz.leftCols(batch) = ((hbar.leftCols(batch).array() - T(2) * a * sbar) * s).matrix();
        } else {
            gz = (hbar.array() * s).matrix();
        }
        grads.weights[l].noalias() += gz * tape.hidden_[l].transpose();
        grads.biases[l] += gz.leftCols(batch).rowwise().sum();
        if (l > 0) {
            hbar.noalias() = W[l].transpose() * gz;
        }
    }
}

template <class T>
AdamState<T>::AdamState(const MlpParams<T>& like, AdamConfig cfg)
    : config(cfg), m(MlpParams<T>::zeros_like(like)), v(MlpParams<T>::zeros_like(like)) {}

template <class T>
void adam_step(AdamState<T>& state, MlpParams<T>& params, const MlpParams<T>& grads) {
    const size_t n_layers = params.weights.size();
    if (grads.weights.size() != n_layers || state.m.weights.size() != n_layers) {
        throw std::invalid_argument("adam_step: layer count mismatch");
    }
    for (size_t l = 0; l < n_layers; ++l) {
        if (grads.weights[l].rows() != params.weights[l].rows() ||
            grads.weights[l].cols() != params.weights[l].cols() ||
            grads.biases[l].size() != params.biases[l].size()) {
            throw std::invalid_argument("adam_step: gradient shape mismatch in layer " + std::to_string(l + 1));
        }
        if (!grads.weights[l].allFinite() || !grads.biases[l].allFinite()) {
            throw std::domain_error("adam_step: non-finite gradient in layer " + std::to_string(l + 1) +
                                    " at step " + std::to_string(state.step + 1));
        }
    }
    const AdamConfig& c = state.config;
    state.step += 1;
    const T b1 = static_cast<T>(c.beta1);
    const T b2 = static_cast<T>(c.beta2);
    const T bc1 = static_cast<T>(1.0 - std::pow(c.beta1, static_cast<double>(state.step)));
    const T bc2 = static_cast<T>(1.0 - std::pow(c.beta2, static_cast<double>(state.step)));
    const T lr = static_cast<T>(c.lr);
    const T eps = static_cast<T>(c.eps);

    auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
        m = b1 * m + (T(1) - b1) * g;
        v = (b2 * v.array() + (T(1) - b2) * g.array().square()).matrix();
        p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    };
    for (size_t l = 0; l < n_layers; ++l) {
        update(params.weights[l], state.m.weights[l], state.v.weights[l], grads.weights[l]);
        update(params.biases[l], state.m.biases[l], state.v.biases[l], grads.biases[l]);
    }
}

namespace {

constexpr char kCheckpointMagic[8] = {'N', 'F', 'C', 'K', 'P', 'T', '1', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

// Files are little-endian; the targets this builds for are as well.
static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class V>
void put(std::ostream& os, V v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <class V>
V get(std::istream& is) {
    V v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(V));
    if (!is) {
        throw std::runtime_error("read_checkpoint: truncated file");
    }
    return v;
}

template <class M>
void put_row_major(std::ostream& os, const M& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            put<double>(os, static_cast<double>(m(i, j)));
        }
    }
}

template <class M>
void get_row_major(std::istream& is, M& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            m(i, j) = static_cast<typename M::Scalar>(get<double>(is));
        }
    }
}

} // namespace

template <class T>
void write_checkpoint(const std::filesystem::path& path, const NeuralField<T>& field) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::runtime_error("write_checkpoint: cannot open " + path.string());
    }
    const FieldArch& a = field.arch;
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    put<std::uint32_t>(os, kCheckpointVersion);
    for (int v : {a.m_x, a.m_t, a.hidden_layers, a.width, a.out_dim}) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(v));
    }
    put<double>(os, a.sigma_x);
    put<double>(os, a.sigma_t);
    put<std::uint64_t>(os, field.seed);
    put_row_major(os, field.embedding.bx);
    put_row_major(os, field.embedding.bt);
    for (size_t l = 0; l < field.params.weights.size(); ++l) {
        put_row_major(os, field.params.weights[l]);
        put_row_major(os, field.params.biases[l]);
    }
    if (!os) {
        throw std::runtime_error("write_checkpoint: write failed for " + path.string());
    }
}

template <class T>
NeuralField<T> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("read_checkpoint: cannot open " + path.string());
    }
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("read_checkpoint: bad magic in " + path.string());
    }
    const auto version = get<std::uint32_t>(is);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("read_checkpoint: unsupported version " + std::to_string(version));
    }
    FieldArch a;
    a.m_x = static_cast<int>(get<std::uint32_t>(is));
    a.m_t = static_cast<int>(get<std::uint32_t>(is));
    a.hidden_layers = static_cast<int>(get<std::uint32_t>(is));
    a.width = static_cast<int>(get<std::uint32_t>(is));
    a.out_dim = static_cast<int>(get<std::uint32_t>(is));
    a.sigma_x = get<double>(is);
    a.sigma_t = get<double>(is);
    a.validate();

    // Allocate the right shapes, then overwrite every value from the file.
    NeuralField<T> f = init_field<T>(0, a);
    f.seed = get<std::uint64_t>(is);
    get_row_major(is, f.embedding.bx);
    get_row_major(is, f.embedding.bt);
    for (size_t l = 0; l < f.params.weights.size(); ++l) {
        get_row_major(is, f.params.weights[l]);
        get_row_major(is, f.params.biases[l]);
    }
    if (is.peek() != std::char_traits<char>::eof()) {
        throw std::runtime_error("read_checkpoint: trailing bytes in " + path.string());
    }
    return f;
}

#define DYNCT_FIELD_INSTANTIATE(T)                                                                           \
    template struct MlpParams<T>;                                                                            \
    template struct AdamState<T>;                                                                            \
    template NeuralField<T> init_field<T>(std::uint64_t, const FieldArch&);                                  \
    template Vec<T> embed<T>(T, T, T, const FourierEmbedding<T>&);                                           \
    template Mat<T> embed_batch<T>(const FourierEmbedding<T>&, const Points<T>&, Tangents);                  \
    template Mat<T> field_eval<T>(const NeuralField<T>&, const Points<T>&);                                  \
    template InputDerivatives<T> field_input_derivs<T>(const NeuralField<T>&, T, T, T);                      \
    template FieldTape<T> forward<T>(const NeuralField<T>&, const Points<T>&, Tangents);                     \
    template FieldTape<T> forward_embedded<T>(const NeuralField<T>&, Mat<T>, int, Tangents);                 \
    template void backward<T>(const NeuralField<T>&, const FieldTape<T>&, const Mat<T>&, MlpParams<T>&);     \
    template void adam_step<T>(AdamState<T>&, MlpParams<T>&, const MlpParams<T>&);                           \
    template void write_checkpoint<T>(const std::filesystem::path&, const NeuralField<T>&);                  \
    template NeuralField<T> read_checkpoint<T>(const std::filesystem::path&);

DYNCT_FIELD_INSTANTIATE(double)
DYNCT_FIELD_INSTANTIATE(float)

#undef DYNCT_FIELD_INSTANTIATE

} // namespace dynct
