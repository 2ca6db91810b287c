#include "dynct/field.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace dynct;

namespace {

FieldArch small_arch(int width = 6, int layers = 2, int out_dim = 1) {
    FieldArch a;
    a.m_x = 3;
    a.m_t = 2;
    a.sigma_x = 1.0;
    a.sigma_t = 1.0;
    a.hidden_layers = layers;
    a.width = width;
    a.out_dim = out_dim;
    return a;
}

// Biases are zero after init; give them values so the gradient check covers them.
void randomize_biases(NeuralField<double>& f, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    for (auto& b : f.params.biases) {
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            b[i] = d(gen);
        }
    }
}

Points<double> random_points(int n, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Points<double> p(3, n);
    for (int j = 0; j < n; ++j) {
        p(0, j) = d(gen);
        p(1, j) = d(gen);
        p(2, j) = 0.5 * (d(gen) + 1.0);
    }
    return p;
}

// Loss mixing values and input derivatives:
//   sum_p u^2 + (u_t)^2 + sqrt(u_x^2 + u_y^2 + 0.01)
double probe_loss(const NeuralField<double>& f, const Points<double>& p) {
    const auto tape = forward(f, p, Tangents::full);
    const int n = tape.batch();
    const Mat<double>& o = tape.output();
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
        const double u = o(0, j);
        const double ux = o(0, n + j);
        const double uy = o(0, 2 * n + j);
        const double ut = o(0, 3 * n + j);
        s += u * u + ut * ut + std::sqrt(ux * ux + uy * uy + 0.01);
    }
    return s;
}

MlpParams<double> probe_grad(const NeuralField<double>& f, const Points<double>& p) {
    const auto tape = forward(f, p, Tangents::full);
    const int n = tape.batch();
    const Mat<double>& o = tape.output();
    Mat<double> cot(1, 4 * n);
    for (int j = 0; j < n; ++j) {
        const double ux = o(0, n + j);
        const double uy = o(0, 2 * n + j);
        const double r = std::sqrt(ux * ux + uy * uy + 0.01);
        cot(0, j) = 2.0 * o(0, j);
        cot(0, n + j) = ux / r;
        cot(0, 2 * n + j) = uy / r;
        cot(0, 3 * n + j) = 2.0 * o(0, 3 * n + j);
    }
    MlpParams<double> g = MlpParams<double>::zeros_like(f.params);
    backward(f, tape, cot, g);
    return g;
}

double rel_err(double a, double b, double floor) { return std::abs(a - b) / std::max(std::abs(b), floor); }

} // namespace

TEST(FieldInit, EmbeddingDimensionFromFrequencyCounts) {
    FieldArch a;
    a.m_x = 32;
    a.m_t = 32;
    const auto f = init_field<double>(1, a);
    EXPECT_EQ(f.embedding.dim(), 128);
    EXPECT_EQ(f.params.weights.front().cols(), 128);
    EXPECT_EQ(embed(0.1, 0.2, 0.3, f.embedding).size(), 128);
}

TEST(FieldInit, SameSeedSameParameters) {
    const auto a = init_field<double>(42, small_arch());
    const auto b = init_field<double>(42, small_arch());
    const auto c = init_field<double>(43, small_arch());
    EXPECT_EQ(a.params.flatten(), b.params.flatten());
    EXPECT_EQ(a.embedding.bx, b.embedding.bx);
    EXPECT_EQ(a.embedding.bt, b.embedding.bt);
    EXPECT_NE(a.params.flatten(), c.params.flatten());
}

TEST(FieldInit, ZeroScaleGivesZeroFrequencies) {
    auto arch = small_arch();
    arch.sigma_x = 0.0;
    const auto f = init_field<double>(7, arch);
    EXPECT_TRUE((f.embedding.bx.array() == 0.0).all());
    EXPECT_TRUE((f.embedding.bt.array() != 0.0).any());
}

TEST(FieldInit, XavierBoundsAndZeroBias) {
    const auto arch = small_arch(8, 3);
    const auto f = init_field<double>(3, arch);
    ASSERT_EQ(f.params.weights.size(), 4u);
    for (const auto& w : f.params.weights) {
        const double r = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
        EXPECT_LE(w.cwiseAbs().maxCoeff(), r);
    }
    for (const auto& b : f.params.biases) {
        EXPECT_TRUE((b.array() == 0.0).all());
    }
    EXPECT_EQ(f.params.weights.back().rows(), 1);
}

TEST(FieldInit, RejectsEmptySizes) {
    auto arch = small_arch();
    arch.width = 0;
    EXPECT_THROW(init_field<double>(1, arch), std::invalid_argument);
}

TEST(Embed, OriginGivesZeroSinesUnitCosines) {
    const auto f = init_field<double>(5, small_arch());
    const Vec<double> e = embed(0.0, 0.0, 0.0, f.embedding);
    EXPECT_TRUE((e.segment(0, 3).array() == 0.0).all());
    EXPECT_TRUE((e.segment(3, 3).array() == 1.0).all());
    EXPECT_TRUE((e.segment(6, 2).array() == 0.0).all());
    EXPECT_TRUE((e.segment(8, 2).array() == 1.0).all());
}

TEST(Embed, EntriesBounded) {
    FieldArch arch = small_arch();
    arch.sigma_x = 20.0;
    arch.sigma_t = 20.0;
    const auto f = init_field<double>(9, arch);
    const auto p = random_points(200, 1);
    const Mat<double> e = embed_batch(f.embedding, p, Tangents::none);
    EXPECT_LE(e.cwiseAbs().maxCoeff(), 1.0);
}

TEST(Embed, UnitPhaseShiftIsInvisible) {
    FourierEmbedding<double> emb;
    emb.bx.resize(2, 2);
    emb.bx << 1.0, 0.0, 0.0, 1.0;
    emb.bt.resize(1);
    emb.bt << 1.0;
    const Vec<double> a = embed(0.3, -0.2, 0.4, emb);
    const Vec<double> b = embed(1.3, -0.2, 0.4, emb);
    const Vec<double> c = embed(0.3, 0.8, 1.4, emb);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((a - c).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FieldEval, ZeroParametersGiveZero) {
    auto f = init_field<double>(1, small_arch());
    f.params.set_zero();
    const Mat<double> out = field_eval(f, random_points(17, 2));
    EXPECT_TRUE((out.array() == 0.0).all());
}

TEST(FieldEval, BatchMatchesPointLoop) {
    auto f = init_field<double>(11, small_arch(16, 3, 2));
    randomize_biases(f, 1);
    const auto p = random_points(40, 3);
    const Mat<double> batch = field_eval(f, p);
    for (int j = 0; j < p.cols(); ++j) {
        const Points<double> q = p.col(j);
        const Mat<double> one = field_eval(f, q);
        for (int k = 0; k < 2; ++k) {
            EXPECT_NEAR(one(k, 0), batch(k, j), 1e-15 * (1.0 + std::abs(batch(k, j))));
        }
    }
}

TEST(FieldEval, OutputBoundedByLastLayerNorm) {
    auto f = init_field<double>(13, small_arch(8, 2));
    randomize_biases(f, 4);
    const double bound = f.params.weights.back().cwiseAbs().sum() + f.params.biases.back().cwiseAbs().maxCoeff();
    const Mat<double> out = field_eval(f, random_points(500, 5));
    EXPECT_LT(out.cwiseAbs().maxCoeff(), bound);
}

TEST(FieldEval, FloatTracksDouble) {
    const auto fd = init_field<double>(21, small_arch(32, 3));
    const auto ff = init_field<float>(21, small_arch(32, 3));
    const auto p = random_points(50, 6);
    const Mat<double> od = field_eval(fd, p);
    const Mat<float> of = field_eval(ff, Points<float>(p.cast<float>()));
    EXPECT_LT((od - of.cast<double>()).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(InputDerivs, ZeroLastLayerGivesZeroDerivatives) {
    auto f = init_field<double>(1, small_arch());
    f.params.weights.back().setZero();
    const auto d = field_input_derivs(f, 0.1, 0.2, 0.3);
    EXPECT_EQ(d.dx[0], 0.0);
    EXPECT_EQ(d.dy[0], 0.0);
    EXPECT_EQ(d.dt[0], 0.0);
}

TEST(InputDerivs, NoTimeFrequenciesNoTimeDerivative) {
    auto arch = small_arch();
    arch.sigma_t = 0.0;
    const auto f = init_field<double>(2, arch);
    const auto d = field_input_derivs(f, 0.4, -0.7, 0.9);
    EXPECT_EQ(d.dt[0], 0.0);
    EXPECT_NE(d.dx[0], 0.0);
}

TEST(InputDerivs, MatchCentralDifferencesWide) {
    FieldArch arch;
    arch.m_x = 32;
    arch.m_t = 32;
    // Largest frequency scale used in the experiments.
    arch.sigma_x = 0.5;
    arch.sigma_t = 0.5;
    arch.width = 128;
    arch.hidden_layers = 3;
    const double h = 1e-5;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        auto f = init_field<double>(1000 + trial, arch);
        randomize_biases(f, trial);
        const auto p = random_points(1, 100 + trial);
        const double x = p(0, 0);
        const double y = p(1, 0);
        const double t = p(2, 0);
        const auto d = field_input_derivs(f, x, y, t);
        auto u = [&](double a, double b, double c) {
            Points<double> q(3, 1);
            q << a, b, c;
            return field_eval(f, q)(0, 0);
        };
        const double fx = (u(x + h, y, t) - u(x - h, y, t)) / (2 * h);
        const double fy = (u(x, y + h, t) - u(x, y - h, t)) / (2 * h);
        const double ft = (u(x, y, t + h) - u(x, y, t - h)) / (2 * h);
        // Round-off in the differences is ~1e-16 / h; relative errors use that floor.
        worst = std::max({worst, rel_err(d.dx[0], fx, 1e-3), rel_err(d.dy[0], fy, 1e-3),
                          rel_err(d.dt[0], ft, 1e-3)});
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(InputDerivs, TangentBlocksMatchSinglePointDerivatives) {
    auto f = init_field<double>(3, small_arch(8, 2, 2));
    const auto p = random_points(5, 9);
    const auto tape = forward(f, p, Tangents::full);
    for (int j = 0; j < 5; ++j) {
        const auto d = field_input_derivs(f, p(0, j), p(1, j), p(2, j));
        for (int k = 0; k < 2; ++k) {
            EXPECT_NEAR(tape.value()(k, j), d.value[k], 1e-14);
            EXPECT_NEAR(tape.tangent(0)(k, j), d.dx[k], 1e-13);
            EXPECT_NEAR(tape.tangent(1)(k, j), d.dy[k], 1e-13);
            EXPECT_NEAR(tape.tangent(2)(k, j), d.dt[k], 1e-13);
        }
    }
}

TEST(ParamGrads, MatchCentralDifferencesForDerivativeLoss) {
    for (int width : {2, 5, 8}) {
        auto f = init_field<double>(77 + width, small_arch(width, 2));
        randomize_biases(f, width);
        const auto p = random_points(6, 10 + width);
        const std::vector<double> g = probe_grad(f, p).flatten();
        std::vector<double> theta = f.params.flatten();
        double worst = 0.0;
        for (size_t i = 0; i < theta.size(); ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
            auto shifted = theta;
            shifted[i] = theta[i] + h;
            f.params.unflatten(shifted);
            const double lp = probe_loss(f, p);
            shifted[i] = theta[i] - h;
            f.params.unflatten(shifted);
            const double lm = probe_loss(f, p);
            f.params.unflatten(theta);
            const double fd = (lp - lm) / (2 * h);
            worst = std::max(worst, rel_err(g[i], fd, 1e-4));
        }
        EXPECT_LT(worst, 1e-5) << "width " << width;
    }
}

TEST(ParamGrads, TimeDerivativeSquaredTwoUnits) {
    auto f = init_field<double>(5, small_arch(2, 1));
    randomize_biases(f, 8);
    Points<double> p(3, 1);
    p << 0.2, -0.4, 0.6;
    auto loss = [&] {
        const auto d = field_input_derivs(f, p(0, 0), p(1, 0), p(2, 0));
        return d.dt[0] * d.dt[0];
    };
    const auto tape = forward(f, p, Tangents::full);
    Mat<double> cot = Mat<double>::Zero(1, 4);
    cot(0, 3) = 2.0 * tape.tangent(2)(0, 0);
    MlpParams<double> g = MlpParams<double>::zeros_like(f.params);
    backward(f, tape, cot, g);
    const auto gv = g.flatten();
    auto theta = f.params.flatten();
    for (size_t i = 0; i < theta.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
        auto s = theta;
        s[i] += h;
        f.params.unflatten(s);
        const double lp = loss();
        s[i] = theta[i] - h;
        f.params.unflatten(s);
        const double lm = loss();
        f.params.unflatten(theta);
        EXPECT_LT(rel_err(gv[i], (lp - lm) / (2 * h), 1e-4), 1e-5) << "parameter " << i;
    }
}

TEST(ParamGrads, ZeroValueGivesZeroGradientForSquare) {
    auto f = init_field<double>(5, small_arch());
    f.params.weights.back().setZero();
    const auto p = random_points(4, 1);
    const auto tape = forward(f, p, Tangents::none);
    const Mat<double> cot = 2.0 * tape.output();
    MlpParams<double> g = MlpParams<double>::zeros_like(f.params);
    backward(f, tape, cot, g);
    for (double v : g.flatten()) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(ParamGrads, BatchGradientIsSumOfPointGradients) {
    auto f = init_field<double>(19, small_arch(8, 2));
    randomize_biases(f, 2);
    const auto p = random_points(7, 3);
    const auto total = probe_grad(f, p).flatten();
    std::vector<double> sum(total.size(), 0.0);
    for (int j = 0; j < p.cols(); ++j) {
        const auto gj = probe_grad(f, Points<double>(p.col(j))).flatten();
        for (size_t i = 0; i < sum.size(); ++i) {
            sum[i] += gj[i];
        }
    }
    for (size_t i = 0; i < sum.size(); ++i) {
        EXPECT_NEAR(total[i], sum[i], 1e-12 * (1.0 + std::abs(sum[i])));
    }
}

TEST(ParamGrads, RejectsMismatchedCotangent) {
    const auto f = init_field<double>(1, small_arch());
    const auto p = random_points(3, 1);
    const auto tape = forward(f, p, Tangents::spatial);
    MlpParams<double> g = MlpParams<double>::zeros_like(f.params);
    EXPECT_THROW(backward(f, tape, Mat<double>(Mat<double>::Ones(1, 3)), g), std::invalid_argument);
    EXPECT_THROW(backward(f, tape, Mat<double>(Mat<double>::Ones(2, 9)), g), std::invalid_argument);
    EXPECT_NO_THROW(backward(f, tape, Mat<double>(Mat<double>::Ones(1, 9)), g));
}

TEST(Adam, ZeroGradientLeavesParameters) {
    auto f = init_field<double>(1, small_arch());
    const auto before = f.params.flatten();
    AdamState<double> st(f.params, AdamConfig{});
    adam_step(st, f.params, MlpParams<double>::zeros_like(f.params));
    EXPECT_EQ(f.params.flatten(), before);
    EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepClosedForm) {
    auto f = init_field<double>(1, small_arch(2, 1));
    const auto before = f.params.flatten();
    auto g = MlpParams<double>::zeros_like(f.params);
    std::vector<double> gv(before.size());
    for (size_t i = 0; i < gv.size(); ++i) {
        gv[i] = (i % 2 ? -1.0 : 1.0) * std::pow(10.0, -static_cast<double>(i % 7));
    }
    g.unflatten(gv);
    AdamConfig cfg;
    cfg.lr = 1e-3;
    AdamState<double> st(f.params, cfg);
    adam_step(st, f.params, g);
    const auto after = f.params.flatten();
    for (size_t i = 0; i < gv.size(); ++i) {
        // m_hat = g and v_hat = g^2 after one bias-corrected step.
        const double expected = -cfg.lr * gv[i] / (std::abs(gv[i]) + cfg.eps);
        EXPECT_NEAR(after[i] - before[i], expected, 1e-15);
        if (std::abs(gv[i]) >= 1e-3) {
            EXPECT_NEAR(after[i] - before[i], -cfg.lr * (gv[i] > 0 ? 1.0 : -1.0), 1e-4 * cfg.lr);
        }
    }
}

TEST(Adam, MatchesReferenceRecursion) {
    auto f = init_field<double>(2, small_arch(3, 1));
    AdamConfig cfg;
    cfg.lr = 0.01;
    AdamState<double> st(f.params, cfg);
    std::vector<double> p = f.params.flatten();
    std::vector<double> m(p.size(), 0.0);
    std::vector<double> v(p.size(), 0.0);
    std::mt19937 gen(3);
    std::normal_distribution<double> nd;
    for (int step = 1; step <= 5; ++step) {
        std::vector<double> gv(p.size());
        for (auto& x : gv) {
            x = nd(gen);
        }
        auto g = MlpParams<double>::zeros_like(f.params);
        g.unflatten(gv);
        adam_step(st, f.params, g);
        for (size_t i = 0; i < p.size(); ++i) {
            m[i] = 0.9 * m[i] + 0.1 * gv[i];
            v[i] = 0.999 * v[i] + 0.001 * gv[i] * gv[i];
            const double mh = m[i] / (1.0 - std::pow(0.9, step));
            const double vh = v[i] / (1.0 - std::pow(0.999, step));
            p[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
        }
        const auto got = f.params.flatten();
        for (size_t i = 0; i < p.size(); ++i) {
            EXPECT_NEAR(got[i], p[i], 1e-13);
        }
    }
}

TEST(Adam, Deterministic) {
    auto f1 = init_field<double>(4, small_arch());
    auto f2 = f1;
    auto g = MlpParams<double>::zeros_like(f1.params);
    std::vector<double> gv(g.size());
    for (size_t i = 0; i < gv.size(); ++i) {
        gv[i] = std::sin(static_cast<double>(i));
    }
    g.unflatten(gv);
    AdamState<double> s1(f1.params, {});
    AdamState<double> s2(f2.params, {});
    adam_step(s1, f1.params, g);
    adam_step(s2, f2.params, g);
    EXPECT_EQ(f1.params.flatten(), f2.params.flatten());
    EXPECT_EQ(s1.v.flatten(), s2.v.flatten());
}

TEST(Adam, RejectsNonFiniteGradient) {
    auto f = init_field<double>(4, small_arch());
    auto g = MlpParams<double>::zeros_like(f.params);
    g.biases[1][0] = std::nan("");
    AdamState<double> st(f.params, {});
    const auto before = f.params.flatten();
    try {
        adam_step(st, f.params, g);
        FAIL() << "expected std::domain_error";
    } catch (const std::domain_error& e) {
        EXPECT_NE(std::string(e.what()).find("layer 2"), std::string::npos);
    }
    EXPECT_EQ(f.params.flatten(), before);
    EXPECT_EQ(st.step, 0);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    auto f = init_field<double>(123, small_arch(7, 2, 2));
    randomize_biases(f, 5);
    const auto path = std::filesystem::temp_directory_path() / "dynct_ckpt_test.bin";
    write_checkpoint(path, f);
    const auto g = read_checkpoint<double>(path);
    EXPECT_EQ(g.arch, f.arch);
    EXPECT_EQ(g.seed, f.seed);
    EXPECT_EQ(g.embedding.bx, f.embedding.bx);
    EXPECT_EQ(g.embedding.bt, f.embedding.bt);
    EXPECT_EQ(g.params.flatten(), f.params.flatten());

    const size_t header = 8 + 4 * 6 + 8 * 2 + 8;
    const size_t values = static_cast<size_t>(f.embedding.bx.size() + f.embedding.bt.size()) + f.params.size();
    EXPECT_EQ(std::filesystem::file_size(path), header + 8 * values);
    std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsBadMagic) {
    const auto path = std::filesystem::temp_directory_path() / "dynct_ckpt_bad.bin";
    {
        std::ofstream os(path, std::ios::binary);
        os << "NOTACKPT and more bytes";
    }
    EXPECT_THROW(read_checkpoint<double>(path), std::runtime_error);
    std::filesystem::remove(path);
}
