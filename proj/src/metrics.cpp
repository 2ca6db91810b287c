#include "dynct/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dynct {

double mse(const RowMatrix& x, const RowMatrix& ref) {
    if (x.rows() != ref.rows() || x.cols() != ref.cols()) {
        throw std::invalid_argument("mse: shape mismatch");
    }
    if (x.size() == 0) {
        throw std::invalid_argument("mse: empty input");
    }
    return (x - ref).squaredNorm() / static_cast<double>(x.size());
}

double psnr(const RowMatrix& x, const RowMatrix& ref, double peak) {
    if (!(peak > 0.0) || !std::isfinite(peak)) {
        throw std::invalid_argument("psnr: peak must be positive and finite");
    }
    const double e = mse(x, ref);
    if (e == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(peak * peak / e);
}

namespace {

double resolve_peak(const CasoratiImage& ref, const PsnrOptions& options) {
    return options.peak ? *options.peak : ref.values.maxCoeff();
}

void check_shapes(const CasoratiImage& x, const CasoratiImage& ref) {
    if (!(x.grid == ref.grid) || x.n_frames() != ref.n_frames()) {
        throw std::invalid_argument("psnr: reconstruction and reference differ in grid or frame count");
    }
}

} // namespace

std::vector<double> psnr_per_frame(const CasoratiImage& x, const CasoratiImage& ref, double peak) {
    check_shapes(x, ref);
    std::vector<double> out(x.n_frames());
    for (int i = 0; i < x.n_frames(); ++i) {
        out[i] = psnr(x.values.row(i), ref.values.row(i), peak);
    }
    return out;
}

double psnr(const CasoratiImage& x, const CasoratiImage& ref, const PsnrOptions& options) {
    check_shapes(x, ref);
    const double peak = resolve_peak(ref, options);
    if (!options.per_frame_mean) {
        return psnr(x.values, ref.values, peak);
    }
    double sum = 0.0;
    for (double p : psnr_per_frame(x, ref, peak)) {
        sum += p;
    }
    return sum / x.n_frames();
}

double mean_temporal_std(const CasoratiImage& u) {
    const auto& v = u.values;
    const Eigen::RowVectorXd mean = v.colwise().mean();
    const Eigen::RowVectorXd var = (v.rowwise() - mean).array().square().colwise().mean();
    return var.array().sqrt().mean();
}

} // namespace dynct
