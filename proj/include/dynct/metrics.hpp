#pragma once

#include "dynct/core.hpp"

#include <optional>
#include <vector>

namespace dynct {

struct PsnrOptions {
    /// Defaults to the maximum of the reference sequence.
    std::optional<double> peak;
    /// Mean of per-frame PSNRs instead of one value over the whole volume.
    bool per_frame_mean = false;
};

double mse(const RowMatrix& x, const RowMatrix& ref);

/// 10 log10(peak^2 / MSE). Identical inputs give +infinity.
/// Throws std::invalid_argument on shape mismatch or a non-positive peak.
double psnr(const RowMatrix& x, const RowMatrix& ref, double peak);
double psnr(const CasoratiImage& x, const CasoratiImage& ref, const PsnrOptions& options = {});
std::vector<double> psnr_per_frame(const CasoratiImage& x, const CasoratiImage& ref, double peak);

/// Per-pixel standard deviation over frames, averaged over pixels.
double mean_temporal_std(const CasoratiImage& u);

} // namespace dynct
