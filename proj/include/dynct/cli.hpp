#pragma once

#include "dynct/core.hpp"
#include "dynct/nf_recon.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dynct {

/// Acquisition and ground-truth settings of a synthetic experiment.
struct SimulationSettings {
    std::string phantom = "two-square"; // two-square | cardiac
    int frames = 50;
    int sensors = 32;
    int resolution = 32; // reconstruction grid (square)
    int hi_res = 256;    // ground-truth rendering resolution, a multiple of `resolution`
    double noise = 0.01;
    double t_final = 1.0;
    SamplingKind sampling = SamplingKind::random;
    double delta_deg = 9.0; // sequential sampling only
    std::uint64_t seed = 7;
    bool smooth_edges = false;

    void validate() const;
};

/// Presets: "paper" (published sizes) and "desk" (scaled to run in minutes on one core).
SimulationSettings simulation_preset(std::string_view phantom, std::string_view preset);
/// Network, sampling and optimizer settings matching `simulation_preset`.
NfReconConfig nf_preset(std::string_view phantom, std::string_view preset);

struct Simulation {
    Sinogram sinogram;
    CasoratiImage ground_truth; // pooled to the reconstruction grid
};
/// Angles from `seed`, noise from a seed derived from it.
Simulation simulate(const SimulationSettings& settings);

/// Entry point of the `dynct` executable; args[0] is the program name.
/// Returns 0 on success, 1 on usage errors and 2 on runtime failures.
int cli_main(const std::vector<std::string>& args);

} // namespace dynct
