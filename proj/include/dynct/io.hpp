#pragma once

#include "dynct/core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dynct {

/// Malformed, truncated or non-finite file content.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Binary containers. All numbers are little-endian; doubles are IEEE-754.
//
// Sinogram: "DYNSIN1\0", u32 M, u32 N_T, f64 dso, dsd, detector_width,
//           f64 angles[N_T], f64 times[N_T], f64 data[M][N_T] (row-major).
// Volume:   "DYNVOL1\0", u32 nx, u32 ny, u32 N_T, f64 x0, x1, y0, y1, t_final,
//           f64 values[N_T][nx * ny].
// Velocity: "DYNVEL1\0", same header as a volume, then vx and vy blocks.

void write_sinogram(const std::filesystem::path& path, const Sinogram& sinogram);
Sinogram read_sinogram(const std::filesystem::path& path);

void write_volume(const std::filesystem::path& path, const CasoratiImage& volume);
CasoratiImage read_volume(const std::filesystem::path& path);

void write_velocity(const std::filesystem::path& path, const VelocityGrid& velocity);
VelocityGrid read_velocity(const std::filesystem::path& path);

/// Intensity window mapped linearly onto the 16-bit range.
struct Window {
    double lo = 0.0;
    double hi = 1.0;
};

/// floor((x - lo) / (hi - lo) * 65536), clamped to [0, 65535]. The midpoint of
/// [lo, hi] maps to 32768.
std::uint16_t quantize(double x, const Window& w);
/// Center of the quantization cell: lo + (q + 1/2) (hi - lo) / 65536.
double dequantize(std::uint16_t q, const Window& w);

/// min/max over the whole sequence; a flat sequence gets hi = lo + 1.
Window auto_window(const CasoratiImage& u);

struct FrameRange {
    int frame = 0;
    double min = 0.0;
    double max = 0.0;
};

/// Writes <dir>/frame_NNNN.pgm (16-bit binary P5, top row = largest y) for
/// every frame and <dir>/frames.csv with per-frame min/max. Returns the rows of
/// the CSV.
std::vector<FrameRange> export_frames(const CasoratiImage& u, const std::filesystem::path& dir,
                                      std::optional<Window> window = std::nullopt);

struct Pgm16 {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> pixels; // row-major, top row first
};
Pgm16 read_pgm16(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ULL);
/// FNV-1a of a file's bytes.
std::uint64_t file_hash(const std::filesystem::path& path);
/// 16 lowercase hex digits.
std::string hex64(std::uint64_t value);

/// Whole-file binary write and read.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

} // namespace dynct
