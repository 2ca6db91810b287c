#include "dynct/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace dynct {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

using Magic = std::array<char, 8>;
constexpr Magic kSinogramMagic{'D', 'Y', 'N', 'S', 'I', 'N', '1', '\0'};
constexpr Magic kVolumeMagic{'D', 'Y', 'N', 'V', 'O', 'L', '1', '\0'};
constexpr Magic kVelocityMagic{'D', 'Y', 'N', 'V', 'E', 'L', '1', '\0'};

class Writer {
public:
    void magic(const Magic& m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void f64s(const double* p, std::size_t n) { raw(p, n * sizeof(double)); }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open " + path.string() + " for writing");
        }
        out.write(bytes_.data(), static_cast<std::streamsize>(bytes_.size()));
        if (!out) {
            throw std::runtime_error("write failed: " + path.string());
        }
    }

private:
    void raw(const void* p, std::size_t n) {
        const char* c = static_cast<const char*>(p);
        bytes_.insert(bytes_.end(), c, c + n);
    }
    std::vector<char> bytes_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : path_(path.string()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw std::runtime_error("cannot open " + path_);
        }
        bytes_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }

    void magic(const Magic& m) {
        need(m.size());
        if (!std::equal(m.begin(), m.end(), bytes_.begin())) {
            fail("bad magic");
        }
        pos_ += m.size();
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        raw(&v, sizeof v);
        return v;
    }
    void f64s(double* p, std::size_t n) { raw(p, n * sizeof(double)); }

    /// Checks the remaining payload length before allocating for it.
    void expect_remaining(std::size_t n_bytes) const {
        const std::size_t left = bytes_.size() - pos_;
        if (left < n_bytes) {
            fail("truncated payload (" + std::to_string(left) + " of " + std::to_string(n_bytes) + " bytes)");
        }
        if (left > n_bytes) {
            fail("payload length differs from header (" + std::to_string(left - n_bytes) + " trailing bytes)");
        }
    }
    void finish() const {
        if (pos_ != bytes_.size()) {
            fail("trailing bytes");
        }
    }
    [[noreturn]] void fail(const std::string& what) const { throw FormatError(path_ + ": " + what); }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            fail("truncated header");
        }
    }
    void raw(void* p, std::size_t n) {
        need(n);
        std::memcpy(p, bytes_.data() + pos_, n);
        pos_ += n;
    }

    std::string path_;
    std::vector<char> bytes_;
    std::size_t pos_ = 0;
};

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void write_grid_header(Writer& w, const ImageGrid& grid, const TimeAxis& time) {
    w.u32(static_cast<std::uint32_t>(grid.nx()));
    w.u32(static_cast<std::uint32_t>(grid.ny()));
    w.u32(static_cast<std::uint32_t>(time.n_frames()));
    const Extent& e = grid.extent();
    w.f64(e.x0);
    w.f64(e.x1);
    w.f64(e.y0);
    w.f64(e.y1);
    w.f64(time.t_final());
}

struct GridHeader {
    ImageGrid grid;
    TimeAxis time;
};

GridHeader read_grid_header(Reader& r) {
    const std::uint32_t nx = r.u32();
    const std::uint32_t ny = r.u32();
    const std::uint32_t nt = r.u32();
    Extent e;
    e.x0 = r.f64();
    e.x1 = r.f64();
    e.y0 = r.f64();
    e.y1 = r.f64();
    const double t_final = r.f64();
    if (nx == 0 || ny == 0 || nt == 0 || nx > (1u << 16) || ny > (1u << 16)) {
        r.fail("implausible dimensions");
    }
    try {
        return {ImageGrid(static_cast<int>(nx), static_cast<int>(ny), e), TimeAxis(static_cast<int>(nt), t_final)};
    } catch (const std::invalid_argument& ex) {
        r.fail(ex.what());
    }
}

RowMatrix read_block(Reader& r, Eigen::Index rows, Eigen::Index cols) {
    RowMatrix m(rows, cols);
    r.f64s(m.data(), static_cast<std::size_t>(m.size()));
    if (!m.allFinite()) {
        r.fail("non-finite payload");
    }
    return m;
}

} // namespace

void write_sinogram(const std::filesystem::path& path, const Sinogram& s) {
    s.validate();
    if (!all_finite(s.angles) || !all_finite(s.times)) {
        throw std::invalid_argument("sinogram: non-finite angles or times");
    }
    Writer w;
    w.magic(kSinogramMagic);
    w.u32(static_cast<std::uint32_t>(s.n_sensors()));
    w.u32(static_cast<std::uint32_t>(s.n_frames()));
    w.f64(s.geometry.dso);
    w.f64(s.geometry.dsd);
    w.f64(s.geometry.detector_width);
    w.f64s(s.angles.data(), s.angles.size());
    w.f64s(s.times.data(), s.times.size());
    const RowMatrix data = s.data;
    w.f64s(data.data(), static_cast<std::size_t>(data.size()));
    w.save(path);
}

Sinogram read_sinogram(const std::filesystem::path& path) {
    Reader r(path);
    r.magic(kSinogramMagic);
    const std::uint32_t m = r.u32();
    const std::uint32_t nt = r.u32();
    Sinogram s;
    s.geometry.dso = r.f64();
    s.geometry.dsd = r.f64();
    s.geometry.detector_width = r.f64();
    if (m == 0 || nt == 0) {
        r.fail("empty sinogram");
    }
    s.geometry.n_sensors = static_cast<int>(m);
    r.expect_remaining(8 * (2 * std::size_t{nt} + std::size_t{m} * nt));
    s.angles.resize(nt);
    s.times.resize(nt);
    r.f64s(s.angles.data(), nt);
    r.f64s(s.times.data(), nt);
    s.data = read_block(r, m, nt);
    r.finish();
    if (!all_finite(s.angles) || !all_finite(s.times)) {
        r.fail("non-finite payload");
    }
    try {
        s.validate();
    } catch (const std::invalid_argument& ex) {
        r.fail(ex.what());
    }
    return s;
}

void write_volume(const std::filesystem::path& path, const CasoratiImage& v) {
    v.validate();
    Writer w;
    w.magic(kVolumeMagic);
    write_grid_header(w, v.grid, v.time);
    w.f64s(v.values.data(), static_cast<std::size_t>(v.values.size()));
    w.save(path);
}

CasoratiImage read_volume(const std::filesystem::path& path) {
    Reader r(path);
    r.magic(kVolumeMagic);
    const GridHeader h = read_grid_header(r);
    const auto n = static_cast<std::size_t>(h.grid.n_pixels()) * h.time.n_frames();
    r.expect_remaining(8 * n);
    RowMatrix values = read_block(r, h.time.n_frames(), h.grid.n_pixels());
    r.finish();
    return CasoratiImage(std::move(values), h.grid, h.time);
}

void write_velocity(const std::filesystem::path& path, const VelocityGrid& v) {
    v.validate();
    Writer w;
    w.magic(kVelocityMagic);
    write_grid_header(w, v.grid, v.time);
    w.f64s(v.vx.data(), static_cast<std::size_t>(v.vx.size()));
    w.f64s(v.vy.data(), static_cast<std::size_t>(v.vy.size()));
    w.save(path);
}

VelocityGrid read_velocity(const std::filesystem::path& path) {
    Reader r(path);
    r.magic(kVelocityMagic);
    const GridHeader h = read_grid_header(r);
    const auto n = static_cast<std::size_t>(h.grid.n_pixels()) * h.time.n_frames();
    r.expect_remaining(16 * n);
    VelocityGrid v(h.grid, h.time);
    v.vx = read_block(r, h.time.n_frames(), h.grid.n_pixels());
    v.vy = read_block(r, h.time.n_frames(), h.grid.n_pixels());
    r.finish();
    return v;
}

std::uint16_t quantize(double x, const Window& w) {
    const double s = std::floor((x - w.lo) / (w.hi - w.lo) * 65536.0);
    return static_cast<std::uint16_t>(std::clamp(s, 0.0, 65535.0));
}

double dequantize(std::uint16_t q, const Window& w) { return w.lo + (q + 0.5) * (w.hi - w.lo) / 65536.0; }

Window auto_window(const CasoratiImage& u) {
    Window w{u.values.minCoeff(), u.values.maxCoeff()};
    if (!(w.hi > w.lo)) {
        w.hi = w.lo + 1.0;
    }
    return w;
}

std::vector<FrameRange> export_frames(const CasoratiImage& u, const std::filesystem::path& dir,
                                      std::optional<Window> window) {
    u.validate();
    const Window w = window ? *window : auto_window(u);
    if (!(w.hi > w.lo) || !std::isfinite(w.lo) || !std::isfinite(w.hi)) {
        throw std::invalid_argument("export_frames: window needs finite lo < hi");
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (!std::filesystem::is_directory(dir)) {
        throw std::runtime_error("cannot create directory " + dir.string());
    }
    const int nx = u.grid.nx();
    const int ny = u.grid.ny();
    std::vector<FrameRange> ranges;
    std::string csv = "frame,min,max\n";
    for (int i = 0; i < u.n_frames(); ++i) {
        const auto f = u.frame(i);
        std::string bytes = "P5\n" + std::to_string(nx) + " " + std::to_string(ny) + "\n65535\n";
        for (int iy = ny - 1; iy >= 0; --iy) {
            for (int ix = 0; ix < nx; ++ix) {
                const std::uint16_t q = quantize(f[static_cast<std::size_t>(iy) * nx + ix], w);
                bytes.push_back(static_cast<char>(q >> 8));
                bytes.push_back(static_cast<char>(q & 0xff));
            }
        }
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04d.pgm", i);
        write_text(dir / name, bytes);
        const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
        ranges.push_back({i, *lo, *hi});
        char line[96];
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g\n", i, *lo, *hi);
        csv += line;
    }
    write_text(dir / "frames.csv", csv);
    return ranges;
}

Pgm16 read_pgm16(const std::filesystem::path& path) {
    const std::string bytes = read_text(path);
    std::istringstream in(bytes);
    std::string magic;
    int maxval = 0;
    Pgm16 img;
    in >> magic >> img.width >> img.height >> maxval;
    if (!in || magic != "P5" || maxval != 65535 || img.width <= 0 || img.height <= 0) {
        throw FormatError(path.string() + ": not a 16-bit binary PGM");
    }
    const auto start = static_cast<std::size_t>(in.tellg()) + 1; // single whitespace after maxval
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    if (bytes.size() != start + 2 * n) {
        throw FormatError(path.string() + ": PGM payload length mismatch");
    }
    img.pixels.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto hi = static_cast<unsigned char>(bytes[start + 2 * k]);
        const auto lo = static_cast<unsigned char>(bytes[start + 2 * k + 1]);
        img.pixels[k] = static_cast<std::uint16_t>((hi << 8) | lo);
    }
    return img;
}

std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) {
    return fnv1a({reinterpret_cast<const unsigned char*>(text.data()), text.size()}, seed);
}

std::uint64_t file_hash(const std::filesystem::path& path) { return fnv1a(read_text(path)); }

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace dynct
