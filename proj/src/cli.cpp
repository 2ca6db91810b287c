#include "dynct/cli.hpp"

#include "dynct/field.hpp"
#include "dynct/grid_recon.hpp"
#include "dynct/io.hpp"
#include "dynct/metrics.hpp"
#include "dynct/phantoms.hpp"
#include "dynct/projector.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;

namespace dynct {

void SimulationSettings::validate() const {
    if (phantom != "two-square" && phantom != "cardiac") {
        throw std::invalid_argument("unknown phantom '" + phantom + "' (two-square, cardiac)");
    }
    if (frames < 1 || sensors < 1 || resolution < 1 || hi_res < 1) {
        throw std::invalid_argument("frames, sensors and resolutions must be positive");
    }
    if (hi_res % resolution != 0) {
        throw std::invalid_argument("hi-res " + std::to_string(hi_res) + " is not a multiple of the resolution " +
                                    std::to_string(resolution));
    }
    if (!(noise >= 0.0) || !(t_final > 0.0)) {
        throw std::invalid_argument("noise must be >= 0 and t_final > 0");
    }
}

SimulationSettings simulation_preset(std::string_view phantom, std::string_view preset) {
    SimulationSettings s;
    s.phantom = std::string(phantom);
    const bool cardiac = phantom == "cardiac";
    if (phantom != "two-square" && !cardiac) {
        throw std::invalid_argument("unknown phantom '" + std::string(phantom) + "'");
    }
    s.t_final = cardiac ? 3.0 : 1.0;
    if (preset == "paper") {
        s.frames = cardiac ? 300 : 100;
        s.sensors = 64;
        s.resolution = 64;
        s.hi_res = 1024;
    } else if (preset == "desk") {
        s.frames = cardiac ? 60 : 50;
        s.sensors = 32;
        s.resolution = 32;
        s.hi_res = 256;
    } else {
        throw std::invalid_argument("unknown preset '" + std::string(preset) + "' (paper, desk)");
    }
    return s;
}

NfReconConfig nf_preset(std::string_view phantom, std::string_view preset) {
    NfReconConfig c;
    c.weights = {0.0, 0.0, 1e-2};
    c.batch_size = 1;
    c.lr = 1e-3;
    if (preset == "paper") {
        c.u_arch = FieldArch{};
        c.u_arch.sigma_t = phantom == "cardiac" ? 0.5 : 0.1;
        c.sampling_rate = 0.1;
        c.epochs = 10000;
    } else if (preset == "desk") {
        c.u_arch.m_x = c.u_arch.m_t = 16;
        c.u_arch.sigma_x = c.u_arch.sigma_t = 0.5;
        c.u_arch.width = 32;
        c.u_arch.hidden_layers = 3;
        c.sampling_rate = 0.01;
        c.epochs = 2000;
        c.precision = Precision::float32;
    } else {
        throw std::invalid_argument("unknown preset '" + std::string(preset) + "' (paper, desk)");
    }
    c.v_arch = c.u_arch;
    c.v_arch.out_dim = 2;
    return c;
}

Simulation simulate(const SimulationSettings& s) {
    s.validate();
    const bool cardiac = s.phantom == "cardiac";
    SceneConfig scene = cardiac ? SceneConfig::cardiac() : SceneConfig::two_square();
    if (s.smooth_edges) {
        scene.edge_ramp = 2.0 / s.hi_res;
    }
    MotionLaw motion = cardiac ? MotionLaw::cardiac() : MotionLaw::two_square();
    motion.t_final = s.t_final;
    const Phantom phantom(scene, motion);
    FanBeamGeometry geo = FanBeamGeometry::two_square();
    geo.n_sensors = s.sensors;
    SamplingSchedule schedule;
    schedule.kind = s.sampling;
    schedule.delta = degrees(s.delta_deg);
    schedule.seed = s.seed;
    const TimeAxis time(s.frames, s.t_final);
    return {synthesize_sinogram(phantom, geo, schedule, time, s.noise, s.seed ^ 0x6a09e667f3bcc909ULL, s.hi_res),
            render_pooled_ground_truth(phantom, s.hi_res, s.resolution, time)};
}

namespace {

std::string fmt(double x) {
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    if (std::isnan(x)) {
        return "nan";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Collects outputs of one run and writes the manifest next to them.
class RunRecord {
public:
    RunRecord(const CLI::App& sub, fs::path out_dir) : sub_(sub), dir_(std::move(out_dir)) {
        fs::create_directories(dir_);
    }

    void input(const std::string& label, const fs::path& path) {
        inputs_.emplace_back(label, path.string(), hex64(file_hash(path)));
    }
    fs::path output(const std::string& name) {
        outputs_.push_back(name);
        return dir_ / name;
    }

    /// Options of the subcommand, one `key=value` per line (CLI11 config syntax).
    std::string options() const {
        std::string cfg = sub_.config_to_str(true, false);
        std::istringstream in(cfg);
        std::string line;
        std::string out;
        while (std::getline(in, line)) {
            // Unset optionals fall back to the preset, which the preset name already pins.
            // Empty lists are unset too.
            if (line.rfind("help=", 0) == 0 || line.ends_with("=\"\"") || line.ends_with("=\"{}\"")) {
                continue;
            }
            out += line + "\n";
        }
        return out;
    }

    /// Hash of everything that determines the numerical outputs: all options
    /// except the output directory, plus the bytes of the input files.
    std::string fingerprint() const {
        std::string text = sub_.get_name() + "\n";
        std::istringstream in(options());
        std::string line;
        while (std::getline(in, line)) {
            if (line.rfind("out=", 0) != 0) {
                text += line + "\n";
            }
        }
        for (const auto& [label, path, hash] : inputs_) {
            text += label + ":" + hash + "\n";
        }
        return hex64(fnv1a(text));
    }

    void finish() const {
        std::string m = "# dynct run manifest; rerun with: dynct --config <this file>\n";
        m += "# fingerprint=" + fingerprint() + "\n";
        for (const auto& [label, path, hash] : inputs_) {
            m += "# input " + label + " " + hash + " " + path + "\n";
        }
        for (const std::string& name : outputs_) {
            m += "# output " + name + " " + hex64(file_hash(dir_ / name)) + "\n";
        }
        m += "[" + sub_.get_name() + "]\n" + options();
        write_text(dir_ / "manifest.ini", m);
    }

private:
    const CLI::App& sub_;
    fs::path dir_;
    std::vector<std::tuple<std::string, std::string, std::string>> inputs_;
    std::vector<std::string> outputs_;
};

struct SimulateArgs {
    std::string phantom = "two-square";
    std::string preset = "desk";
    std::uint64_t seed = 7;
    std::optional<int> frames, sensors, resolution, hi_res;
    std::optional<double> noise, t_final;
    std::string sampling = "random";
    double delta_deg = 9.0;
    bool smooth_edges = false;
    std::string out = "sim";
};

struct NfArgs {
    std::string sinogram;
    std::string ground_truth;
    std::string phantom = "two-square";
    std::string preset = "desk";
    std::optional<int> resolution;
    double alpha = 0.0, beta = 0.0, gamma = 1e-2;
    std::string prior = "tv";
    std::optional<int> batch;
    std::optional<double> sampling_rate, lr;
    std::optional<long> epochs;
    double smoothing = 1e-6;
    std::uint64_t seed_u = 1, seed_v = 2, seed_sampling = 3;
    std::optional<int> m_x, m_t, layers, width;
    std::optional<double> sigma_x, sigma_t;
    bool adaptive = false;
    double adaptive_target = 1e-2;
    int adaptive_window = 10;
    double adaptive_trigger = 0.05;
    long adaptive_min_step = 0;
    std::string precision; // empty = preset
    int log_every = 100;
    bool peak_one = false;
    int progress = 0;
    std::string out = "nf";
};

struct GridArgs {
    std::string sinogram;
    std::string ground_truth;
    std::optional<int> resolution;
    double alpha = 1e-3, beta = 1e-4, gamma = 1e-3;
    int rounds = 5;
    int inner = 2000;
    bool no_balance = false;
    bool peak_one = false;
    std::string out = "grid";
};

struct EvalArgs {
    std::string volume;
    std::string reference;
    bool peak_one = false;
    bool per_frame_mean = false;
    std::string out;
};

struct SweepArgs {
    NfArgs nf;
    std::vector<double> gammas{0.0, 1e-2};
};

struct RenderArgs {
    std::string volume;
    std::vector<double> window;
    std::string out = "frames";
};

void add_nf_options(CLI::App* sub, NfArgs& a, bool with_gamma) {
    sub->add_option("--sinogram", a.sinogram, "Sinogram file")->required()->check(CLI::ExistingFile);
    sub->add_option("--ground-truth", a.ground_truth, "Ground-truth volume (enables PSNR tracking)")
        ->check(CLI::ExistingFile);
    sub->add_option("--phantom", a.phantom, "Phantom whose preset supplies the defaults")
        ->check(CLI::IsMember({"two-square", "cardiac"}));
    sub->add_option("--preset", a.preset, "paper | desk")->check(CLI::IsMember({"paper", "desk"}));
    sub->add_option("--res", a.resolution, "Rendering grid (default: ground-truth grid or 32)");
    sub->add_option("--alpha", a.alpha);
    sub->add_option("--beta", a.beta);
    if (with_gamma) {
        sub->add_option("--gamma", a.gamma);
    }
    sub->add_option("--prior", a.prior, "tv | stv")->check(CLI::IsMember({"tv", "stv"}));
    sub->add_option("--batch", a.batch, "Frames per iteration");
    sub->add_option("--sr", a.sampling_rate, "Collocation sampling rate");
    sub->add_option("--epochs", a.epochs);
    sub->add_option("--lr", a.lr);
    sub->add_option("--smoothing", a.smoothing, "Charbonnier epsilon");
    sub->add_option("--seed-u", a.seed_u);
    sub->add_option("--seed-v", a.seed_v);
    sub->add_option("--seed-sampling", a.seed_sampling);
    sub->add_option("--m-x", a.m_x);
    sub->add_option("--m-t", a.m_t);
    sub->add_option("--sigma-x", a.sigma_x);
    sub->add_option("--sigma-t", a.sigma_t);
    sub->add_option("--layers", a.layers);
    sub->add_option("--width", a.width);
    sub->add_flag("--adaptive-gamma", a.adaptive, "Raise gamma once the flow error grows");
    sub->add_option("--adaptive-target", a.adaptive_target);
    sub->add_option("--adaptive-window", a.adaptive_window);
    sub->add_option("--adaptive-trigger", a.adaptive_trigger);
    sub->add_option("--adaptive-min-step", a.adaptive_min_step);
    sub->add_option("--precision", a.precision, "float64 | float32 (default: preset)")
        ->check(CLI::IsMember({"float64", "float32"}));
    sub->add_option("--log-every", a.log_every, "Full-batch log cadence in iterations");
    sub->add_flag("--peak-one", a.peak_one, "PSNR with peak 1 instead of the ground-truth maximum");
    sub->add_option("--progress", a.progress, "Print every n-th log record to stderr (0 = quiet)");
    sub->add_option("--out", a.out, "Output directory");
}

NfReconConfig nf_config(const NfArgs& a, double gamma) {
    NfReconConfig c = nf_preset(a.phantom, a.preset);
    c.weights = {a.alpha, a.beta, gamma};
    c.prior = a.prior == "stv" ? SpatialPrior::stv : SpatialPrior::tv;
    c.batch_size = a.batch.value_or(c.batch_size);
    c.sampling_rate = a.sampling_rate.value_or(c.sampling_rate);
    c.epochs = a.epochs.value_or(c.epochs);
    c.lr = a.lr.value_or(c.lr);
    c.smoothing = a.smoothing;
    c.seed_u = a.seed_u;
    c.seed_v = a.seed_v;
    c.seed_sampling = a.seed_sampling;
    c.u_arch.m_x = a.m_x.value_or(c.u_arch.m_x);
    c.u_arch.m_t = a.m_t.value_or(c.u_arch.m_t);
    c.u_arch.sigma_x = a.sigma_x.value_or(c.u_arch.sigma_x);
    c.u_arch.sigma_t = a.sigma_t.value_or(c.u_arch.sigma_t);
    c.u_arch.hidden_layers = a.layers.value_or(c.u_arch.hidden_layers);
    c.u_arch.width = a.width.value_or(c.u_arch.width);
    c.v_arch = c.u_arch;
    c.v_arch.out_dim = 2;
    c.adaptive = {a.adaptive, a.adaptive_window, a.adaptive_trigger, a.adaptive_target, a.adaptive_min_step};
    if (a.precision == "float64") {
        c.precision = Precision::float64;
    } else if (a.precision == "float32") {
        c.precision = Precision::float32;
    }
    c.log_every = a.log_every;
    if (a.peak_one) {
        c.psnr.peak = 1.0;
    }
    return c;
}

struct Inputs {
    Sinogram sinogram;
    std::optional<CasoratiImage> ground_truth;
    ImageGrid grid = ImageGrid::square(1);
    TimeAxis time{1, 0.0};
};

Inputs load_inputs(const std::string& sino_path, const std::string& gt_path, std::optional<int> resolution) {
    Inputs in;
    in.sinogram = read_sinogram(sino_path);
    const int nt = in.sinogram.n_frames();
    in.time = TimeAxis(nt, nt > 1 ? in.sinogram.times.back() : 0.0);
    if (!gt_path.empty()) {
        in.ground_truth = read_volume(gt_path);
        const CasoratiImage& gt = *in.ground_truth;
        if (gt.n_frames() != nt) {
            throw std::invalid_argument("ground truth has " + std::to_string(gt.n_frames()) +
                                        " frames but the sinogram has " + std::to_string(nt));
        }
        if (resolution && (gt.grid.nx() != *resolution || gt.grid.ny() != *resolution)) {
            throw std::invalid_argument("--res " + std::to_string(*resolution) +
                                        " differs from the ground-truth grid " + std::to_string(gt.grid.nx()) + "x" +
                                        std::to_string(gt.grid.ny()));
        }
        in.grid = gt.grid;
    } else {
        in.grid = ImageGrid::square(resolution.value_or(32));
    }
    return in;
}

void write_history(const fs::path& path, const TrainingHistory& h) {
    std::string csv = "step,epoch,data,reg_r,reg_s,reg_a,flow_error,loss,psnr,gamma\n";
    for (const TrainingRecord& r : h.records) {
        csv += std::to_string(r.step) + "," + std::to_string(r.epoch) + "," + fmt(r.data) + "," + fmt(r.reg_r) + "," +
               fmt(r.reg_s) + "," + fmt(r.reg_a) + "," + fmt(r.flow_error) + "," + fmt(r.loss) + "," +
               fmt(r.psnr) + "," + fmt(r.gamma) + "\n";
    }
    write_text(path, csv);
}

void write_timing(const fs::path& path, const TrainingHistory& h) {
    std::string csv = "step,seconds\n";
    for (const TrainingRecord& r : h.records) {
        csv += std::to_string(r.step) + "," + fmt(r.seconds) + "\n";
    }
    write_text(path, csv);
}

TrainingCallback progress_printer(int every, const std::string& tag) {
    if (every <= 0) {
        return {};
    }
    auto count = std::make_shared<long>(0);
    return [every, tag, count](const TrainingRecord& r) {
        if (++*count % every == 0) {
            std::fprintf(stderr, "%sstep %ld epoch %ld loss %.5g data %.5g flow %.5g psnr %.3f (%.0f s)\n",
                         tag.c_str(), r.step, r.epoch, r.loss, r.data, r.flow_error, r.psnr, r.seconds);
        }
        return true;
    };
}

int run_simulate(const CLI::App& sub, const SimulateArgs& a) {
    SimulationSettings s = simulation_preset(a.phantom, a.preset);
    s.seed = a.seed;
    s.frames = a.frames.value_or(s.frames);
    s.sensors = a.sensors.value_or(s.sensors);
    s.resolution = a.resolution.value_or(s.resolution);
    s.hi_res = a.hi_res.value_or(s.hi_res);
    s.noise = a.noise.value_or(s.noise);
    s.t_final = a.t_final.value_or(s.t_final);
    s.sampling = a.sampling == "sequential" ? SamplingKind::sequential : SamplingKind::random;
    s.delta_deg = a.delta_deg;
    s.smooth_edges = a.smooth_edges;
    const Simulation sim = simulate(s);
    RunRecord rec(sub, a.out);
    write_sinogram(rec.output("sinogram.dsin"), sim.sinogram);
    write_volume(rec.output("ground_truth.dvol"), sim.ground_truth);
    rec.finish();
    std::printf("wrote %s (fingerprint %s)\n", a.out.c_str(), rec.fingerprint().c_str());
    return 0;
}

int run_recon_nf(const CLI::App& sub, const NfArgs& a) {
    const Inputs in = load_inputs(a.sinogram, a.ground_truth, a.resolution);
    const NfReconConfig cfg = nf_config(a, a.gamma);
    RunRecord rec(sub, a.out);
    rec.input("sinogram", a.sinogram);
    if (!a.ground_truth.empty()) {
        rec.input("ground-truth", a.ground_truth);
    }
    const CasoratiImage* gt = in.ground_truth ? &*in.ground_truth : nullptr;
    const TrainingResult res = train(cfg, in.sinogram, in.grid, gt, progress_printer(a.progress, ""));
    write_volume(rec.output("reconstruction.dvol"), render_field(res.best_u, in.grid, in.time));
    write_velocity(rec.output("velocity.dvel"), render_velocity(res.best_v, in.grid, in.time));
    write_checkpoint(rec.output("u.nfckpt"), res.best_u);
    write_checkpoint(rec.output("v.nfckpt"), res.best_v);
    write_history(rec.output("history.csv"), res.history);
    write_timing(fs::path(a.out) / "timing.csv", res.history);
    rec.finish();
    if (res.history.aborted) {
        std::fprintf(stderr, "training aborted: %s\n", res.history.diagnostic.c_str());
        return 2;
    }
    if (gt) {
        std::printf("best psnr %s at step %ld\n", fmt(res.history.best_psnr).c_str(), res.history.best_step);
    }
    return 0;
}

int run_recon_grid(const CLI::App& sub, const GridArgs& a) {
    const Inputs in = load_inputs(a.sinogram, a.ground_truth, a.resolution);
    const ImageGrid grid = in.grid;
    RunRecord rec(sub, a.out);
    rec.input("sinogram", a.sinogram);
    if (!a.ground_truth.empty()) {
        rec.input("ground-truth", a.ground_truth);
    }
    AlternationOptions opts;
    opts.rounds = a.rounds;
    opts.inner_iterations = a.inner;
    opts.pdhg.balance_blocks = !a.no_balance;
    const AlternationResult res = reconstruct_grid(in.sinogram, grid, {a.alpha, a.beta, a.gamma}, opts);
    write_volume(rec.output("reconstruction.dvol"), res.u);
    write_velocity(rec.output("velocity.dvel"), res.v);
    std::string csv = "round,objective_after_u,objective_after_v,data,r,s,a,psnr\n";
    csv += "0," + fmt(res.initial_objective) + "," + fmt(res.initial_objective) + ",,,,,\n";
    const double final_psnr = in.ground_truth
                                  ? psnr(res.u, *in.ground_truth, a.peak_one ? PsnrOptions{1.0, false} : PsnrOptions{})
                                  : std::nan("");
    for (const RoundLog& r : res.rounds) {
        csv += std::to_string(r.round) + "," + fmt(r.objective_after_u) + "," + fmt(r.objective_after_v) + "," +
               fmt(r.data) + "," + fmt(r.terms.r) + "," + fmt(r.terms.s) + "," + fmt(r.terms.a) + "," +
               (r.round == static_cast<int>(res.rounds.size()) ? fmt(final_psnr) : "") + "\n";
    }
    write_text(rec.output("rounds.csv"), csv);
    rec.finish();
    if (in.ground_truth) {
        std::printf("psnr %s\n", fmt(final_psnr).c_str());
    }
    return 0;
}

int run_eval(const CLI::App& sub, const EvalArgs& a) {
    const CasoratiImage x = read_volume(a.volume);
    const CasoratiImage ref = read_volume(a.reference);
    if (!(x.grid == ref.grid) || x.n_frames() != ref.n_frames()) {
        throw std::invalid_argument("volume and reference differ in grid or frame count");
    }
    PsnrOptions opts;
    if (a.peak_one) {
        opts.peak = 1.0;
    }
    opts.per_frame_mean = a.per_frame_mean;
    const double value = psnr(x, ref, opts);
    std::printf("psnr %s\n", fmt(value).c_str());
    if (a.out.empty()) {
        return 0;
    }
    const fs::path out(a.out);
    RunRecord rec(sub, out.has_parent_path() ? out.parent_path() : fs::path("."));
    rec.input("volume", a.volume);
    rec.input("reference", a.reference);
    const std::string fp = rec.fingerprint();
    std::string csv = "name,value,frame,fingerprint\n";
    csv += "psnr," + fmt(value) + ",," + fp + "\n";
    csv += "mse," + fmt(mse(x.values, ref.values)) + ",," + fp + "\n";
    const double peak = opts.peak ? *opts.peak : ref.values.maxCoeff();
    const std::vector<double> frames = psnr_per_frame(x, ref, peak);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        csv += "psnr_frame," + fmt(frames[i]) + "," + std::to_string(i) + "," + fp + "\n";
    }
    write_text(rec.output(out.filename().string()), csv);
    rec.finish();
    return 0;
}

int run_sweep(const CLI::App& sub, const SweepArgs& a) {
    if (a.nf.ground_truth.empty()) {
        throw std::invalid_argument("sweep-gamma needs --ground-truth to track PSNR");
    }
    const Inputs in = load_inputs(a.nf.sinogram, a.nf.ground_truth, a.nf.resolution);
    RunRecord rec(sub, a.nf.out);
    rec.input("sinogram", a.nf.sinogram);
    rec.input("ground-truth", a.nf.ground_truth);
    std::vector<TrainingHistory> runs;
    for (double g : a.gammas) {
        const NfReconConfig cfg = nf_config(a.nf, g);
        TrainingResult res = train(cfg, in.sinogram, in.grid, &*in.ground_truth,
                                   progress_printer(a.nf.progress, "gamma " + fmt(g) + ": "));
        std::printf("gamma %s: best psnr %s at step %ld\n", fmt(g).c_str(), fmt(res.history.best_psnr).c_str(),
                    res.history.best_step);
        runs.push_back(std::move(res.history));
    }
    std::string csv = "step";
    for (double g : a.gammas) {
        csv += ",gamma_" + fmt(g);
    }
    csv += "\n";
    std::map<long, std::vector<std::string>> rows;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        for (const TrainingRecord& r : runs[k].records) {
            auto& row = rows[r.step];
            row.resize(runs.size());
            row[k] = fmt(r.psnr);
        }
    }
    for (auto& [step, cells] : rows) {
        cells.resize(runs.size());
        csv += std::to_string(step);
        for (const std::string& c : cells) {
            csv += "," + c;
        }
        csv += "\n";
    }
    write_text(rec.output("psnr_vs_step.csv"), csv);
    rec.finish();
    return 0;
}

int run_render(const CLI::App& sub, const RenderArgs& a) {
    const CasoratiImage u = read_volume(a.volume);
    std::optional<Window> w;
    if (!a.window.empty()) {
        w = Window{a.window[0], a.window[1]};
    }
    RunRecord rec(sub, a.out);
    rec.input("volume", a.volume);
    const auto ranges = export_frames(u, a.out, w);
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04zu.pgm", i);
        rec.output(name);
    }
    rec.output("frames.csv");
    rec.finish();
    std::printf("wrote %zu frames to %s\n", ranges.size(), a.out.c_str());
    return 0;
}

} // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"Dynamic CT reconstruction with neural fields and optical-flow regularization", "dynct"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Run from a key=value config file (e.g. a manifest.ini)");
    app.option_defaults()->always_capture_default();

    SimulateArgs sim;
    CLI::App* s = app.add_subcommand("simulate", "Phantom -> sinogram + ground-truth volume");
    s->add_option("--phantom", sim.phantom)->check(CLI::IsMember({"two-square", "cardiac"}));
    s->add_option("--preset", sim.preset, "paper | desk")->check(CLI::IsMember({"paper", "desk"}));
    s->add_option("--seed", sim.seed, "Angle and noise seed");
    s->add_option("--frames", sim.frames);
    s->add_option("--sensors", sim.sensors);
    s->add_option("--res", sim.resolution, "Reconstruction grid of the ground truth");
    s->add_option("--hi-res", sim.hi_res, "Rendering resolution of the data");
    s->add_option("--noise", sim.noise, "Noise standard deviation");
    s->add_option("--t-final", sim.t_final);
    s->add_option("--sampling", sim.sampling)->check(CLI::IsMember({"random", "sequential"}));
    s->add_option("--delta-deg", sim.delta_deg, "Sequential angle increment in degrees");
    s->add_flag("--smooth-edges", sim.smooth_edges, "C1 ramps instead of hard indicator edges");
    s->add_option("--out", sim.out, "Output directory");

    NfArgs nf;
    CLI::App* n = app.add_subcommand("recon-nf", "Neural-field reconstruction");
    add_nf_options(n, nf, true);

    GridArgs grid;
    CLI::App* g = app.add_subcommand("recon-grid", "Grid-based reconstruction by alternating PDHG");
    g->add_option("--sinogram", grid.sinogram)->required()->check(CLI::ExistingFile);
    g->add_option("--ground-truth", grid.ground_truth)->check(CLI::ExistingFile);
    g->add_option("--res", grid.resolution, "Reconstruction grid (default: ground-truth grid or 32)");
    g->add_option("--alpha", grid.alpha);
    g->add_option("--beta", grid.beta);
    g->add_option("--gamma", grid.gamma);
    g->add_option("--rounds", grid.rounds);
    g->add_option("--inner", grid.inner, "PDHG iterations per subproblem");
    g->add_flag("--no-balance", grid.no_balance, "Do not rescale operator blocks");
    g->add_flag("--peak-one", grid.peak_one);
    g->add_option("--out", grid.out);

    EvalArgs ev;
    CLI::App* e = app.add_subcommand("eval", "PSNR and per-frame metrics");
    e->add_option("--volume", ev.volume)->required()->check(CLI::ExistingFile);
    e->add_option("--reference", ev.reference)->required()->check(CLI::ExistingFile);
    e->add_flag("--peak-one", ev.peak_one);
    e->add_flag("--per-frame-mean", ev.per_frame_mean);
    e->add_option("--out", ev.out, "Metrics CSV");

    SweepArgs sw;
    CLI::App* w = app.add_subcommand("sweep-gamma", "PSNR-vs-step curves for several gamma values");
    add_nf_options(w, sw.nf, false);
    w->add_option("--gammas", sw.gammas)->delimiter(',');

    RenderArgs rd;
    CLI::App* r = app.add_subcommand("render", "Volume -> 16-bit PGM frames");
    r->add_option("--volume", rd.volume)->required()->check(CLI::ExistingFile);
    r->add_option("--window", rd.window, "lo,hi (default: sequence min/max)")->delimiter(',')->expected(2);
    r->add_option("--out", rd.out);

    for (CLI::App* sub : {s, n, g, e, w, r}) {
        sub->configurable();
    }

    if (args.empty()) {
        return 1;
    }
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    try {
        app.parse(std::move(rev));
    } catch (const CLI::ParseError& err) {
        return app.exit(err) == 0 ? 0 : 1;
    }
    try {
        if (s->parsed()) {
            return run_simulate(*s, sim);
        }
        if (n->parsed()) {
            return run_recon_nf(*n, nf);
        }
        if (g->parsed()) {
            return run_recon_grid(*g, grid);
        }
        if (e->parsed()) {
            return run_eval(*e, ev);
        }
        if (w->parsed()) {
            return run_sweep(*w, sw);
        }
        if (r->parsed()) {
            return run_render(*r, rd);
        }
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 2;
    }
    return 1;
}

} // namespace dynct
