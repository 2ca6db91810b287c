#include "dynct/cli.hpp"
#include "dynct/grid_recon.hpp"
#include "dynct/io.hpp"
#include "dynct/metrics.hpp"
#include "dynct/nf_recon.hpp"
#include "dynct/phantoms.hpp"
#include "dynct/projector.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace dynct;

namespace {

// Frames as an (N_T, ny, nx) array; row iy = 0 is the bottom of the image.
py::array_t<double> as_frames(const CasoratiImage& u) {
    py::array_t<double> out({u.n_frames(), u.grid.ny(), u.grid.nx()});
    std::copy(u.values.data(), u.values.data() + u.values.size(), out.mutable_data());
    return out;
}

py::dict history_dict(const TrainingHistory& h) {
    std::vector<long> step;
    std::vector<double> data, loss, psnr_v, gamma, flow;
    for (const TrainingRecord& r : h.records) {
        step.push_back(r.step);
        data.push_back(r.data);
        loss.push_back(r.loss);
        psnr_v.push_back(r.psnr);
        gamma.push_back(r.gamma);
        flow.push_back(r.flow_error);
    }
    py::dict d;
    d["step"] = step;
    d["data"] = data;
    d["loss"] = loss;
    d["psnr"] = psnr_v;
    d["gamma"] = gamma;
    d["flow_error"] = flow;
    d["best_step"] = h.best_step;
    d["best_psnr"] = h.best_psnr;
    d["aborted"] = h.aborted;
    d["diagnostic"] = h.diagnostic;
    return d;
}

} // namespace

PYBIND11_MODULE(_dynct, m) {
    m.doc() = "Dynamic CT reconstruction with neural fields and optical-flow regularization";

    py::class_<FanBeamGeometry>(m, "FanBeamGeometry")
        .def(py::init<>())
        .def(py::init([](double dso, double dsd, double width, int sensors) {
                 return FanBeamGeometry{dso, dsd, width, sensors};
             }),
             py::arg("dso"), py::arg("dsd"), py::arg("detector_width"), py::arg("n_sensors"))
        .def_readwrite("dso", &FanBeamGeometry::dso)
        .def_readwrite("dsd", &FanBeamGeometry::dsd)
        .def_readwrite("detector_width", &FanBeamGeometry::detector_width)
        .def_readwrite("n_sensors", &FanBeamGeometry::n_sensors)
        .def_static("two_square", &FanBeamGeometry::two_square)
        .def_static("stempo", &FanBeamGeometry::stempo)
        .def_static("xcat", &FanBeamGeometry::xcat);

    py::class_<ImageGrid>(m, "ImageGrid")
        .def(py::init([](int n) { return ImageGrid::square(n); }), py::arg("n"))
        .def_property_readonly("nx", &ImageGrid::nx)
        .def_property_readonly("ny", &ImageGrid::ny)
        .def_property_readonly("pixel_size", &ImageGrid::pixel_size);

    py::class_<Sinogram>(m, "Sinogram")
        .def(py::init<>())
        .def_readwrite("data", &Sinogram::data, "M x N_T measurements")
        .def_readwrite("angles", &Sinogram::angles)
        .def_readwrite("times", &Sinogram::times)
        .def_readwrite("geometry", &Sinogram::geometry)
        .def_property_readonly("n_sensors", &Sinogram::n_sensors)
        .def_property_readonly("n_frames", &Sinogram::n_frames);

    py::class_<CasoratiImage>(m, "Volume")
        .def(py::init([](const RowMatrix& values, int n, double t_final) {
                 return CasoratiImage(values, ImageGrid::square(n), TimeAxis(static_cast<int>(values.rows()), t_final));
             }),
             py::arg("values"), py::arg("n"), py::arg("t_final") = 1.0)
        .def_readwrite("values", &CasoratiImage::values, "N_T x N Casorati matrix")
        .def_readonly("grid", &CasoratiImage::grid)
        .def_property_readonly("n_frames", &CasoratiImage::n_frames)
        .def_property_readonly("t_final", [](const CasoratiImage& u) { return u.time.t_final(); })
        .def("frames", &as_frames);

    py::class_<SimulationSettings>(m, "SimulationSettings")
        .def(py::init<>())
        .def_readwrite("phantom", &SimulationSettings::phantom)
        .def_readwrite("frames", &SimulationSettings::frames)
        .def_readwrite("sensors", &SimulationSettings::sensors)
        .def_readwrite("resolution", &SimulationSettings::resolution)
        .def_readwrite("hi_res", &SimulationSettings::hi_res)
        .def_readwrite("noise", &SimulationSettings::noise)
        .def_readwrite("t_final", &SimulationSettings::t_final)
        .def_readwrite("seed", &SimulationSettings::seed)
        .def_readwrite("smooth_edges", &SimulationSettings::smooth_edges);

    m.def("simulation_preset", &simulation_preset, py::arg("phantom") = "two-square", py::arg("preset") = "desk");
    m.def(
        "simulate",
        [](const SimulationSettings& s) {
            Simulation sim = simulate(s);
            return py::make_tuple(std::move(sim.sinogram), std::move(sim.ground_truth));
        },
        py::arg("settings"), "Returns (sinogram, ground_truth).");

    m.def("project", &project_spacetime, py::arg("volume"), py::arg("layout"),
          "Forward-project a volume with the geometry, angles and times of `layout`.");

    m.def(
        "psnr",
        [](const CasoratiImage& x, const CasoratiImage& ref, std::optional<double> peak, bool per_frame_mean) {
            return psnr(x, ref, PsnrOptions{peak, per_frame_mean});
        },
        py::arg("x"), py::arg("reference"), py::arg("peak") = py::none(), py::arg("per_frame_mean") = false);
    m.def("mean_temporal_std", &mean_temporal_std, py::arg("volume"));

    m.def(
        "reconstruct_grid",
        [](const Sinogram& s, int resolution, double alpha, double beta, double gamma, int rounds, int inner) {
            AlternationOptions o;
            o.rounds = rounds;
            o.inner_iterations = inner;
            AlternationResult r = reconstruct_grid(s, ImageGrid::square(resolution), {alpha, beta, gamma}, o);
            return py::make_tuple(std::move(r.u), r.v.vx, r.v.vy);
        },
        py::arg("sinogram"), py::arg("resolution") = 32, py::arg("alpha") = 1e-3, py::arg("beta") = 1e-4,
        py::arg("gamma") = 1e-3, py::arg("rounds") = 5, py::arg("inner") = 2000,
        "Alternating PDHG reconstruction. Returns (u, vx, vy).");

    m.def(
        "reconstruct_nf",
        [](const Sinogram& s, int resolution, std::string preset, double alpha, double beta, double gamma,
           std::optional<long> epochs, const CasoratiImage* ground_truth) {
            NfReconConfig c = nf_preset("two-square", preset);
            c.weights = {alpha, beta, gamma};
            if (epochs) {
                c.epochs = *epochs;
            }
            const ImageGrid grid = ImageGrid::square(resolution);
            TrainingResult r;
            {
                py::gil_scoped_release release;
                r = train(c, s, grid, ground_truth);
            }
            const TimeAxis time(s.n_frames(), s.n_frames() > 1 ? s.times.back() : 0.0);
            return py::make_tuple(render_field(r.u, grid, time), history_dict(r.history));
        },
        py::arg("sinogram"), py::arg("resolution") = 32, py::arg("preset") = "desk", py::arg("alpha") = 0.0,
        py::arg("beta") = 0.0, py::arg("gamma") = 1e-2, py::arg("epochs") = py::none(),
        py::arg("ground_truth") = nullptr, "Neural-field reconstruction. Returns (u, history).");

    m.def("read_sinogram", &read_sinogram, py::arg("path"));
    m.def("write_sinogram", &write_sinogram, py::arg("path"), py::arg("sinogram"));
    m.def("read_volume", &read_volume, py::arg("path"));
    m.def("write_volume", &write_volume, py::arg("path"), py::arg("volume"));

    m.def(
        "cli", [](std::vector<std::string> args) {
            args.insert(args.begin(), "dynct");
            return cli_main(args);
        },
        py::arg("args"), "Run the command-line tool in-process; returns its exit code.");
}
