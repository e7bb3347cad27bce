// Python bindings for the wireless radiance field core: scene model, spectrum
// oracle, differentiable renderer, losses, training loop and serialization.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "wrf/checkpoint.hpp"
#include "wrf/dataset.hpp"
#include "wrf/losses.hpp"
#include "wrf/mask.hpp"
#include "wrf/oracle.hpp"
#include "wrf/render.hpp"
#include "wrf/train.hpp"

namespace py = pybind11;
using namespace wrf;

namespace {

py::array_t<double> image_to_numpy(const SpectrumImage& img) {
    // storage is azimuth-major: shape (width, height)
    py::array_t<double> arr({img.width(), img.height()});
    std::copy(img.data().begin(), img.data().end(), arr.mutable_data());
    return arr;
}

SpectrumImage image_from_numpy(const py::array_t<double, py::array::c_style |
                                                            py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2D array");
    SpectrumImage img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + arr.size(), img.data().begin());
    return img;
}

}  // namespace

PYBIND11_MODULE(wrfgs, m) {
    m.doc() = "Wireless radiance field with 3D Gaussian primitives: spatial-spectrum "
              "synthesis, differentiable splat rendering, and training.";

    py::class_<SpectrumImage>(m, "SpectrumImage")
        .def(py::init<int, int>(), py::arg("width"), py::arg("height"))
        .def_static("from_numpy", &image_from_numpy)
        .def("numpy", &image_to_numpy)
        .def_property_readonly("width", &SpectrumImage::width)
        .def_property_readonly("height", &SpectrumImage::height)
        .def("at", [](const SpectrumImage& s, int az, int el) { return s.at(az, el); })
        .def("max_value", &SpectrumImage::max_value)
        .def("argmax", [](const SpectrumImage& s) {
            const auto p = s.argmax();
            return py::make_tuple(p.az, p.el, p.value);
        });

    py::class_<ArraySpec>(m, "ArraySpec")
        .def(py::init<>())
        .def_readwrite("k", &ArraySpec::k)
        .def_readwrite("spacing", &ArraySpec::spacing)
        .def_readwrite("wavelength", &ArraySpec::wavelength)
        .def("side", &ArraySpec::side);

    py::class_<Reflector>(m, "Reflector")
        .def(py::init<>())
        .def_readwrite("center", &Reflector::center)
        .def_readwrite("normal", &Reflector::normal)
        .def_readwrite("half_width", &Reflector::half_width)
        .def_readwrite("half_height", &Reflector::half_height)
        .def_readwrite("coefficient", &Reflector::coefficient);

    py::class_<SyntheticSceneSpec>(m, "SyntheticSceneSpec")
        .def(py::init<>())
        .def_readwrite("reflectors", &SyntheticSceneSpec::reflectors)
        .def_readwrite("receiver_origin", &SyntheticSceneSpec::receiver_origin)
        .def_readwrite("max_paths", &SyntheticSceneSpec::max_paths)
        .def_readwrite("tx_amplitude", &SyntheticSceneSpec::tx_amplitude)
        .def_readwrite("tx_phase", &SyntheticSceneSpec::tx_phase)
        .def_readwrite("array", &SyntheticSceneSpec::array)
        .def_readwrite("bounds_min", &SyntheticSceneSpec::bounds_min)
        .def_readwrite("bounds_max", &SyntheticSceneSpec::bounds_max)
        .def_readwrite("cloud_points", &SyntheticSceneSpec::cloud_points)
        .def_readwrite("seed", &SyntheticSceneSpec::seed);

    py::class_<OracleResult>(m, "OracleResult")
        .def_readonly("spectrum", &OracleResult::spectrum)
        .def_readonly("path_count", &OracleResult::path_count);

    m.def("theoretical_phase_delta", &theoretical_phase_delta, py::arg("array"),
          py::arg("m"), py::arg("n"), py::arg("azimuth"), py::arg("polar"));
    m.def("spatial_spectrum", &spatial_spectrum, py::arg("measured_phases"),
          py::arg("array"), py::arg("width") = SpectrumImage::kFullWidth,
          py::arg("height") = SpectrumImage::kFullHeight);
    m.def("synth_spectrum", &synth_spectrum, py::arg("spec"), py::arg("p_tx"),
          py::arg("width") = SpectrumImage::kFullWidth,
          py::arg("height") = SpectrumImage::kFullHeight);
    m.def("sample_scene_cloud", &sample_scene_cloud);
    m.def("load_scene_spec", &load_scene_spec);

    py::class_<PointCloud>(m, "PointCloud")
        .def(py::init<>())
        .def_readwrite("points", &PointCloud::points)
        .def("size", &PointCloud::size);

    py::class_<GaussianPrimitive>(m, "GaussianPrimitive")
        .def(py::init<>())
        .def_readwrite("mu", &GaussianPrimitive::mu)
        .def_readwrite("log_scale", &GaussianPrimitive::log_scale)
        .def_readwrite("rotation", &GaussianPrimitive::rotation)
        .def_readwrite("opacity_logit", &GaussianPrimitive::opacity_logit)
        .def_readwrite("signal", &GaussianPrimitive::signal)
        .def_readwrite("mask_score", &GaussianPrimitive::mask_score);

    py::class_<Scene>(m, "Scene")
        .def(py::init<>())
        .def_readwrite("primitives", &Scene::primitives)
        .def_readwrite("receiver_origin", &Scene::receiver_origin)
        .def("count", &Scene::count);

    m.def("init_from_point_cloud", &init_from_point_cloud);
    m.def("init_random", &init_random, py::arg("n"), py::arg("box_min"),
          py::arg("box_max"), py::arg("seed"));

    py::class_<DeformationNet>(m, "DeformationNet")
        .def(py::init<>())
        .def(py::init<int, int, int>(), py::arg("embedding_levels"),
             py::arg("hidden_width"), py::arg("hidden_layers"))
        .def("init_weights", &DeformationNet::init_weights)
        .def("parameter_count", &DeformationNet::parameter_count)
        .def_property("input_scale", &DeformationNet::input_scale,
                      &DeformationNet::set_input_scale);

    py::enum_<MaskMode>(m, "MaskMode")
        .value("HARD", MaskMode::kHard)
        .value("STE", MaskMode::kSte)
        .value("NONE", MaskMode::kNone);

    py::class_<RenderConfig>(m, "RenderConfig")
        .def(py::init<>())
        .def_readwrite("width", &RenderConfig::width)
        .def_readwrite("height", &RenderConfig::height)
        .def_readwrite("mask_epsilon", &RenderConfig::mask_epsilon)
        .def_readwrite("gamma_clamp", &RenderConfig::gamma_clamp)
        .def_readwrite("gamma_cull", &RenderConfig::gamma_cull)
        .def_readwrite("transmittance_floor", &RenderConfig::transmittance_floor)
        .def_readwrite("sigma_cutoff", &RenderConfig::sigma_cutoff)
        .def_readwrite("squared_magnitude", &RenderConfig::squared_magnitude)
        .def_readwrite("threads", &RenderConfig::threads);

    m.def(
        "render",
        [](const Scene& scene, const Vec3& p_tx, const DeformationNet& net, MaskMode mode,
           const RenderConfig& cfg) {
            return image_to_numpy(render(scene, p_tx, net, mode, cfg));
        },
        py::arg("scene"), py::arg("p_tx"), py::arg("net"),
        py::arg("mode") = MaskMode::kNone, py::arg("config") = RenderConfig{});
    m.def(
        "render_pruned",
        [](const Scene& scene, const Vec3& p_tx, const DeformationNet& net,
           const RenderConfig& cfg) {
            return image_to_numpy(render_pruned(scene, p_tx, net, cfg));
        },
        py::arg("scene"), py::arg("p_tx"), py::arg("net"),
        py::arg("config") = RenderConfig{});

    py::class_<PruneResult>(m, "PruneResult")
        .def_readonly("removed", &PruneResult::removed)
        .def_readonly("refused", &PruneResult::refused);
    m.def("prune", [](Scene& scene, double epsilon) { return prune(&scene, epsilon); },
          py::arg("scene"), py::arg("epsilon") = 0.01);

    py::class_<LossBreakdown>(m, "LossBreakdown")
        .def_readonly("l1", &LossBreakdown::l1)
        .def_readonly("d_ssim", &LossBreakdown::d_ssim)
        .def_readonly("render_loss", &LossBreakdown::render_loss)
        .def_readonly("mask_reg", &LossBreakdown::mask_reg)
        .def_readonly("total", &LossBreakdown::total);
    m.def("l1_loss",
          [](const SpectrumImage& a, const SpectrumImage& b) { return l1_loss(a, b); });
    m.def("ssim",
          [](const SpectrumImage& a, const SpectrumImage& b) { return ssim(a, b); });
    m.def("render_loss",
          [](const SpectrumImage& a, const SpectrumImage& b, double w) {
              return render_loss(a, b, w);
          },
          py::arg("a"), py::arg("b"), py::arg("w") = 0.2);
    m.def("chamfer_distance", &chamfer_distance);

    py::class_<Sample>(m, "Sample")
        .def(py::init<>())
        .def_readwrite("tx", &Sample::tx)
        .def_readwrite("spectrum", &Sample::spectrum);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_readwrite("train", &Dataset::train)
        .def_readwrite("test", &Dataset::test)
        .def_readwrite("array", &Dataset::array)
        .def_readwrite("bounds_min", &Dataset::bounds_min)
        .def_readwrite("bounds_max", &Dataset::bounds_max)
        .def_readwrite("spectrum_max", &Dataset::spectrum_max)
        .def_readwrite("input_scale", &Dataset::input_scale)
        .def_readwrite("seed", &Dataset::seed)
        .def_readwrite("cloud", &Dataset::cloud)
        .def_readwrite("has_cloud", &Dataset::has_cloud);

    m.def("sample_tx_positions", &sample_tx_positions, py::arg("spec"),
          py::arg("count"), py::arg("seed"));
    m.def("generate_dataset", &generate_dataset, py::arg("spec"),
          py::arg("tx_positions"), py::arg("split_ratio"), py::arg("dir"),
          py::call_guard<py::gil_scoped_release>());
    m.def("load_dataset", &load_dataset, py::arg("dir"), py::arg("normalize") = true,
          py::call_guard<py::gil_scoped_release>());

    py::class_<LearningRates>(m, "LearningRates")
        .def(py::init<>())
        .def_readwrite("mu_init", &LearningRates::mu_init)
        .def_readwrite("mu_final", &LearningRates::mu_final)
        .def_readwrite("log_scale", &LearningRates::log_scale)
        .def_readwrite("rotation", &LearningRates::rotation)
        .def_readwrite("opacity", &LearningRates::opacity)
        .def_readwrite("signal", &LearningRates::signal)
        .def_readwrite("mask", &LearningRates::mask)
        .def_readwrite("net", &LearningRates::net);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("lr", &TrainConfig::lr)
        .def_readwrite("m", &TrainConfig::m)
        .def_readwrite("m_d", &TrainConfig::m_d)
        .def_readwrite("m_p", &TrainConfig::m_p)
        .def_readwrite("i_p", &TrainConfig::i_p)
        .def_readwrite("epsilon", &TrainConfig::epsilon)
        .def_readwrite("lam", &TrainConfig::lambda)
        .def_readwrite("w", &TrainConfig::w)
        .def_readwrite("tau_g", &TrainConfig::tau_g)
        .def_readwrite("densify_interval", &TrainConfig::densify_interval)
        .def_readwrite("net_embedding_levels", &TrainConfig::net_embedding_levels)
        .def_readwrite("net_hidden_width", &TrainConfig::net_hidden_width)
        .def_readwrite("net_hidden_layers", &TrainConfig::net_hidden_layers)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("threads", &TrainConfig::threads)
        .def_readwrite("log_interval", &TrainConfig::log_interval)
        .def_readwrite("render", &TrainConfig::render)
        .def("validate", &TrainConfig::validate)
        .def("hash", &TrainConfig::hash);

    py::class_<TrainLogEntry>(m, "TrainLogEntry")
        .def_readonly("t", &TrainLogEntry::t)
        .def_readonly("n", &TrainLogEntry::n)
        .def_readonly("l1", &TrainLogEntry::l1)
        .def_readonly("d_ssim", &TrainLogEntry::d_ssim)
        .def_readonly("mask_reg", &TrainLogEntry::mask_reg)
        .def_readonly("total", &TrainLogEntry::total);

    py::class_<Checkpoint>(m, "Checkpoint")
        .def(py::init<>())
        .def_readwrite("scene", &Checkpoint::scene)
        .def_readwrite("net", &Checkpoint::net)
        .def_readwrite("iteration", &Checkpoint::iteration)
        .def_readwrite("config_hash", &Checkpoint::config_hash)
        .def_readonly("has_moments", &Checkpoint::has_moments);

    py::class_<TrainResult>(m, "TrainResult")
        .def_readonly("checkpoint", &TrainResult::checkpoint)
        .def_readonly("log", &TrainResult::log)
        .def_readonly("mean_test_ssim", &TrainResult::mean_test_ssim);

    m.def(
        "train",
        [](const TrainConfig& cfg, const Dataset& ds) {
            py::gil_scoped_release release;
            return train(cfg, ds);
        },
        py::arg("config"), py::arg("dataset"));

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("ssim", &EvalReport::ssim)
        .def_readonly("mean_ssim", &EvalReport::mean_ssim)
        .def_readonly("n", &EvalReport::n)
        .def_readonly("checkpoint_size", &EvalReport::checkpoint_size)
        .def_readonly("latency_median_ms", &EvalReport::latency_median_ms)
        .def_readonly("latency_p90_ms", &EvalReport::latency_p90_ms)
        .def_readonly("chamfer", &EvalReport::chamfer);

    m.def(
        "evaluate",
        [](const Checkpoint& ckpt, const std::vector<Sample>& split,
           const RenderConfig& cfg) {
            py::gil_scoped_release release;
            return evaluate(ckpt, split, cfg);
        },
        py::arg("checkpoint"), py::arg("split"), py::arg("config") = RenderConfig{});

    m.def("save_checkpoint",
          [](const Checkpoint& c, const std::string& path) { save_checkpoint(c, path); });
    m.def("load_checkpoint",
          [](const std::string& path) { return load_checkpoint(path); });
    m.def("checkpoint_bytes", &checkpoint_bytes);
    m.def("load_spect", [](const std::string& path) {
        Vec3 tx;
        SpectrumImage img = load_spect(path, &tx);
        return py::make_tuple(img, tx);
    });
    m.def("save_spect", [](const SpectrumImage& img, const Vec3& tx,
                           const std::string& path) { save_spect(img, tx, path); });
}
