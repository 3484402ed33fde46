#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "t4c/dataset.hpp"
#include "t4c/digest.hpp"
#include "t4c/ensemble.hpp"
#include "t4c/error.hpp"
#include "t4c/evaluate.hpp"
#include "t4c/manifest.hpp"
#include "t4c/pipeline.hpp"
#include "t4c/predictors.hpp"
#include "t4c/roadmap.hpp"
#include "t4c/tda.hpp"
#include "t4c/tensorio.hpp"

namespace py = pybind11;
using namespace t4c;

namespace {

// uint8 arrays stay u8; every other numeric dtype becomes float32.
Tensor from_numpy(const py::array& a) {
    Dims dims(a.shape(), a.shape() + a.ndim());
    if (py::isinstance<py::array_t<std::uint8_t>>(a) && a.dtype().is(py::dtype::of<std::uint8_t>())) {
        auto c = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>::ensure(a);
        std::vector<std::uint8_t> v(c.data(), c.data() + c.size());
        return Tensor(std::move(dims), std::move(v));
    }
    auto c = py::array_t<float, py::array::c_style | py::array::forcecast>::ensure(a);
    if (!c) throw ConfigError("expected a numeric array");
    std::vector<float> v(c.data(), c.data() + c.size());
    return Tensor(std::move(dims), std::move(v));
}

py::array to_numpy(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.dims().begin(), t.dims().end());
    if (t.dtype() == DType::U8) {
        py::array_t<std::uint8_t> out(shape);
        std::memcpy(out.mutable_data(), t.u8().data(), t.size());
        return out;
    }
    py::array_t<float> out(shape);
    std::memcpy(out.mutable_data(), t.f32().data(), t.size() * sizeof(float));
    return out;
}

GridSpec grid_of(std::size_t h, std::size_t w, std::size_t channels, std::size_t t_in, std::size_t t_out) {
    GridSpec g;
    g.height = h;
    g.width = w;
    g.channels = channels;
    g.t_in = t_in;
    g.t_out = t_out;
    return g;
}

// [N, K, H, W] array as a prediction set with slots "0".."N-1".
PredictionSet as_predictions(const py::array& a, std::size_t channels, std::size_t t_out) {
    const Tensor t = from_numpy(a);
    if (t.rank() != 4) throw ShapeError("expected [N, K, H, W], got " + format_dims(t.dims()));
    return prediction_set_from_tensor(t, grid_of(t.dim(2), t.dim(3), channels, 12, t_out));
}

py::dict report_dict(const ScoreReport& r) {
    py::dict cities;
    for (const auto& [city, s] : r.per_city) cities[py::str(city)] = py::make_tuple(s.mse, s.element_count);
    py::dict d;
    d["overall"] = r.overall;
    d["element_count"] = r.element_count;
    d["masked"] = r.masked;
    d["per_city"] = cities;
    d["text"] = r.to_text();
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Traffic grid forecasting toolkit: tensors, masks, scaling, ensembles and scoring";

    // Translators run newest first, so the base class goes in first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<AlignmentError>(m, "AlignmentError", PyExc_ValueError);
    py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.attr("TARGET_OFFSETS") = py::make_tuple(1, 2, 3, 6, 9, 12);

    m.def("read_tensor", [](const std::filesystem::path& p) { return to_numpy(read_tensor(p)); }, py::arg("path"));
    m.def("write_tensor", [](const py::array& a, const std::filesystem::path& p) { write_tensor(from_numpy(a), p); },
          py::arg("array"), py::arg("path"));
    m.def(
        "encode",
        [](const py::array& a) {
            const auto b = encode_tensor(from_numpy(a));
            return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
        },
        py::arg("array"));
    m.def(
        "decode",
        [](const py::bytes& b) {
            const std::string s = b;
            return to_numpy(decode_tensor(std::as_bytes(std::span(s.data(), s.size()))));
        },
        py::arg("data"));
    m.def("digest", [](const py::array& a) { return tensor_digest(from_numpy(a)); }, py::arg("array"));

    m.def("reshape_for_model", [](const py::array& a) { return to_numpy(reshape_for_model(from_numpy(a))); });
    m.def("unshape", [](const py::array& a, std::size_t c) { return to_numpy(unshape(from_numpy(a), c)); },
          py::arg("array"), py::arg("channels") = 8);
    m.def(
        "pad",
        [](const py::array& a, std::size_t h, std::size_t w, std::uint8_t fill) {
            return to_numpy(pad(from_numpy(a), h, w, fill));
        },
        py::arg("array"), py::arg("height"), py::arg("width"), py::arg("fill") = 0);
    m.def("crop", [](const py::array& a, std::size_t h, std::size_t w) { return to_numpy(crop(from_numpy(a), h, w)); },
          py::arg("array"), py::arg("height"), py::arg("width"));

    m.def(
        "build_mask",
        [](const std::vector<py::array>& sources) {
            std::vector<Tensor> ts;
            for (const auto& s : sources) ts.push_back(from_numpy(s));
            return to_numpy(build_mask_from_tensors(ts).grid);
        },
        py::arg("sources"), "Road mask [H, W]: 1 wherever any source ever holds a nonzero value.");
    m.def(
        "apply_mask",
        [](const py::array& a, const py::array& mask) {
            return to_numpy(apply_mask(from_numpy(a), RoadMask{from_numpy(mask), MaskProvenance::Train2019}));
        },
        py::arg("array"), py::arg("mask"));

    m.def(
        "mean_map",
        [](const std::vector<py::array>& stacks, std::size_t channels) {
            std::vector<Tensor> ts;
            for (const auto& s : stacks) ts.push_back(from_numpy(s));
            return to_numpy(mean_map_from_tensors(ts, channels).values);
        },
        py::arg("stacks"), py::arg("channels") = 8);
    m.def(
        "compute_lambda",
        [](const py::array& train, const py::array& test) {
            return to_numpy(compute_lambda(MeanMap{from_numpy(train).to_f32(), 0, ""},
                                           MeanMap{from_numpy(test).to_f32(), 0, ""})
                                .values);
        },
        py::arg("m_train"), py::arg("m_test"));
    m.def(
        "apply_lambda",
        [](const py::array& a, const py::array& lam, bool q) {
            return to_numpy(apply_lambda(from_numpy(a), LambdaMap{from_numpy(lam)}, q ? Quantize::U8 : Quantize::None));
        },
        py::arg("array"), py::arg("lam"), py::arg("quantize_u8") = false);
    m.def(
        "apply_inverse_lambda",
        [](const py::array& a, const py::array& lam, bool q) {
            return to_numpy(
                apply_inverse_lambda(from_numpy(a), LambdaMap{from_numpy(lam)}, q ? Quantize::U8 : Quantize::None));
        },
        py::arg("array"), py::arg("lam"), py::arg("quantize_u8") = false);

    m.def(
        "predict_persistence",
        [](const py::array& a, std::size_t channels, std::size_t t_in, std::size_t t_out) {
            const Tensor t = from_numpy(a);
            if (t.rank() != 3) throw ShapeError("expected [T_in * C, H, W], got " + format_dims(t.dims()));
            return to_numpy(predict_persistence(t, grid_of(t.dim(1), t.dim(2), channels, t_in, t_out)));
        },
        py::arg("inputs"), py::arg("channels") = 8, py::arg("t_in") = 12, py::arg("t_out") = 6);
    m.def(
        "run_external",
        [](const std::vector<std::string>& slots, const std::filesystem::path& dir, std::size_t h, std::size_t w,
           std::size_t channels, std::size_t t_out) {
            return to_numpy(run_external(slots, dir, grid_of(h, w, channels, 12, t_out)).values);
        },
        py::arg("slots"), py::arg("protocol_dir"), py::arg("height"), py::arg("width"), py::arg("channels") = 8,
        py::arg("t_out") = 6, "Collects <slot>.t4gr predictions into one [N, T_out * C, H, W] array.");

    m.def(
        "ensemble",
        [](const std::vector<py::array>& members, const std::string& agg, std::size_t channels, std::size_t t_out) {
            std::vector<PredictionSet> sets;
            for (const auto& a : members) sets.push_back(as_predictions(a, channels, t_out));
            return to_numpy(ensemble(sets, parse_aggregator(agg)).values);
        },
        py::arg("members"), py::arg("agg") = "mean", py::arg("channels") = 8, py::arg("t_out") = 6);
    m.def("mse", [](const py::array& p, const py::array& t) { return mse(from_numpy(p), from_numpy(t)); },
          py::arg("pred"), py::arg("target"));

    m.def(
        "make_folds",
        [](std::size_t n, std::uint64_t seed) {
            std::vector<SampleIndex> s;
            for (std::size_t i = 0; i < n; ++i) s.push_back({"s", i});
            return make_folds(s, seed).fold_of_sample;
        },
        py::arg("n"), py::arg("seed"), "Fold id (0-3) for each of n samples.");

    m.def(
        "run_pipeline",
        [](const std::filesystem::path& manifest) {
            const auto mf = PipelineManifest::load(manifest);
            PipelineOptions opt;
            opt.base_dir = manifest.parent_path().empty() ? std::filesystem::path(".") : manifest.parent_path();
            const auto r = run_pipeline(mf, opt);
            py::dict out;
            out["report"] = r.report ? py::object(report_dict(*r.report)) : py::none();
            py::list artifacts;
            for (const auto& a : r.artifacts) artifacts.append(py::make_tuple(a.stage, a.path, a.digest));
            out["artifacts"] = artifacts;
            return out;
        },
        py::arg("manifest"));
}
