#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "dermfair/colorspace.hpp"
#include "dermfair/dataset.hpp"
#include "dermfair/error.hpp"
#include "dermfair/graphcut.hpp"
#include "dermfair/metrics.hpp"
#include "dermfair/preprocess.hpp"
#include "dermfair/skintone.hpp"
#include "dermfair/synthval.hpp"

namespace py = pybind11;
using namespace dermfair;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using BoolArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;

RgbImage to_rgb(const U8Array& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("expected an HxWx3 uint8 array");
    const auto h = static_cast<int>(a.shape(0));
    const auto w = static_cast<int>(a.shape(1));
    return RgbImage(w, h, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

GrayImage to_gray_image(const U8Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected an HxW uint8 array");
    const auto h = static_cast<int>(a.shape(0));
    const auto w = static_cast<int>(a.shape(1));
    return GrayImage(w, h, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

Mask to_mask(const BoolArray& a) {
    if (a.ndim() != 2) throw py::value_error("expected an HxW boolean array");
    Mask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    const bool* p = a.data();
    for (std::size_t i = 0; i < m.size(); ++i) m.set(i, p[i]);
    return m;
}

py::array_t<bool> from_mask(const Mask& m) {
    py::array_t<bool> out({m.height(), m.width()});
    bool* p = out.mutable_data();
    for (std::size_t i = 0; i < m.size(); ++i) p[i] = m[i];
    return out;
}

py::array_t<std::uint8_t> from_gray(const GrayImage& g) {
    py::array_t<std::uint8_t> out({g.height(), g.width()});
    std::memcpy(out.mutable_data(), g.values().data(), g.size());
    return out;
}

py::array_t<float> from_normalized(const preprocess::NormalizedImage& n) {
    py::array_t<float> out({3, n.height, n.width});
    float* p = out.mutable_data();
    for (std::size_t c = 0; c < 3; ++c) {
        std::memcpy(p + c * n.channels[c].size(), n.channels[c].data(), n.channels[c].size() * sizeof(float));
    }
    return out;
}

py::object opt(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

std::vector<metrics::Prediction> predictions(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw py::value_error("scores and labels differ in length");
    std::vector<metrics::Prediction> p(scores.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = {scores[i], labels[i]};
    return p;
}

py::dict confusion_dict(const metrics::Confusion& c) {
    py::dict d;
    d["tp"] = c.tp;
    d["fp"] = c.fp;
    d["tn"] = c.tn;
    d["fn"] = c.fn;
    return d;
}

py::dict record_dict(const ImageRecord& r) {
    py::dict d;
    d["image_id"] = r.image_id;
    d["path"] = r.path;
    d["diagnosis"] = r.diagnosis;
    d["superclass"] = std::string(to_string(r.superclass));
    d["patient_id"] = r.patient_id;
    d["source"] = std::string(to_string(r.source));
    d["ita_degrees"] = opt(r.ita_degrees);
    d["fitzpatrick"] = r.fitzpatrick ? py::cast(std::string(to_string(*r.fitzpatrick))) : py::none();
    d["split"] = r.split ? py::cast(std::string(to_string(*r.split))) : py::none();
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Skin-tone audit, preprocessing, graph-cut segmentation and evaluation metrics";

    static py::exception<Error> error(m, "DermfairError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            const std::string kind(to_string(e.kind()));
            py::object inst = py::handle(error)(kind + ": " + e.what());
            inst.attr("kind") = kind;
            PyErr_SetObject(error.ptr(), inst.ptr());
        }
    });

    m.def(
        "rgb_to_ycbcr",
        [](const U8Array& image) {
            const auto planes = colorspace::rgb_to_ycbcr(to_rgb(image));
            return py::make_tuple(from_gray(planes.y), from_gray(planes.cb), from_gray(planes.cr));
        },
        py::arg("image"), "Full-range BT.601 Y, Cb, Cr planes of an HxWx3 uint8 image.");
    m.def(
        "skin_mask", [](const U8Array& image) { return from_mask(colorspace::skin_mask(to_rgb(image))); },
        py::arg("image"), "Boolean skin mask from the Cb/Cr box.");
    m.def(
        "srgb_to_lab",
        [](int r, int g, int b) {
            const auto lab = colorspace::srgb_to_lab(
                {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)});
            return py::make_tuple(lab.l_star, lab.a_star, lab.b_star);
        },
        py::arg("r"), py::arg("g"), py::arg("b"));

    m.def("compute_ita", py::overload_cast<double, double>(&skintone::compute_ita), py::arg("l_star"),
          py::arg("b_star"), "Individual typology angle in degrees.");
    m.def(
        "ita_to_fitzpatrick",
        [](double ita, std::size_t skin_pixels) {
            return std::string(to_string(skintone::ita_to_fitzpatrick(ita, skin_pixels)));
        },
        py::arg("ita"), py::arg("skin_pixels") = skintone::kMinSkinPixels);
    m.def(
        "analyze",
        [](const U8Array& image) {
            const auto r = skintone::analyze(to_rgb(image));
            py::dict d;
            d["ita_degrees"] = opt(r.ita_degrees);
            d["fitzpatrick"] = std::string(to_string(r.fitzpatrick));
            d["skin_pixel_count"] = r.skin_pixel_count;
            d["mean_l_star"] = r.mean_l_star;
            d["mean_b_star"] = r.mean_b_star;
            d["negative_b_star"] = r.negative_b_star;
            d["degenerate_chroma"] = r.degenerate_chroma;
            return d;
        },
        py::arg("image"), "Skin-tone estimate of one image.");

    m.def(
        "preprocess",
        [](const U8Array& image, const std::string& config) {
            const auto cfg = config.empty() ? preprocess::PreprocessConfig{} : preprocess::read_config(config);
            return from_normalized(preprocess::preprocess(to_rgb(image), cfg));
        },
        py::arg("image"), py::arg("config") = "", "Full chain; returns a 3xHxW float32 normalized tensor.");
    m.def(
        "eval_transform",
        [](const U8Array& image) { return from_normalized(preprocess::eval_transform(to_rgb(image))); },
        py::arg("image"), "Resize and centre crop; returns a 3xHxW float32 tensor.");

    m.def(
        "segment",
        [](const U8Array& image, double lambda, double sigma, bool invert) {
            const graphcut::LesionGraphParams params{lambda, sigma, invert};
            if (image.ndim() == 3) return from_mask(graphcut::segment_maxflow(to_rgb(image), params));
            return from_mask(graphcut::segment_maxflow(to_gray_image(image), params));
        },
        py::arg("image"), py::arg("lam") = 50.0, py::arg("sigma") = 10.0, py::arg("invert") = false,
        "Max-flow lesion mask of a grey or RGB uint8 image.");
    m.def(
        "max_flow",
        [](std::size_t nodes, const std::vector<std::tuple<long, long, double>>& arcs) {
            graphcut::FlowNetwork net(nodes);
            auto node = [&](long v) {
                if (v == -1) return net.source();
                if (v == -2) return net.sink();
                return static_cast<graphcut::FlowNetwork::Node>(v);
            };
            for (const auto& [u, v, cap] : arcs) net.add_arc(node(u), node(v), cap);
            const auto r = graphcut::max_flow(net);
            std::vector<bool> side(r.source_side.begin(), r.source_side.begin() + static_cast<long>(nodes));
            return py::make_tuple(r.flow, side);
        },
        py::arg("nodes"), py::arg("arcs"),
        "Max flow over (u, v, capacity) arcs; -1 is the source and -2 the sink.");

    m.def(
        "seg_scores",
        [](const BoolArray& pred, const BoolArray& truth) {
            const auto s = metrics::seg_scores(to_mask(pred), to_mask(truth));
            py::dict d;
            d["iou"] = s.iou;
            d["dice"] = s.dice;
            d["precision"] = opt(s.precision);
            d["recall"] = s.recall;
            d["specificity"] = opt(s.specificity);
            d["hausdorff_px"] = s.hausdorff_px;
            d["confusion"] = confusion_dict(s.confusion);
            return d;
        },
        py::arg("pred"), py::arg("truth"));
    m.def(
        "roc_auc",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return metrics::roc_auc(predictions(scores, labels));
        },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "cls_scores",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            const auto s = metrics::cls_scores(predictions(scores, labels));
            py::dict d;
            d["accuracy"] = s.accuracy;
            d["precision"] = opt(s.precision);
            d["recall"] = opt(s.recall);
            d["f1"] = opt(s.f1);
            d["auc"] = opt(s.auc);
            d["loss"] = s.loss;
            d["confusion"] = confusion_dict(s.confusion);
            return d;
        },
        py::arg("scores"), py::arg("labels"));

    m.def(
        "ssim", [](const U8Array& a, const U8Array& b) { return synthval::ssim(to_gray_image(a), to_gray_image(b)); },
        py::arg("a"), py::arg("b"));
    m.def(
        "glcm_features",
        [](const U8Array& image, int levels) {
            const auto f = synthval::glcm_features(to_gray_image(image), levels);
            py::dict d;
            d["contrast"] = f.contrast;
            d["energy"] = f.energy;
            d["homogeneity"] = f.homogeneity;
            d["correlation"] = f.correlation;
            return d;
        },
        py::arg("image"), py::arg("levels") = 64);
    m.def(
        "validate_synthetic",
        [](const U8Array& candidate, const std::vector<U8Array>& reference) {
            std::vector<RgbImage> ref;
            ref.reserve(reference.size());
            for (const auto& r : reference) ref.push_back(to_rgb(r));
            const auto rep = synthval::validate_synthetic("candidate", to_rgb(candidate), ref, {});
            py::dict d;
            d["accepted"] = rep.accepted;
            d["reasons"] = rep.reject_reasons;
            d["hist_distance"] = rep.hist_distance;
            d["ssim_max"] = rep.ssim_max;
            d["glcm_z"] = rep.glcm_z;
            return d;
        },
        py::arg("candidate"), py::arg("reference"), "Screen one generated image against real references.");

    m.def(
        "read_manifest",
        [](const std::string& path) {
            py::list out;
            for (const auto& r : read_manifest(path).records) out.append(record_dict(r));
            return out;
        },
        py::arg("path"), "Records of a manifest CSV or JSON file as dicts.");
}
