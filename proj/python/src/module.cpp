#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lexattn/extract.hpp"
#include "lexattn/interchange.hpp"
#include "lexattn/lexcat.hpp"
#include "lexattn/report.hpp"
#include "lexattn/validate.hpp"

namespace py = pybind11;
using namespace lexattn;

namespace {

LexicalCategory parse_category(const std::string& name) {
    if (name == "content") return LexicalCategory::Content;
    if (name == "function") return LexicalCategory::Function;
    if (name == "other") return LexicalCategory::Other;
    throw std::invalid_argument("unknown category: " + name);
}

const char* category_name(LexicalCategory c) {
    switch (c) {
        case LexicalCategory::Content: return "content";
        case LexicalCategory::Function: return "function";
        case LexicalCategory::Other: return "other";
    }
    return "other";
}

CategoryMap resolve_map(const std::optional<std::filesystem::path>& path) {
    return path ? load_category_map(*path) : default_category_map();
}

py::array_t<double> mean_heads_array(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
    if (a.ndim() != 4 || a.shape(2) != a.shape(3))
        throw std::invalid_argument("expected an array of shape (layers, heads, n, n)");
    const auto L = std::size_t(a.shape(0)), H = std::size_t(a.shape(1)), n = std::size_t(a.shape(2));
    std::vector<double> values(a.data(), a.data() + a.size());
    const auto m = mean_over_heads(AttentionTensor(L, H, n, std::move(values)));
    py::array_t<double> out({L, n, n});
    auto r = out.mutable_unchecked<3>();
    for (std::size_t l = 0; l < L; ++l)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) r(l, i, j) = m.at(l, i, j);
    return out;
}

py::list layer_rows(const AnalysisResult& r, Measure m) {
    py::list out;
    for (const auto& p : r.ratios.of(m)) out.append(py::make_tuple(p.content, p.function));
    return out;
}

}  // namespace

PYBIND11_MODULE(_lexattn, mod) {
    mod.doc() = "Attention-to-lexical-category analysis";

    py::register_exception<BundleError>(mod, "BundleError", PyExc_ValueError);
    py::register_exception<CategoryMapError>(mod, "CategoryMapError", PyExc_ValueError);
    py::register_exception<AnalysisError>(mod, "AnalysisError", PyExc_ValueError);
    py::register_exception<ReportError>(mod, "ReportError", PyExc_ValueError);

    py::class_<CategoryMap>(mod, "CategoryMap")
        .def_static("default", &default_category_map)
        .def_static("load", &load_category_map, py::arg("path"))
        .def_static("parse", [](const std::string& text) { return parse_category_map(text); })
        .def(py::init<std::set<std::string>, std::set<std::string>>(), py::arg("function_tags"),
             py::arg("content_tags"))
        .def_property_readonly("function_tags", &CategoryMap::function_tags)
        .def_property_readonly("content_tags", &CategoryMap::content_tags)
        .def("category", [](const CategoryMap& m, const std::string& tag) {
            return category_name(map_category(m, tag));
        })
        .def("to_json", &category_map_to_json);

    py::class_<Violation>(mod, "Violation")
        .def_readonly("record_id", &Violation::record_id)
        .def_readonly("kind", &Violation::kind)
        .def_readonly("message", &Violation::message)
        .def("__str__", &Violation::to_line);

    mod.def("validate", [](const std::filesystem::path& path, bool strict) {
        return validate_bundle(path, strict).violations;
    }, py::arg("path"), py::arg("strict") = false);

    mod.def("gen_fixture", [](const std::filesystem::path& out, std::uint64_t seed, std::size_t records,
                              std::size_t layers, std::size_t heads, std::size_t max_seq) {
        write_bundle(gen_fixture(seed, records, FixtureDims{layers, heads, max_seq}), out);
    }, py::arg("out"), py::arg("seed") = 0, py::arg("records") = 100, py::arg("layers") = 2,
       py::arg("heads") = 2, py::arg("max_seq") = 8);

    mod.def("mean_over_heads", &mean_heads_array, py::arg("attention"));
    mod.def("select_attended_word", [](const std::vector<double>& row, std::size_t self_index) {
        if (self_index >= row.size()) throw std::invalid_argument("self index out of range");
        return select_attended_word(row, self_index);
    }, py::arg("row"), py::arg("self_index"));

    py::class_<AnalysisResult>(mod, "Analysis")
        .def_readonly("model_id", &AnalysisResult::model_id)
        .def_readonly("n_layers", &AnalysisResult::n_layers)
        .def_readonly("n_heads", &AnalysisResult::n_heads)
        .def_property_readonly("measure", [](const AnalysisResult& r) { return to_string(r.measure); })
        .def_property_readonly("lift", [](const AnalysisResult& r) { return layer_rows(r, Measure::Lift); })
        .def_property_readonly("proportion",
                               [](const AnalysisResult& r) { return layer_rows(r, Measure::Proportion); })
        .def_property_readonly("skipped", [](const AnalysisResult& r) {
            py::list out;
            for (const auto& s : r.skipped) out.append(py::make_tuple(s.record_id, s.reason));
            return out;
        })
        .def("value", [](const AnalysisResult& r, std::size_t layer, const std::string& category,
                         const std::string& measure) {
            if (layer < 1 || layer > r.n_layers) throw std::out_of_range("layer out of range");
            const auto c = parse_category(category);
            if (c == LexicalCategory::Other) throw std::invalid_argument("no ratio for category other");
            return r.value(layer, c, parse_measure(measure));
        }, py::arg("layer"), py::arg("category"), py::arg("measure") = "lift")
        .def("to_json", &analysis_to_json)
        .def_static("from_json", [](const std::string& text) { return analysis_from_json(text); })
        .def_static("load", &load_analysis, py::arg("path"))
        .def("__eq__", [](const AnalysisResult& a, const AnalysisResult& b) { return a == b; });

    mod.def("analyze", [](const std::filesystem::path& bundle, const std::string& measure, std::size_t jobs,
                          const std::optional<std::filesystem::path>& category_map) {
        const auto map = resolve_map(category_map);
        AnalyzeOptions opts{parse_measure(measure), jobs};
        py::gil_scoped_release release;
        return analyze_bundle(bundle, map, opts);
    }, py::arg("bundle"), py::arg("measure") = "lift", py::arg("jobs") = 1,
       py::arg("category_map") = py::none());

    mod.def("compare", [](const AnalysisResult& baseline, const AnalysisResult& other, const std::string& layer,
                          const std::string& measure, const std::string& format) {
        return emit_table(compare(baseline, other, LayerSelector::parse(layer), parse_measure(measure)),
                          parse_table_format(format));
    }, py::arg("baseline"), py::arg("other"), py::arg("layer") = "last", py::arg("measure") = "lift",
       py::arg("format") = "csv");

    mod.def("top_layers", [](const AnalysisResult& result, std::size_t k, const std::string& measure,
                             const std::string& format) {
        return emit_table(rank_layers(result, k, parse_measure(measure)), parse_table_format(format));
    }, py::arg("result"), py::arg("k") = 3, py::arg("measure") = "lift", py::arg("format") = "csv");

    mod.def("plot", [](const std::vector<AnalysisResult>& results, const std::string& layer,
                       const std::string& measure, std::vector<std::string> titles) {
        ChartOptions opts;
        opts.panel_titles = std::move(titles);
        return render_bar_chart(results, LayerSelector::parse(layer), parse_measure(measure), opts);
    }, py::arg("results"), py::arg("layer") = "last", py::arg("measure") = "lift",
       py::arg("titles") = std::vector<std::string>{});
}
