#include "lexattn/report.hpp"

#include <algorithm>
#include <charconv>

#include "json.hpp"

namespace lexattn {

using nlohmann::ordered_json;

namespace {

constexpr LexicalCategory kReportedCategories[] = {LexicalCategory::Content,
                                                   LexicalCategory::Function};

// Shortest representation that reads back to the same double.
std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

LayerSelector LayerSelector::index(std::size_t layer) {
    if (layer == 0) throw std::invalid_argument("layer numbers start at 1");
    return LayerSelector(Kind::Index, layer);
}

LayerSelector LayerSelector::parse(std::string_view text) {
    if (text == "last") return last();
    if (text == "all") return all();
    std::size_t layer = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), layer);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || layer == 0) {
        throw std::invalid_argument("layer must be 'last', 'all' or a positive integer, got '" +
                                    std::string(text) + "'");
    }
    return index(layer);
}

std::string LayerSelector::to_string() const {
    switch (kind_) {
        case Kind::Last: return "last";
        case Kind::All: return "all";
        case Kind::Index: return std::to_string(layer_);
    }
    return "last";
}

std::vector<std::size_t> LayerSelector::resolve(std::size_t n_layers) const {
    if (n_layers == 0) throw ReportError("result has no layers");
    switch (kind_) {
        case Kind::Last: return {n_layers};
        case Kind::All: {
            std::vector<std::size_t> out(n_layers);
            for (std::size_t l = 0; l < n_layers; ++l) out[l] = l + 1;
            return out;
        }
        case Kind::Index:
            if (layer_ > n_layers) {
                throw ReportError("layer " + std::to_string(layer_) + " out of range (model has " +
                                  std::to_string(n_layers) + " layers)");
            }
            return {layer_};
    }
    return {n_layers};
}

const char* ComparisonRow::direction() const {
    if (delta > 0.0) return "increase";
    if (delta < 0.0) return "decrease";
    return "unchanged";
}

ComparisonReport compare(const AnalysisResult& baseline, const AnalysisResult& other,
                         LayerSelector layers, Measure measure) {
    if (baseline.n_layers != other.n_layers) {
        throw ReportError("structural mismatch: baseline has " + std::to_string(baseline.n_layers) +
                          " layers, comparison has " + std::to_string(other.n_layers));
    }
    ComparisonReport report;
    report.measure = measure;
    report.layers = layers;
    report.baseline_model = baseline.model_id;
    report.comparison_model = other.model_id;
    for (std::size_t layer : layers.resolve(baseline.n_layers)) {
        for (auto c : kReportedCategories) {
            ComparisonRow row;
            row.layer = layer;
            row.category = c;
            row.baseline = baseline.value(layer, c, measure);
            row.comparison = other.value(layer, c, measure);
            row.delta = row.comparison - row.baseline;
            report.rows.push_back(row);
        }
    }
    return report;
}

LayerRanking rank_layers(const AnalysisResult& result, std::size_t k, Measure measure) {
    if (k == 0) throw std::invalid_argument("k must be at least 1");
    LayerRanking ranking;
    ranking.measure = measure;
    ranking.k = std::min(k, result.n_layers);
    for (auto c : kReportedCategories) {
        std::vector<RankedLayer> all;
        for (std::size_t l = 1; l <= result.n_layers; ++l) all.push_back({l, result.value(l, c, measure)});
        std::stable_sort(all.begin(), all.end(), [](const RankedLayer& a, const RankedLayer& b) {
            return a.value > b.value;
        });
        all.resize(ranking.k);
        (c == LexicalCategory::Content ? ranking.content : ranking.function) = std::move(all);
    }
    return ranking;
}

TableFormat parse_table_format(std::string_view name) {
    if (name == "csv") return TableFormat::Csv;
    if (name == "json") return TableFormat::Json;
    throw std::invalid_argument("unknown table format '" + std::string(name) +
                                "' (expected csv or json)");
}

std::string emit_table(const ComparisonReport& report, TableFormat format) {
    const bool per_layer = report.layers.kind() == LayerSelector::Kind::All;
    if (format == TableFormat::Csv) {
        std::string out = per_layer ? "layer,category,baseline,comparison,delta\n"
                                    : "category,baseline,comparison,delta\n";
        for (const auto& r : report.rows) {
            if (per_layer) out += std::to_string(r.layer) + ",";
            out += std::string(to_string(r.category)) + "," + format_number(r.baseline) + "," +
                   format_number(r.comparison) + "," + format_number(r.delta) + "\n";
        }
        return out;
    }
    ordered_json rows = ordered_json::array();
    for (const auto& r : report.rows) {
        rows.push_back({
            {"layer", r.layer},
            {"category", to_string(r.category)},
            {"baseline", r.baseline},
            {"comparison", r.comparison},
            {"delta", r.delta},
            {"direction", r.direction()},
        });
    }
    ordered_json j = {
        {"measure", to_string(report.measure)},
        {"layer", report.layers.to_string()},
        {"baseline_model", report.baseline_model},
        {"comparison_model", report.comparison_model},
        {"rows", std::move(rows)},
    };
    return j.dump(2) + "\n";
}

std::string emit_table(const LayerRanking& ranking, TableFormat format) {
    const std::pair<LexicalCategory, const std::vector<RankedLayer>*> lists[] = {
        {LexicalCategory::Content, &ranking.content},
        {LexicalCategory::Function, &ranking.function},
    };
    if (format == TableFormat::Csv) {
        std::string out = "category,rank,layer,value\n";
        for (const auto& [cat, list] : lists) {
            for (std::size_t i = 0; i < list->size(); ++i) {
                out += std::string(to_string(cat)) + "," + std::to_string(i + 1) + "," +
                       std::to_string((*list)[i].layer) + "," + format_number((*list)[i].value) + "\n";
            }
        }
        return out;
    }
    ordered_json j = {{"measure", to_string(ranking.measure)}, {"k", ranking.k}};
    for (const auto& [cat, list] : lists) {
        ordered_json arr = ordered_json::array();
        for (std::size_t i = 0; i < list->size(); ++i) {
            arr.push_back({{"rank", i + 1}, {"layer", (*list)[i].layer}, {"value", (*list)[i].value}});
        }
        j[to_string(cat)] = std::move(arr);
    }
    return j.dump(2) + "\n";
}

}  // namespace lexattn
