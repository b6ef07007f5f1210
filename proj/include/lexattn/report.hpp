#pragma once

// Comparison tables, layer rankings and bar charts built from one or two
// AnalysisResults.

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lexattn/extract.hpp"

namespace lexattn {

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// "last", "all", or a 1-based layer number.
class LayerSelector {
public:
    enum class Kind { Last, All, Index };

    static LayerSelector last() { return LayerSelector(Kind::Last, 0); }
    static LayerSelector all() { return LayerSelector(Kind::All, 0); }
    static LayerSelector index(std::size_t layer);
    static LayerSelector parse(std::string_view text);

    Kind kind() const { return kind_; }
    std::string to_string() const;

    // 1-based layer numbers; throws ReportError when out of range.
    std::vector<std::size_t> resolve(std::size_t n_layers) const;

    bool operator==(const LayerSelector&) const = default;

private:
    LayerSelector(Kind kind, std::size_t layer) : kind_(kind), layer_(layer) {}

    Kind kind_;
    std::size_t layer_;
};

struct ComparisonRow {
    std::size_t layer = 0;
    LexicalCategory category = LexicalCategory::Content;
    double baseline = 0.0;
    double comparison = 0.0;
    double delta = 0.0;  // comparison - baseline

    // "increase", "decrease" or "unchanged".
    const char* direction() const;
};

struct ComparisonReport {
    Measure measure = Measure::Lift;
    LayerSelector layers = LayerSelector::last();
    std::string baseline_model;
    std::string comparison_model;
    std::vector<ComparisonRow> rows;
};

// Throws ReportError when the two results differ in layer count.
ComparisonReport compare(const AnalysisResult& baseline, const AnalysisResult& other,
                         LayerSelector layers = LayerSelector::last(),
                         Measure measure = Measure::Lift);

struct RankedLayer {
    std::size_t layer = 0;
    double value = 0.0;
};

struct LayerRanking {
    Measure measure = Measure::Lift;
    std::size_t k = 0;  // after clipping to n_layers
    std::vector<RankedLayer> content;
    std::vector<RankedLayer> function;
};

// Top-k layers per category, highest first, lower layer wins ties.
// k larger than n_layers is clipped; k == 0 throws std::invalid_argument.
LayerRanking rank_layers(const AnalysisResult& result, std::size_t k,
                         Measure measure = Measure::Lift);

enum class TableFormat { Csv, Json };

TableFormat parse_table_format(std::string_view name);

std::string emit_table(const ComparisonReport& report, TableFormat format);
std::string emit_table(const LayerRanking& ranking, TableFormat format);

struct ChartOptions {
    double y_max = 1.5;
    // Defaults to "Pretrained"/"Finetuned" for two results and the model id
    // for one.
    std::vector<std::string> panel_titles;
};

// Self-contained SVG 1.1 with one panel per result (at most two). Bars
// taller than y_max are clipped and marked.
std::string render_bar_chart(std::span<const AnalysisResult> results, LayerSelector layers,
                             Measure measure, const ChartOptions& options = {});

}  // namespace lexattn
