#include <algorithm>
#include <cstdio>

#include "lexattn/report.hpp"

namespace lexattn {

namespace {

constexpr double kPlotHeight = 220.0;
constexpr double kBarWidth = 22.0;
constexpr double kBarGap = 4.0;
constexpr double kGroupPad = 18.0;
constexpr double kLeftMargin = 48.0;
constexpr double kTopMargin = 40.0;
constexpr double kBottomMargin = 60.0;
constexpr double kPanelGap = 30.0;
constexpr int kTicks = 6;

constexpr const char* kContentColor = "#1f3fd6";
constexpr const char* kFunctionColor = "#d62728";

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string px(double v) { return fmt("%.1f", v); }

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

double group_width() { return 2 * kBarWidth + kBarGap + kGroupPad; }

double panel_width(std::size_t groups) {
    return std::max(160.0, kLeftMargin + kGroupPad + static_cast<double>(groups) * group_width());
}

void draw_panel(std::string& svg, double x0, const AnalysisResult& result,
                const std::vector<std::size_t>& layers, Measure measure, double y_max,
                const std::string& title) {
    const double width = panel_width(layers.size());
    const double axis_x = x0 + kLeftMargin;
    const double base_y = kTopMargin + kPlotHeight;

    svg += "  <g class=\"panel\">\n";
    svg += "    <text x=\"" + px(x0 + width / 2) + "\" y=\"" + px(kTopMargin - 18) +
           "\" text-anchor=\"middle\" font-size=\"13\" font-weight=\"bold\">" + xml_escape(title) +
           "</text>\n";

    for (int t = 0; t <= kTicks; ++t) {
        const double v = y_max * t / kTicks;
        const double y = base_y - kPlotHeight * t / kTicks;
        svg += "    <line x1=\"" + px(axis_x - 4) + "\" y1=\"" + px(y) + "\" x2=\"" +
               px(x0 + width) + "\" y2=\"" + px(y) + "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
        svg += "    <text x=\"" + px(axis_x - 6) + "\" y=\"" + px(y + 3) +
               "\" text-anchor=\"end\" font-size=\"9\">" + fmt("%.2f", v) + "</text>\n";
    }
    svg += "    <line x1=\"" + px(axis_x) + "\" y1=\"" + px(kTopMargin) + "\" x2=\"" + px(axis_x) +
           "\" y2=\"" + px(base_y) + "\" stroke=\"black\"/>\n";
    svg += "    <line x1=\"" + px(axis_x) + "\" y1=\"" + px(base_y) + "\" x2=\"" + px(x0 + width) +
           "\" y2=\"" + px(base_y) + "\" stroke=\"black\"/>\n";

    for (std::size_t g = 0; g < layers.size(); ++g) {
        const double gx = axis_x + kGroupPad + static_cast<double>(g) * group_width();
        const struct {
            LexicalCategory cat;
            const char* color;
            const char* label;
        } bars[] = {{LexicalCategory::Content, kContentColor, "Con."},
                    {LexicalCategory::Function, kFunctionColor, "Fun."}};
        for (std::size_t b = 0; b < 2; ++b) {
            const double value = result.value(layers[g], bars[b].cat, measure);
            const bool clipped = value > y_max;
            const double shown = std::clamp(value, 0.0, y_max);
            const double h = kPlotHeight * shown / y_max;
            const double bx = gx + static_cast<double>(b) * (kBarWidth + kBarGap);
            svg += "    <rect class=\"bar\" data-category=\"" + std::string(bars[b].label) +
                   "\" data-layer=\"" + std::to_string(layers[g]) + "\" x=\"" + px(bx) + "\" y=\"" +
                   px(base_y - h) + "\" width=\"" + px(kBarWidth) + "\" height=\"" + px(h) +
                   "\" fill=\"" + bars[b].color + "\"/>\n";
            double label_y = base_y - h - 3;
            if (clipped) {
                const double cx = bx + kBarWidth / 2;
                svg += "    <path class=\"overflow\" d=\"M " + px(bx) + " " + px(kTopMargin) +
                       " L " + px(cx) + " " + px(kTopMargin - 7) + " L " + px(bx + kBarWidth) +
                       " " + px(kTopMargin) + " Z\" fill=\"" + bars[b].color + "\"/>\n";
                label_y = kTopMargin - 9;
            }
            svg += "    <text x=\"" + px(bx + kBarWidth / 2) + "\" y=\"" + px(label_y) +
                   "\" text-anchor=\"middle\" font-size=\"8\">" + fmt("%.2f", value) + "</text>\n";
        }
        svg += "    <text x=\"" + px(gx + kBarWidth + kBarGap / 2) + "\" y=\"" + px(base_y + 14) +
               "\" text-anchor=\"middle\" font-size=\"10\">L" + std::to_string(layers[g]) +
               "</text>\n";
    }
    svg += "  </g>\n";
}

}  // namespace

std::string render_bar_chart(std::span<const AnalysisResult> results, LayerSelector layers,
                             Measure measure, const ChartOptions& options) {
    if (results.empty() || results.size() > 2) {
        throw std::invalid_argument("render_bar_chart takes one or two results");
    }
    if (!(options.y_max > 0.0)) throw std::invalid_argument("y_max must be positive");
    if (results.size() == 2 && results[0].n_layers != results[1].n_layers) {
        throw ReportError("structural mismatch: results differ in layer count");
    }

    std::vector<std::string> titles = options.panel_titles;
    if (titles.empty()) {
        if (results.size() == 2) {
            titles = {"Pretrained", "Finetuned"};
        } else {
            titles = {results[0].model_id};
        }
    }
    if (titles.size() != results.size()) {
        throw std::invalid_argument("panel_titles must match the number of results");
    }

    const auto selected = layers.resolve(results[0].n_layers);
    const double pw = panel_width(selected.size());
    const double width = static_cast<double>(results.size()) * pw +
                         static_cast<double>(results.size() - 1) * kPanelGap + 20;
    const double height = kTopMargin + kPlotHeight + kBottomMargin;

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + px(width) +
           "\" height=\"" + px(height) + "\" viewBox=\"0 0 " + px(width) + " " + px(height) +
           "\" font-family=\"sans-serif\">\n";
    svg += "  <rect x=\"0\" y=\"0\" width=\"" + px(width) + "\" height=\"" + px(height) +
           "\" fill=\"white\"/>\n";
    for (std::size_t p = 0; p < results.size(); ++p) {
        draw_panel(svg, static_cast<double>(p) * (pw + kPanelGap), results[p], selected, measure,
                   options.y_max, titles[p]);
    }

    const double ly = kTopMargin + kPlotHeight + 34;
    svg += "  <g class=\"legend\" font-size=\"10\">\n";
    svg += "    <rect x=\"" + px(kLeftMargin) + "\" y=\"" + px(ly) +
           "\" width=\"10\" height=\"10\" fill=\"" + kContentColor + "\"/>\n";
    svg += "    <text x=\"" + px(kLeftMargin + 14) + "\" y=\"" + px(ly + 9) + "\">Con.</text>\n";
    svg += "    <rect x=\"" + px(kLeftMargin + 50) + "\" y=\"" + px(ly) +
           "\" width=\"10\" height=\"10\" fill=\"" + kFunctionColor + "\"/>\n";
    svg += "    <text x=\"" + px(kLeftMargin + 64) + "\" y=\"" + px(ly + 9) + "\">Fun.</text>\n";
    svg += "    <text x=\"" + px(kLeftMargin + 110) + "\" y=\"" + px(ly + 9) + "\">measure: " +
           to_string(measure) + ", layer: " + layers.to_string() + "</text>\n";
    svg += "  </g>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace lexattn
