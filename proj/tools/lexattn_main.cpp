// lexattn: validate attention bundles, run the extraction, and render
// comparison tables, layer rankings and charts.
//
// Exit codes: 0 success, 1 domain or validation failure, 2 usage or I/O
// failure.

#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "lexattn/extract.hpp"
#include "lexattn/interchange.hpp"
#include "lexattn/lexcat.hpp"
#include "lexattn/report.hpp"
#include "lexattn/validate.hpp"

namespace {

using namespace lexattn;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + out_path);
    out << text;
    if (!out.flush()) throw UsageError("write failed: " + out_path);
}

int bundle_error_exit(const BundleError& e) {
    switch (e.code()) {
        case BundleErrc::missing_file:
        case BundleErrc::io_error:
            return kExitUsage;
        default:
            return kExitDomain;
    }
}

Measure measure_or_usage(const std::string& name) {
    try {
        return parse_measure(name);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

LayerSelector layer_or_usage(const std::string& text) {
    try {
        return LayerSelector::parse(text);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

TableFormat format_or_usage(const std::string& name) {
    try {
        return parse_table_format(name);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

AnalysisResult load_or_usage(const std::string& path) {
    try {
        return load_analysis(path);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lexical-category analysis of transformer attention"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    std::string bundle_dir;
    std::string out_path;
    std::string measure_name = "lift";
    std::string layer_text = "last";
    std::string format_name = "csv";
    std::string category_map_path;
    bool strict = false;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    std::size_t k = 3;
    std::uint64_t seed = 0;
    std::size_t n_records = 100;
    std::size_t n_layers = 12;
    std::size_t n_heads = 12;
    std::size_t max_seq = 32;
    std::string first_json;
    std::string second_json;

    auto* validate = app.add_subcommand("validate", "Check a bundle against every format invariant");
    validate->add_option("bundle", bundle_dir, "Bundle directory")->required();
    validate->add_flag("--strict", strict, "Check row sums at 1e-3 instead of 1e-2");

    auto* analyze = app.add_subcommand("analyze", "Run the extraction and write AnalysisResult JSON");
    analyze->add_option("bundle", bundle_dir, "Bundle directory")->required();
    analyze->add_option("--measure", measure_name, "lift or proportion")->capture_default_str();
    analyze->add_option("--category-map", category_map_path, "JSON tag override file");
    analyze->add_option("--out", out_path, "Output file (default: stdout)");
    analyze->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    auto* cmp = app.add_subcommand("compare", "Per-category deltas between two analyses");
    cmp->add_option("baseline", first_json, "Baseline AnalysisResult JSON")->required();
    cmp->add_option("other", second_json, "Comparison AnalysisResult JSON")->required();
    cmp->add_option("--measure", measure_name, "lift or proportion")->capture_default_str();
    cmp->add_option("--layer", layer_text, "last, all or a layer number")->capture_default_str();
    cmp->add_option("--format", format_name, "csv or json")->capture_default_str();
    cmp->add_option("--out", out_path, "Output file (default: stdout)");

    auto* top = app.add_subcommand("top-layers", "Layers with the highest value per category");
    top->add_option("analysis", first_json, "AnalysisResult JSON")->required();
    top->add_option("--k", k, "Layers per category")->capture_default_str()->check(CLI::PositiveNumber);
    top->add_option("--measure", measure_name, "lift or proportion")->capture_default_str();
    top->add_option("--format", format_name, "csv or json")->capture_default_str();
    top->add_option("--out", out_path, "Output file (default: stdout)");

    auto* plot = app.add_subcommand("plot", "Grouped bar chart (SVG), one panel per analysis");
    plot->add_option("analysis", first_json, "AnalysisResult JSON (pretrained panel)")->required();
    plot->add_option("second", second_json, "Second AnalysisResult JSON (finetuned panel)");
    plot->add_option("--measure", measure_name, "lift or proportion")->capture_default_str();
    plot->add_option("--layer", layer_text, "last, all or a layer number")->capture_default_str();
    plot->add_option("--out", out_path, "Output file (default: stdout)");

    auto* gen = app.add_subcommand("gen-fixture", "Write a deterministic synthetic bundle");
    gen->add_option("--seed", seed, "Random seed")->capture_default_str();
    gen->add_option("--records", n_records, "Number of records")->capture_default_str();
    gen->add_option("--layers", n_layers, "Layers")->capture_default_str();
    gen->add_option("--heads", n_heads, "Heads per layer")->capture_default_str();
    gen->add_option("--max-seq", max_seq, "Maximum sequence length (>= 4)")->capture_default_str();
    gen->add_option("--out", out_path, "Output bundle directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*validate) {
            const auto report = validate_bundle(bundle_dir, strict);
            for (const auto& v : report.violations) std::cout << v.to_line() << '\n';
            return report.ok() ? kExitOk : kExitDomain;
        }

        if (*analyze) {
            AnalyzeOptions options;
            options.measure = measure_or_usage(measure_name);
            options.jobs = jobs;
            CategoryMap map = default_category_map();
            if (!category_map_path.empty()) {
                try {
                    map = load_category_map(category_map_path);
                } catch (const CategoryMapError& e) {
                    throw UsageError(e.what());
                }
            }
            const auto result = analyze_bundle(bundle_dir, map, options);
            for (const auto& s : result.skipped) {
                std::cerr << "skipped " << s.record_id << ": " << s.reason << '\n';
            }
            if (result.counts.skipped_words > 0) {
                std::cerr << "skipped " << result.counts.skipped_words
                          << " word selection(s) in single-word records\n";
            }
            write_output(out_path, analysis_to_json(result));
            return kExitOk;
        }

        if (*cmp) {
            const auto measure = measure_or_usage(measure_name);
            const auto layers = layer_or_usage(layer_text);
            const auto format = format_or_usage(format_name);
            const auto baseline = load_or_usage(first_json);
            const auto other = load_or_usage(second_json);
            write_output(out_path, emit_table(compare(baseline, other, layers, measure), format));
            return kExitOk;
        }

        if (*top) {
            const auto measure = measure_or_usage(measure_name);
            const auto format = format_or_usage(format_name);
            const auto result = load_or_usage(first_json);
            write_output(out_path, emit_table(rank_layers(result, k, measure), format));
            return kExitOk;
        }

        if (*plot) {
            const auto measure = measure_or_usage(measure_name);
            const auto layers = layer_or_usage(layer_text);
            std::vector<AnalysisResult> results{load_or_usage(first_json)};
            if (!second_json.empty()) results.push_back(load_or_usage(second_json));
            write_output(out_path, render_bar_chart(results, layers, measure));
            return kExitOk;
        }

        if (*gen) {
            Bundle bundle;
            try {
                bundle = gen_fixture(seed, n_records, {n_layers, n_heads, max_seq});
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            write_bundle(bundle, out_path);
            return kExitOk;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const BundleError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return bundle_error_exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    }
    return kExitUsage;
}
