#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lexattn/extract.hpp"

namespace lexattn {

using nlohmann::ordered_json;

namespace {

ordered_json counts_json(const CategoryCounts& c) {
    return {
        {"content", count_of(c, LexicalCategory::Content)},
        {"function", count_of(c, LexicalCategory::Function)},
        {"other", count_of(c, LexicalCategory::Other)},
    };
}

ordered_json pair_json(const CategoryPair& p) {
    return {{"content", p.content}, {"function", p.function}};
}

CategoryCounts counts_from(const ordered_json& j) {
    CategoryCounts c{};
    count_of(c, LexicalCategory::Content) = j.at("content").get<std::uint64_t>();
    count_of(c, LexicalCategory::Function) = j.at("function").get<std::uint64_t>();
    count_of(c, LexicalCategory::Other) = j.at("other").get<std::uint64_t>();
    return c;
}

CategoryPair pair_from(const ordered_json& j) {
    return {j.at("content").get<double>(), j.at("function").get<double>()};
}

}  // namespace

std::string analysis_to_json(const AnalysisResult& r) {
    ordered_json layers = ordered_json::array();
    for (std::size_t l = 0; l < r.n_layers; ++l) {
        layers.push_back({
            {"layer", l + 1},
            {"counts", counts_json(r.counts.selections.at(l))},
            {"proportion", pair_json(r.ratios.proportion.at(l))},
            {"lift", pair_json(r.ratios.lift.at(l))},
        });
    }
    ordered_json skipped = ordered_json::array();
    for (const auto& s : r.skipped) {
        skipped.push_back({{"record_id", s.record_id}, {"reason", s.reason}});
    }
    ordered_json j = {
        {"model_id", r.model_id},
        {"n_layers", r.n_layers},
        {"n_heads", r.n_heads},
        {"measure", to_string(r.measure)},
        {"occurrences", counts_json(r.counts.occurrences)},
        {"n_selections", r.counts.n_selections},
        {"skipped_words", r.counts.skipped_words},
        {"layers", std::move(layers)},
        {"skipped", std::move(skipped)},
    };
    return j.dump(2) + "\n";
}

AnalysisResult analysis_from_json(std::string_view text) {
    try {
        const auto j = ordered_json::parse(text);
        AnalysisResult r;
        r.model_id = j.at("model_id").get<std::string>();
        r.n_layers = j.at("n_layers").get<std::size_t>();
        r.n_heads = j.value("n_heads", std::size_t{0});
        r.measure = parse_measure(j.at("measure").get<std::string>());
        r.counts = LayerCategoryCounts(r.n_layers);
        r.counts.occurrences = counts_from(j.at("occurrences"));
        r.counts.n_selections = j.value("n_selections", std::uint64_t{0});
        r.counts.skipped_words = j.value("skipped_words", std::uint64_t{0});

        const auto& layers = j.at("layers");
        if (!layers.is_array() || layers.size() != r.n_layers) {
            throw std::invalid_argument("'layers' must have n_layers entries");
        }
        r.ratios.proportion.resize(r.n_layers);
        r.ratios.lift.resize(r.n_layers);
        for (const auto& entry : layers) {
            const auto idx = entry.at("layer").get<std::size_t>();
            if (idx < 1 || idx > r.n_layers) {
                throw std::invalid_argument("layer index " + std::to_string(idx) + " out of range");
            }
            r.counts.selections[idx - 1] = counts_from(entry.at("counts"));
            r.ratios.proportion[idx - 1] = pair_from(entry.at("proportion"));
            r.ratios.lift[idx - 1] = pair_from(entry.at("lift"));
        }
        for (const auto& s : j.at("skipped")) {
            r.skipped.push_back({s.at("record_id").get<std::string>(), s.at("reason").get<std::string>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed analysis JSON: ") + e.what());
    }
}

AnalysisResult load_analysis(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return analysis_from_json(ss.str());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

}  // namespace lexattn
