#pragma once

// Word-level attention extraction and lexical-category tallying.
//
// Per record: average heads, drop special-token rows/columns, average
// subtoken blocks into a word x word matrix, then let every word pick the
// word it attends to most (itself excluded) and count the category of the
// pick. Counts are summed over the corpus and normalized per layer.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lexattn/interchange.hpp"
#include "lexattn/lexcat.hpp"

namespace lexattn {

enum class Measure { Proportion, Lift };

const char* to_string(Measure m);
Measure parse_measure(std::string_view name);

// A stack of n_layers square matrices.
class LayerMatrices {
public:
    LayerMatrices() = default;
    LayerMatrices(std::size_t n_layers, std::size_t size)
        : n_layers_(n_layers), size_(size), values_(n_layers * size * size, 0.0) {}

    std::size_t n_layers() const { return n_layers_; }
    std::size_t size() const { return size_; }

    double at(std::size_t layer, std::size_t i, std::size_t j) const {
        return values_[(layer * size_ + i) * size_ + j];
    }
    double& at(std::size_t layer, std::size_t i, std::size_t j) {
        return values_[(layer * size_ + i) * size_ + j];
    }
    std::span<const double> row(std::size_t layer, std::size_t i) const {
        return {values_.data() + (layer * size_ + i) * size_, size_};
    }
    std::span<double> row(std::size_t layer, std::size_t i) {
        return {values_.data() + (layer * size_ + i) * size_, size_};
    }

    bool operator==(const LayerMatrices&) const = default;

private:
    std::size_t n_layers_ = 0;
    std::size_t size_ = 0;
    std::vector<double> values_;
};

// Per-layer n_words x n_words attention after subtoken merging.
struct WordLevelAttention {
    LayerMatrices matrices;

    std::size_t n_words() const { return matrices.size(); }
    std::size_t n_layers() const { return matrices.n_layers(); }
};

// Raised for records that cannot contribute; analysis records the reason.
class RecordSkipped : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

LayerMatrices mean_over_heads(const AttentionTensor& tensor);

// Removes every row and column whose word_index is the sentinel. Values are
// not renormalized. Throws RecordSkipped("no content tokens") if nothing is
// left.
LayerMatrices exclude_special_tokens(const LayerMatrices& matrices, const SentenceRecord& record);

// out[u][v] = mean of in[i][j] over subtokens i of word u and j of word v.
// Expects the output of exclude_special_tokens for the same record.
WordLevelAttention merge_subtokens(const LayerMatrices& token_level, const SentenceRecord& record);

// Index of the largest entry other than self_index, lowest index on ties.
// nullopt when the row has no other entry.
std::optional<std::size_t> select_attended_word(std::span<const double> row, std::size_t self_index);

using CategoryCounts = std::array<std::uint64_t, kCategoryCount>;

inline std::uint64_t& count_of(CategoryCounts& c, LexicalCategory cat) {
    return c[static_cast<std::size_t>(cat)];
}
inline std::uint64_t count_of(const CategoryCounts& c, LexicalCategory cat) {
    return c[static_cast<std::size_t>(cat)];
}

struct LayerCategoryCounts {
    std::vector<CategoryCounts> selections;  // indexed by layer (0-based)
    CategoryCounts occurrences{};            // words seen, layer independent
    std::uint64_t n_selections = 0;          // per layer; equal for every layer
    std::uint64_t skipped_words = 0;         // (word, layer) pairs with no candidate target

    LayerCategoryCounts() = default;
    explicit LayerCategoryCounts(std::size_t n_layers) : selections(n_layers, CategoryCounts{}) {}

    std::size_t n_layers() const { return selections.size(); }

    LayerCategoryCounts& operator+=(const LayerCategoryCounts& other);
    bool operator==(const LayerCategoryCounts&) const = default;
};

LayerCategoryCounts tally_record(const WordLevelAttention& word_attn, const SentenceRecord& record,
                                 const CategoryMap& map);

struct CategoryPair {
    double content = 0.0;
    double function = 0.0;

    double get(LexicalCategory c) const { return c == LexicalCategory::Function ? function : content; }
    bool operator==(const CategoryPair&) const = default;
};

struct CategoryRatios {
    std::vector<CategoryPair> proportion;  // indexed by layer (0-based)
    std::vector<CategoryPair> lift;

    const std::vector<CategoryPair>& of(Measure m) const {
        return m == Measure::Lift ? lift : proportion;
    }
    bool operator==(const CategoryRatios&) const = default;
};

// Both measures over Content and Function only; Other is left out of
// numerators and denominators. Throws AnalysisError when a layer has no
// Content/Function selections.
CategoryRatios compute_ratios(const LayerCategoryCounts& counts);

struct SkippedRecord {
    std::string record_id;
    std::string reason;

    auto operator<=>(const SkippedRecord&) const = default;
};

struct AnalysisResult {
    std::string model_id;
    std::size_t n_layers = 0;
    std::size_t n_heads = 0;
    Measure measure = Measure::Lift;
    LayerCategoryCounts counts;
    CategoryRatios ratios;
    std::vector<SkippedRecord> skipped;  // sorted

    // layer is 1-based.
    double value(std::size_t layer, LexicalCategory c, Measure m) const {
        return ratios.of(m).at(layer - 1).get(c);
    }

    bool operator==(const AnalysisResult&) const = default;
};

struct AnalyzeOptions {
    Measure measure = Measure::Lift;
    std::size_t jobs = 1;
};

// Counts for one record, or the reason it was skipped.
using RecordOutcome = std::variant<LayerCategoryCounts, SkippedRecord>;

RecordOutcome analyze_record(const BundleEntry& entry, const BundleHeader& header,
                             const CategoryMap& map);

AnalysisResult analyze_bundle(const std::filesystem::path& source, const CategoryMap& map,
                              const AnalyzeOptions& options = {});
AnalysisResult analyze_bundle(const Bundle& bundle, const CategoryMap& map,
                              const AnalyzeOptions& options = {});

// JSON form of AnalysisResult; layers are numbered from 1.
std::string analysis_to_json(const AnalysisResult& result);
AnalysisResult analysis_from_json(std::string_view text);
AnalysisResult load_analysis(const std::filesystem::path& path);

}  // namespace lexattn
