#include "lexattn/extract.hpp"

#include <algorithm>
#include <thread>

#include "lexattn/validate.hpp"

namespace lexattn {

const char* to_string(Measure m) { return m == Measure::Lift ? "lift" : "proportion"; }

Measure parse_measure(std::string_view name) {
    if (name == "lift") return Measure::Lift;
    if (name == "proportion") return Measure::Proportion;
    throw std::invalid_argument("unknown measure '" + std::string(name) +
                                "' (expected lift or proportion)");
}

LayerMatrices mean_over_heads(const AttentionTensor& tensor) {
    const std::size_t n = tensor.seq_len();
    const auto heads = static_cast<double>(tensor.n_heads());
    LayerMatrices out(tensor.n_layers(), n);
    for (std::size_t l = 0; l < tensor.n_layers(); ++l) {
        for (std::size_t i = 0; i < n; ++i) {
            auto dst = out.row(l, i);
            for (std::size_t h = 0; h < tensor.n_heads(); ++h) {
                const auto src = tensor.row(l, h, i);
                for (std::size_t j = 0; j < n; ++j) dst[j] += src[j];
            }
            for (auto& v : dst) v /= heads;
        }
    }
    return out;
}

LayerMatrices exclude_special_tokens(const LayerMatrices& matrices, const SentenceRecord& record) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < record.word_index.size(); ++i) {
        if (record.word_index[i]) keep.push_back(i);
    }
    if (keep.empty()) throw RecordSkipped("no content tokens");

    LayerMatrices out(matrices.n_layers(), keep.size());
    for (std::size_t l = 0; l < matrices.n_layers(); ++l) {
        for (std::size_t a = 0; a < keep.size(); ++a) {
            for (std::size_t b = 0; b < keep.size(); ++b) {
                out.at(l, a, b) = matrices.at(l, keep[a], keep[b]);
            }
        }
    }
    return out;
}

WordLevelAttention merge_subtokens(const LayerMatrices& token_level, const SentenceRecord& record) {
    // Token positions of each word, in the index space left after exclusion.
    std::vector<std::vector<std::size_t>> members(record.n_words());
    std::size_t pos = 0;
    for (const auto& w : record.word_index) {
        if (!w) continue;
        members.at(static_cast<std::size_t>(*w)).push_back(pos++);
    }
    if (pos != token_level.size()) {
        throw std::invalid_argument("merge_subtokens: matrix size does not match non-special tokens");
    }

    const std::size_t n_words = members.size();
    WordLevelAttention out{LayerMatrices(token_level.n_layers(), n_words)};
    for (std::size_t l = 0; l < token_level.n_layers(); ++l) {
        for (std::size_t u = 0; u < n_words; ++u) {
            for (std::size_t v = 0; v < n_words; ++v) {
                double sum = 0.0;
                for (std::size_t i : members[u]) {
                    for (std::size_t j : members[v]) sum += token_level.at(l, i, j);
                }
                out.matrices.at(l, u, v) =
                    sum / static_cast<double>(members[u].size() * members[v].size());
            }
        }
    }
    return out;
}

std::optional<std::size_t> select_attended_word(std::span<const double> row, std::size_t self_index) {
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (j == self_index) continue;
        if (!best || row[j] > row[*best]) best = j;
    }
    return best;
}

LayerCategoryCounts& LayerCategoryCounts::operator+=(const LayerCategoryCounts& other) {
    if (selections.empty()) selections.resize(other.selections.size(), CategoryCounts{});
    if (other.selections.size() != selections.size()) {
        throw std::invalid_argument("LayerCategoryCounts: layer count mismatch");
    }
    for (std::size_t l = 0; l < selections.size(); ++l) {
        for (std::size_t c = 0; c < kCategoryCount; ++c) selections[l][c] += other.selections[l][c];
    }
    for (std::size_t c = 0; c < kCategoryCount; ++c) occurrences[c] += other.occurrences[c];
    n_selections += other.n_selections;
    skipped_words += other.skipped_words;
    return *this;
}

LayerCategoryCounts tally_record(const WordLevelAttention& word_attn, const SentenceRecord& record,
                                 const CategoryMap& map) {
    const std::size_t n_words = word_attn.n_words();
    if (record.pos_tags.size() != n_words) {
        throw std::invalid_argument("tally_record: pos_tags length differs from word count");
    }
    std::vector<LexicalCategory> cats(n_words);
    for (std::size_t w = 0; w < n_words; ++w) cats[w] = map_category(map, record.pos_tags[w]);

    LayerCategoryCounts out(word_attn.n_layers());
    for (auto c : cats) ++count_of(out.occurrences, c);

    if (n_words < 2) {
        out.skipped_words = n_words * word_attn.n_layers();
        return out;
    }
    out.n_selections = n_words;
    for (std::size_t l = 0; l < word_attn.n_layers(); ++l) {
        for (std::size_t u = 0; u < n_words; ++u) {
            const auto target = select_attended_word(word_attn.matrices.row(l, u), u);
            ++count_of(out.selections[l], cats[*target]);
        }
    }
    return out;
}

CategoryRatios compute_ratios(const LayerCategoryCounts& counts) {
    const auto occ_con = static_cast<double>(count_of(counts.occurrences, LexicalCategory::Content));
    const auto occ_fun = static_cast<double>(count_of(counts.occurrences, LexicalCategory::Function));
    const double occ_total = occ_con + occ_fun;

    CategoryRatios out;
    out.proportion.resize(counts.n_layers());
    out.lift.resize(counts.n_layers());
    for (std::size_t l = 0; l < counts.n_layers(); ++l) {
        const auto con = static_cast<double>(count_of(counts.selections[l], LexicalCategory::Content));
        const auto fun = static_cast<double>(count_of(counts.selections[l], LexicalCategory::Function));
        const double total = con + fun;
        if (total == 0.0 || occ_total == 0.0) {
            throw AnalysisError("empty corpus for measure: layer " + std::to_string(l + 1) +
                                " has no content or function selections");
        }
        CategoryPair& p = out.proportion[l];
        p.content = con / total;
        p.function = fun / total;
        // A category with no occurrences can never be selected; its lift is 0.
        CategoryPair& lift = out.lift[l];
        lift.content = occ_con > 0.0 ? p.content / (occ_con / occ_total) : 0.0;
        lift.function = occ_fun > 0.0 ? p.function / (occ_fun / occ_total) : 0.0;
    }
    return out;
}

RecordOutcome analyze_record(const BundleEntry& entry, const BundleHeader& header,
                             const CategoryMap& map) {
    const SentenceRecord& rec = entry.record;
    if (auto problems = record_structure_problems(rec); !problems.empty()) {
        return SkippedRecord{rec.id, "malformed record: " + problems.front()};
    }
    const AttentionTensor& att = entry.attention;
    if (att.n_layers() != header.n_layers || att.n_heads() != header.n_heads ||
        att.seq_len() != rec.seq_len) {
        return SkippedRecord{rec.id, "attention shape does not match header"};
    }
    try {
        const LayerMatrices averaged = mean_over_heads(att);
        const LayerMatrices kept = exclude_special_tokens(averaged, rec);
        const WordLevelAttention words = merge_subtokens(kept, rec);
        if (words.n_words() < 2) return SkippedRecord{rec.id, "single word"};
        return tally_record(words, rec, map);
    } catch (const RecordSkipped& e) {
        return SkippedRecord{rec.id, e.what()};
    }
}

namespace {

class Accumulator {
public:
    Accumulator(const BundleHeader& header, const CategoryMap& map, const AnalyzeOptions& options)
        : header_(header), map_(map), options_(options), totals_(header.n_layers) {}

    // Outcomes are folded in batch order, so the totals do not depend on
    // how the batch was split across threads.
    void consume(std::span<const BundleEntry> batch) {
        std::vector<RecordOutcome> outcomes(batch.size());
        const std::size_t jobs = std::max<std::size_t>(1, std::min(options_.jobs, batch.size()));
        auto work = [&](std::size_t first) {
            for (std::size_t i = first; i < batch.size(); i += jobs) {
                outcomes[i] = analyze_record(batch[i], header_, map_);
            }
        };
        if (jobs == 1) {
            work(0);
        } else {
            std::vector<std::jthread> pool;
            pool.reserve(jobs);
            for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(work, t);
        }
        for (auto& o : outcomes) {
            if (auto* c = std::get_if<LayerCategoryCounts>(&o)) {
                totals_ += *c;
            } else {
                skipped_.push_back(std::get<SkippedRecord>(std::move(o)));
            }
        }
    }

    AnalysisResult finish() {
        AnalysisResult r;
        r.model_id = header_.model_id;
        r.n_layers = header_.n_layers;
        r.n_heads = header_.n_heads;
        r.measure = options_.measure;
        r.ratios = compute_ratios(totals_);
        r.counts = std::move(totals_);
        std::sort(skipped_.begin(), skipped_.end());
        r.skipped = std::move(skipped_);
        return r;
    }

private:
    const BundleHeader& header_;
    const CategoryMap& map_;
    AnalyzeOptions options_;
    LayerCategoryCounts totals_;
    std::vector<SkippedRecord> skipped_;
};

}  // namespace

AnalysisResult analyze_bundle(const std::filesystem::path& source, const CategoryMap& map,
                              const AnalyzeOptions& options) {
    BundleReader reader(source);
    const BundleHeader header = reader.header();
    Accumulator acc(header, map, options);
    const std::size_t batch_size = std::max<std::size_t>(256, 32 * options.jobs);
    std::vector<BundleEntry> batch;
    batch.reserve(batch_size);
    while (auto e = reader.next()) {
        batch.push_back(std::move(*e));
        if (batch.size() == batch_size) {
            acc.consume(batch);
            batch.clear();
        }
    }
    if (!batch.empty()) acc.consume(batch);
    return acc.finish();
}

AnalysisResult analyze_bundle(const Bundle& bundle, const CategoryMap& map,
                              const AnalyzeOptions& options) {
    Accumulator acc(bundle.header, map, options);
    acc.consume(bundle.entries);
    return acc.finish();
}

}  // namespace lexattn
