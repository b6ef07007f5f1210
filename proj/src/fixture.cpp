#include <algorithm>
#include <array>
#include <random>

#include "lexattn/interchange.hpp"
#include "lexattn/lexcat.hpp"

namespace lexattn {

namespace {

// Draws are built from raw mt19937_64 output only, since the standard
// distributions differ between standard library implementations.
class FixtureRng {
public:
    explicit FixtureRng(std::uint64_t seed) : engine_(seed) {}

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
    std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

constexpr std::array<const char*, 16> kSyllables = {
    "ka", "lo", "mi", "ren", "sto", "va", "pel", "dun",
    "ti", "bor", "ne", "quo", "ash", "fin", "gal", "ux",
};

constexpr std::array<const char*, 9> kUnlistedTags = {
    ".", ",", ":", "SYM", "LS", "$", "``", "''", "-LRB-",
};

constexpr std::uint64_t kGridDenominator = std::uint64_t{1} << 24;

std::string draw_tag(FixtureRng& rng) {
    const double u = rng.unit();
    if (u < 0.1) return kUnlistedTags[rng.below(kUnlistedTags.size())];
    const auto& pool = u < 0.55 ? default_function_tags() : default_content_tags();
    return pool[rng.below(pool.size())];
}

// Appends words spanning exactly `budget` subtokens.
void fill_segment(FixtureRng& rng, std::size_t budget, SentenceRecord& rec, std::string& text) {
    while (budget > 0) {
        const std::size_t pieces = std::min(budget, rng.between(1, 3));
        const auto word_id = static_cast<std::int64_t>(rec.words.size());
        std::string word;
        for (std::size_t p = 0; p < pieces; ++p) {
            std::string syl = kSyllables[rng.below(kSyllables.size())];
            word += syl;
            rec.tokens.push_back(p == 0 ? syl : "##" + syl);
            rec.word_index.emplace_back(word_id);
        }
        if (!text.empty()) text += ' ';
        text += word;
        rec.words.push_back(std::move(word));
        rec.pos_tags.push_back(draw_tag(rng));
        budget -= pieces;
    }
}

void push_special(SentenceRecord& rec, const char* token) {
    rec.tokens.emplace_back(token);
    rec.word_index.emplace_back(std::nullopt);
}

// Positive weights snapped to multiples of 2^-24 with an exact unit sum.
void fill_row(FixtureRng& rng, std::span<double> row) {
    const std::size_t n = row.size();
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& x : w) {
        const double u = rng.unit();
        x = u * u * u + 1e-4;
        total += x;
    }
    const std::uint64_t spare = kGridDenominator - n;
    std::vector<std::uint64_t> k(n);
    std::vector<std::pair<double, std::size_t>> remainders(n);
    std::uint64_t assigned = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double share = w[j] / total * static_cast<double>(spare);
        const auto whole = static_cast<std::uint64_t>(share);
        k[j] = 1 + whole;
        assigned += k[j];
        remainders[j] = {share - static_cast<double>(whole), j};
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < kGridDenominator; ++r, ++assigned) {
        ++k[remainders[r % n].second];
    }
    for (std::size_t j = 0; j < n; ++j) {
        row[j] = static_cast<double>(k[j]) / static_cast<double>(kGridDenominator);
    }
}

}  // namespace

Bundle gen_fixture(std::uint64_t seed, std::size_t n_records, FixtureDims dims) {
    if (n_records == 0) throw std::invalid_argument("gen_fixture: n_records must be positive");
    if (dims.n_layers == 0 || dims.n_heads == 0) {
        throw std::invalid_argument("gen_fixture: layers and heads must be positive");
    }
    if (dims.max_seq < 4) throw std::invalid_argument("gen_fixture: max_seq must be at least 4");

    FixtureRng rng(seed);
    Bundle bundle;
    bundle.header.model_id = "fixture-seed-" + std::to_string(seed);
    bundle.header.n_layers = dims.n_layers;
    bundle.header.n_heads = dims.n_heads;

    std::uint64_t offset = 0;
    bundle.entries.reserve(n_records);
    for (std::size_t r = 0; r < n_records; ++r) {
        SentenceRecord rec;
        rec.id = "fx" + std::to_string(seed) + "-" + std::to_string(r);
        const std::size_t target = rng.between(3, dims.max_seq);
        const bool pair = target >= 5 && rng.unit() < 0.3;

        push_special(rec, "[CLS]");
        if (pair) {
            const std::size_t budget = target - 3;
            const std::size_t first = rng.between(1, budget - 1);
            std::string a, b;
            fill_segment(rng, first, rec, a);
            push_special(rec, "[SEP]");
            fill_segment(rng, budget - first, rec, b);
            push_special(rec, "[SEP]");
            rec.text_a = std::move(a);
            rec.text_b = std::move(b);
        } else {
            std::string a;
            fill_segment(rng, target - 2, rec, a);
            push_special(rec, "[SEP]");
            rec.text_a = std::move(a);
        }
        rec.seq_len = rec.tokens.size();

        AttentionTensor att(dims.n_layers, dims.n_heads, rec.seq_len);
        for (std::size_t l = 0; l < dims.n_layers; ++l) {
            for (std::size_t h = 0; h < dims.n_heads; ++h) {
                for (std::size_t i = 0; i < rec.seq_len; ++i) fill_row(rng, att.row(l, h, i));
            }
        }
        rec.attn_offset = offset;
        rec.attn_bytes = att.byte_size();
        offset += rec.attn_bytes;
        bundle.entries.push_back({std::move(rec), std::move(att)});
    }
    return bundle;
}

}  // namespace lexattn
