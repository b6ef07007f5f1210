#pragma once

// On-disk attention bundle: meta.json + records.jsonl + attn.bin.
//
// attn.bin holds every record's tensor back to back as little-endian f32
// scalars in [layer][head][row][col] order. records.jsonl carries one
// SentenceRecord per line whose attn_offset/attn_bytes partition the blob.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lexattn {

inline constexpr const char* kFormatVersion = "1";
inline constexpr std::size_t kScalarBytes = 4;

struct BundleHeader {
    std::string format_version = kFormatVersion;
    std::string model_id;
    std::size_t n_layers = 0;
    std::size_t n_heads = 0;
    std::string scalar_type = "f32";
    std::string byte_order = "little";

    bool operator==(const BundleHeader&) const = default;
};

// nullopt marks a special token (classifier, separator, padding).
using WordId = std::optional<std::int64_t>;

struct SentenceRecord {
    std::string id;
    std::string text_a;
    std::optional<std::string> text_b;
    std::vector<std::string> tokens;
    std::vector<WordId> word_index;
    std::vector<std::string> words;
    std::vector<std::string> pos_tags;
    std::size_t seq_len = 0;
    std::uint64_t attn_offset = 0;
    std::uint64_t attn_bytes = 0;

    std::size_t n_words() const { return words.size(); }

    bool operator==(const SentenceRecord&) const = default;
};

// Dense (n_layers, n_heads, seq_len, seq_len) attention probabilities.
// Scalars are held in double; the bundle stores them as f32.
class AttentionTensor {
public:
    AttentionTensor() = default;
    AttentionTensor(std::size_t n_layers, std::size_t n_heads, std::size_t seq_len);
    AttentionTensor(std::size_t n_layers, std::size_t n_heads, std::size_t seq_len,
                    std::vector<double> values);

    std::size_t n_layers() const { return n_layers_; }
    std::size_t n_heads() const { return n_heads_; }
    std::size_t seq_len() const { return seq_len_; }

    double at(std::size_t layer, std::size_t head, std::size_t row, std::size_t col) const {
        return values_[index(layer, head, row, col)];
    }
    double& at(std::size_t layer, std::size_t head, std::size_t row, std::size_t col) {
        return values_[index(layer, head, row, col)];
    }

    // One (layer, head) row of length seq_len.
    std::span<const double> row(std::size_t layer, std::size_t head, std::size_t row) const {
        return {values_.data() + index(layer, head, row, 0), seq_len_};
    }
    std::span<double> row(std::size_t layer, std::size_t head, std::size_t row) {
        return {values_.data() + index(layer, head, row, 0), seq_len_};
    }

    const std::vector<double>& values() const { return values_; }
    std::size_t byte_size() const { return values_.size() * kScalarBytes; }

    bool operator==(const AttentionTensor&) const = default;

private:
    std::size_t index(std::size_t layer, std::size_t head, std::size_t row, std::size_t col) const {
        return ((layer * n_heads_ + head) * seq_len_ + row) * seq_len_ + col;
    }

    std::size_t n_layers_ = 0;
    std::size_t n_heads_ = 0;
    std::size_t seq_len_ = 0;
    std::vector<double> values_;
};

struct BundleEntry {
    SentenceRecord record;
    AttentionTensor attention;

    bool operator==(const BundleEntry&) const = default;
};

struct Bundle {
    BundleHeader header;
    std::vector<BundleEntry> entries;

    bool operator==(const Bundle&) const = default;
};

enum class BundleErrc {
    missing_file,
    bad_version,
    bad_header,
    malformed_record,
    dimension_mismatch,
    truncated_blob,
    offset_overlap,
    offset_gap,
    trailing_bytes,
    io_error,
};

const char* to_string(BundleErrc code);

class BundleError : public std::runtime_error {
public:
    BundleError(BundleErrc code, std::string record_id, const std::string& message);

    BundleErrc code() const { return code_; }
    const std::string& record_id() const { return record_id_; }

private:
    BundleErrc code_;
    std::string record_id_;
};

std::uint64_t expected_attn_bytes(const BundleHeader& header, std::size_t seq_len);

// Writes the three bundle files. attn_offset/attn_bytes are assigned here, so
// whatever the input records carry in those fields is ignored.
void write_bundle(const BundleHeader& header, std::span<const BundleEntry> entries,
                  const std::filesystem::path& destination);
void write_bundle(const Bundle& bundle, const std::filesystem::path& destination);

// Forward-only reader. Only one record's tensor is resident at a time.
class BundleReader {
public:
    explicit BundleReader(const std::filesystem::path& source);

    const BundleHeader& header() const { return header_; }
    std::uint64_t blob_size() const { return blob_size_; }

    // Next record in file order, nullopt after the last one.
    std::optional<BundleEntry> next();

private:
    std::filesystem::path source_;
    BundleHeader header_;
    std::ifstream records_;
    std::ifstream blob_;
    std::uint64_t blob_size_ = 0;
    std::uint64_t expected_offset_ = 0;
    std::size_t line_no_ = 0;
    bool done_ = false;
};

BundleReader read_bundle(const std::filesystem::path& source);

// Reads every record into memory.
Bundle load_bundle(const std::filesystem::path& source);

// Shared by the reader and the validator.
BundleHeader parse_header_file(const std::filesystem::path& meta_path);
SentenceRecord parse_record_line(const std::string& line, std::size_t line_no);
std::string record_to_json_line(const SentenceRecord& record);
AttentionTensor decode_tensor(std::span<const unsigned char> bytes, const BundleHeader& header,
                              std::size_t seq_len);

struct FixtureDims {
    std::size_t n_layers = 2;
    std::size_t n_heads = 2;
    std::size_t max_seq = 8;
};

// Deterministic synthetic bundle. Every attention row is a positive
// distribution on the 2^-24 grid that sums to exactly 1, so f32 storage is
// lossless.
Bundle gen_fixture(std::uint64_t seed, std::size_t n_records, FixtureDims dims);

}  // namespace lexattn
