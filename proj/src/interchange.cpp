#include "lexattn/interchange.hpp"

#include <bit>
#include <cstring>

#include "json.hpp"

namespace lexattn {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kMetaFile = "meta.json";
constexpr const char* kRecordsFile = "records.jsonl";
constexpr const char* kBlobFile = "attn.bin";

std::uint32_t load_le32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

void store_le32(std::uint32_t v, unsigned char* p) {
    p[0] = static_cast<unsigned char>(v & 0xff);
    p[1] = static_cast<unsigned char>((v >> 8) & 0xff);
    p[2] = static_cast<unsigned char>((v >> 16) & 0xff);
    p[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw std::invalid_argument(where + ": missing field '" + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument(where + ": field '" + key + "' has the wrong type");
    }
}

void check_entry_dims(const BundleHeader& header, const BundleEntry& entry) {
    const auto& rec = entry.record;
    const auto& att = entry.attention;
    auto fail = [&](const std::string& what) {
        throw BundleError(BundleErrc::dimension_mismatch, rec.id, what);
    };
    if (rec.tokens.size() != rec.seq_len) fail("tokens length differs from seq_len");
    if (rec.word_index.size() != rec.seq_len) fail("word_index length differs from seq_len");
    if (rec.pos_tags.size() != rec.words.size()) fail("pos_tags length differs from words");
    if (att.n_layers() != header.n_layers || att.n_heads() != header.n_heads ||
        att.seq_len() != rec.seq_len) {
        fail("attention tensor shape does not match header and seq_len");
    }
}

}  // namespace

const char* to_string(BundleErrc code) {
    switch (code) {
        case BundleErrc::missing_file: return "missing file";
        case BundleErrc::bad_version: return "unsupported format version";
        case BundleErrc::bad_header: return "bad header";
        case BundleErrc::malformed_record: return "malformed record";
        case BundleErrc::dimension_mismatch: return "dimension mismatch";
        case BundleErrc::truncated_blob: return "truncated blob";
        case BundleErrc::offset_overlap: return "offset overlap";
        case BundleErrc::offset_gap: return "offset gap";
        case BundleErrc::trailing_bytes: return "trailing bytes";
        case BundleErrc::io_error: return "I/O error";
    }
    return "unknown";
}

BundleError::BundleError(BundleErrc code, std::string record_id, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) +
                         (record_id.empty() ? "" : " in record '" + record_id + "'") + ": " +
                         message),
      code_(code),
      record_id_(std::move(record_id)) {}

AttentionTensor::AttentionTensor(std::size_t n_layers, std::size_t n_heads, std::size_t seq_len)
    : n_layers_(n_layers),
      n_heads_(n_heads),
      seq_len_(seq_len),
      values_(n_layers * n_heads * seq_len * seq_len, 0.0) {}

AttentionTensor::AttentionTensor(std::size_t n_layers, std::size_t n_heads, std::size_t seq_len,
                                 std::vector<double> values)
    : n_layers_(n_layers), n_heads_(n_heads), seq_len_(seq_len), values_(std::move(values)) {
    if (values_.size() != n_layers * n_heads * seq_len * seq_len) {
        throw std::invalid_argument("AttentionTensor: value count does not match shape");
    }
}

std::uint64_t expected_attn_bytes(const BundleHeader& header, std::size_t seq_len) {
    return std::uint64_t(header.n_layers) * header.n_heads * seq_len * seq_len * kScalarBytes;
}

BundleHeader parse_header_file(const fs::path& meta_path) {
    std::ifstream in(meta_path);
    if (!in) {
        throw BundleError(BundleErrc::missing_file, "", "cannot open " + meta_path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw BundleError(BundleErrc::bad_header, "", e.what());
    }
    BundleHeader h;
    try {
        if (!j.is_object()) throw std::invalid_argument("meta.json is not an object");
        h.format_version = required<std::string>(j, "format_version", "meta.json");
        h.model_id = required<std::string>(j, "model_id", "meta.json");
        h.n_layers = required<std::size_t>(j, "n_layers", "meta.json");
        h.n_heads = required<std::size_t>(j, "n_heads", "meta.json");
        h.scalar_type = required<std::string>(j, "scalar_type", "meta.json");
        h.byte_order = required<std::string>(j, "byte_order", "meta.json");
    } catch (const std::invalid_argument& e) {
        throw BundleError(BundleErrc::bad_header, "", e.what());
    }
    if (h.format_version != kFormatVersion) {
        throw BundleError(BundleErrc::bad_version, "",
                          "expected \"1\", found \"" + h.format_version + "\"");
    }
    if (h.n_layers == 0 || h.n_heads == 0) {
        throw BundleError(BundleErrc::bad_header, "", "n_layers and n_heads must be positive");
    }
    if (h.scalar_type != "f32" || h.byte_order != "little") {
        throw BundleError(BundleErrc::bad_header, "", "only little-endian f32 is supported");
    }
    return h;
}

SentenceRecord parse_record_line(const std::string& line, std::size_t line_no) {
    const std::string where = "records.jsonl line " + std::to_string(line_no);
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw BundleError(BundleErrc::malformed_record, "", where + ": " + e.what());
    }
    std::string id = j.is_object() && j.contains("id") && j["id"].is_string()
                         ? j["id"].get<std::string>()
                         : "";
    SentenceRecord r;
    try {
        if (!j.is_object()) throw std::invalid_argument(where + ": not a JSON object");
        r.id = required<std::string>(j, "id", where);
        r.text_a = required<std::string>(j, "text_a", where);
        if (auto it = j.find("text_b"); it != j.end() && !it->is_null()) {
            r.text_b = it->get<std::string>();
        }
        r.tokens = required<std::vector<std::string>>(j, "tokens", where);
        const auto& wi = j.at("word_index");
        if (!wi.is_array()) throw std::invalid_argument(where + ": word_index must be an array");
        r.word_index.reserve(wi.size());
        for (const auto& v : wi) {
            if (v.is_null()) {
                r.word_index.emplace_back(std::nullopt);
            } else if (v.is_number_integer()) {
                r.word_index.emplace_back(v.get<std::int64_t>());
            } else {
                throw std::invalid_argument(where + ": word_index entries must be integers or null");
            }
        }
        r.words = required<std::vector<std::string>>(j, "words", where);
        r.pos_tags = required<std::vector<std::string>>(j, "pos_tags", where);
        r.seq_len = required<std::size_t>(j, "seq_len", where);
        r.attn_offset = required<std::uint64_t>(j, "attn_offset", where);
        r.attn_bytes = required<std::uint64_t>(j, "attn_bytes", where);
    } catch (const std::invalid_argument& e) {
        throw BundleError(BundleErrc::malformed_record, id, e.what());
    } catch (const json::exception& e) {
        throw BundleError(BundleErrc::malformed_record, id, where + ": " + e.what());
    }
    return r;
}

std::string record_to_json_line(const SentenceRecord& r) {
    json wi = json::array();
    for (const auto& w : r.word_index) {
        wi.push_back(w ? json(*w) : json(nullptr));
    }
    json j = {
        {"id", r.id},
        {"text_a", r.text_a},
        {"text_b", r.text_b ? json(*r.text_b) : json(nullptr)},
        {"tokens", r.tokens},
        {"word_index", std::move(wi)},
        {"words", r.words},
        {"pos_tags", r.pos_tags},
        {"seq_len", r.seq_len},
        {"attn_offset", r.attn_offset},
        {"attn_bytes", r.attn_bytes},
    };
    return j.dump();
}

AttentionTensor decode_tensor(std::span<const unsigned char> bytes, const BundleHeader& header,
                              std::size_t seq_len) {
    const std::size_t n = header.n_layers * header.n_heads * seq_len * seq_len;
    if (bytes.size() != n * kScalarBytes) {
        throw std::invalid_argument("decode_tensor: byte count does not match shape");
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        values[i] = static_cast<double>(std::bit_cast<float>(load_le32(bytes.data() + 4 * i)));
    }
    return AttentionTensor(header.n_layers, header.n_heads, seq_len, std::move(values));
}

void write_bundle(const BundleHeader& header, std::span<const BundleEntry> entries,
                  const fs::path& destination) {
    if (entries.empty()) {
        throw std::invalid_argument("write_bundle: no records");
    }
    for (const auto& e : entries) check_entry_dims(header, e);

    std::error_code ec;
    fs::create_directories(destination, ec);
    if (ec) {
        throw BundleError(BundleErrc::io_error, "",
                          "cannot create " + destination.string() + ": " + ec.message());
    }

    auto open = [&](const char* name, std::ios::openmode mode) {
        std::ofstream out(destination / name, mode | std::ios::trunc);
        if (!out) {
            throw BundleError(BundleErrc::io_error, "",
                              "cannot write " + (destination / name).string());
        }
        return out;
    };

    {
        auto meta = open(kMetaFile, std::ios::out);
        json j = {
            {"format_version", header.format_version},
            {"model_id", header.model_id},
            {"n_layers", header.n_layers},
            {"n_heads", header.n_heads},
            {"scalar_type", header.scalar_type},
            {"byte_order", header.byte_order},
        };
        meta << j.dump(2) << '\n';
    }

    auto records = open(kRecordsFile, std::ios::out);
    auto blob = open(kBlobFile, std::ios::out | std::ios::binary);
    std::uint64_t offset = 0;
    std::vector<unsigned char> buf;
    for (const auto& e : entries) {
        SentenceRecord r = e.record;
        r.attn_offset = offset;
        r.attn_bytes = e.attention.byte_size();
        records << record_to_json_line(r) << '\n';

        const auto& values = e.attention.values();
        buf.resize(values.size() * kScalarBytes);
        for (std::size_t i = 0; i < values.size(); ++i) {
            store_le32(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])),
                       buf.data() + 4 * i);
        }
        blob.write(reinterpret_cast<const char*>(buf.data()),
                   static_cast<std::streamsize>(buf.size()));
        offset += r.attn_bytes;
    }
    records.flush();
    blob.flush();
    if (!records || !blob) {
        throw BundleError(BundleErrc::io_error, "", "write failed under " + destination.string());
    }
}

void write_bundle(const Bundle& bundle, const fs::path& destination) {
    write_bundle(bundle.header, bundle.entries, destination);
}

BundleReader::BundleReader(const fs::path& source) : source_(source) {
    for (const char* name : {kMetaFile, kRecordsFile, kBlobFile}) {
        if (!fs::is_regular_file(source / name)) {
            throw BundleError(BundleErrc::missing_file, "",
                              (source / name).string() + " does not exist");
        }
    }
    header_ = parse_header_file(source / kMetaFile);
    records_.open(source / kRecordsFile);
    blob_.open(source / kBlobFile, std::ios::binary);
    if (!records_ || !blob_) {
        throw BundleError(BundleErrc::io_error, "", "cannot open bundle files in " + source.string());
    }
    blob_size_ = fs::file_size(source / kBlobFile);
}

std::optional<BundleEntry> BundleReader::next() {
    if (done_) return std::nullopt;
    std::string line;
    while (std::getline(records_, line)) {
        ++line_no_;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        SentenceRecord rec = parse_record_line(line, line_no_);
        if (rec.attn_offset < expected_offset_) {
            throw BundleError(BundleErrc::offset_overlap, rec.id,
                              "attn_offset " + std::to_string(rec.attn_offset) +
                                  " overlaps the previous record ending at " +
                                  std::to_string(expected_offset_));
        }
        if (rec.attn_offset > expected_offset_) {
            throw BundleError(BundleErrc::offset_gap, rec.id,
                              "attn_offset " + std::to_string(rec.attn_offset) +
                                  " leaves a gap after byte " + std::to_string(expected_offset_));
        }
        if (rec.attn_bytes != expected_attn_bytes(header_, rec.seq_len)) {
            throw BundleError(BundleErrc::dimension_mismatch, rec.id,
                              "attn_bytes " + std::to_string(rec.attn_bytes) +
                                  " does not equal n_layers*n_heads*seq_len^2*4");
        }
        if (rec.attn_offset + rec.attn_bytes > blob_size_) {
            throw BundleError(BundleErrc::truncated_blob, rec.id,
                              "needs bytes up to " +
                                  std::to_string(rec.attn_offset + rec.attn_bytes) +
                                  " but attn.bin has " + std::to_string(blob_size_));
        }

        std::vector<unsigned char> bytes(rec.attn_bytes);
        blob_.seekg(static_cast<std::streamoff>(rec.attn_offset));
        blob_.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!blob_) {
            throw BundleError(BundleErrc::io_error, rec.id, "short read from attn.bin");
        }
        expected_offset_ = rec.attn_offset + rec.attn_bytes;
        AttentionTensor att = decode_tensor(bytes, header_, rec.seq_len);
        return BundleEntry{std::move(rec), std::move(att)};
    }
    done_ = true;
    if (expected_offset_ != blob_size_) {
        throw BundleError(BundleErrc::trailing_bytes, "",
                          "attn.bin has " + std::to_string(blob_size_ - expected_offset_) +
                              " bytes not owned by any record");
    }
    return std::nullopt;
}

BundleReader read_bundle(const fs::path& source) { return BundleReader(source); }

Bundle load_bundle(const fs::path& source) {
    BundleReader reader(source);
    Bundle b;
    b.header = reader.header();
    while (auto e = reader.next()) b.entries.push_back(std::move(*e));
    return b;
}

}  // namespace lexattn
