#include "lexattn/validate.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace lexattn {

namespace fs = std::filesystem;

std::string Violation::to_line() const {
    return (record_id.empty() ? std::string("<bundle>") : record_id) + ": " + kind + ": " + message;
}

std::vector<std::string> record_structure_problems(const SentenceRecord& r) {
    std::vector<std::string> out;
    if (r.seq_len == 0) out.push_back("seq_len must be positive");
    if (r.tokens.size() != r.seq_len) out.push_back("tokens length differs from seq_len");
    if (r.word_index.size() != r.seq_len) out.push_back("word_index length differs from seq_len");
    if (r.pos_tags.size() != r.words.size()) out.push_back("pos_tags and words differ in length");

    const auto n_words = static_cast<std::int64_t>(r.words.size());
    std::int64_t prev = -1;
    std::vector<bool> seen(r.words.size(), false);
    bool range_ok = true;
    for (const auto& w : r.word_index) {
        if (!w) continue;
        if (*w < 0 || *w >= n_words) {
            range_ok = false;
            out.push_back("word_index value " + std::to_string(*w) + " outside [0, " +
                          std::to_string(n_words) + ")");
            continue;
        }
        if (*w < prev) {
            out.push_back("word_index decreases from " + std::to_string(prev) + " to " +
                          std::to_string(*w));
        }
        prev = *w;
        seen[static_cast<std::size_t>(*w)] = true;
    }
    if (range_ok) {
        for (std::size_t i = 0; i < seen.size(); ++i) {
            if (!seen[i]) out.push_back("word " + std::to_string(i) + " owns no subtoken");
        }
    }
    return out;
}

ValidationReport validate_bundle(const fs::path& source, bool strict) {
    if (!fs::is_directory(source)) {
        throw BundleError(BundleErrc::missing_file, "", source.string() + " is not a directory");
    }
    for (const char* name : {"meta.json", "records.jsonl", "attn.bin"}) {
        if (!fs::is_regular_file(source / name)) {
            throw BundleError(BundleErrc::missing_file, "", (source / name).string() + " does not exist");
        }
    }

    ValidationReport report;
    auto add = [&](std::string id, std::string kind, std::string msg) {
        report.violations.push_back({std::move(id), std::move(kind), std::move(msg)});
    };

    BundleHeader header;
    try {
        header = parse_header_file(source / "meta.json");
    } catch (const BundleError& e) {
        if (e.code() == BundleErrc::missing_file) throw;
        add("", to_string(e.code()), e.what());
        return report;
    }

    std::ifstream records(source / "records.jsonl");
    std::ifstream blob(source / "attn.bin", std::ios::binary);
    const std::uint64_t blob_size = fs::file_size(source / "attn.bin");
    const double row_tol = strict ? kStrictRowSumTolerance : kRowSumTolerance;

    std::set<std::string> ids;
    std::uint64_t prev_end = 0;
    std::size_t line_no = 0;
    std::size_t n_records = 0;
    std::string line;
    std::vector<unsigned char> bytes;
    while (std::getline(records, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++n_records;

        SentenceRecord rec;
        try {
            rec = parse_record_line(line, line_no);
        } catch (const BundleError& e) {
            add(e.record_id(), to_string(e.code()), e.what());
            continue;
        }
        if (!ids.insert(rec.id).second) add(rec.id, "duplicate id", "id appears more than once");
        for (auto& p : record_structure_problems(rec)) add(rec.id, "structure", std::move(p));

        if (rec.attn_offset < prev_end) {
            add(rec.id, to_string(BundleErrc::offset_overlap),
                "attn_offset " + std::to_string(rec.attn_offset) +
                    " overlaps the previous record ending at " + std::to_string(prev_end));
        } else if (rec.attn_offset > prev_end) {
            add(rec.id, to_string(BundleErrc::offset_gap),
                "attn_offset " + std::to_string(rec.attn_offset) + " leaves a gap after byte " +
                    std::to_string(prev_end));
        }
        prev_end = rec.attn_offset + rec.attn_bytes;

        if (rec.attn_bytes != expected_attn_bytes(header, rec.seq_len)) {
            add(rec.id, to_string(BundleErrc::dimension_mismatch),
                "attn_bytes " + std::to_string(rec.attn_bytes) + " but shape requires " +
                    std::to_string(expected_attn_bytes(header, rec.seq_len)));
            continue;
        }
        if (rec.attn_offset + rec.attn_bytes > blob_size) {
            add(rec.id, to_string(BundleErrc::truncated_blob),
                "needs bytes up to " + std::to_string(rec.attn_offset + rec.attn_bytes) +
                    " but attn.bin has " + std::to_string(blob_size));
            continue;
        }
        if (rec.seq_len == 0) continue;

        bytes.resize(rec.attn_bytes);
        blob.clear();
        blob.seekg(static_cast<std::streamoff>(rec.attn_offset));
        blob.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!blob) {
            add(rec.id, to_string(BundleErrc::io_error), "short read from attn.bin");
            continue;
        }
        const AttentionTensor att = decode_tensor(bytes, header, rec.seq_len);

        std::size_t out_of_range = 0;
        for (double v : att.values()) {
            if (!(v >= -kValueTolerance && v <= 1.0 + kValueTolerance)) ++out_of_range;
        }
        if (out_of_range > 0) {
            add(rec.id, "value range",
                std::to_string(out_of_range) + " scalar(s) outside [0, 1]");
        }
        for (std::size_t l = 0; l < header.n_layers; ++l) {
            for (std::size_t h = 0; h < header.n_heads; ++h) {
                for (std::size_t i = 0; i < rec.seq_len; ++i) {
                    double sum = 0.0;
                    for (double v : att.row(l, h, i)) sum += v;
                    if (!(std::abs(sum - 1.0) <= row_tol)) {
                        add(rec.id, "row stochasticity",
                            "layer " + std::to_string(l + 1) + " head " + std::to_string(h + 1) +
                                " row " + std::to_string(i) + " sums to " + std::to_string(sum));
                    }
                }
            }
        }
    }

    if (n_records == 0) add("", "empty bundle", "records.jsonl contains no records");
    if (prev_end < blob_size) {
        add("", to_string(BundleErrc::trailing_bytes),
            std::to_string(blob_size - prev_end) + " bytes of attn.bin are not owned by any record");
    }
    return report;
}

}  // namespace lexattn
