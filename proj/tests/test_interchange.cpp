#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lexattn/interchange.hpp"
#include "lexattn/validate.hpp"
#include "test_util.hpp"

using namespace lexattn;
namespace fs = std::filesystem;

namespace {

BundleEntry single_entry(std::string id, std::size_t layers, std::size_t heads, std::size_t seq) {
    BundleEntry e;
    e.record.id = std::move(id);
    e.record.text_a = "x";
    for (std::size_t i = 0; i < seq; ++i) {
        e.record.tokens.push_back("t" + std::to_string(i));
        e.record.word_index.emplace_back(static_cast<std::int64_t>(i));
        e.record.words.push_back("t" + std::to_string(i));
        e.record.pos_tags.push_back("NN");
    }
    e.record.seq_len = seq;
    e.attention = AttentionTensor(layers, heads, seq);
    for (std::size_t l = 0; l < layers; ++l)
        for (std::size_t h = 0; h < heads; ++h)
            for (std::size_t i = 0; i < seq; ++i)
                for (std::size_t j = 0; j < seq; ++j) e.attention.at(l, h, i, j) = 1.0 / double(seq);
    return e;
}

BundleHeader header(std::size_t layers, std::size_t heads) {
    BundleHeader h;
    h.model_id = "unit";
    h.n_layers = layers;
    h.n_heads = heads;
    return h;
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
    std::ofstream out(p, std::ios::trunc);
    for (const auto& l : lines) out << l << '\n';
}

template <typename F>
BundleErrc error_code_of(F&& f) {
    try {
        f();
    } catch (const BundleError& e) {
        return e.code();
    }
    FAIL("expected a BundleError");
    return BundleErrc::io_error;
}

}  // namespace

TEST_CASE("one tiny record produces a 16-byte blob") {
    TempDir dir;
    std::vector<BundleEntry> entries{single_entry("r0", 1, 1, 2)};
    write_bundle(header(1, 1), entries, dir.path());
    CHECK(fs::file_size(dir.path() / "attn.bin") == 16);
    CHECK(fs::exists(dir.path() / "meta.json"));
    CHECK(fs::exists(dir.path() / "records.jsonl"));
    CHECK(std::distance(fs::directory_iterator(dir.path()), fs::directory_iterator{}) == 3);
}

TEST_CASE("offsets are assigned contiguously") {
    TempDir dir;
    std::vector<BundleEntry> entries{single_entry("a", 2, 2, 3), single_entry("b", 2, 2, 4)};
    write_bundle(header(2, 2), entries, dir.path());
    auto bundle = load_bundle(dir.path());
    REQUIRE(bundle.entries.size() == 2);
    CHECK(bundle.entries[0].record.attn_offset == 0);
    CHECK(bundle.entries[1].record.attn_offset == 144);
    CHECK(bundle.entries[1].record.attn_bytes == 2 * 2 * 4 * 4 * 4);
}

TEST_CASE("write then read returns the same bundle") {
    TempDir dir;
    const Bundle original = gen_fixture(11, 25, {3, 2, 9});
    write_bundle(original, dir.path());
    CHECK(load_bundle(dir.path()) == original);
}

TEST_CASE("round trip holds for many seeds and shapes") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        TempDir dir;
        const Bundle original =
            gen_fixture(seed, 1 + seed % 5, {1 + seed % 4, 1 + (seed / 4) % 4, 4 + seed % 6});
        write_bundle(original, dir.path());
        CHECK(load_bundle(dir.path()) == original);
    }
}

TEST_CASE("write rejects dimension mismatches by record id") {
    TempDir dir;
    std::vector<BundleEntry> entries{single_entry("ok", 1, 1, 2), single_entry("bad", 1, 2, 2)};
    try {
        write_bundle(header(1, 1), entries, dir.path());
        FAIL("expected dimension error");
    } catch (const BundleError& e) {
        CHECK(e.code() == BundleErrc::dimension_mismatch);
        CHECK(e.record_id() == "bad");
    }
    CHECK_THROWS_AS(write_bundle(header(1, 1), std::vector<BundleEntry>{}, dir.path()),
                    std::invalid_argument);
}

TEST_CASE("unwritable destination is an I/O error") {
    TempDir dir;
    std::ofstream(dir.path() / "file") << "x";
    std::vector<BundleEntry> entries{single_entry("r", 1, 1, 2)};
    CHECK(error_code_of([&] { write_bundle(header(1, 1), entries, dir.path() / "file" / "sub"); }) ==
          BundleErrc::io_error);
}

TEST_CASE("reader reports distinct errors") {
    TempDir dir;
    write_bundle(gen_fixture(3, 4, {2, 2, 6}), dir.path());

    SUBCASE("missing file") {
        fs::remove(dir.path() / "records.jsonl");
        CHECK(error_code_of([&] { load_bundle(dir.path()); }) == BundleErrc::missing_file);
    }
    SUBCASE("wrong version") {
        std::ifstream in(dir.path() / "meta.json");
        std::stringstream ss;
        ss << in.rdbuf();
        in.close();
        std::string meta = ss.str();
        meta.replace(meta.find("\"1\""), 3, "\"2\"");
        std::ofstream(dir.path() / "meta.json", std::ios::trunc) << meta;
        CHECK(error_code_of([&] { load_bundle(dir.path()); }) == BundleErrc::bad_version);
    }
    SUBCASE("truncated blob names the record") {
        const auto size = fs::file_size(dir.path() / "attn.bin");
        fs::resize_file(dir.path() / "attn.bin", size - 1);
        try {
            load_bundle(dir.path());
            FAIL("expected truncation");
        } catch (const BundleError& e) {
            CHECK(e.code() == BundleErrc::truncated_blob);
            CHECK(e.record_id() == "fx3-3");
        }
    }
    SUBCASE("overlapping offsets") {
        auto lines = read_lines(dir.path() / "records.jsonl");
        auto rec = parse_record_line(lines[2], 3);
        rec.attn_offset -= 4;
        lines[2] = record_to_json_line(rec);
        write_lines(dir.path() / "records.jsonl", lines);
        CHECK(error_code_of([&] { load_bundle(dir.path()); }) == BundleErrc::offset_overlap);
    }
    SUBCASE("trailing bytes") {
        std::ofstream(dir.path() / "attn.bin", std::ios::app | std::ios::binary) << "abcd";
        CHECK(error_code_of([&] { load_bundle(dir.path()); }) == BundleErrc::trailing_bytes);
    }
}

TEST_CASE("reader is forward-only and yields records in file order") {
    TempDir dir;
    const Bundle b = gen_fixture(5, 6, {1, 1, 5});
    write_bundle(b, dir.path());
    auto reader = read_bundle(dir.path());
    CHECK(reader.header() == b.header);
    std::size_t i = 0;
    while (auto e = reader.next()) {
        CHECK(e->record.id == b.entries[i].record.id);
        ++i;
    }
    CHECK(i == b.entries.size());
    CHECK_FALSE(reader.next().has_value());
}

TEST_CASE("sentinel word_index values are accepted") {
    SentenceRecord r;
    r.id = "s";
    r.tokens = {"[CLS]", "a", "##b", "c", "[SEP]"};
    r.word_index = {std::nullopt, 0, 0, 1, std::nullopt};
    r.words = {"ab", "c"};
    r.pos_tags = {"NN", "DT"};
    r.seq_len = 5;
    CHECK(record_structure_problems(r).empty());
    const auto parsed = parse_record_line(record_to_json_line(r), 1);
    CHECK(parsed == r);
}

TEST_CASE("validator accepts a clean fixture in both modes") {
    TempDir dir;
    write_bundle(gen_fixture(21, 40, {3, 3, 10}), dir.path());
    CHECK(validate_bundle(dir.path(), false).ok());
    CHECK(validate_bundle(dir.path(), true).ok());
}

TEST_CASE("validator flags a row summing to one half") {
    TempDir dir;
    Bundle b = gen_fixture(8, 3, {2, 2, 6});
    auto row = b.entries[1].attention.row(1, 0, 2);
    for (auto& v : row) v *= 0.5;
    write_bundle(b, dir.path());
    const auto report = validate_bundle(dir.path(), false);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].kind == "row stochasticity");
    CHECK(report.violations[0].record_id == b.entries[1].record.id);
}

TEST_CASE("strict mode tightens the row-sum tolerance") {
    TempDir dir;
    Bundle b = gen_fixture(8, 2, {1, 1, 5});
    auto row = b.entries[0].attention.row(0, 0, 1);
    row[0] += 0.005;
    write_bundle(b, dir.path());
    CHECK(validate_bundle(dir.path(), false).ok());
    CHECK(validate_bundle(dir.path(), true).violations.size() == 1);
}

TEST_CASE("validator flags a word with no subtokens") {
    TempDir dir;
    Bundle b = gen_fixture(2, 2, {1, 1, 6});
    auto& rec = b.entries[0].record;
    rec.words.push_back("ghost");
    rec.pos_tags.push_back("NN");
    write_bundle(b, dir.path());
    const auto report = validate_bundle(dir.path(), false);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].kind == "structure");
    CHECK(report.violations[0].message.find("owns no subtoken") != std::string::npos);
}

TEST_CASE("validator reports truncation, overlap and duplicates as data") {
    TempDir dir;
    write_bundle(gen_fixture(4, 5, {2, 1, 6}), dir.path());

    SUBCASE("truncated") {
        fs::resize_file(dir.path() / "attn.bin", fs::file_size(dir.path() / "attn.bin") - 1);
        const auto report = validate_bundle(dir.path(), false);
        REQUIRE(report.violations.size() == 1);
        CHECK(report.violations[0].kind == "truncated blob");
    }
    SUBCASE("overlap") {
        auto lines = read_lines(dir.path() / "records.jsonl");
        auto rec = parse_record_line(lines[3], 4);
        rec.attn_offset -= 8;
        lines[3] = record_to_json_line(rec);
        write_lines(dir.path() / "records.jsonl", lines);
        const auto report = validate_bundle(dir.path(), false);
        REQUIRE_FALSE(report.ok());
        CHECK(report.violations[0].kind == "offset overlap");
        CHECK(report.violations[0].record_id == rec.id);
    }
    SUBCASE("duplicate id") {
        auto lines = read_lines(dir.path() / "records.jsonl");
        auto first = parse_record_line(lines[0], 1);
        auto second = parse_record_line(lines[1], 2);
        second.id = first.id;
        lines[1] = record_to_json_line(second);
        write_lines(dir.path() / "records.jsonl", lines);
        const auto report = validate_bundle(dir.path(), false);
        REQUIRE(report.violations.size() == 1);
        CHECK(report.violations[0].kind == "duplicate id");
    }
    SUBCASE("missing directory throws") {
        CHECK(error_code_of([&] { validate_bundle(dir.path() / "nope", false); }) ==
              BundleErrc::missing_file);
    }
}

TEST_CASE("gen_fixture is deterministic and well formed") {
    const Bundle a = gen_fixture(7, 20, {2, 3, 8});
    const Bundle b = gen_fixture(7, 20, {2, 3, 8});
    CHECK(a == b);
    CHECK_FALSE(a == gen_fixture(8, 20, {2, 3, 8}));

    TempDir d1, d2;
    write_bundle(a, d1.path());
    write_bundle(b, d2.path());
    for (const char* f : {"meta.json", "records.jsonl", "attn.bin"}) {
        CHECK(slurp(d1.path() / f) == slurp(d2.path() / f));
    }

    for (const auto& e : a.entries) {
        CHECK(record_structure_problems(e.record).empty());
        CHECK(e.record.seq_len <= 8);
        for (std::size_t l = 0; l < 2; ++l)
            for (std::size_t h = 0; h < 3; ++h)
                for (std::size_t i = 0; i < e.record.seq_len; ++i) {
                    double sum = 0.0;
                    for (double v : e.attention.row(l, h, i)) {
                        CHECK(v > 0.0);
                        CHECK(static_cast<double>(static_cast<float>(v)) == v);
                        sum += v;
                    }
                    CHECK(std::abs(sum - 1.0) <= 1e-9);
                }
    }
}

TEST_CASE("gen_fixture preconditions") {
    CHECK_THROWS_AS(gen_fixture(1, 0, {1, 1, 4}), std::invalid_argument);
    CHECK_THROWS_AS(gen_fixture(1, 1, {0, 1, 4}), std::invalid_argument);
    CHECK_THROWS_AS(gen_fixture(1, 1, {1, 1, 3}), std::invalid_argument);
}
