#include "doctest.h"
#include "lexattn/lexcat.hpp"
#include "test_util.hpp"

using namespace lexattn;

TEST_CASE("default map carries the closed- and open-class tag tables") {
    const auto map = default_category_map();
    CHECK(map.function_tags().size() == 13);
    CHECK(map.content_tags().size() == 21);
    CHECK(map.function_tags().count("DT") == 1);
    CHECK(map.content_tags().count("VBZ") == 1);
    for (const auto& t : map.function_tags()) CHECK(map.content_tags().count(t) == 0);
}

TEST_CASE("map_category lookups") {
    const auto map = default_category_map();
    CHECK(map_category(map, "IN") == LexicalCategory::Function);
    CHECK(map_category(map, "JJR") == LexicalCategory::Content);
    CHECK(map_category(map, "SYM") == LexicalCategory::Other);
    CHECK(map_category(map, "WP$") == LexicalCategory::Function);
    CHECK(map_category(map, "PRP$") == LexicalCategory::Content);
    CHECK(map_category(map, "nn") == LexicalCategory::Other);
    CHECK(map_category(map, "") == LexicalCategory::Other);
    CHECK(map_category(map, ".") == LexicalCategory::Other);
}

TEST_CASE("every default tag maps to a non-Other category") {
    const auto map = default_category_map();
    for (const auto& t : default_function_tags()) CHECK(map_category(map, t) == LexicalCategory::Function);
    for (const auto& t : default_content_tags()) CHECK(map_category(map, t) == LexicalCategory::Content);
}

TEST_CASE("override file") {
    TempDir dir;
    const auto path = dir.path() / "map.json";

    SUBCASE("small map") {
        std::ofstream(path) << R"({"function":["TO"],"content":["NN"]})";
        const auto map = load_category_map(path);
        CHECK(map.function_tags() == std::set<std::string>{"TO"});
        CHECK(map.content_tags() == std::set<std::string>{"NN"});
        CHECK(map_category(map, "DT") == LexicalCategory::Other);
    }
    SUBCASE("overlap is a configuration error naming the tag") {
        std::ofstream(path) << R"({"function":["NN","TO"],"content":["NN","VB"]})";
        try {
            load_category_map(path);
            FAIL("expected overlap error");
        } catch (const CategoryMapError& e) {
            CHECK(std::string(e.what()).find("NN") != std::string::npos);
            CHECK(std::string(e.what()).find("TO") == std::string::npos);
        }
    }
    SUBCASE("malformed JSON") {
        std::ofstream(path) << R"({"function": [)";
        CHECK_THROWS_AS(load_category_map(path), CategoryMapError);
    }
    SUBCASE("wrong shape") {
        std::ofstream(path) << R"({"function": "DT", "content": []})";
        CHECK_THROWS_AS(load_category_map(path), CategoryMapError);
    }
    SUBCASE("default map survives serialization") {
        std::ofstream(path) << category_map_to_json(default_category_map());
        CHECK(load_category_map(path) == default_category_map());
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_category_map(dir.path() / "absent.json"), CategoryMapError);
    }
}
