#include "lexattn/lexcat.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lexattn {

using nlohmann::json;

const char* to_string(LexicalCategory c) {
    switch (c) {
        case LexicalCategory::Content: return "content";
        case LexicalCategory::Function: return "function";
        case LexicalCategory::Other: return "other";
    }
    return "other";
}

CategoryMap::CategoryMap(std::set<std::string> function_tags, std::set<std::string> content_tags)
    : function_tags_(std::move(function_tags)), content_tags_(std::move(content_tags)) {
    std::string overlap;
    for (const auto& t : function_tags_) {
        if (content_tags_.count(t)) {
            if (!overlap.empty()) overlap += ", ";
            overlap += t;
        }
    }
    if (!overlap.empty()) {
        throw CategoryMapError("tags listed as both function and content: " + overlap);
    }
}

const std::vector<std::string>& default_function_tags() {
    static const std::vector<std::string> tags = {
        "CC", "MD", "DT", "EX", "IN", "PDT", "POS", "TO", "WDT", "WP", "WP$", "WRB", "RP",
    };
    return tags;
}

const std::vector<std::string>& default_content_tags() {
    static const std::vector<std::string> tags = {
        "NN",  "NNS", "NNP", "NNPS", "CD",  "FW",  "JJ",  "JJR", "JJS", "PRP", "PRP$",
        "RB",  "RBR", "RBS", "VB",   "VBD", "VBG", "VBP", "VBZ", "VBN", "UH",
    };
    return tags;
}

CategoryMap default_category_map() {
    const auto& f = default_function_tags();
    const auto& c = default_content_tags();
    return CategoryMap({f.begin(), f.end()}, {c.begin(), c.end()});
}

CategoryMap parse_category_map(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw CategoryMapError(std::string("category map is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CategoryMapError("category map must be a JSON object");

    auto tag_set = [&](const char* key) {
        std::set<std::string> out;
        auto it = j.find(key);
        if (it == j.end()) {
            throw CategoryMapError(std::string("category map is missing \"") + key + "\"");
        }
        if (!it->is_array()) {
            throw CategoryMapError(std::string("\"") + key + "\" must be an array of strings");
        }
        for (const auto& v : *it) {
            if (!v.is_string()) {
                throw CategoryMapError(std::string("\"") + key + "\" must be an array of strings");
            }
            out.insert(v.get<std::string>());
        }
        return out;
    };
    return CategoryMap(tag_set("function"), tag_set("content"));
}

CategoryMap load_category_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CategoryMapError("cannot open category map " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_category_map(ss.str());
}

std::string category_map_to_json(const CategoryMap& map) {
    json j = {{"function", map.function_tags()}, {"content", map.content_tags()}};
    return j.dump(2);
}

LexicalCategory map_category(const CategoryMap& map, std::string_view tag) {
    const std::string key(tag);
    if (map.function_tags().count(key)) return LexicalCategory::Function;
    if (map.content_tags().count(key)) return LexicalCategory::Content;
    return LexicalCategory::Other;
}

}  // namespace lexattn
