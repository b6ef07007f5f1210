#pragma once

// Penn Treebank tag -> lexical category.

#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lexattn {

enum class LexicalCategory { Content = 0, Function = 1, Other = 2 };

inline constexpr std::size_t kCategoryCount = 3;

const char* to_string(LexicalCategory c);

class CategoryMapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Immutable after construction. The two tag sets are always disjoint.
class CategoryMap {
public:
    // Throws CategoryMapError naming every tag present in both sets.
    CategoryMap(std::set<std::string> function_tags, std::set<std::string> content_tags);

    const std::set<std::string>& function_tags() const { return function_tags_; }
    const std::set<std::string>& content_tags() const { return content_tags_; }

    bool operator==(const CategoryMap&) const = default;

private:
    std::set<std::string> function_tags_;
    std::set<std::string> content_tags_;
};

// Closed-class tags (13) and open-class tags (21).
const std::vector<std::string>& default_function_tags();
const std::vector<std::string>& default_content_tags();

CategoryMap default_category_map();

// {"function": [...], "content": [...]}
CategoryMap load_category_map(const std::filesystem::path& path);
CategoryMap parse_category_map(std::string_view json_text);
std::string category_map_to_json(const CategoryMap& map);

// Exact, case-sensitive lookup; anything unlisted is Other.
LexicalCategory map_category(const CategoryMap& map, std::string_view tag);

}  // namespace lexattn
