#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lexattn/interchange.hpp"

namespace lexattn {

inline constexpr double kValueTolerance = 1e-4;
inline constexpr double kRowSumTolerance = 1e-2;
inline constexpr double kStrictRowSumTolerance = 1e-3;

struct Violation {
    std::string record_id;  // empty for bundle-level problems
    std::string kind;
    std::string message;

    std::string to_line() const;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

// Checks every bundle invariant and reports all violations found. Throws
// BundleError only when the bundle cannot be opened at all (missing
// directory or files, unreadable meta.json).
ValidationReport validate_bundle(const std::filesystem::path& source, bool strict);

// Record-level structural checks shared with the analysis path; returns an
// empty vector for a well-formed record.
std::vector<std::string> record_structure_problems(const SentenceRecord& record);

}  // namespace lexattn
