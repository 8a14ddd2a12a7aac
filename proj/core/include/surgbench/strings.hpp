#pragma once
// Small string helpers shared by the parser, pipeline, and metrics code.
// All case folding is ASCII-only: clinical keywords are ASCII, and folding
// multibyte sequences would corrupt them.

#include <string>
#include <string_view>
#include <vector>

namespace surgbench {

std::string fold_case(std::string_view s);

// Collapses runs of whitespace (space, tab, newline, CR) to single spaces
// and trims the ends.
std::string collapse_whitespace(std::string_view s);

std::string trim(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

// Tokenizer used by the text-overlap metrics: lowercase, strip punctuation,
// split on whitespace.
std::vector<std::string> word_tokens(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

// True when [pos, pos+len) in `s` is bounded by non-alphanumeric characters
// (or the string ends). Used for vocabulary scans so "clip" does not match
// inside "clipper".
bool word_bounded(std::string_view s, std::size_t pos, std::size_t len);

std::string replace_all(std::string_view s, std::string_view from, std::string_view to);

bool contains(std::string_view haystack, std::string_view needle);

}  // namespace surgbench
