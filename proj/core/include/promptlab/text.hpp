#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace promptlab {

/// Half-open byte range [begin, end) into some text.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool overlaps(const Span& other) const noexcept {
        return begin < other.end && other.begin < end;
    }
    bool contains(std::size_t pos) const noexcept { return pos >= begin && pos < end; }
    std::size_t size() const noexcept { return end - begin; }

    friend bool operator==(const Span&, const Span&) = default;
};

/// Sorts and merges overlapping spans into a disjoint ascending list.
std::vector<Span> merge_spans(std::vector<Span> spans);

bool any_span_overlaps(const std::vector<Span>& sorted_spans, const Span& probe);

/// Word token with its byte range in the source text. Words are maximal runs of
/// [A-Za-z0-9_'] so that surface labels like "not_equivalent" stay one token.
struct WordToken {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
};

std::vector<WordToken> tokenize_words(std::string_view text);

/// Lowercases, maps every non-alphanumeric byte to a space, collapses runs of
/// spaces and trims. The single normalization used by output parsing and
/// exact-match scoring.
std::string normalize_text(std::string_view text);

std::string to_lower(std::string_view text);

/// Finds every occurrence of `needle` in `haystack` (byte-wise, possibly overlapping
/// starts are not needed here: non-overlapping scan from left).
std::vector<Span> find_all(std::string_view haystack, std::string_view needle);

std::string hex_hash(std::string_view text);

} // namespace promptlab
