#include "promptlab/text.hpp"

#include "promptlab/rng.hpp"

#include <algorithm>
#include <cctype>

namespace promptlab {

std::vector<Span> merge_spans(std::vector<Span> spans) {
    if (spans.empty()) return spans;
    std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
        return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
    });
    std::vector<Span> merged;
    merged.push_back(spans.front());
    for (std::size_t i = 1; i < spans.size(); ++i) {
        if (spans[i].begin < merged.back().end) {
            merged.back().end = std::max(merged.back().end, spans[i].end);
        } else {
            merged.push_back(spans[i]);
        }
    }
    return merged;
}

bool any_span_overlaps(const std::vector<Span>& sorted_spans, const Span& probe) {
    for (const Span& s : sorted_spans) {
        if (s.begin >= probe.end) break;
        if (s.overlaps(probe)) return true;
    }
    return false;
}

namespace {

bool is_core_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c == '_';
}

} // namespace

std::vector<WordToken> tokenize_words(std::string_view text) {
    std::vector<WordToken> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_core_byte(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        ++i;
        while (i < text.size()) {
            const unsigned char c = static_cast<unsigned char>(text[i]);
            if (is_core_byte(c)) {
                ++i;
            } else if (c == '\'' && i + 1 < text.size() &&
                       is_core_byte(static_cast<unsigned char>(text[i + 1]))) {
                // apostrophe only counts inside a word (won't, it's)
                i += 2;
            } else {
                break;
            }
        }
        tokens.push_back({std::string(text.substr(begin, i - begin)), begin, i});
    }
    return tokens;
}

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            pending_space = true;
        }
    }
    return out;
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<Span> find_all(std::string_view haystack, std::string_view needle) {
    std::vector<Span> hits;
    if (needle.empty()) return hits;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
        hits.push_back({pos, pos + needle.size()});
        pos += 1; // allow overlapping starts; merge_spans dedups later
    }
    return hits;
}

std::string hex_hash(std::string_view text) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a(text);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

} // namespace promptlab
