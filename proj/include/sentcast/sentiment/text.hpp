#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace sentcast::sentiment {

namespace detail {

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) {
        return false;
    }
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        char c = s[i];
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
        if (c != prefix[i]) {
            return false;
        }
    }
    return true;
}

inline bool is_removable(std::string_view token) {
    if (token.front() == '#' || token.front() == '@') {
        return true;
    }
    static constexpr std::array<std::string_view, 5> kLinkPrefixes{"http://", "https://", "t.co/", "www.",
                                                                    "pic.twitter.com/"};
    for (auto p : kLinkPrefixes) {
        if (starts_with_ci(token, p)) {
            return true;
        }
    }
    static constexpr std::array<std::string_view, 6> kMediaPlaceholders{"[image]", "[video]", "[photo]",
                                                                        "[gif]",   "[media]", "<media>"};
    for (auto p : kMediaPlaceholders) {
        if (token.size() == p.size() && starts_with_ci(token, p)) {
            return true;
        }
    }
    return false;
}

} // namespace detail

/// Strips links, hashtags, mentions and media placeholders, then collapses whitespace.
/// Works on whitespace-delimited tokens, so applying it twice changes nothing.
inline std::string clean_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && detail::is_space(text[i])) {
            ++i;
        }
        std::size_t start = i;
        while (i < text.size() && !detail::is_space(text[i])) {
            ++i;
        }
        if (start == i) {
            break;
        }
        std::string_view token = text.substr(start, i - start);
        if (detail::is_removable(token)) {
            continue;
        }
        if (!out.empty()) {
            out.push_back(' ');
        }
        out.append(token);
    }
    return out;
}

/// Lowercased word tokens. Letters, digits, apostrophes inside words and any
/// non-ASCII byte form words; everything else separates them.
inline std::vector<std::string> tokenize(std::string_view text) {
    auto is_word = [](unsigned char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
    };
    std::vector<std::string> tokens;
    std::string current;
    for (std::size_t i = 0; i < text.size(); ++i) {
        auto c = static_cast<unsigned char>(text[i]);
        if (is_word(c)) {
            current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
        } else if (c == '\'' && !current.empty() && i + 1 < text.size() &&
                   is_word(static_cast<unsigned char>(text[i + 1]))) {
            current.push_back('\'');
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

} // namespace sentcast::sentiment
