#pragma once

#include <sentcast/core/error.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace sentcast::sentiment {

inline constexpr double kMaxValence = 4.0;
/// Default booster increment, matching the usual lexicon-scorer constant.
inline constexpr double kBoosterIncrement = 0.293;

/// Token valences plus the booster and negator word lists. Immutable once loaded.
struct Lexicon {
    std::unordered_map<std::string, double> entries;
    std::unordered_map<std::string, double> boosters;
    std::unordered_set<std::string> negators;

    [[nodiscard]] const double* valence(const std::string& token) const {
        auto it = entries.find(token);
        return it == entries.end() ? nullptr : &it->second;
    }
    [[nodiscard]] double booster(const std::string& token) const {
        auto it = boosters.find(token);
        return it == boosters.end() ? 0.0 : it->second;
    }
    [[nodiscard]] bool is_negator(const std::string& token) const { return negators.contains(token); }

    /// Tokens with a strictly positive / negative valence, sorted for reproducible iteration.
    [[nodiscard]] std::vector<std::string> words_with_sign(int sign) const {
        std::vector<std::string> out;
        for (const auto& [token, v] : entries) {
            if ((sign > 0 && v > 0.0) || (sign < 0 && v < 0.0)) {
                out.push_back(token);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    return s;
}

inline double parse_real(std::string_view field, const std::string& where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw ConfigError(where + ": not a number: '" + std::string(field) + "'");
    }
    return v;
}

inline std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

} // namespace detail

/// Reads `token<TAB>valence[<TAB>...]` lines; extra columns are ignored.
inline std::unordered_map<std::string, double> parse_valences(std::istream& in, const std::string& source) {
    std::unordered_map<std::string, double> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = detail::trim(line);
        if (view.empty()) {
            continue;
        }
        auto tab = view.find('\t');
        if (tab == std::string_view::npos) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected token<TAB>valence");
        }
        std::string_view rest = view.substr(tab + 1);
        rest = rest.substr(0, rest.find('\t'));
        std::string where = source + ":" + std::to_string(line_no);
        double v = detail::parse_real(detail::trim(rest), where);
        if (v < -kMaxValence || v > kMaxValence) {
            throw ConfigError(where + ": valence outside [-4, 4]");
        }
        out[detail::lowercase(view.substr(0, tab))] = v;
    }
    return out;
}

/// Reads `word` or `word<TAB>increment` lines. A bare word gets the default increment.
inline std::unordered_map<std::string, double> parse_boosters(std::istream& in, const std::string& source) {
    std::unordered_map<std::string, double> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = detail::trim(line);
        if (view.empty()) {
            continue;
        }
        auto tab = view.find('\t');
        if (tab == std::string_view::npos) {
            out[detail::lowercase(view)] = kBoosterIncrement;
        } else {
            out[detail::lowercase(view.substr(0, tab))] =
                detail::parse_real(detail::trim(view.substr(tab + 1)), source + ":" + std::to_string(line_no));
        }
    }
    return out;
}

inline std::unordered_set<std::string> parse_word_list(std::istream& in) {
    std::unordered_set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string_view view = detail::trim(line);
        if (!view.empty()) {
            out.insert(detail::lowercase(view));
        }
    }
    return out;
}

inline void validate(const Lexicon& lex) {
    if (lex.entries.empty()) {
        throw ConfigError("lexicon has no entries");
    }
}

namespace detail {

inline std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open lexicon file '" + path + "'");
    }
    return in;
}

} // namespace detail

/// Loads a lexicon from its three files. The booster and negator paths may be empty.
inline Lexicon load_lexicon(const std::string& valence_path, const std::string& booster_path,
                            const std::string& negator_path) {
    Lexicon lex;
    {
        auto in = detail::open_or_throw(valence_path);
        lex.entries = parse_valences(in, valence_path);
    }
    if (!booster_path.empty()) {
        auto in = detail::open_or_throw(booster_path);
        lex.boosters = parse_boosters(in, booster_path);
    }
    if (!negator_path.empty()) {
        auto in = detail::open_or_throw(negator_path);
        lex.negators = parse_word_list(in);
    }
    validate(lex);
    return lex;
}

// Same content as the files under data/lexicon/; a unit test keeps the two in sync.
inline constexpr std::string_view kBundledValences =
    "good\t1.9\n"
    "great\t3.1\n"
    "excellent\t2.7\n"
    "amazing\t2.8\n"
    "awesome\t3.1\n"
    "love\t3.2\n"
    "happy\t2.7\n"
    "win\t2.8\n"
    "winning\t2.4\n"
    "gain\t2.4\n"
    "gains\t1.7\n"
    "profit\t1.9\n"
    "bullish\t2.0\n"
    "moon\t1.5\n"
    "strong\t2.3\n"
    "rally\t1.8\n"
    "surge\t1.7\n"
    "hope\t1.9\n"
    "optimistic\t2.0\n"
    "positive\t2.6\n"
    "safe\t1.9\n"
    "best\t3.2\n"
    "nice\t1.8\n"
    "like\t2.0\n"
    "fantastic\t2.6\n"
    "bad\t-2.5\n"
    "terrible\t-2.1\n"
    "awful\t-2.0\n"
    "hate\t-2.7\n"
    "crash\t-1.7\n"
    "dump\t-1.6\n"
    "bearish\t-2.0\n"
    "loss\t-1.3\n"
    "losses\t-1.7\n"
    "lose\t-1.6\n"
    "scam\t-2.6\n"
    "fear\t-2.2\n"
    "panic\t-2.3\n"
    "worst\t-3.1\n"
    "weak\t-1.9\n"
    "fraud\t-2.8\n"
    "sad\t-2.1\n"
    "risk\t-1.1\n"
    "risky\t-1.4\n"
    "negative\t-2.7\n"
    "fail\t-2.5\n"
    "problem\t-1.7\n"
    "worried\t-1.2\n"
    "ugly\t-2.3\n"
    "angry\t-2.3\n";

inline constexpr std::string_view kBundledBoosters =
    "very\n"
    "extremely\n"
    "really\n"
    "so\n"
    "incredibly\n"
    "absolutely\n"
    "totally\n"
    "highly\n"
    "slightly\t-0.293\n"
    "somewhat\t-0.293\n"
    "barely\t-0.293\n"
    "kinda\t-0.293\n"
    "marginally\t-0.293\n";

inline constexpr std::string_view kBundledNegators =
    "not\n"
    "no\n"
    "never\n"
    "none\n"
    "nobody\n"
    "nothing\n"
    "neither\n"
    "nor\n"
    "cannot\n"
    "can't\n"
    "cant\n"
    "don't\n"
    "dont\n"
    "doesn't\n"
    "didn't\n"
    "isn't\n"
    "isnt\n"
    "wasn't\n"
    "aren't\n"
    "won't\n"
    "wont\n"
    "wouldn't\n"
    "shouldn't\n"
    "couldn't\n"
    "without\n";

/// The small lexicon that ships with the repository.
inline const Lexicon& bundled_lexicon() {
    static const Lexicon lex = [] {
        Lexicon l;
        std::istringstream v{std::string(kBundledValences)};
        l.entries = parse_valences(v, "<bundled valences>");
        std::istringstream b{std::string(kBundledBoosters)};
        l.boosters = parse_boosters(b, "<bundled boosters>");
        std::istringstream n{std::string(kBundledNegators)};
        l.negators = parse_word_list(n);
        return l;
    }();
    return lex;
}

} // namespace sentcast::sentiment
