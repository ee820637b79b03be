#pragma once

#include <sentcast/sentiment/lexicon.hpp>
#include <sentcast/sentiment/text.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace sentcast::sentiment {

inline constexpr double kNegationScalar = -0.74;
inline constexpr std::size_t kNegationWindow = 3;
inline constexpr double kNormalizationAlpha = 15.0;

struct SentimentResult {
    double compound = 0.0; ///< in [-1, +1]
};

/// Influence-weighted score of one tweet and its signed-root normalization.
struct WeightedScore {
    double raw = 0.0;
    double normalized = 0.0;
};

/// Maps an unbounded valence sum into (-1, 1).
inline double normalize_valence_sum(double sum) {
    double c = sum / std::sqrt(sum * sum + kNormalizationAlpha);
    return std::clamp(c, -1.0, 1.0);
}

/// Lexicon-and-rule compound score of already cleaned text.
///
/// Each lexicon hit contributes its valence. A booster directly before the hit
/// pushes the valence away from zero by the booster's increment (dampeners have
/// negative increments); a negator among the three preceding tokens then flips
/// and shrinks it by -0.74. The adjusted sum S maps to S / sqrt(S^2 + 15).
inline SentimentResult compound_score(std::string_view text, const Lexicon& lex) {
    auto tokens = tokenize(text);
    double sum = 0.0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const double* hit = lex.valence(tokens[i]);
        if (hit == nullptr) {
            continue;
        }
        double v = *hit;
        if (i > 0) {
            double b = lex.booster(tokens[i - 1]);
            if (b != 0.0) {
                v += v < 0.0 ? -b : b;
            }
        }
        for (std::size_t back = 1; back <= kNegationWindow && back <= i; ++back) {
            if (lex.is_negator(tokens[i - back])) {
                v *= kNegationScalar;
                break;
            }
        }
        sum += v;
    }
    if (sum == 0.0) {
        return {0.0};
    }
    return {normalize_valence_sum(sum)};
}

/// compound * followers * (likes + 1) * (retweets + 1), then sign(raw) * sqrt(|raw|).
/// Zero followers zeroes the score regardless of engagement.
inline WeightedScore weight_score(double compound, std::int64_t followers, std::int64_t likes,
                                  std::int64_t retweets) {
    double raw = compound * static_cast<double>(followers) * (static_cast<double>(likes) + 1.0) *
                 (static_cast<double>(retweets) + 1.0);
    if (raw == 0.0) {
        return {0.0, 0.0};
    }
    double root = std::sqrt(std::fabs(raw));
    return {raw, raw < 0.0 ? -root : root};
}

/// Clean, score and weight one tweet; returns the normalized score.
template <typename TweetT>
double tweet_score(const TweetT& tweet, const Lexicon& lex) {
    auto compound = compound_score(clean_text(tweet.text), lex).compound;
    return weight_score(compound, tweet.follower_count, tweet.like_count, tweet.retweet_count).normalized;
}

} // namespace sentcast::sentiment
