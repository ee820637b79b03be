#pragma once

#include <sentcast/core/error.hpp>
#include <sentcast/core/types.hpp>
#include <sentcast/ingest/events.hpp>
#include <sentcast/ingest/formats.hpp>
#include <sentcast/ingest/replay.hpp>
#include <sentcast/sentiment/lexicon.hpp>
#include <sentcast/sentiment/score.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace sentcast::ingest {

struct SyntheticConfig {
    std::int64_t n_windows = 2000;
    std::int64_t lag_k = 1;            ///< minutes by which sentiment leads price
    double signal_strength = 0.001;    ///< fractional price move per standard deviation of sentiment
    double noise_sigma = 0.0005;       ///< sd of the per-minute fractional price shock
    double tweets_per_window_mean = 17.0;
    double base_price = 10000.0;
    std::uint64_t seed = 42;
    Timestamp start = parse_timestamp("2019-08-01T00:00:00Z");
    /// Window index from which the sentiment-to-price coefficient is negated; -1 disables.
    std::int64_t flip_at = -1;

    void validate() const {
        auto finite = [](double v) { return std::isfinite(v); };
        if (n_windows <= 0) {
            throw ConfigError("synthetic n_windows must be positive");
        }
        if (lag_k < 0) {
            throw ConfigError("synthetic lag_k must be non-negative");
        }
        if (n_windows < lag_k + 2) {
            throw ConfigError("synthetic n_windows must be at least lag_k + 2");
        }
        if (!finite(signal_strength) || signal_strength < 0.0) {
            throw ConfigError("synthetic signal_strength must be finite and >= 0");
        }
        if (!finite(noise_sigma) || noise_sigma < 0.0) {
            throw ConfigError("synthetic noise_sigma must be finite and >= 0");
        }
        if (!finite(tweets_per_window_mean) || tweets_per_window_mean <= 0.0) {
            throw ConfigError("synthetic tweets_per_window_mean must be positive");
        }
        if (!finite(base_price) || base_price <= 0.0) {
            throw ConfigError("synthetic base_price must be positive");
        }
        if (window_key(start).start() != start) {
            throw ConfigError("synthetic start must fall on a minute boundary");
        }
    }
};

/// Seeded draws built on the raw 64-bit engine output so results do not depend on
/// the standard library's distribution implementations.
class SyntheticRng {
public:
    explicit SyntheticRng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

    double normal() {
        if (spare_) {
            double v = *spare_;
            spare_.reset();
            return v;
        }
        double u1 = 1.0 - uniform(); // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        return r * std::cos(theta);
    }

    std::int64_t poisson(double mean) {
        if (mean < 30.0) {
            double limit = std::exp(-mean);
            double p = 1.0;
            std::int64_t k = -1;
            do {
                ++k;
                p *= uniform();
            } while (p > limit);
            return k;
        }
        double v = std::round(mean + std::sqrt(mean) * normal());
        return v < 0.0 ? 0 : static_cast<std::int64_t>(v);
    }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

/// Fully materialized synthetic run.
struct SyntheticData {
    std::vector<Tweet> tweets;             ///< sorted by created_at
    std::vector<PriceBar> bars;            ///< one per window
    std::vector<double> intended;          ///< drawn sentiment per window
    std::vector<double> realized_scores;   ///< summed normalized tweet score per window
    std::vector<double> standardized;      ///< z-scored realized_scores, the price driver
};

namespace detail {

inline bool plain_word(const std::string& w) {
    return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

inline std::vector<std::string> usable_words(const sentiment::Lexicon& lex, int sign) {
    std::vector<std::string> out;
    for (auto& w : lex.words_with_sign(sign)) {
        if (plain_word(w) && !lex.is_negator(w) && lex.booster(w) == 0.0) {
            out.push_back(w);
        }
    }
    return out;
}

inline std::vector<std::string> filler_words(const sentiment::Lexicon& lex) {
    static const std::vector<std::string> candidates{"bitcoin", "btc",  "price", "market", "today", "chart",
                                                     "crypto",  "just", "now",   "the",    "coin",  "block"};
    std::vector<std::string> out;
    for (const auto& w : candidates) {
        if (lex.valence(w) == nullptr && !lex.is_negator(w) && lex.booster(w) == 0.0) {
            out.push_back(w);
        }
    }
    return out;
}

inline std::int64_t heavy_tailed_count(SyntheticRng& rng, double log_mean) {
    return static_cast<std::int64_t>(std::floor(std::exp(log_mean + rng.normal())));
}

} // namespace detail

/// Generates a seeded stream in which the standardized per-window sentiment drives
/// the next minute's price move `lag_k` windows later:
///   close(t+1) = close(t) * (1 + signal * z(t + 1 - lag_k) + noise)
/// with z taken as 0 before the first window. Every tweet in a window carries the
/// sign of that window's intended sentiment.
inline SyntheticData synthesize(const SyntheticConfig& cfg, const sentiment::Lexicon& lex) {
    cfg.validate();
    auto positive = detail::usable_words(lex, +1);
    auto negative = detail::usable_words(lex, -1);
    auto filler = detail::filler_words(lex);
    if (positive.empty() || negative.empty() || filler.empty()) {
        throw ConfigError("lexicon lacks plain positive or negative words for synthesis");
    }

    SyntheticRng rng(cfg.seed);
    const auto n = static_cast<std::size_t>(cfg.n_windows);
    SyntheticData data;
    data.intended.resize(n);
    data.realized_scores.assign(n, 0.0);

    for (std::size_t w = 0; w < n; ++w) {
        double s = rng.normal();
        data.intended[w] = s;
        auto count = rng.poisson(cfg.tweets_per_window_mean);
        if (s == 0.0) {
            count = 0;
        }
        const auto& pool = s > 0.0 ? positive : negative;
        WindowKey key{window_key(cfg.start).epoch_minute + static_cast<std::int64_t>(w)};
        std::vector<Tweet> window_tweets;
        for (std::int64_t k = 0; k < count; ++k) {
            std::vector<std::string> words;
            auto n_sent = 1 + rng.below(2);
            for (std::uint64_t i = 0; i < n_sent; ++i) {
                words.push_back(pool[rng.below(pool.size())]);
            }
            auto n_fill = 2 + rng.below(3);
            for (std::uint64_t i = 0; i < n_fill; ++i) {
                words.push_back(filler[rng.below(filler.size())]);
            }
            for (std::size_t i = words.size(); i > 1; --i) {
                std::swap(words[i - 1], words[rng.below(i)]);
            }
            std::string id = "syn-" + std::to_string(w) + "-" + std::to_string(k);
            std::string text;
            for (const auto& word : words) {
                text += (text.empty() ? "" : " ") + word;
            }
            if (rng.uniform() < 0.3) {
                text += " #BTC";
            }
            if (rng.uniform() < 0.2) {
                text += " https://t.co/" + std::to_string(rng.below(1'000'000));
            }
            if (rng.uniform() < 0.1) {
                text = "@trader" + std::to_string(rng.below(1000)) + " " + text;
            }
            Tweet t;
            t.id = std::move(id);
            t.text = std::move(text);
            t.follower_count = 1 + static_cast<std::int64_t>(std::floor(200.0 * s * s * std::exp(0.5 * rng.normal())));
            t.like_count = detail::heavy_tailed_count(rng, 0.0);
            t.retweet_count = detail::heavy_tailed_count(rng, -0.7);
            t.created_at = key.start() + std::chrono::milliseconds{static_cast<std::int64_t>(rng.below(60'000))};
            window_tweets.push_back(std::move(t));
        }
        std::stable_sort(window_tweets.begin(), window_tweets.end(),
                         [](const Tweet& a, const Tweet& b) { return a.created_at < b.created_at; });
        for (auto& t : window_tweets) {
            data.realized_scores[w] += sentiment::tweet_score(t, lex);
            data.tweets.push_back(std::move(t));
        }
    }

    double mean = 0.0;
    for (double v : data.realized_scores) {
        mean += v;
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : data.realized_scores) {
        var += (v - mean) * (v - mean);
    }
    double sd = std::sqrt(var / static_cast<double>(n));
    data.standardized.resize(n);
    for (std::size_t w = 0; w < n; ++w) {
        data.standardized[w] = sd > 0.0 ? (data.realized_scores[w] - mean) / sd : 0.0;
    }

    std::vector<double> close(n);
    close[0] = cfg.base_price;
    for (std::size_t t = 0; t + 1 < n; ++t) {
        auto driver = static_cast<std::int64_t>(t) + 1 - cfg.lag_k;
        double z = driver >= 0 ? data.standardized[static_cast<std::size_t>(driver)] : 0.0;
        double signal = cfg.signal_strength;
        if (cfg.flip_at >= 0 && static_cast<std::int64_t>(t) + 1 >= cfg.flip_at) {
            signal = -signal;
        }
        double factor = 1.0 + signal * z + cfg.noise_sigma * rng.normal();
        close[t + 1] = close[t] * std::max(factor, 0.01);
    }
    for (std::size_t t = 0; t < n; ++t) {
        WindowKey key{window_key(cfg.start).epoch_minute + static_cast<std::int64_t>(t)};
        double open = t == 0 ? cfg.base_price : close[t - 1];
        double wick = std::fabs(rng.normal()) * 0.0002;
        data.bars.push_back(PriceBar{key, open, std::max(open, close[t]) * (1.0 + wick),
                                     std::min(open, close[t]) * (1.0 - wick), close[t]});
    }
    return data;
}

/// The synthetic run as a merged event stream, ordered exactly as a replay of its files.
inline std::vector<FeedEvent> synthetic_events(const SyntheticData& data) {
    std::size_t ti = 0;
    std::size_t bi = 0;
    EventMerger merger(
        [&]() -> std::optional<Tweet> {
            if (ti >= data.tweets.size()) {
                return std::nullopt;
            }
            return data.tweets[ti++];
        },
        [&]() -> std::optional<PriceBar> {
            if (bi >= data.bars.size()) {
                return std::nullopt;
            }
            return data.bars[bi++];
        });
    std::vector<FeedEvent> out;
    out.reserve(data.tweets.size() + 2 * data.bars.size() + 1);
    while (auto ev = merger.next()) {
        out.push_back(std::move(*ev));
    }
    return out;
}

/// Writes the run as a tweet JSON Lines file and a price CSV file that replay to the same events.
inline void write_replay_files(const SyntheticData& data, const std::filesystem::path& tweet_file,
                               const std::filesystem::path& price_file) {
    std::ofstream tweets(tweet_file, std::ios::binary | std::ios::trunc);
    std::ofstream prices(price_file, std::ios::binary | std::ios::trunc);
    if (!tweets || !prices) {
        throw IoError("cannot create replay files " + tweet_file.string() + ", " + price_file.string());
    }
    for (const auto& t : data.tweets) {
        tweets << format_tweet_line(t) << '\n';
    }
    prices << kPriceHeader << '\n';
    for (const auto& b : data.bars) {
        prices << format_price_line(b) << '\n';
    }
    tweets.flush();
    prices.flush();
    if (!tweets || !prices) {
        throw IoError("write failure on replay files");
    }
}

} // namespace sentcast::ingest
