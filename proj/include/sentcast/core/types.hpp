#pragma once

#include <sentcast/core/error.hpp>
#include <sentcast/core/time.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

namespace sentcast {

/// One social-media post plus the author influence counters used for weighting.
struct Tweet {
    std::string id;
    std::string text;
    std::int64_t follower_count = 0;
    std::int64_t like_count = 0;
    std::int64_t retweet_count = 0;
    Timestamp created_at{};

    friend bool operator==(const Tweet&, const Tweet&) = default;
};

inline void validate(const Tweet& t) {
    if (t.id.empty()) {
        throw DataError("tweet id is empty");
    }
    if (t.follower_count < 0 || t.like_count < 0 || t.retweet_count < 0) {
        throw DataError("tweet " + t.id + " has a negative counter");
    }
}

/// One-minute OHLC record in USD.
struct PriceBar {
    WindowKey window{};
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;

    friend bool operator==(const PriceBar&, const PriceBar&) = default;

    /// Flat bar used to carry a price across a minute with no market data.
    static PriceBar flat(WindowKey w, double price) { return PriceBar{w, price, price, price, price}; }
};

inline void validate(const PriceBar& b) {
    for (double v : {b.open, b.high, b.low, b.close}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw DataError("price bar " + format_window(b.window) + " has a negative or non-finite price");
        }
    }
    if (!(b.low <= b.open && b.open <= b.high && b.low <= b.close && b.close <= b.high)) {
        throw DataError("price bar " + format_window(b.window) + " violates low <= open/close <= high");
    }
}

/// One minute of summed normalized sentiment joined with the minute's bar, if any.
struct AlignedWindow {
    WindowKey window{};
    double score_sum = 0.0;
    std::int64_t tweet_count = 0;
    std::optional<PriceBar> bar;

    friend bool operator==(const AlignedWindow&, const AlignedWindow&) = default;
};

/// A normalized tweet score tagged with the window it belongs to.
struct WindowScore {
    WindowKey window{};
    double score = 0.0;
};

} // namespace sentcast
