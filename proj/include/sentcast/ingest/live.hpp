#pragma once

#include <sentcast/core/error.hpp>
#include <sentcast/core/types.hpp>

#include <algorithm>
#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sentcast::ingest {

/// Continuous-refill token bucket. The clock is injectable so tests control time.
class TokenBucket {
public:
    using Clock = std::chrono::steady_clock;
    using Now = std::function<Clock::time_point()>;

    TokenBucket(double capacity, Clock::duration refill_period, Now now = Clock::now)
        : capacity_(capacity), tokens_(capacity), refill_period_(refill_period), now_(std::move(now)),
          last_(now_()) {
        if (!(capacity > 0.0) || refill_period <= Clock::duration::zero()) {
            throw ConfigError("token bucket needs a positive capacity and refill period");
        }
    }

    /// Takes one token if available.
    bool try_acquire() {
        refill();
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return true;
        }
        return false;
    }

    /// Time until one token becomes available; zero if one is available now.
    [[nodiscard]] Clock::duration wait_time() {
        refill();
        if (tokens_ >= 1.0) {
            return Clock::duration::zero();
        }
        auto secs = (1.0 - tokens_) / rate_per_second();
        return std::chrono::ceil<Clock::duration>(std::chrono::duration<double>(secs));
    }

    [[nodiscard]] double available() {
        refill();
        return tokens_;
    }

private:
    [[nodiscard]] double rate_per_second() const {
        return capacity_ / std::chrono::duration<double>(refill_period_).count();
    }

    void refill() {
        auto now = now_();
        if (now > last_) {
            tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_per_second());
            last_ = now;
        }
    }

    double capacity_;
    double tokens_;
    Clock::duration refill_period_;
    Now now_;
    Clock::time_point last_;
};

/// Search API budget: 450 requests per 15 minutes.
inline TokenBucket search_api_bucket(TokenBucket::Now now = TokenBucket::Clock::now) {
    return TokenBucket(450.0, std::chrono::minutes{15}, std::move(now));
}

/// Oldest instant the search API will return.
inline constexpr std::chrono::hours kSearchHistoryCap{24 * 7};

inline Timestamp clamp_history_start(Timestamp requested, Timestamp now) {
    return std::max(requested, now - kSearchHistoryCap);
}

/// Contract for live sources. No networked implementation is provided; engines run
/// on replay files or synthetic streams.
class LiveFeedClient {
public:
    virtual ~LiveFeedClient() = default;

    /// Tweets matching `query` created at or after `since`, oldest first.
    virtual std::vector<Tweet> search_tweets(const std::string& query, Timestamp since) = 0;

    /// The one-minute bar for `window`, if the exchange has published it.
    virtual std::optional<PriceBar> minute_bar(const std::string& symbol, WindowKey window) = 0;
};

/// Decorator enforcing the request budget and history cap on any client. Returns
/// nullopt instead of calling through when the bucket is empty.
class RateLimitedClient {
public:
    using Now = std::function<Timestamp()>;

    RateLimitedClient(LiveFeedClient& inner, TokenBucket bucket, Now wall_now)
        : inner_(inner), bucket_(std::move(bucket)), wall_now_(std::move(wall_now)) {}

    std::optional<std::vector<Tweet>> search_tweets(const std::string& query, Timestamp since) {
        if (!bucket_.try_acquire()) {
            return std::nullopt;
        }
        return inner_.search_tweets(query, clamp_history_start(since, wall_now_()));
    }

    [[nodiscard]] TokenBucket& bucket() noexcept { return bucket_; }

private:
    LiveFeedClient& inner_;
    TokenBucket bucket_;
    Now wall_now_;
};

} // namespace sentcast::ingest
