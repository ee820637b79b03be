#pragma once

#include <sentcast/core/types.hpp>
#include <sentcast/ingest/events.hpp>

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace sentcast::ingest {

inline constexpr std::chrono::milliseconds kDefaultAllowedLateness{60'000};

struct WatermarkStats {
    std::uint64_t tweets_included = 0;
    std::uint64_t tweets_dropped_late = 0;
    std::uint64_t bars_dropped_late = 0;
    std::uint64_t bars_duplicate = 0;
    std::uint64_t windows_closed = 0;

    friend bool operator==(const WatermarkStats&, const WatermarkStats&) = default;
};

/// Event-time window closer.
///
/// Window W closes once an event with event_time >= end(W) + lateness is seen. Every
/// minute from the first observed one onward is emitted, in order, exactly once; minutes
/// with no data close empty. Events for an already closed window are counted and dropped.
class WindowCloser {
public:
    using Scorer = std::function<double(const Tweet&)>;

    WindowCloser(std::chrono::milliseconds allowed_lateness, Scorer scorer)
        : lateness_(allowed_lateness), scorer_(std::move(scorer)) {}

    /// Feeds one event; windows that close because of it are appended to `closed`.
    void push(const FeedEvent& ev, std::vector<AlignedWindow>& closed) {
        if (!next_to_close_) {
            next_to_close_ = window_key(ev.event_time);
        }
        while (next_to_close_->end() + lateness_ <= ev.event_time) {
            close_next(closed);
        }

        if (const Tweet* t = ev.tweet()) {
            auto w = window_key(t->created_at);
            if (w < *next_to_close_) {
                ++stats_.tweets_dropped_late;
                return;
            }
            extend_to(w);
            auto& slot = open_[w];
            slot.score_sum += scorer_(*t);
            ++slot.tweet_count;
            ++stats_.tweets_included;
        } else if (const PriceBar* b = ev.bar()) {
            if (b->window < *next_to_close_) {
                ++stats_.bars_dropped_late;
                return;
            }
            extend_to(b->window);
            auto& slot = open_[b->window];
            if (slot.bar) {
                ++stats_.bars_duplicate;
                return;
            }
            slot.bar = *b;
        }
    }

    /// End of stream: closes every window up to the latest one holding a tweet or bar.
    /// Heartbeats alone never extend the range.
    void finish(std::vector<AlignedWindow>& closed) {
        if (!next_to_close_ || !latest_) {
            return;
        }
        while (*next_to_close_ <= *latest_) {
            close_next(closed);
        }
    }

    [[nodiscard]] const WatermarkStats& stats() const noexcept { return stats_; }

    /// First window that has not been emitted yet.
    [[nodiscard]] std::optional<WindowKey> next_to_close() const noexcept { return next_to_close_; }

private:
    struct Partial {
        double score_sum = 0.0;
        std::int64_t tweet_count = 0;
        std::optional<PriceBar> bar;
    };

    void extend_to(WindowKey w) {
        if (!latest_ || *latest_ < w) {
            latest_ = w;
        }
    }

    void close_next(std::vector<AlignedWindow>& closed) {
        WindowKey w = *next_to_close_;
        AlignedWindow out{w, 0.0, 0, std::nullopt};
        if (auto it = open_.find(w); it != open_.end()) {
            out.score_sum = it->second.score_sum;
            out.tweet_count = it->second.tweet_count;
            out.bar = it->second.bar;
            open_.erase(it);
        }
        closed.push_back(out);
        ++stats_.windows_closed;
        next_to_close_ = w.next();
    }

    std::chrono::milliseconds lateness_;
    Scorer scorer_;
    std::optional<WindowKey> next_to_close_;
    std::optional<WindowKey> latest_;
    std::map<WindowKey, Partial> open_;
    WatermarkStats stats_;
};

/// Runs a whole event list through a closer.
inline std::vector<AlignedWindow> close_windows(std::span<const FeedEvent> events, std::chrono::milliseconds lateness,
                                                WindowCloser::Scorer scorer, WatermarkStats* stats = nullptr) {
    WindowCloser closer(lateness, std::move(scorer));
    std::vector<AlignedWindow> out;
    for (const auto& ev : events) {
        closer.push(ev, out);
    }
    closer.finish(out);
    if (stats != nullptr) {
        *stats = closer.stats();
    }
    return out;
}

} // namespace sentcast::ingest
