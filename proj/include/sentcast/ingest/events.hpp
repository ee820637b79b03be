#pragma once

#include <sentcast/core/types.hpp>

#include <optional>
#include <variant>

namespace sentcast::ingest {

enum class EventKind { tweet, price_bar, heartbeat };

struct Heartbeat {
    friend bool operator==(const Heartbeat&, const Heartbeat&) = default;
};

/// One item of the merged input stream.
struct FeedEvent {
    std::variant<Tweet, PriceBar, Heartbeat> payload;
    Timestamp event_time{};

    [[nodiscard]] EventKind kind() const noexcept { return static_cast<EventKind>(payload.index()); }
    [[nodiscard]] const Tweet* tweet() const noexcept { return std::get_if<Tweet>(&payload); }
    [[nodiscard]] const PriceBar* bar() const noexcept { return std::get_if<PriceBar>(&payload); }

    static FeedEvent of(Tweet t) {
        auto time = t.created_at;
        return FeedEvent{std::move(t), time};
    }
    static FeedEvent of(PriceBar b) { return FeedEvent{b, b.window.start()}; }
    static FeedEvent heartbeat(Timestamp at) { return FeedEvent{Heartbeat{}, at}; }

    friend bool operator==(const FeedEvent&, const FeedEvent&) = default;
};

/// Pull-style event stream. `next` returns nullopt once the stream is exhausted.
class EventSource {
public:
    virtual ~EventSource() = default;
    virtual std::optional<FeedEvent> next() = 0;
};

} // namespace sentcast::ingest
