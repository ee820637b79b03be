#pragma once

#include <sentcast/core/error.hpp>
#include <sentcast/ingest/events.hpp>
#include <sentcast/ingest/formats.hpp>
#include <sentcast/ingest/queue.hpp>

#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace sentcast::ingest {

/// Replay speed as a multiple of real time; an empty factor means "as fast as possible".
struct Speed {
    std::optional<double> factor;

    static Speed max() { return {}; }
    static Speed times(double f) {
        if (!(f > 0.0) || !std::isfinite(f)) {
            throw ConfigError("speed must be a positive number or 'max'");
        }
        return {f};
    }
    [[nodiscard]] bool unpaced() const noexcept { return !factor.has_value(); }
};

inline Speed parse_speed(std::string_view text) {
    if (text == "max") {
        return Speed::max();
    }
    double f = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), f);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("speed must be a positive number or 'max', got '" + std::string(text) + "'");
    }
    return Speed::times(f);
}

using WarningSink = std::function<void(const std::string&)>;

inline WarningSink stderr_warnings() {
    return [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
}

/// Two-way merge of tweet and price streams by event time with minute heartbeats.
/// Ties go to the price bar. A heartbeat is emitted at every minute boundary crossed
/// between consecutive events and once after the last event.
class EventMerger {
public:
    using TweetPull = std::function<std::optional<Tweet>()>;
    using BarPull = std::function<std::optional<PriceBar>()>;

    EventMerger(TweetPull tweets, BarPull bars) : tweets_(std::move(tweets)), bars_(std::move(bars)) {}

    std::optional<FeedEvent> next() {
        if (!primed_) {
            tweet_head_ = tweets_();
            bar_head_ = bars_();
            primed_ = true;
        }
        std::optional<Timestamp> head_time;
        bool take_bar = false;
        if (bar_head_ && (!tweet_head_ || bar_head_->window.start() <= tweet_head_->created_at)) {
            head_time = bar_head_->window.start();
            take_bar = true;
        } else if (tweet_head_) {
            head_time = tweet_head_->created_at;
        }

        if (!head_time) {
            if (next_boundary_ && !final_heartbeat_sent_) {
                final_heartbeat_sent_ = true;
                return FeedEvent::heartbeat(*next_boundary_);
            }
            return std::nullopt;
        }
        if (!next_boundary_) {
            next_boundary_ = window_key(*head_time).end();
        } else if (*next_boundary_ <= *head_time) {
            auto beat = *next_boundary_;
            *next_boundary_ += std::chrono::minutes{1};
            return FeedEvent::heartbeat(beat);
        }
        if (take_bar) {
            auto ev = FeedEvent::of(*bar_head_);
            bar_head_ = bars_();
            return ev;
        }
        auto ev = FeedEvent::of(std::move(*tweet_head_));
        tweet_head_ = tweets_();
        return ev;
    }

private:
    TweetPull tweets_;
    BarPull bars_;
    std::optional<Tweet> tweet_head_;
    std::optional<PriceBar> bar_head_;
    std::optional<Timestamp> next_boundary_;
    bool primed_ = false;
    bool final_heartbeat_sent_ = false;
};

struct ReplayCounters {
    std::atomic<std::uint64_t> tweets{0};
    std::atomic<std::uint64_t> bars{0};
    std::atomic<std::uint64_t> malformed_tweet_lines{0};
    std::atomic<std::uint64_t> malformed_price_lines{0};

    [[nodiscard]] std::uint64_t malformed() const noexcept {
        return malformed_tweet_lines.load() + malformed_price_lines.load();
    }
};

/// Merged replay of a tweet JSON Lines file and a price CSV file.
/// Each file is parsed on its own thread into a bounded queue.
class ReplaySource final : public EventSource {
public:
    static constexpr std::size_t kDefaultQueueCapacity = 4096;

    ReplaySource(const std::filesystem::path& tweet_file, const std::filesystem::path& price_file,
                 WarningSink warn = stderr_warnings(), std::size_t queue_capacity = kDefaultQueueCapacity)
        : warn_(std::move(warn)), tweet_queue_(queue_capacity), bar_queue_(queue_capacity),
          merger_([this] { return pop_checked(tweet_queue_, tweet_error_); },
                  [this] { return pop_checked(bar_queue_, bar_error_); }) {
        auto tweets = open(tweet_file);
        auto prices = open(price_file);
        tweet_reader_ = std::jthread([this, in = std::move(tweets), path = tweet_file](std::stop_token) mutable {
            read_tweets(in, path);
        });
        bar_reader_ = std::jthread([this, in = std::move(prices), path = price_file](std::stop_token) mutable {
            read_prices(in, path);
        });
    }

    ~ReplaySource() override {
        tweet_queue_.close();
        bar_queue_.close();
    }

    ReplaySource(const ReplaySource&) = delete;
    ReplaySource& operator=(const ReplaySource&) = delete;

    std::optional<FeedEvent> next() override { return merger_.next(); }

    [[nodiscard]] const ReplayCounters& counters() const noexcept { return counters_; }

private:
    static std::ifstream open(const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) {
            throw IoError("cannot open input file " + p.string());
        }
        return in;
    }

    void warn(const std::string& msg) {
        std::lock_guard lock(warn_mutex_);
        if (warn_) {
            warn_(msg);
        }
    }

    template <typename T>
    std::optional<T> pop_checked(BoundedQueue<T>& q, std::exception_ptr& err) {
        auto item = q.pop();
        if (!item && err) {
            std::rethrow_exception(err);
        }
        return item;
    }

    void read_tweets(std::ifstream& in, const std::filesystem::path& path) {
        try {
            std::string line;
            std::size_t lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                if (line.find_first_not_of(" \t\r") == std::string::npos) {
                    continue;
                }
                try {
                    auto t = parse_tweet_line(line);
                    ++counters_.tweets;
                    if (!tweet_queue_.push(std::move(t))) {
                        return;
                    }
                } catch (const DataError& e) {
                    ++counters_.malformed_tweet_lines;
                    warn(path.string() + ":" + std::to_string(lineno) + ": skipped: " + e.what());
                }
            }
            if (in.bad()) {
                throw IoError("read failure on " + path.string());
            }
        } catch (...) {
            tweet_error_ = std::current_exception();
        }
        tweet_queue_.close();
    }

    void read_prices(std::ifstream& in, const std::filesystem::path& path) {
        try {
            std::string line;
            std::size_t lineno = 0;
            bool first = true;
            while (std::getline(in, line)) {
                ++lineno;
                if (line.find_first_not_of(" \t\r") == std::string::npos) {
                    continue;
                }
                if (first) {
                    first = false;
                    if (is_price_header(line)) {
                        continue;
                    }
                    warn(path.string() + ": missing header '" + std::string(kPriceHeader) + "'");
                }
                try {
                    auto b = parse_price_line(line);
                    ++counters_.bars;
                    if (!bar_queue_.push(b)) {
                        return;
                    }
                } catch (const DataError& e) {
                    ++counters_.malformed_price_lines;
                    warn(path.string() + ":" + std::to_string(lineno) + ": skipped: " + e.what());
                }
            }
            if (in.bad()) {
                throw IoError("read failure on " + path.string());
            }
        } catch (...) {
            bar_error_ = std::current_exception();
        }
        bar_queue_.close();
    }

    WarningSink warn_;
    std::mutex warn_mutex_;
    ReplayCounters counters_;
    BoundedQueue<Tweet> tweet_queue_;
    BoundedQueue<PriceBar> bar_queue_;
    std::exception_ptr tweet_error_;
    std::exception_ptr bar_error_;
    EventMerger merger_;
    std::jthread tweet_reader_;
    std::jthread bar_reader_;
};

/// In-memory event list, e.g. a synthesized stream.
class VectorSource final : public EventSource {
public:
    explicit VectorSource(std::vector<FeedEvent> events) : events_(std::move(events)) {}

    std::optional<FeedEvent> next() override {
        if (pos_ >= events_.size()) {
            return std::nullopt;
        }
        return events_[pos_++];
    }

private:
    std::vector<FeedEvent> events_;
    std::size_t pos_ = 0;
};

/// Wraps a source and sleeps so that event time advances at `speed` times wall time.
/// Pacing delays delivery only; the event sequence is unchanged.
class PacedSource final : public EventSource {
public:
    using Clock = std::chrono::steady_clock;
    using Sleeper = std::function<void(Clock::time_point)>;

    PacedSource(EventSource& inner, Speed speed,
                Sleeper sleep = [](Clock::time_point t) { std::this_thread::sleep_until(t); })
        : inner_(inner), speed_(speed), sleep_(std::move(sleep)) {}

    std::optional<FeedEvent> next() override {
        auto ev = inner_.next();
        if (!ev || speed_.unpaced()) {
            return ev;
        }
        if (!origin_event_) {
            origin_event_ = ev->event_time;
            origin_wall_ = Clock::now();
            return ev;
        }
        auto elapsed = std::chrono::duration<double, std::milli>(ev->event_time - *origin_event_);
        if (elapsed.count() > 0.0) {
            auto wall = std::chrono::duration_cast<Clock::duration>(elapsed / *speed_.factor);
            sleep_(origin_wall_ + wall);
        }
        return ev;
    }

private:
    EventSource& inner_;
    Speed speed_;
    Sleeper sleep_;
    std::optional<Timestamp> origin_event_;
    Clock::time_point origin_wall_{};
};

/// Drains a source into a vector.
inline std::vector<FeedEvent> collect(EventSource& src) {
    std::vector<FeedEvent> out;
    while (auto ev = src.next()) {
        out.push_back(std::move(*ev));
    }
    return out;
}

} // namespace sentcast::ingest
