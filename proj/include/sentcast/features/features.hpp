#pragma once

#include <sentcast/core/error.hpp>
#include <sentcast/core/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <iterator>
#include <optional>
#include <span>
#include <vector>

namespace sentcast::features {

/// Length of both rolling means.
inline constexpr std::size_t kRollingWindow = 100;

/// Model inputs derived from the most recently closed window.
struct FeatureVector {
    WindowKey window{};         ///< the closed window the features describe
    double score_sum = 0.0;     ///< that window's summed normalized sentiment
    double previous_close = 0.0; ///< its close, i.e. the last price before the predicted window
    double ma_close = 0.0;
    double ma_score = 0.0;

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

    static constexpr std::size_t kCount = 4;
    [[nodiscard]] double operator[](std::size_t i) const {
        switch (i) {
        case 0: return score_sum;
        case 1: return previous_close;
        case 2: return ma_close;
        default: return ma_score;
        }
    }
    [[nodiscard]] bool finite() const {
        return std::isfinite(score_sum) && std::isfinite(previous_close) && std::isfinite(ma_close) &&
               std::isfinite(ma_score);
    }
};

/// Features of window t paired with the close of window t + 1.
struct LabeledExample {
    FeatureVector features;
    double target = 0.0;

    friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

namespace detail {

template <typename It>
double mean(It first, It last) {
    double sum = 0.0;
    std::size_t count = 0;
    for (; first != last; ++first) {
        sum += *first;
        ++count;
    }
    return sum / static_cast<double>(count);
}

} // namespace detail

/// Mean of the last min(n, size) values.
inline double rolling_mean(std::span<const double> series, std::size_t n) {
    if (series.empty()) {
        throw PreconditionError("rolling_mean of an empty series");
    }
    if (n == 0) {
        throw PreconditionError("rolling_mean window must be positive");
    }
    std::size_t take = std::min(n, series.size());
    return detail::mean(series.end() - static_cast<std::ptrdiff_t>(take), series.end());
}

/// Features for the window `current`, which has just closed.
///
/// `history` holds the windows before it (possibly none), contiguous and with
/// bars. The rolling means run over history plus `current`, so the newest close
/// and score always take part.
inline FeatureVector build_features(std::span<const AlignedWindow> history, const AlignedWindow& current,
                                    std::size_t n = kRollingWindow) {
    if (!current.bar) {
        throw PreconditionError("current window " + format_window(current.window) + " has no price bar");
    }
    if (!history.empty() && current.window != history.back().window.next()) {
        throw PreconditionError("window " + format_window(current.window) + " does not follow history ending at " +
                                format_window(history.back().window));
    }
    std::size_t take_history = std::min(n - 1, history.size());
    std::vector<double> closes;
    std::vector<double> scores;
    for (auto it = history.end() - static_cast<std::ptrdiff_t>(take_history); it != history.end(); ++it) {
        if (!it->bar) {
            throw PreconditionError("history window " + format_window(it->window) + " has no price bar");
        }
        closes.push_back(it->bar->close);
        scores.push_back(it->score_sum);
    }
    closes.push_back(current.bar->close);
    scores.push_back(current.score_sum);
    return FeatureVector{current.window, current.score_sum, current.bar->close, rolling_mean(closes, n),
                         rolling_mean(scores, n)};
}

/// Gives every window a bar: absent bars become flat bars at the previous close,
/// minutes missing from the sequence are inserted as empty windows, and windows
/// before the first real bar are dropped. Scores are left untouched.
inline std::vector<AlignedWindow> fill_gaps(std::span<const AlignedWindow> windows) {
    std::vector<AlignedWindow> out;
    std::optional<double> last_close;
    for (const auto& w : windows) {
        if (!out.empty()) {
            if (w.window <= out.back().window) {
                throw PreconditionError("fill_gaps input is not strictly increasing");
            }
            for (WindowKey k = out.back().window.next(); k < w.window; k = k.next()) {
                out.push_back(AlignedWindow{k, 0.0, 0, PriceBar::flat(k, *last_close)});
            }
        }
        if (w.bar) {
            out.push_back(w);
            last_close = w.bar->close;
        } else if (last_close) {
            AlignedWindow filled = w;
            filled.bar = PriceBar::flat(w.window, *last_close);
            out.push_back(filled);
        }
    }
    if (!last_close) {
        throw DataError("no price bars: cannot fill gaps");
    }
    return out;
}

/// Rolling state for the live stream: the last `n` closes and scores.
///
/// Produces exactly what build_features would for the same window sequence.
class FeatureBuilder {
public:
    explicit FeatureBuilder(std::size_t n = kRollingWindow) : n_(n) {}

    [[nodiscard]] std::size_t window_length() const noexcept { return n_; }
    [[nodiscard]] std::optional<WindowKey> last_window() const noexcept { return last_window_; }
    [[nodiscard]] bool empty() const noexcept { return !last_window_.has_value(); }
    [[nodiscard]] const std::deque<double>& closes() const noexcept { return closes_; }
    [[nodiscard]] const std::deque<double>& scores() const noexcept { return scores_; }

    /// Adds a closed window with a bar and returns its features.
    FeatureVector push(const AlignedWindow& w) {
        if (!w.bar) {
            throw PreconditionError("window " + format_window(w.window) + " has no price bar");
        }
        if (last_window_ && w.window != last_window_->next()) {
            throw PreconditionError("window " + format_window(w.window) + " does not follow " +
                                    format_window(*last_window_));
        }
        closes_.push_back(w.bar->close);
        scores_.push_back(w.score_sum);
        if (closes_.size() > n_) {
            closes_.pop_front();
            scores_.pop_front();
        }
        last_window_ = w.window;
        return FeatureVector{w.window, w.score_sum, w.bar->close, detail::mean(closes_.begin(), closes_.end()),
                             detail::mean(scores_.begin(), scores_.end())};
    }

    void reset() {
        closes_.clear();
        scores_.clear();
        last_window_.reset();
    }

    /// Rebuilds a builder from a snapshot of its buffers.
    static FeatureBuilder restore(std::size_t n, std::optional<WindowKey> last, std::deque<double> closes,
                                  std::deque<double> scores) {
        if (closes.size() != scores.size() || closes.size() > n || (closes.empty() != !last.has_value())) {
            throw CorruptionError("inconsistent feature builder snapshot");
        }
        FeatureBuilder b(n);
        b.last_window_ = last;
        b.closes_ = std::move(closes);
        b.scores_ = std::move(scores);
        return b;
    }

    friend bool operator==(const FeatureBuilder&, const FeatureBuilder&) = default;

private:
    std::size_t n_;
    std::optional<WindowKey> last_window_;
    std::deque<double> closes_;
    std::deque<double> scores_;
};

/// Builds labeled examples from a gap-filled, contiguous window sequence:
/// features of each window paired with the next window's close.
inline std::vector<LabeledExample> label_windows(std::span<const AlignedWindow> windows,
                                                 std::size_t n = kRollingWindow) {
    std::vector<LabeledExample> out;
    FeatureBuilder builder(n);
    std::optional<FeatureVector> previous;
    for (const auto& w : windows) {
        FeatureVector f = builder.push(w);
        if (previous) {
            out.push_back(LabeledExample{*previous, w.bar->close});
        }
        previous = f;
    }
    return out;
}

} // namespace sentcast::features
