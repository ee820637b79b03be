#pragma once

#include <sentcast/core/error.hpp>
#include <sentcast/core/types.hpp>

#include <algorithm>
#include <span>
#include <vector>

namespace sentcast {

/// Joins per-tweet scores and price bars on the minute window.
///
/// Both inputs must be sorted by window; bars must have unique windows.
/// Every window seen in either input yields exactly one output entry, in
/// ascending order. Scores sharing a window are summed in input order.
inline std::vector<AlignedWindow> align(std::span<const WindowScore> scores, std::span<const PriceBar> bars) {
    for (std::size_t i = 1; i < bars.size(); ++i) {
        if (bars[i].window == bars[i - 1].window) {
            throw DataError("duplicate price bar for window " + format_window(bars[i].window));
        }
        if (bars[i].window < bars[i - 1].window) {
            throw PreconditionError("price bars are not sorted by window");
        }
    }
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i].window < scores[i - 1].window) {
            throw PreconditionError("tweet scores are not sorted by window");
        }
    }

    std::vector<AlignedWindow> out;
    std::size_t si = 0;
    std::size_t bi = 0;
    while (si < scores.size() || bi < bars.size()) {
        WindowKey w;
        if (bi >= bars.size()) {
            w = scores[si].window;
        } else if (si >= scores.size()) {
            w = bars[bi].window;
        } else {
            w = std::min(scores[si].window, bars[bi].window);
        }
        AlignedWindow aw{w, 0.0, 0, std::nullopt};
        while (si < scores.size() && scores[si].window == w) {
            aw.score_sum += scores[si].score;
            ++aw.tweet_count;
            ++si;
        }
        if (bi < bars.size() && bars[bi].window == w) {
            aw.bar = bars[bi];
            ++bi;
        }
        out.push_back(aw);
    }
    return out;
}

} // namespace sentcast
