#include <sentcast/core/align.hpp>
#include <sentcast/core/time.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace sentcast;

TEST(WindowKey, FloorsToMinute) {
    auto w = window_key(parse_timestamp("2019-08-01T12:34:56.789Z"));
    EXPECT_EQ(w, window_key(parse_timestamp("2019-08-01T12:34:00Z")));
    EXPECT_EQ(format_window(w), "2019-08-01T12:34:00Z");
}

TEST(WindowKey, EpochBoundaries) {
    EXPECT_EQ(window_key(parse_timestamp("1970-01-01T00:00:59Z")).epoch_minute, 0);
    EXPECT_EQ(window_key(parse_timestamp("1970-01-01T00:01:00Z")).epoch_minute, 1);
    EXPECT_EQ(window_key(from_epoch_millis(-1)).epoch_minute, -1);
}

TEST(WindowKey, MonotoneAndIdempotent) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::int64_t> ms(-10'000'000'000LL, 10'000'000'000LL);
    for (int i = 0; i < 1000; ++i) {
        auto a = from_epoch_millis(ms(rng));
        auto b = from_epoch_millis(ms(rng));
        if (b < a) {
            std::swap(a, b);
        }
        EXPECT_LE(window_key(a), window_key(b));
        EXPECT_EQ(window_key(window_key(a).start()), window_key(a));
    }
}

TEST(Timestamp, ParsesVariants) {
    EXPECT_EQ(parse_timestamp("2019-08-01T12:34Z"), parse_timestamp("2019-08-01T12:34:00.000Z"));
    EXPECT_EQ(parse_timestamp("2019-08-01 12:34:00"), parse_timestamp("2019-08-01T12:34:00Z"));
    EXPECT_EQ(parse_timestamp("2019-08-01T14:34:00+02:00"), parse_timestamp("2019-08-01T12:34:00Z"));
    EXPECT_EQ(format_timestamp(parse_timestamp("2019-08-01T12:34:56.789Z")), "2019-08-01T12:34:56.789Z");
    EXPECT_THROW(parse_timestamp("2019-13-01T00:00Z"), DataError);
    EXPECT_THROW(parse_timestamp("yesterday"), DataError);
    EXPECT_THROW(parse_timestamp("2019-08-01T12:34:00Zjunk"), DataError);
}

namespace {

PriceBar bar(std::int64_t minute, double close) { return PriceBar::flat(WindowKey{minute}, close); }

} // namespace

TEST(Align, BarsWithoutTweets) {
    std::vector<PriceBar> bars{bar(5, 1.0), bar(6, 2.0)};
    auto out = align({}, bars);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].score_sum, 0.0);
    EXPECT_EQ(out[1].score_sum, 0.0);
    EXPECT_EQ(out[0].tweet_count, 0);
}

TEST(Align, SumsScoresSharingAWindow) {
    std::vector<WindowScore> scores{{WindowKey{7}, 3.0}, {WindowKey{7}, -1.0}};
    std::vector<PriceBar> bars{bar(7, 10.0)};
    auto out = align(scores, bars);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_DOUBLE_EQ(out[0].score_sum, 2.0);
    EXPECT_EQ(out[0].tweet_count, 2);
    ASSERT_TRUE(out[0].bar);
}

TEST(Align, UnionOfWindows) {
    std::vector<WindowScore> scores{{WindowKey{7}, 2.0}};
    std::vector<PriceBar> bars{bar(6, 1.0), bar(7, 1.0)};
    auto out = align(scores, bars);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].window.epoch_minute, 6);
    EXPECT_EQ(out[0].score_sum, 0.0);
    EXPECT_EQ(out[1].window.epoch_minute, 7);
    EXPECT_DOUBLE_EQ(out[1].score_sum, 2.0);
}

TEST(Align, TweetOnlyWindowHasNoBar) {
    std::vector<WindowScore> scores{{WindowKey{3}, 1.0}};
    auto out = align(scores, {});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_FALSE(out[0].bar);
}

TEST(Align, RejectsDuplicateBars) {
    std::vector<PriceBar> bars{bar(6, 1.0), bar(6, 2.0)};
    EXPECT_THROW(align({}, bars), DataError);
}

TEST(Align, PropertiesOverRandomInputs) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<int> count(0, 40);
        std::uniform_int_distribution<std::int64_t> minute(0, 30);
        std::normal_distribution<double> score(0.0, 10.0);
        std::vector<WindowScore> scores(static_cast<std::size_t>(count(rng)));
        for (auto& s : scores) {
            s = {WindowKey{minute(rng)}, score(rng)};
        }
        std::sort(scores.begin(), scores.end(), [](auto a, auto b) { return a.window < b.window; });
        std::vector<PriceBar> bars;
        for (std::int64_t m = 0; m <= 30; ++m) {
            if (rng() % 2 == 0) {
                bars.push_back(bar(m, 1.0));
            }
        }
        auto out = align(scores, bars);
        for (std::size_t i = 1; i < out.size(); ++i) {
            EXPECT_LT(out[i - 1].window, out[i].window);
        }
        double in_mass = 0.0;
        double abs_mass = 0.0;
        for (auto s : scores) {
            in_mass += s.score;
            abs_mass += std::fabs(s.score);
        }
        double out_mass = 0.0;
        for (const auto& w : out) {
            out_mass += w.score_sum;
            if (w.tweet_count == 0) {
                EXPECT_EQ(w.score_sum, 0.0);
            }
            if (w.bar) {
                EXPECT_EQ(w.bar->window, w.window);
            }
        }
        EXPECT_NEAR(out_mass, in_mass, 1e-9 * std::max(1.0, abs_mass));

        // Shuffling scores within each window leaves the per-window sums unchanged.
        auto shuffled = scores;
        for (std::size_t i = 0; i < shuffled.size();) {
            std::size_t j = i;
            while (j < shuffled.size() && shuffled[j].window == shuffled[i].window) {
                ++j;
            }
            std::shuffle(shuffled.begin() + static_cast<std::ptrdiff_t>(i),
                         shuffled.begin() + static_cast<std::ptrdiff_t>(j), rng);
            i = j;
        }
        auto out2 = align(shuffled, bars);
        ASSERT_EQ(out.size(), out2.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            EXPECT_NEAR(out[i].score_sum, out2[i].score_sum, 1e-9 * std::max(1.0, abs_mass));
        }
    }
}
