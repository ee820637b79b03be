#pragma once

#include <sentcast/core/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace sentcast::analytics {

/// Correlation is undefined for the given input (constant series or too few points).
class UndefinedCorrelation : public DataError {
public:
    using DataError::DataError;
};

namespace detail {

inline void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw PreconditionError("correlation inputs differ in length");
    }
    if (x.size() < 2) {
        throw UndefinedCorrelation("correlation needs at least two points");
    }
}

} // namespace detail

/// Sample Pearson correlation, computed on mean-centred values.
inline double pearson(std::span<const double> x, std::span<const double> y) {
    detail::check_pair(x, y);
    const auto n = static_cast<double>(x.size());
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw UndefinedCorrelation("correlation undefined for a constant series");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// 1-based fractional ranks; tied values share the mean of the ranks they span.
inline std::vector<double> fractional_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = shared;
        }
        i = j + 1;
    }
    return ranks;
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
    detail::check_pair(x, y);
    auto rx = fractional_ranks(x);
    auto ry = fractional_ranks(y);
    return pearson(rx, ry);
}

struct LagCorrelation {
    std::size_t lag_minutes = 0;
    double pearson_r = 0.0;
    double spearman_rho = 0.0;
    std::size_t n = 0;

    friend bool operator==(const LagCorrelation&, const LagCorrelation&) = default;
};

/// Correlates scores[0, n-L) with series[L, n) for each L in [0, max_lag]: a positive lag
/// means sentiment leads the series by L windows.
inline std::vector<LagCorrelation> lag_sweep(std::span<const double> scores, std::span<const double> series,
                                             std::size_t max_lag) {
    if (scores.size() != series.size()) {
        throw PreconditionError("lag sweep inputs differ in length");
    }
    if (scores.size() <= max_lag + 2) {
        throw DataError("lag sweep needs more than max_lag + 2 = " + std::to_string(max_lag + 2) + " points, got " +
                        std::to_string(scores.size()));
    }
    std::vector<LagCorrelation> out;
    out.reserve(max_lag + 1);
    const auto n = scores.size();
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        auto x = scores.first(n - lag);
        auto y = series.subspan(lag);
        out.push_back(LagCorrelation{lag, pearson(x, y), spearman(x, y), n - lag});
    }
    return out;
}

/// Lag with the largest |pearson_r|; the smallest such lag on ties.
inline const LagCorrelation& strongest(std::span<const LagCorrelation> sweep) {
    if (sweep.empty()) {
        throw PreconditionError("empty lag sweep");
    }
    const LagCorrelation* best = &sweep.front();
    for (const auto& c : sweep) {
        if (std::fabs(c.pearson_r) > std::fabs(best->pearson_r)) {
            best = &c;
        }
    }
    return *best;
}

/// Per-window first differences: out[i] = v[i+1] - v[i].
inline std::vector<double> differences(std::span<const double> v) {
    std::vector<double> out;
    for (std::size_t i = 1; i < v.size(); ++i) {
        out.push_back(v[i] - v[i - 1]);
    }
    return out;
}

} // namespace sentcast::analytics
