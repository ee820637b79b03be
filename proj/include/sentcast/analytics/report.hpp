#pragma once

#include <sentcast/analytics/correlation.hpp>
#include <sentcast/core/decimal.hpp>
#include <sentcast/core/error.hpp>
#include <sentcast/core/time.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sentcast::analytics {

/// One prediction and, once the target window has closed, its outcome.
struct PredictionRow {
    WindowKey window{}; ///< the window whose close was predicted
    double predicted = 0.0;
    double naive = 0.0;
    std::optional<double> actual;

    [[nodiscard]] bool completed() const noexcept { return actual.has_value(); }
    friend bool operator==(const PredictionRow&, const PredictionRow&) = default;
};

/// One closed window of the live phase.
struct WindowRow {
    WindowKey window{};
    double score_sum = 0.0;
    std::int64_t tweet_count = 0;
    std::optional<double> close;

    friend bool operator==(const WindowRow&, const WindowRow&) = default;
};

struct RunData {
    std::vector<WindowRow> windows;
    std::vector<PredictionRow> predictions;
};

namespace detail {

template <typename Pick>
double rmse_by(std::span<const PredictionRow> rows, Pick pick) {
    double se = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
        if (!r.actual) {
            continue;
        }
        double e = pick(r) - *r.actual;
        se += e * e;
        ++n;
    }
    if (n == 0) {
        throw DataError("RMSE needs at least one completed prediction");
    }
    return std::sqrt(se / static_cast<double>(n));
}

} // namespace detail

/// Root mean squared error over completed rows; pending rows are ignored.
inline double rmse(std::span<const PredictionRow> rows) {
    return detail::rmse_by(rows, [](const PredictionRow& r) { return r.predicted; });
}

/// The same metric for the previous-close baseline.
inline double naive_rmse(std::span<const PredictionRow> rows) {
    return detail::rmse_by(rows, [](const PredictionRow& r) { return r.naive; });
}

/// RFC 4180 field: quoted when it holds a comma, quote, CR or LF; quotes doubled.
inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

/// Accumulates CRLF-terminated records.
class CsvWriter {
public:
    explicit CsvWriter(std::initializer_list<std::string_view> header) { row(header); }

    void row(std::initializer_list<std::string_view> fields) {
        bool first = true;
        for (auto f : fields) {
            if (!first) {
                text_ += ',';
            }
            text_ += csv_field(f);
            first = false;
        }
        text_ += "\r\n";
    }

    [[nodiscard]] const std::string& text() const noexcept { return text_; }

private:
    std::string text_;
};

inline constexpr std::size_t kReportMaxLag = 30;
inline constexpr std::size_t kRollingRmseWindows = 60;

inline const std::vector<std::string>& report_files() {
    static const std::vector<std::string> names{"predictions.csv",          "rmse_timeline.csv",
                                                "lag_correlations.csv",     "hourly_sentiment_price.csv",
                                                "tweet_volume.csv",         "summary.txt"};
    return names;
}

namespace detail {

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw DataError("not a number: '" + std::string(s) + "'");
    }
    return v;
}

inline std::string opt(const std::optional<double>& v) { return v ? format_decimal(*v) : std::string(); }

inline std::string hour_label(WindowKey w) {
    return format_window(WindowKey{floor_div(w.epoch_minute, 60) * 60});
}

inline std::string day_label(WindowKey w) { return format_window(w).substr(0, 10); }

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write report file " + path.string());
    }
    out << text;
    out.flush();
    if (!out) {
        throw IoError("write failure on report file " + path.string());
    }
}

inline std::string predictions_csv(std::span<const PredictionRow> rows) {
    CsvWriter csv{"window", "predicted", "actual", "error"};
    for (const auto& r : rows) {
        std::optional<double> error;
        if (r.actual) {
            error = r.predicted - *r.actual;
        }
        csv.row({format_window(r.window), format_decimal(r.predicted), opt(r.actual), opt(error)});
    }
    return csv.text();
}

inline std::string rmse_timeline_csv(std::span<const PredictionRow> rows) {
    CsvWriter csv{"window", "rmse", "naive_rmse", "rolling_rmse"};
    double se = 0.0;
    double naive_se = 0.0;
    std::size_t n = 0;
    std::vector<double> recent;
    for (const auto& r : rows) {
        if (!r.actual) {
            continue;
        }
        double e = r.predicted - *r.actual;
        double ne = r.naive - *r.actual;
        se += e * e;
        naive_se += ne * ne;
        ++n;
        recent.push_back(e * e);
        std::size_t from = recent.size() > kRollingRmseWindows ? recent.size() - kRollingRmseWindows : 0;
        double rolling = 0.0;
        for (std::size_t i = from; i < recent.size(); ++i) {
            rolling += recent[i];
        }
        rolling = std::sqrt(rolling / static_cast<double>(recent.size() - from));
        csv.row({format_window(r.window), format_decimal(std::sqrt(se / static_cast<double>(n))),
                 format_decimal(std::sqrt(naive_se / static_cast<double>(n))), format_decimal(rolling)});
    }
    return csv.text();
}

inline std::string lag_csv(std::span<const WindowRow> windows) {
    CsvWriter csv{"lag_minutes", "pearson_r", "spearman_rho", "n"};
    std::vector<double> scores;
    std::vector<double> closes;
    for (const auto& w : windows) {
        if (w.close) {
            scores.push_back(w.score_sum);
            closes.push_back(*w.close);
        }
    }
    auto changes = differences(closes);
    if (changes.size() < 3) {
        return csv.text();
    }
    std::vector<double> lead(scores.begin() + 1, scores.end());
    auto max_lag = std::min(kReportMaxLag, changes.size() - 3);
    try {
        for (const auto& c : lag_sweep(lead, changes, max_lag)) {
            csv.row({std::to_string(c.lag_minutes), format_decimal(c.pearson_r), format_decimal(c.spearman_rho),
                     std::to_string(c.n)});
        }
    } catch (const UndefinedCorrelation&) {
        // Constant scores or prices: the header alone signals "no correlation defined".
        return CsvWriter{"lag_minutes", "pearson_r", "spearman_rho", "n"}.text();
    }
    return csv.text();
}

inline std::string hourly_csv(std::span<const WindowRow> windows) {
    struct Hour {
        double score_sum = 0.0;
        double close_sum = 0.0;
        std::size_t closes = 0;
        std::int64_t tweets = 0;
    };
    std::map<std::int64_t, Hour> hours;
    for (const auto& w : windows) {
        auto& h = hours[floor_div(w.window.epoch_minute, 60)];
        h.score_sum += w.score_sum;
        h.tweets += w.tweet_count;
        if (w.close) {
            h.close_sum += *w.close;
            ++h.closes;
        }
    }
    CsvWriter csv{"hour", "score_sum", "mean_close", "tweets"};
    for (const auto& [hour, h] : hours) {
        std::optional<double> mean;
        if (h.closes > 0) {
            mean = h.close_sum / static_cast<double>(h.closes);
        }
        csv.row({hour_label(WindowKey{hour * 60}), format_decimal(h.score_sum), opt(mean), std::to_string(h.tweets)});
    }
    return csv.text();
}

inline std::string volume_csv(std::span<const WindowRow> windows) {
    std::map<std::string, std::int64_t> days;
    for (const auto& w : windows) {
        days[day_label(w.window)] += w.tweet_count;
    }
    CsvWriter csv{"day", "tweets"};
    for (const auto& [day, n] : days) {
        csv.row({day, std::to_string(n)});
    }
    return csv.text();
}

inline std::string summary_text(const RunData& run) {
    std::size_t completed = 0;
    std::int64_t tweets = 0;
    for (const auto& r : run.predictions) {
        completed += r.completed() ? 1 : 0;
    }
    for (const auto& w : run.windows) {
        tweets += w.tweet_count;
    }
    std::ostringstream out;
    out << "windows=" << run.windows.size() << '\n';
    out << "tweets=" << tweets << '\n';
    out << "predictions=" << run.predictions.size() << '\n';
    out << "completed=" << completed << '\n';
    if (completed > 0) {
        out << "rmse=" << format_decimal(rmse(run.predictions)) << '\n';
        out << "naive_rmse=" << format_decimal(naive_rmse(run.predictions)) << '\n';
    } else {
        out << "rmse=NA\nnaive_rmse=NA\n";
    }
    return out.str();
}

} // namespace detail

/// Writes the five CSV files and summary.txt into `out_dir`, creating it if needed.
/// Output depends only on `run`, so reruns are byte-identical.
inline void emit_report(const RunData& run, const std::filesystem::path& out_dir) {
    if (run.windows.empty() && run.predictions.empty()) {
        throw DataError("nothing to report: the run has no windows and no predictions");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw IoError("cannot create report directory " + out_dir.string() +
                      (ec ? ": " + ec.message() : std::string()));
    }
    detail::write_text(out_dir / "predictions.csv", detail::predictions_csv(run.predictions));
    detail::write_text(out_dir / "rmse_timeline.csv", detail::rmse_timeline_csv(run.predictions));
    detail::write_text(out_dir / "lag_correlations.csv", detail::lag_csv(run.windows));
    detail::write_text(out_dir / "hourly_sentiment_price.csv", detail::hourly_csv(run.windows));
    detail::write_text(out_dir / "tweet_volume.csv", detail::volume_csv(run.windows));
    detail::write_text(out_dir / "summary.txt", detail::summary_text(run));
}

/// Parses predictions.csv back into rows; used to cross-check summary figures.
inline std::vector<PredictionRow> read_predictions_csv(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + file.string());
    }
    std::vector<PredictionRow> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            f.push_back(cell);
        }
        if (line.ends_with(',')) {
            f.emplace_back();
        }
        if (f.size() != 4) {
            throw DataError("predictions.csv row has " + std::to_string(f.size()) + " fields");
        }
        PredictionRow r;
        r.window = window_key(parse_timestamp(f[0]));
        r.predicted = detail::parse_double(f[1]);
        if (!f[2].empty()) {
            r.actual = detail::parse_double(f[2]);
        }
        rows.push_back(r);
    }
    return rows;
}

} // namespace sentcast::analytics
