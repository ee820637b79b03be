#pragma once

#include <sentcast/core/error.hpp>
#include <sentcast/core/types.hpp>
#include <sentcast/features/features.hpp>
#include <sentcast/ingest/replay.hpp>
#include <sentcast/persistence/event_log.hpp>
#include <sentcast/predictor/online.hpp>
#include <sentcast/predictor/serialize.hpp>

#include <json.hpp>

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sentcast::engine {

using persistence::RecordKind;

/// A log record before it has a sequence number.
struct Draft {
    RecordKind kind;
    nlohmann::json data;

    friend bool operator==(const Draft&, const Draft&) = default;
};

/// Everything that determines a bootstrap besides the history itself.
struct BootstrapParams {
    std::string predictor = "gbrt";
    predictor::Hyperparams hyperparams;
    std::uint64_t seed = 0;
    std::size_t rolling_window = features::kRollingWindow;

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"predictor", predictor},
                {"hyperparams", predictor::to_json(hyperparams)},
                {"seed", seed},
                {"rolling_window", rolling_window}};
    }

    static BootstrapParams from_json(const nlohmann::json& j) {
        return BootstrapParams{j.at("predictor").get<std::string>(),
                               predictor::hyperparams_from_json(j.at("hyperparams")), j.at("seed").get<std::uint64_t>(),
                               j.at("rolling_window").get<std::size_t>()};
    }
};

/// A forecast waiting for its target window to close.
struct PendingPrediction {
    WindowKey window{}; ///< target window
    double predicted = 0.0;
    double naive = 0.0;
    std::uint64_t model_version = 0;
    features::FeatureVector features;

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"window", format_window(window)},
                {"predicted", predicted},
                {"naive", naive},
                {"model_version", model_version},
                {"features", predictor::to_json(features)}};
    }

    static PendingPrediction from_json(const nlohmann::json& j) {
        return PendingPrediction{window_key(parse_timestamp(j.at("window").get<std::string>())),
                                 j.at("predicted").get<double>(), j.at("naive").get<double>(),
                                 j.at("model_version").get<std::uint64_t>(),
                                 predictor::feature_vector_from_json(j.at("features"))};
    }
};

inline nlohmann::json window_to_json(const AlignedWindow& w, std::string_view phase) {
    nlohmann::json bar = nullptr;
    if (w.bar) {
        bar = {w.bar->open, w.bar->high, w.bar->low, w.bar->close};
    }
    return {{"window", format_window(w.window)},
            {"score_sum", w.score_sum},
            {"tweet_count", w.tweet_count},
            {"bar", bar},
            {"phase", phase}};
}

inline AlignedWindow window_from_json(const nlohmann::json& j) {
    AlignedWindow w;
    w.window = window_key(parse_timestamp(j.at("window").get<std::string>()));
    w.score_sum = j.at("score_sum").get<double>();
    w.tweet_count = j.at("tweet_count").get<std::int64_t>();
    const auto& bar = j.at("bar");
    if (!bar.is_null()) {
        w.bar = PriceBar{w.window, bar.at(0).get<double>(), bar.at(1).get<double>(), bar.at(2).get<double>(),
                         bar.at(3).get<double>()};
    }
    return w;
}

struct BootstrapSummary {
    std::size_t examples = 0;
    double training_rmse = 0.0;
};

/// The deterministic per-window state machine shared by live operation and recovery.
///
/// For each closed window t with a price: log the window, settle the pending forecast
/// for t and learn from it, then forecast t+1 from t's features. A window without a bar
/// reuses the previous close. A window that does not follow the previous one resets the
/// feature buffers and drops the pending forecast.
class Pipeline {
public:
    Pipeline() = default;

    Pipeline(const Pipeline& other) { *this = other; }
    Pipeline& operator=(const Pipeline& other) {
        if (this != &other) {
            model_ = other.model_ ? other.model_->clone() : nullptr;
            builder_ = other.builder_;
            last_window_ = other.last_window_;
            last_close_ = other.last_close_;
            pending_ = other.pending_;
            stream_windows_ = other.stream_windows_;
            completed_ = other.completed_;
            params_ = other.params_;
        }
        return *this;
    }
    Pipeline(Pipeline&&) noexcept = default;
    Pipeline& operator=(Pipeline&&) noexcept = default;

    [[nodiscard]] bool bootstrapped() const noexcept { return model_ != nullptr; }
    [[nodiscard]] std::optional<WindowKey> last_window() const noexcept { return last_window_; }
    [[nodiscard]] const std::optional<PendingPrediction>& pending() const noexcept { return pending_; }
    [[nodiscard]] std::uint64_t stream_windows() const noexcept { return stream_windows_; }
    [[nodiscard]] std::uint64_t completed() const noexcept { return completed_; }
    [[nodiscard]] const std::optional<BootstrapParams>& params() const noexcept { return params_; }
    [[nodiscard]] const predictor::OnlinePredictor& model() const {
        if (!model_) {
            throw PreconditionError("no bootstrap state");
        }
        return *model_;
    }

    /// Trains on `history` and forecasts the window after it. Returns the history records
    /// followed by that forecast.
    std::vector<Draft> bootstrap(std::span<const AlignedWindow> history, const BootstrapParams& params,
                                 BootstrapSummary* summary = nullptr) {
        if (model_) {
            throw PreconditionError("already bootstrapped");
        }
        std::vector<Draft> drafts;
        for (const auto& w : history) {
            drafts.push_back({RecordKind::closed_window, window_to_json(w, "history")});
        }
        auto filled = features::fill_gaps(history);
        auto examples = features::label_windows(filled, params.rolling_window);
        if (examples.size() < 2) {
            throw DataError("bootstrap needs at least 2 labeled examples, history yields " +
                            std::to_string(examples.size()));
        }
        auto model = predictor::make_predictor(params.predictor, params.hyperparams, params.seed);
        model->bootstrap(examples);

        features::FeatureBuilder builder(params.rolling_window);
        features::FeatureVector last_features;
        for (const auto& w : filled) {
            last_features = builder.push(w);
        }
        if (summary != nullptr) {
            double se = 0.0;
            for (const auto& e : examples) {
                double d = model->predict(e.features) - e.target;
                se += d * d;
            }
            *summary = {examples.size(), std::sqrt(se / static_cast<double>(examples.size()))};
        }
        model_ = std::move(model);
        builder_ = std::move(builder);
        params_ = params;
        last_window_ = filled.back().window;
        last_close_ = filled.back().bar->close;
        drafts.push_back(forecast(last_features, *last_close_));
        return drafts;
    }

    /// Processes one closed stream window. Windows at or before the last processed one
    /// produce nothing.
    std::vector<Draft> step(const AlignedWindow& w, const ingest::WarningSink& warn = {}) {
        if (!model_) {
            throw PreconditionError("no bootstrap state; run bootstrap first");
        }
        if (last_window_ && w.window <= *last_window_) {
            return {};
        }
        if (last_window_ && w.window != last_window_->next()) {
            if (warn) {
                warn("window " + format_window(w.window) + " does not follow " + format_window(*last_window_) +
                     "; feature buffers reset" + (pending_ ? ", pending forecast dropped" : ""));
            }
            builder_.reset();
            pending_.reset();
            last_close_.reset();
        }
        std::vector<Draft> drafts;
        auto record = window_to_json(w, "stream");
        std::optional<double> close;
        if (w.bar) {
            close = w.bar->close;
        } else if (last_close_) {
            close = *last_close_;
        }
        record["close"] = close ? nlohmann::json(*close) : nlohmann::json(nullptr);
        drafts.push_back({RecordKind::closed_window, std::move(record)});
        last_window_ = w.window;
        ++stream_windows_;
        if (!close) {
            return drafts;
        }

        if (pending_) {
            const auto& p = *pending_;
            drafts.push_back({RecordKind::actual,
                              {{"window", format_window(p.window)},
                               {"predicted", p.predicted},
                               {"naive", p.naive},
                               {"actual", *close},
                               {"error", p.predicted - *close},
                               {"abs_error", std::fabs(p.predicted - *close)},
                               {"model_version", p.model_version}}});
            model_->update(predictor::LabeledExample{p.features, *close});
            ++completed_;
            pending_.reset();
        }

        AlignedWindow effective = w;
        if (!effective.bar) {
            effective.bar = PriceBar::flat(w.window, *close);
        }
        auto f = builder_.push(effective);
        last_close_ = close;
        drafts.push_back(forecast(f, *close));
        return drafts;
    }

    [[nodiscard]] nlohmann::json snapshot() const {
        auto opt_window = [](const std::optional<WindowKey>& w) {
            return w ? nlohmann::json(format_window(*w)) : nlohmann::json(nullptr);
        };
        return {{"model", model_ ? model_->to_json() : nlohmann::json(nullptr)},
                {"features",
                 {{"rolling_window", builder_.window_length()},
                  {"last_window", opt_window(builder_.last_window())},
                  {"closes", builder_.closes()},
                  {"scores", builder_.scores()}}},
                {"engine",
                 {{"last_window", opt_window(last_window_)},
                  {"last_close", last_close_ ? nlohmann::json(*last_close_) : nlohmann::json(nullptr)},
                  {"pending", pending_ ? pending_->to_json() : nlohmann::json(nullptr)},
                  {"stream_windows", stream_windows_},
                  {"completed", completed_},
                  {"params", params_ ? params_->to_json() : nlohmann::json(nullptr)}}}};
    }

    static Pipeline restore(const nlohmann::json& j) {
        try {
            auto opt_window = [](const nlohmann::json& v) -> std::optional<WindowKey> {
                if (v.is_null()) {
                    return std::nullopt;
                }
                return window_key(parse_timestamp(v.get<std::string>()));
            };
            Pipeline p;
            if (!j.at("model").is_null()) {
                p.model_ = predictor::predictor_from_json(j.at("model"));
            }
            const auto& f = j.at("features");
            p.builder_ = features::FeatureBuilder::restore(
                f.at("rolling_window").get<std::size_t>(), opt_window(f.at("last_window")),
                f.at("closes").get<std::deque<double>>(), f.at("scores").get<std::deque<double>>());
            const auto& e = j.at("engine");
            p.last_window_ = opt_window(e.at("last_window"));
            if (!e.at("last_close").is_null()) {
                p.last_close_ = e.at("last_close").get<double>();
            }
            if (!e.at("pending").is_null()) {
                p.pending_ = PendingPrediction::from_json(e.at("pending"));
            }
            p.stream_windows_ = e.at("stream_windows").get<std::uint64_t>();
            p.completed_ = e.at("completed").get<std::uint64_t>();
            if (!e.at("params").is_null()) {
                p.params_ = BootstrapParams::from_json(e.at("params"));
            }
            return p;
        } catch (const nlohmann::json::exception& ex) {
            throw CorruptionError(std::string("malformed engine snapshot: ") + ex.what());
        } catch (const DataError& ex) {
            throw CorruptionError(std::string("malformed engine snapshot: ") + ex.what());
        }
    }

private:
    Draft forecast(const features::FeatureVector& f, double close) {
        PendingPrediction p{f.window.next(), model_->predict(f), predictor::naive_predict(close), model_->version(), f};
        pending_ = p;
        return {RecordKind::prediction, p.to_json()};
    }

    std::unique_ptr<predictor::OnlinePredictor> model_;
    features::FeatureBuilder builder_;
    std::optional<WindowKey> last_window_;
    std::optional<double> last_close_;
    std::optional<PendingPrediction> pending_;
    std::uint64_t stream_windows_ = 0;
    std::uint64_t completed_ = 0;
    std::optional<BootstrapParams> params_;
};

} // namespace sentcast::engine
