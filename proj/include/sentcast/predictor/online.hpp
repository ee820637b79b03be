#pragma once

#include <sentcast/predictor/model.hpp>
#include <sentcast/predictor/serialize.hpp>

#include <array>
#include <cmath>
#include <deque>
#include <memory>
#include <span>
#include <string>

namespace sentcast::predictor {

/// What the streaming pipeline needs from a model. Implementations must be
/// deterministic and serialize to a self-describing JSON blob.
class OnlinePredictor {
public:
    virtual ~OnlinePredictor() = default;

    [[nodiscard]] virtual std::string kind() const = 0;
    [[nodiscard]] virtual bool bootstrapped() const = 0;
    [[nodiscard]] virtual std::uint64_t version() const = 0;
    virtual void bootstrap(std::span<const LabeledExample> examples) = 0;
    [[nodiscard]] virtual double predict(const features::FeatureVector& f) const = 0;
    virtual void update(const LabeledExample& example) = 0;
    [[nodiscard]] virtual nlohmann::json to_json() const = 0;
    [[nodiscard]] virtual std::unique_ptr<OnlinePredictor> clone() const = 0;
};

class BoostedPredictor final : public OnlinePredictor {
public:
    BoostedPredictor(const Hyperparams& hp, std::uint64_t seed) : state_(hp, seed) {}
    explicit BoostedPredictor(ModelState state) : state_(std::move(state)) {}

    [[nodiscard]] std::string kind() const override { return "gbrt"; }
    [[nodiscard]] bool bootstrapped() const override { return state_.bootstrapped(); }
    [[nodiscard]] std::uint64_t version() const override { return state_.version(); }
    void bootstrap(std::span<const LabeledExample> examples) override { state_.bootstrap(examples); }
    [[nodiscard]] double predict(const features::FeatureVector& f) const override { return state_.predict(f); }
    void update(const LabeledExample& example) override { state_.update(example); }
    [[nodiscard]] nlohmann::json to_json() const override { return predictor::to_json(state_); }
    [[nodiscard]] std::unique_ptr<OnlinePredictor> clone() const override {
        return std::make_unique<BoostedPredictor>(*this);
    }

    [[nodiscard]] const ModelState& state() const noexcept { return state_; }

private:
    ModelState state_;
};

/// Ridge regression of (target - previous_close) on standardized features,
/// refit over a ring buffer after every update. A cheap reference model.
class LinearPredictor final : public OnlinePredictor {
public:
    static constexpr std::size_t kDim = features::FeatureVector::kCount;

    explicit LinearPredictor(std::size_t buffer_capacity = 10'000, double ridge = 1e-6)
        : capacity_(buffer_capacity), ridge_(ridge) {}

    [[nodiscard]] std::string kind() const override { return "linear"; }
    [[nodiscard]] bool bootstrapped() const override { return bootstrapped_; }
    [[nodiscard]] std::uint64_t version() const override { return version_; }

    void bootstrap(std::span<const LabeledExample> examples) override {
        if (examples.size() < 2) {
            throw DataError("bootstrap needs at least 2 labeled examples");
        }
        for (const auto& e : examples) {
            if (!detail::valid_example(e)) {
                throw DataError("bootstrap example is not finite");
            }
        }
        buffer_.clear();
        std::size_t keep = std::min(capacity_, examples.size());
        buffer_.assign(examples.end() - static_cast<std::ptrdiff_t>(keep), examples.end());
        fit();
        bootstrapped_ = true;
        version_ = 0;
    }

    [[nodiscard]] double predict(const features::FeatureVector& f) const override {
        if (!bootstrapped_) {
            throw PreconditionError("model has not been bootstrapped");
        }
        double p = f.previous_close + intercept_;
        for (std::size_t k = 0; k < kDim; ++k) {
            p += weights_[k] * (f[k] - mean_[k]) / scale_[k];
        }
        return p;
    }

    void update(const LabeledExample& example) override {
        if (!bootstrapped_) {
            throw PreconditionError("model has not been bootstrapped");
        }
        if (!detail::valid_example(example)) {
            throw DataError("update example is not finite");
        }
        buffer_.push_back(example);
        if (buffer_.size() > capacity_) {
            buffer_.pop_front();
        }
        fit();
        ++version_;
    }

    [[nodiscard]] nlohmann::json to_json() const override {
        auto buffer = nlohmann::json::array();
        for (const auto& e : buffer_) {
            auto row = predictor::to_json(e.features);
            row.push_back(e.target);
            buffer.push_back(std::move(row));
        }
        return {{"format", "sentcast-linear"}, {"format_version", 1},        {"capacity", capacity_},
                {"ridge", ridge_},             {"version", version_},        {"bootstrapped", bootstrapped_},
                {"buffer", std::move(buffer)}};
    }

    static std::unique_ptr<LinearPredictor> from_json(const nlohmann::json& j) {
        auto p = std::make_unique<LinearPredictor>(j.at("capacity").get<std::size_t>(), j.at("ridge").get<double>());
        for (const auto& row : j.at("buffer")) {
            nlohmann::json fv(row.begin(), row.begin() + 5);
            p->buffer_.push_back(LabeledExample{feature_vector_from_json(fv), row.at(5).get<double>()});
        }
        p->version_ = j.at("version").get<std::uint64_t>();
        p->bootstrapped_ = j.at("bootstrapped").get<bool>();
        if (p->bootstrapped_) {
            p->fit();
        }
        return p;
    }

    [[nodiscard]] std::unique_ptr<OnlinePredictor> clone() const override {
        return std::make_unique<LinearPredictor>(*this);
    }

private:
    void fit() {
        const auto n = static_cast<double>(buffer_.size());
        mean_.fill(0.0);
        scale_.fill(0.0);
        double y_mean = 0.0;
        for (const auto& e : buffer_) {
            for (std::size_t k = 0; k < kDim; ++k) {
                mean_[k] += e.features[k];
            }
            y_mean += e.target - e.features.previous_close;
        }
        for (auto& m : mean_) {
            m /= n;
        }
        y_mean /= n;
        for (const auto& e : buffer_) {
            for (std::size_t k = 0; k < kDim; ++k) {
                double d = e.features[k] - mean_[k];
                scale_[k] += d * d;
            }
        }
        for (auto& s : scale_) {
            s = std::sqrt(s / n);
            if (!(s > 0.0)) {
                s = 1.0;
            }
        }
        // Normal equations on centered, scaled inputs: (Z'Z + ridge I) w = Z'y.
        std::array<std::array<double, kDim + 1>, kDim> a{};
        for (const auto& e : buffer_) {
            std::array<double, kDim> z{};
            for (std::size_t k = 0; k < kDim; ++k) {
                z[k] = (e.features[k] - mean_[k]) / scale_[k];
            }
            double y = e.target - e.features.previous_close - y_mean;
            for (std::size_t r = 0; r < kDim; ++r) {
                for (std::size_t c = 0; c < kDim; ++c) {
                    a[r][c] += z[r] * z[c];
                }
                a[r][kDim] += z[r] * y;
            }
        }
        for (std::size_t r = 0; r < kDim; ++r) {
            a[r][r] += ridge_ * n + 1e-12;
        }
        for (std::size_t col = 0; col < kDim; ++col) {
            std::size_t pivot = col;
            for (std::size_t r = col + 1; r < kDim; ++r) {
                if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) {
                    pivot = r;
                }
            }
            std::swap(a[col], a[pivot]);
            for (std::size_t r = 0; r < kDim; ++r) {
                if (r == col) {
                    continue;
                }
                double factor = a[r][col] / a[col][col];
                for (std::size_t c = col; c <= kDim; ++c) {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
        for (std::size_t k = 0; k < kDim; ++k) {
            weights_[k] = a[k][kDim] / a[k][k];
        }
        intercept_ = y_mean;
    }

    std::size_t capacity_;
    double ridge_;
    std::uint64_t version_ = 0;
    bool bootstrapped_ = false;
    std::deque<LabeledExample> buffer_;
    std::array<double, kDim> mean_{};
    std::array<double, kDim> scale_{};
    std::array<double, kDim> weights_{};
    double intercept_ = 0.0;
};

/// Builds an empty predictor of the named kind ("gbrt" or "linear").
inline std::unique_ptr<OnlinePredictor> make_predictor(const std::string& kind, const Hyperparams& hp,
                                                       std::uint64_t seed) {
    if (kind == "gbrt") {
        return std::make_unique<BoostedPredictor>(hp, seed);
    }
    if (kind == "linear") {
        return std::make_unique<LinearPredictor>(hp.buffer_capacity);
    }
    throw ConfigError("unknown model kind '" + kind + "' (expected gbrt or linear)");
}

/// Inverse of OnlinePredictor::to_json.
inline std::unique_ptr<OnlinePredictor> predictor_from_json(const nlohmann::json& j) {
    try {
        const auto format = j.at("format").get<std::string>();
        if (format == "sentcast-gbrt") {
            return std::make_unique<BoostedPredictor>(model_state_from_json(j));
        }
        if (format == "sentcast-linear") {
            return LinearPredictor::from_json(j);
        }
        throw CorruptionError("unknown model format '" + format + "'");
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("malformed model blob: ") + e.what());
    }
}

} // namespace sentcast::predictor
