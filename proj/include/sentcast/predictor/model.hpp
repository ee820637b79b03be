#pragma once

#include <sentcast/core/error.hpp>
#include <sentcast/features/features.hpp>
#include <sentcast/predictor/tree.hpp>

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace sentcast::predictor {

using features::LabeledExample;

/// Where each prediction starts before trees are added.
enum class Anchor {
    previous_close, ///< boost from the example's own previous close
    none,           ///< boost from a constant, the classic formulation
};

inline std::string to_string(Anchor a) { return a == Anchor::previous_close ? "previous_close" : "none"; }

inline Anchor anchor_from_string(const std::string& s) {
    if (s == "previous_close") {
        return Anchor::previous_close;
    }
    if (s == "none") {
        return Anchor::none;
    }
    throw ConfigError("unknown anchor '" + s + "' (expected previous_close or none)");
}

struct Hyperparams {
    int max_depth = 3;
    double learning_rate = 0.1;
    std::size_t bootstrap_trees = 100;
    std::size_t trees_per_update = 1;
    std::size_t full_retrain_period = 60; ///< 0 disables periodic retraining
    std::size_t buffer_capacity = 10'000;
    std::size_t min_samples_leaf = 20;
    double l2 = 1.0;
    double subsample = 1.0; ///< row fraction per tree; below 1 the seed drives sampling
    Anchor anchor = Anchor::previous_close;

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;

    void validate() const {
        if (max_depth < 1 || max_depth > 16) {
            throw ConfigError("max_depth must be in [1, 16]");
        }
        if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
            throw ConfigError("learning_rate must be in (0, 1]");
        }
        if (bootstrap_trees == 0) {
            throw ConfigError("bootstrap_trees must be positive");
        }
        if (buffer_capacity < 2) {
            throw ConfigError("buffer_capacity must be at least 2");
        }
        if (!(l2 >= 0.0) || !std::isfinite(l2)) {
            throw ConfigError("l2 must be non-negative");
        }
        if (!(subsample > 0.0 && subsample <= 1.0)) {
            throw ConfigError("subsample must be in (0, 1]");
        }
        if (trees_per_update == 0 && full_retrain_period == 0) {
            throw ConfigError("trees_per_update and full_retrain_period cannot both be 0");
        }
    }

    [[nodiscard]] TreeParams tree_params() const { return TreeParams{max_depth, min_samples_leaf, l2}; }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline bool valid_example(const LabeledExample& e) {
    return e.features.finite() && std::isfinite(e.target) && e.target >= 0.0;
}

} // namespace detail

/// Online gradient-boosted tree regressor.
///
/// Holds the ensemble, a ring buffer of the most recent labeled examples and the
/// counters that make training reproducible: the tree for the k-th fit draws its
/// row sample from a generator keyed on (seed, k), so the ensemble is a pure
/// function of seed, hyperparameters and the example history.
class ModelState {
public:
    ModelState() = default;
    ModelState(Hyperparams hp, std::uint64_t seed) : hp_(hp), seed_(seed) { hp_.validate(); }

    [[nodiscard]] const Hyperparams& hyperparams() const noexcept { return hp_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t version() const noexcept { return version_; }
    [[nodiscard]] bool bootstrapped() const noexcept { return bootstrapped_; }
    [[nodiscard]] const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
    [[nodiscard]] const std::deque<LabeledExample>& buffer() const noexcept { return buffer_; }
    [[nodiscard]] double base_score() const noexcept { return base_; }
    [[nodiscard]] std::uint64_t trees_fit() const noexcept { return trees_fit_; }
    [[nodiscard]] std::size_t updates_since_retrain() const noexcept { return updates_since_retrain_; }

    /// Sum of anchor, base score and shrunk tree outputs, in that order.
    [[nodiscard]] double predict(const features::FeatureVector& f) const {
        if (!bootstrapped_) {
            throw PreconditionError("model has not been bootstrapped");
        }
        return raw_predict(f);
    }

    void bootstrap(std::span<const LabeledExample> examples) {
        if (examples.size() < 2) {
            throw DataError("bootstrap needs at least 2 labeled examples, got " + std::to_string(examples.size()));
        }
        for (const auto& e : examples) {
            if (!detail::valid_example(e)) {
                throw DataError("bootstrap example for window " + format_window(e.features.window) +
                                " is not finite");
            }
        }
        std::vector<features::FeatureVector> x;
        std::vector<double> y;
        x.reserve(examples.size());
        y.reserve(examples.size());
        for (const auto& e : examples) {
            x.push_back(e.features);
            y.push_back(e.target);
        }
        fit_from_scratch(x, y);
        buffer_.clear();
        std::size_t keep = std::min(hp_.buffer_capacity, examples.size());
        for (std::size_t i = examples.size() - keep; i < examples.size(); ++i) {
            buffer_.push_back(examples[i]);
        }
        bootstrapped_ = true;
        version_ = 0;
        updates_since_retrain_ = 0;
        cache_valid_ = false;
    }

    /// Appends the example and refits: warm-start trees normally, a full
    /// rebuild over the buffer every `full_retrain_period` updates.
    void update(const LabeledExample& example) {
        if (!bootstrapped_) {
            throw PreconditionError("model has not been bootstrapped");
        }
        if (!detail::valid_example(example)) {
            throw DataError("update example for window " + format_window(example.features.window) +
                            " is not finite");
        }
        ensure_cache();
        buffer_.push_back(example);
        cache_.push_back(raw_predict(example.features));
        if (buffer_.size() > hp_.buffer_capacity) {
            buffer_.pop_front();
            cache_.pop_front();
        }
        ++version_;
        ++updates_since_retrain_;

        std::vector<features::FeatureVector> x(buffer_.size());
        std::vector<double> y(buffer_.size());
        for (std::size_t i = 0; i < buffer_.size(); ++i) {
            x[i] = buffer_[i].features;
            y[i] = buffer_[i].target;
        }
        if (hp_.full_retrain_period > 0 && updates_since_retrain_ >= hp_.full_retrain_period) {
            fit_from_scratch(x, y);
            updates_since_retrain_ = 0;
            cache_valid_ = false;
            return;
        }
        std::vector<double> residual(buffer_.size());
        const SortedColumns columns(x);
        for (std::size_t t = 0; t < hp_.trees_per_update; ++t) {
            for (std::size_t i = 0; i < buffer_.size(); ++i) {
                residual[i] = y[i] - cache_[i];
            }
            add_tree(x, residual, columns);
            const RegressionTree& tree = trees_.back();
            for (std::size_t i = 0; i < buffer_.size(); ++i) {
                cache_[i] += hp_.learning_rate * tree.predict(x[i]);
            }
        }
    }

    /// Reassembles a state from its serialized parts.
    static ModelState restore(Hyperparams hp, std::uint64_t seed, std::uint64_t version, bool bootstrapped,
                              double base, std::uint64_t trees_fit, std::size_t updates_since_retrain,
                              std::vector<RegressionTree> trees, std::deque<LabeledExample> buffer) {
        ModelState s(hp, seed);
        if (buffer.size() > hp.buffer_capacity) {
            throw CorruptionError("model buffer exceeds its capacity");
        }
        s.version_ = version;
        s.bootstrapped_ = bootstrapped;
        s.base_ = base;
        s.trees_fit_ = trees_fit;
        s.updates_since_retrain_ = updates_since_retrain;
        s.trees_ = std::move(trees);
        s.buffer_ = std::move(buffer);
        return s;
    }

    friend bool operator==(const ModelState& a, const ModelState& b) {
        return a.hp_ == b.hp_ && a.seed_ == b.seed_ && a.version_ == b.version_ &&
               a.bootstrapped_ == b.bootstrapped_ && a.base_ == b.base_ && a.trees_fit_ == b.trees_fit_ &&
               a.updates_since_retrain_ == b.updates_since_retrain_ && a.trees_ == b.trees_ &&
               a.buffer_ == b.buffer_;
    }

private:
    [[nodiscard]] double anchor(const features::FeatureVector& f) const {
        return hp_.anchor == Anchor::previous_close ? f.previous_close : 0.0;
    }

    [[nodiscard]] double raw_predict(const features::FeatureVector& f) const {
        double p = anchor(f) + base_;
        for (const auto& t : trees_) {
            p += hp_.learning_rate * t.predict(f);
        }
        return p;
    }

    void ensure_cache() {
        if (cache_valid_) {
            return;
        }
        cache_.clear();
        for (const auto& e : buffer_) {
            cache_.push_back(raw_predict(e.features));
        }
        cache_valid_ = true;
    }

    std::vector<std::size_t> sample_rows(std::size_t n) const {
        std::vector<std::size_t> rows;
        rows.reserve(n);
        if (hp_.subsample >= 1.0) {
            for (std::size_t i = 0; i < n; ++i) {
                rows.push_back(i);
            }
            return rows;
        }
        std::uint64_t state = detail::splitmix64(seed_ ^ detail::splitmix64(trees_fit_));
        for (std::size_t i = 0; i < n; ++i) {
            state = detail::splitmix64(state);
            double u = static_cast<double>(state >> 11) * 0x1.0p-53;
            if (u < hp_.subsample) {
                rows.push_back(i);
            }
        }
        if (rows.empty()) {
            rows.push_back(static_cast<std::size_t>(state % n));
        }
        return rows;
    }

    void add_tree(std::span<const features::FeatureVector> x, std::span<const double> residual,
                  const SortedColumns& columns) {
        trees_.push_back(fit_tree(x, residual, sample_rows(x.size()), hp_.tree_params(), columns));
        ++trees_fit_;
    }

    void fit_from_scratch(std::span<const features::FeatureVector> x, std::span<const double> y) {
        trees_.clear();
        double offset = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            offset += y[i] - anchor(x[i]);
        }
        base_ = offset / static_cast<double>(x.size());

        std::vector<double> pred(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            pred[i] = anchor(x[i]) + base_;
        }
        std::vector<double> residual(x.size());
        const SortedColumns columns(x);
        for (std::size_t t = 0; t < hp_.bootstrap_trees; ++t) {
            for (std::size_t i = 0; i < x.size(); ++i) {
                residual[i] = y[i] - pred[i];
            }
            add_tree(x, residual, columns);
            const RegressionTree& tree = trees_.back();
            for (std::size_t i = 0; i < x.size(); ++i) {
                pred[i] += hp_.learning_rate * tree.predict(x[i]);
            }
        }
    }

    Hyperparams hp_{};
    std::uint64_t seed_ = 0;
    std::uint64_t version_ = 0;
    bool bootstrapped_ = false;
    double base_ = 0.0;
    std::uint64_t trees_fit_ = 0;
    std::size_t updates_since_retrain_ = 0;
    std::vector<RegressionTree> trees_;
    std::deque<LabeledExample> buffer_;

    // Current ensemble output for each buffered example, same summation order as
    // raw_predict. Derived data: never serialized, rebuilt on demand.
    std::deque<double> cache_;
    bool cache_valid_ = false;
};

/// Fits a fresh ensemble on historical examples.
inline ModelState bootstrap_train(std::span<const LabeledExample> examples, const Hyperparams& hp,
                                  std::uint64_t seed) {
    ModelState s(hp, seed);
    s.bootstrap(examples);
    return s;
}

inline double predict(const ModelState& state, const features::FeatureVector& f) { return state.predict(f); }

/// Returns the updated state; `state` is left untouched, also on error.
inline ModelState update(ModelState state, const LabeledExample& example) {
    state.update(example);
    return state;
}

/// Persistence baseline: tomorrow looks like today.
constexpr double naive_predict(double previous_close) noexcept { return previous_close; }

} // namespace sentcast::predictor
