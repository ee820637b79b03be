#pragma once

#include <sentcast/core/error.hpp>
#include <sentcast/predictor/model.hpp>

#include <json.hpp>

namespace sentcast::predictor {

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const Hyperparams& hp) {
    return {{"max_depth", hp.max_depth},
            {"learning_rate", hp.learning_rate},
            {"bootstrap_trees", hp.bootstrap_trees},
            {"trees_per_update", hp.trees_per_update},
            {"full_retrain_period", hp.full_retrain_period},
            {"buffer_capacity", hp.buffer_capacity},
            {"min_samples_leaf", hp.min_samples_leaf},
            {"l2", hp.l2},
            {"subsample", hp.subsample},
            {"anchor", to_string(hp.anchor)}};
}

inline Hyperparams hyperparams_from_json(const nlohmann::json& j) {
    Hyperparams hp;
    hp.max_depth = j.at("max_depth").get<int>();
    hp.learning_rate = j.at("learning_rate").get<double>();
    hp.bootstrap_trees = j.at("bootstrap_trees").get<std::size_t>();
    hp.trees_per_update = j.at("trees_per_update").get<std::size_t>();
    hp.full_retrain_period = j.at("full_retrain_period").get<std::size_t>();
    hp.buffer_capacity = j.at("buffer_capacity").get<std::size_t>();
    hp.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    hp.l2 = j.at("l2").get<double>();
    hp.subsample = j.at("subsample").get<double>();
    hp.anchor = anchor_from_string(j.at("anchor").get<std::string>());
    return hp;
}

/// [window, score_sum, previous_close, ma_close, ma_score]
inline nlohmann::json to_json(const features::FeatureVector& f) {
    return nlohmann::json::array({f.window.epoch_minute, f.score_sum, f.previous_close, f.ma_close, f.ma_score});
}

inline features::FeatureVector feature_vector_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 5) {
        throw CorruptionError("feature vector must be a 5-element array");
    }
    return features::FeatureVector{WindowKey{j[0].get<std::int64_t>()}, j[1].get<double>(), j[2].get<double>(),
                                   j[3].get<double>(), j[4].get<double>()};
}

inline nlohmann::json to_json(const RegressionTree& t) {
    auto nodes = nlohmann::json::array();
    for (const auto& n : t.nodes()) {
        if (n.leaf()) {
            nodes.push_back(nlohmann::json::array({n.value}));
        } else {
            nodes.push_back(nlohmann::json::array({n.feature, n.threshold, n.left, n.right, n.value}));
        }
    }
    return nodes;
}

inline RegressionTree tree_from_json(const nlohmann::json& j) {
    std::vector<RegressionTree::Node> nodes;
    for (const auto& n : j) {
        if (n.size() == 1) {
            nodes.push_back(RegressionTree::Node{-1, 0.0, -1, -1, n[0].get<double>()});
        } else if (n.size() == 5) {
            nodes.push_back(RegressionTree::Node{n[0].get<int>(), n[1].get<double>(), n[2].get<std::int32_t>(),
                                                 n[3].get<std::int32_t>(), n[4].get<double>()});
        } else {
            throw CorruptionError("malformed tree node");
        }
    }
    if (nodes.empty()) {
        throw CorruptionError("tree without nodes");
    }
    auto count = static_cast<std::int32_t>(nodes.size());
    for (const auto& n : nodes) {
        if (!n.leaf() && (n.feature >= static_cast<int>(features::FeatureVector::kCount) || n.left <= 0 ||
                          n.right <= 0 || n.left >= count || n.right >= count)) {
            throw CorruptionError("tree node references out of range");
        }
    }
    return RegressionTree(std::move(nodes));
}

/// Self-describing JSON: format tag and version, hyperparameters, seed, model
/// version, ensemble and buffer.
inline nlohmann::json to_json(const ModelState& s) {
    auto trees = nlohmann::json::array();
    for (const auto& t : s.trees()) {
        trees.push_back(to_json(t));
    }
    auto buffer = nlohmann::json::array();
    for (const auto& e : s.buffer()) {
        auto row = to_json(e.features);
        row.push_back(e.target);
        buffer.push_back(std::move(row));
    }
    return {{"format", "sentcast-gbrt"},
            {"format_version", kModelFormatVersion},
            {"hyperparams", to_json(s.hyperparams())},
            {"seed", s.seed()},
            {"version", s.version()},
            {"bootstrapped", s.bootstrapped()},
            {"base_score", s.base_score()},
            {"trees_fit", s.trees_fit()},
            {"updates_since_retrain", s.updates_since_retrain()},
            {"trees", std::move(trees)},
            {"buffer", std::move(buffer)}};
}

inline ModelState model_state_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "sentcast-gbrt") {
            throw CorruptionError("not a boosted-tree model blob");
        }
        if (j.at("format_version").get<int>() != kModelFormatVersion) {
            throw CorruptionError("unsupported model format version");
        }
        std::vector<RegressionTree> trees;
        for (const auto& t : j.at("trees")) {
            trees.push_back(tree_from_json(t));
        }
        std::deque<LabeledExample> buffer;
        for (const auto& row : j.at("buffer")) {
            if (!row.is_array() || row.size() != 6) {
                throw CorruptionError("malformed buffer row");
            }
            nlohmann::json fv(row.begin(), row.begin() + 5);
            buffer.push_back(LabeledExample{feature_vector_from_json(fv), row[5].get<double>()});
        }
        return ModelState::restore(hyperparams_from_json(j.at("hyperparams")), j.at("seed").get<std::uint64_t>(),
                                   j.at("version").get<std::uint64_t>(), j.at("bootstrapped").get<bool>(),
                                   j.at("base_score").get<double>(), j.at("trees_fit").get<std::uint64_t>(),
                                   j.at("updates_since_retrain").get<std::size_t>(), std::move(trees),
                                   std::move(buffer));
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("malformed model state: ") + e.what());
    } catch (const ConfigError& e) {
        throw CorruptionError(std::string("model state has invalid hyperparameters: ") + e.what());
    }
}

} // namespace sentcast::predictor
