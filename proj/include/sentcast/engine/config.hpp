#pragma once

#include <sentcast/core/error.hpp>
#include <sentcast/features/features.hpp>
#include <sentcast/ingest/replay.hpp>
#include <sentcast/ingest/synthetic.hpp>
#include <sentcast/ingest/watermark.hpp>
#include <sentcast/persistence/event_log.hpp>
#include <sentcast/predictor/model.hpp>
#include <sentcast/sentiment/lexicon.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

namespace sentcast::engine {

enum class SourceKind { synthetic, replay };

struct EngineConfig {
    std::filesystem::path data_dir = "sentcast-data";

    std::optional<std::filesystem::path> valences; ///< unset: the bundled lexicon
    std::optional<std::filesystem::path> boosters;
    std::optional<std::filesystem::path> negators;

    std::chrono::milliseconds allowed_lateness = ingest::kDefaultAllowedLateness;
    std::size_t rolling_window = features::kRollingWindow;

    std::string predictor = "gbrt";
    predictor::Hyperparams hyperparams;
    std::uint64_t seed = 42;

    std::size_t checkpoint_every = 60;
    persistence::Durability durability = persistence::Durability::per_window;
    ingest::Speed speed = ingest::Speed::max();

    SourceKind source = SourceKind::synthetic;
    std::filesystem::path stream_tweets;
    std::filesystem::path stream_prices;

    std::filesystem::path bootstrap_tweets;
    std::filesystem::path bootstrap_prices;
    std::size_t bootstrap_windows = 500; ///< history length for a synthetic source

    ingest::SyntheticConfig synthetic;

    /// Checks ranges; with `check_paths`, also that every referenced input file exists.
    void validate(bool check_paths) const {
        hyperparams.validate();
        synthetic.validate();
        if (rolling_window == 0) {
            throw ConfigError("features.rolling_window must be positive");
        }
        if (checkpoint_every == 0) {
            throw ConfigError("engine.checkpoint_every must be positive");
        }
        if (allowed_lateness.count() < 0) {
            throw ConfigError("engine.allowed_lateness_seconds must be non-negative");
        }
        if (predictor != "gbrt" && predictor != "linear") {
            throw ConfigError("model.kind must be gbrt or linear");
        }
        if (source == SourceKind::synthetic && bootstrap_windows < 3) {
            throw ConfigError("bootstrap.windows must be at least 3");
        }
        if (!check_paths) {
            return;
        }
        auto must_exist = [](const std::filesystem::path& p, const char* what) {
            if (p.empty()) {
                throw ConfigError(std::string(what) + " is not set");
            }
            if (!std::filesystem::exists(p)) {
                throw ConfigError(std::string(what) + " does not exist: " + p.string());
            }
        };
        for (const auto& [p, what] : {std::pair{valences, "lexicon.valences"}, std::pair{boosters, "lexicon.boosters"},
                                      std::pair{negators, "lexicon.negators"}}) {
            if (p) {
                must_exist(*p, what);
            }
        }
        if (source == SourceKind::replay) {
            must_exist(stream_tweets, "source.tweets");
            must_exist(stream_prices, "source.prices");
        }
    }

    [[nodiscard]] sentiment::Lexicon lexicon() const {
        if (!valences && !boosters && !negators) {
            return sentiment::bundled_lexicon();
        }
        if (!valences || !boosters || !negators) {
            throw ConfigError("lexicon.valences, lexicon.boosters and lexicon.negators must be set together");
        }
        return sentiment::load_lexicon(valences->string(), boosters->string(), negators->string());
    }
};

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ConfigError("config key " + key + " has invalid value '" + text + "'");
    }
    return v;
}

inline const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"engine", {"data_dir", "allowed_lateness_seconds", "checkpoint_every", "durability", "speed"}},
        {"lexicon", {"valences", "boosters", "negators"}},
        {"features", {"rolling_window"}},
        {"model",
         {"kind", "seed", "max_depth", "learning_rate", "bootstrap_trees", "trees_per_update", "full_retrain_period",
          "buffer_capacity", "min_samples_leaf", "l2", "subsample", "anchor"}},
        {"source", {"type", "tweets", "prices"}},
        {"bootstrap", {"tweets", "prices", "windows"}},
        {"synthetic",
         {"n_windows", "lag_k", "signal_strength", "noise_sigma", "tweets_per_window_mean", "base_price", "seed",
          "start", "flip_at"}},
    };
    return keys;
}

} // namespace detail

/// Applies `section.key = value` pairs on top of `cfg`. Relative paths resolve against `base`.
inline void apply_setting(EngineConfig& cfg, const std::string& section, const std::string& key,
                          const std::string& value, const std::filesystem::path& base) {
    const std::string full = section + "." + key;
    auto path = [&] { return std::filesystem::path(value).is_absolute() ? std::filesystem::path(value) : base / value; };
    auto u64 = [&] { return detail::parse_number<std::uint64_t>(full, value); };
    auto i64 = [&] { return detail::parse_number<std::int64_t>(full, value); };
    auto real = [&] { return detail::parse_number<double>(full, value); };
    auto& hp = cfg.hyperparams;
    auto& syn = cfg.synthetic;

    if (section == "engine") {
        if (key == "data_dir") cfg.data_dir = path();
        else if (key == "allowed_lateness_seconds") cfg.allowed_lateness = std::chrono::milliseconds{std::llround(real() * 1000.0)};
        else if (key == "checkpoint_every") cfg.checkpoint_every = u64();
        else if (key == "durability") {
            if (value == "per_window") cfg.durability = persistence::Durability::per_window;
            else if (value == "relaxed") cfg.durability = persistence::Durability::relaxed;
            else throw ConfigError("engine.durability must be per_window or relaxed");
        } else if (key == "speed") cfg.speed = ingest::parse_speed(value);
    } else if (section == "lexicon") {
        if (key == "valences") cfg.valences = path();
        else if (key == "boosters") cfg.boosters = path();
        else if (key == "negators") cfg.negators = path();
    } else if (section == "features") {
        cfg.rolling_window = u64();
    } else if (section == "model") {
        if (key == "kind") cfg.predictor = value;
        else if (key == "seed") cfg.seed = u64();
        else if (key == "max_depth") hp.max_depth = static_cast<int>(i64());
        else if (key == "learning_rate") hp.learning_rate = real();
        else if (key == "bootstrap_trees") hp.bootstrap_trees = u64();
        else if (key == "trees_per_update") hp.trees_per_update = u64();
        else if (key == "full_retrain_period") hp.full_retrain_period = u64();
        else if (key == "buffer_capacity") hp.buffer_capacity = u64();
        else if (key == "min_samples_leaf") hp.min_samples_leaf = u64();
        else if (key == "l2") hp.l2 = real();
        else if (key == "subsample") hp.subsample = real();
        else if (key == "anchor") hp.anchor = predictor::anchor_from_string(value);
    } else if (section == "source") {
        if (key == "type") {
            if (value == "synthetic") cfg.source = SourceKind::synthetic;
            else if (value == "replay") cfg.source = SourceKind::replay;
            else throw ConfigError("source.type must be synthetic or replay");
        } else if (key == "tweets") cfg.stream_tweets = path();
        else if (key == "prices") cfg.stream_prices = path();
    } else if (section == "bootstrap") {
        if (key == "tweets") cfg.bootstrap_tweets = path();
        else if (key == "prices") cfg.bootstrap_prices = path();
        else if (key == "windows") cfg.bootstrap_windows = u64();
    } else if (section == "synthetic") {
        if (key == "n_windows") syn.n_windows = i64();
        else if (key == "lag_k") syn.lag_k = i64();
        else if (key == "signal_strength") syn.signal_strength = real();
        else if (key == "noise_sigma") syn.noise_sigma = real();
        else if (key == "tweets_per_window_mean") syn.tweets_per_window_mean = real();
        else if (key == "base_price") syn.base_price = real();
        else if (key == "seed") syn.seed = u64();
        else if (key == "flip_at") syn.flip_at = i64();
        else if (key == "start") {
            try {
                syn.start = parse_timestamp(value);
            } catch (const DataError& e) {
                throw ConfigError("synthetic.start: " + std::string(e.what()));
            }
        }
    }
}

/// Reads an INI file; unknown sections or keys are rejected.
inline EngineConfig load_config(const std::filesystem::path& file) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(file.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("cannot read config " + file.string() + ": " + e.message() + " (line " +
                          std::to_string(e.line()) + ")");
    }
    EngineConfig cfg;
    auto base = file.parent_path();
    const auto& known = detail::known_keys();
    for (const auto& [section, body] : tree) {
        auto it = known.find(section);
        if (it == known.end()) {
            throw ConfigError("unknown config section [" + section + "]");
        }
        for (const auto& [key, node] : body) {
            if (!it->second.contains(key)) {
                throw ConfigError("unknown config key " + section + "." + key);
            }
            apply_setting(cfg, section, key, node.get_value<std::string>(), base);
        }
    }
    return cfg;
}

} // namespace sentcast::engine
