#pragma once

#include <sentcast/analytics/report.hpp>
#include <sentcast/engine/config.hpp>
#include <sentcast/engine/session.hpp>
#include <sentcast/ingest/synthetic.hpp>

#include <atomic>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>

namespace sentcast::engine {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_data = 2, exit_io = 3 };

/// Where a command writes. Diagnostics go to `err`; results and `--json` progress to `out`.
struct CommandContext {
    std::ostream& out = std::cout;
    std::ostream& err = std::cerr;
    bool json = false;
    const std::atomic<bool>* stop = nullptr;
    std::function<void(FaultPoint, std::uint64_t)> fault;
};

/// Runs `body` and maps the error hierarchy onto exit codes, printing the diagnostic.
template <typename Body>
int run_command(std::ostream& err, Body&& body) {
    try {
        body();
        return exit_ok;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const CorruptionError& e) {
        err << "error: " << e.what();
        if (e.sequence_no()) {
            err << " (sequence_no " << *e.sequence_no() << ')';
        }
        err << '\n';
        return exit_io;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return exit_data;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_io;
    }
}

namespace detail {

inline SessionHooks hooks_for(const CommandContext& ctx) {
    SessionHooks hooks;
    hooks.warn = [&err = ctx.err](const std::string& msg) { err << "warning: " << msg << '\n'; };
    if (ctx.json) {
        hooks.progress = [&out = ctx.out](const nlohmann::ordered_json& line) { out << line.dump() << '\n'; };
    }
    hooks.fault = ctx.fault;
    return hooks;
}

/// History for a synthetic run: an independent draw that ends an hour before the stream starts.
inline ingest::SyntheticConfig synthetic_history_config(const EngineConfig& cfg) {
    auto h = cfg.synthetic;
    h.n_windows = static_cast<std::int64_t>(cfg.bootstrap_windows);
    h.seed = cfg.synthetic.seed + 1;
    h.flip_at = -1;
    h.start = cfg.synthetic.start - std::chrono::minutes(h.n_windows + 60);
    return h;
}

inline std::vector<AlignedWindow> history_windows(const EngineConfig& cfg, const sentiment::Lexicon& lex,
                                                  const ingest::WarningSink& warn) {
    if (!cfg.bootstrap_tweets.empty() || !cfg.bootstrap_prices.empty()) {
        if (cfg.bootstrap_tweets.empty() || cfg.bootstrap_prices.empty()) {
            throw ConfigError("bootstrap.tweets and bootstrap.prices must be set together");
        }
        ingest::ReplaySource source(cfg.bootstrap_tweets, cfg.bootstrap_prices, warn);
        return close_source(source, cfg.allowed_lateness, lex);
    }
    if (cfg.source != SourceKind::synthetic) {
        throw ConfigError("bootstrap.tweets and bootstrap.prices are required for a replay source");
    }
    auto data = ingest::synthesize(synthetic_history_config(cfg), lex);
    ingest::VectorSource source(ingest::synthetic_events(data));
    return close_source(source, cfg.allowed_lateness, lex);
}

inline std::unique_ptr<ingest::EventSource> stream_source(const EngineConfig& cfg, const sentiment::Lexicon& lex,
                                                          const ingest::WarningSink& warn) {
    if (cfg.source == SourceKind::replay) {
        return std::make_unique<ingest::ReplaySource>(cfg.stream_tweets, cfg.stream_prices, warn);
    }
    return std::make_unique<ingest::VectorSource>(ingest::synthetic_events(ingest::synthesize(cfg.synthetic, lex)));
}

inline void print_stream_summary(const CommandContext& ctx, const StreamStats& s, const Pipeline& p) {
    ctx.err << "streamed " << s.windows << " window(s), settled " << s.completed << " prediction(s), wrote "
            << s.checkpoints << " checkpoint(s); " << p.completed() << " completed in total";
    if (s.watermark.tweets_dropped_late + s.watermark.bars_dropped_late > 0) {
        ctx.err << "; dropped " << s.watermark.tweets_dropped_late << " late tweet(s) and "
                << s.watermark.bars_dropped_late << " late bar(s)";
    }
    if (s.interrupted) {
        ctx.err << "; interrupted";
    }
    ctx.err << '\n';
}

} // namespace detail

/// Trains the initial model from history files (or synthetic history) and writes the
/// first checkpoint.
inline BootstrapSummary cmd_bootstrap(const EngineConfig& cfg, const CommandContext& ctx = {}) {
    cfg.validate(true);
    auto hooks = detail::hooks_for(ctx);
    Session session(cfg, hooks);
    auto history = detail::history_windows(cfg, session.lexicon(), hooks.warn);
    auto summary = session.bootstrap(history);
    ctx.out << "bootstrapped on " << summary.examples << " examples; training RMSE "
            << format_decimal(summary.training_rmse) << '\n';
    return summary;
}

/// Streams the configured source into a bootstrapped data directory.
inline StreamStats cmd_stream(const EngineConfig& cfg, const CommandContext& ctx = {}) {
    cfg.validate(true);
    auto hooks = detail::hooks_for(ctx);
    Session session(cfg, hooks);
    auto source = detail::stream_source(cfg, session.lexicon(), hooks.warn);
    auto stats = session.stream(*source, ctx.stop);
    detail::print_stream_summary(ctx, stats, session.pipeline());
    return stats;
}

/// Restores state from the data directory and resumes streaming from where the log ends.
/// Windows already in the log are skipped.
inline std::optional<StreamStats> cmd_recover(const EngineConfig& cfg, const CommandContext& ctx = {}) {
    cfg.validate(true);
    auto hooks = detail::hooks_for(ctx);
    Session session(cfg, hooks);
    const auto& r = session.recovery();
    if (r.fresh) {
        hooks.warn("no committed state in " + cfg.data_dir.string() + "; starting from empty state");
    }
    ctx.err << "recovered " << (r.checkpoint ? "from checkpoint " + std::to_string(*r.checkpoint) : std::string("without checkpoint"))
            << ", replayed " << r.replayed_records << " record(s)\n";
    if (!session.pipeline().bootstrapped()) {
        hooks.warn("nothing to resume: no bootstrap state");
        return std::nullopt;
    }
    auto source = detail::stream_source(cfg, session.lexicon(), hooks.warn);
    auto stats = session.stream(*source, ctx.stop);
    detail::print_stream_summary(ctx, stats, session.pipeline());
    return stats;
}

/// Writes the report files for the run recorded in the data directory.
inline void cmd_report(const EngineConfig& cfg, const std::filesystem::path& out_dir, const CommandContext& ctx = {}) {
    if (!std::filesystem::exists(cfg.data_dir / persistence::EventLog::kFileName)) {
        throw DataError("no event log in " + cfg.data_dir.string());
    }
    auto run = run_data_from_log(cfg.data_dir);
    if (run.predictions.empty()) {
        throw DataError("the log in " + cfg.data_dir.string() + " has no predictions");
    }
    analytics::emit_report(run, out_dir);
    ctx.out << "wrote report for " << run.windows.size() << " window(s) to " << out_dir.string() << '\n';
}

/// Writes the synthetic history and stream as replay files.
inline void cmd_synth_gen(const EngineConfig& cfg, const std::filesystem::path& out_dir, const CommandContext& ctx = {}) {
    cfg.validate(false);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    }
    auto lex = cfg.lexicon();
    auto history = ingest::synthesize(detail::synthetic_history_config(cfg), lex);
    auto stream = ingest::synthesize(cfg.synthetic, lex);
    ingest::write_replay_files(history, out_dir / "bootstrap_tweets.jsonl", out_dir / "bootstrap_prices.csv");
    ingest::write_replay_files(stream, out_dir / "tweets.jsonl", out_dir / "prices.csv");
    ctx.out << "wrote " << history.tweets.size() + stream.tweets.size() << " tweets and "
            << history.bars.size() + stream.bars.size() << " bars to " << out_dir.string() << '\n';
}

} // namespace sentcast::engine
