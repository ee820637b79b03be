#pragma once

#include <sentcast/analytics/report.hpp>
#include <sentcast/engine/config.hpp>
#include <sentcast/engine/pipeline.hpp>
#include <sentcast/ingest/queue.hpp>
#include <sentcast/ingest/replay.hpp>
#include <sentcast/ingest/watermark.hpp>
#include <sentcast/persistence/checkpoint.hpp>
#include <sentcast/persistence/event_log.hpp>
#include <sentcast/persistence/recovery.hpp>
#include <sentcast/sentiment/score.hpp>

#include <atomic>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace sentcast::engine {

/// Points in the write path where a test harness may inject a crash.
enum class FaultPoint {
    group_buffered,   ///< a window's records are buffered but not written
    group_committed,  ///< a window's records are durable
    snapshot_written, ///< a snapshot file exists but its marker is not yet logged
};

struct SessionHooks {
    ingest::WarningSink warn = ingest::stderr_warnings();
    /// Called once per completed prediction with {window, predicted, actual, error}.
    std::function<void(const nlohmann::ordered_json&)> progress;
    std::function<void(FaultPoint, std::uint64_t stream_windows)> fault;
};

struct RecoveryReport {
    bool fresh = true; ///< no committed records were found
    std::optional<std::uint64_t> checkpoint; ///< sequence the restored snapshot covers
    std::size_t replayed_records = 0;
    bool torn_tail = false;
    std::uint64_t discarded_records = 0;
};

struct StreamStats {
    std::uint64_t windows = 0;     ///< windows that produced records in this run
    std::uint64_t completed = 0;   ///< predictions settled in this run
    std::uint64_t checkpoints = 0;
    ingest::WatermarkStats watermark;
    bool interrupted = false;
};

/// Windows produced by running a whole event source through the watermark closer.
inline std::vector<AlignedWindow> close_source(ingest::EventSource& source, std::chrono::milliseconds lateness,
                                               const sentiment::Lexicon& lex, ingest::WatermarkStats* stats = nullptr) {
    ingest::WindowCloser closer(lateness, [&lex](const Tweet& t) { return sentiment::tweet_score(t, lex); });
    std::vector<AlignedWindow> closed;
    while (auto ev = source.next()) {
        closer.push(*ev, closed);
    }
    closer.finish(closed);
    if (stats != nullptr) {
        *stats = closer.stats();
    }
    return closed;
}

/// Live-phase windows and predictions reconstructed from the committed log.
inline analytics::RunData run_data_from_log(const std::filesystem::path& data_dir) {
    auto scan = persistence::scan_log(data_dir / persistence::EventLog::kFileName);
    scan.records.resize(scan.committed_count());
    analytics::RunData run;
    std::map<WindowKey, analytics::PredictionRow> predictions;
    std::optional<WindowKey> last_prediction;
    try {
        for (const auto& r : scan.records) {
            const auto& d = r.data;
            switch (r.kind) {
            case RecordKind::closed_window: {
                if (d.at("phase") != "stream") {
                    break;
                }
                analytics::WindowRow row;
                row.window = window_key(parse_timestamp(d.at("window").get<std::string>()));
                row.score_sum = d.at("score_sum").get<double>();
                row.tweet_count = d.at("tweet_count").get<std::int64_t>();
                if (!d.at("close").is_null()) {
                    row.close = d.at("close").get<double>();
                }
                run.windows.push_back(row);
                break;
            }
            case RecordKind::prediction: {
                auto w = window_key(parse_timestamp(d.at("window").get<std::string>()));
                predictions[w] = {w, d.at("predicted").get<double>(), d.at("naive").get<double>(), std::nullopt};
                last_prediction = w;
                break;
            }
            case RecordKind::actual: {
                auto w = window_key(parse_timestamp(d.at("window").get<std::string>()));
                auto it = predictions.find(w);
                if (it == predictions.end()) {
                    throw CorruptionError("actual for " + format_window(w) + " has no prediction", r.seq);
                }
                it->second.actual = d.at("actual").get<double>();
                break;
            }
            case RecordKind::checkpoint_marker:
                break;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("malformed log record: ") + e.what());
    }
    // Forecasts dropped at a gap never complete; only the newest may legitimately be pending.
    for (auto& [w, row] : predictions) {
        if (row.completed() || w == last_prediction) {
            run.predictions.push_back(row);
        }
    }
    return run;
}

/// An open data directory: the log, its recovered pipeline state and the write path.
class Session {
public:
    /// Opens (or creates) the data directory and rebuilds the pipeline from the newest
    /// usable snapshot plus the committed log records after it.
    Session(EngineConfig cfg, SessionHooks hooks = {})
        : cfg_(std::move(cfg)), hooks_(std::move(hooks)), lexicon_(cfg_.lexicon()), plan_(plan(cfg_.data_dir)),
          log_(persistence::EventLog::open(cfg_.data_dir, cfg_.durability)) {
        recover();
    }

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    [[nodiscard]] const Pipeline& pipeline() const noexcept { return pipeline_; }
    [[nodiscard]] const RecoveryReport& recovery() const noexcept { return recovery_; }
    [[nodiscard]] const EngineConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const sentiment::Lexicon& lexicon() const noexcept { return lexicon_; }
    [[nodiscard]] std::uint64_t next_sequence() const noexcept { return log_.next_sequence(); }

    /// Trains the initial model on `history`, logs it as one group and writes the first checkpoint.
    BootstrapSummary bootstrap(std::span<const AlignedWindow> history) {
        if (pipeline_.bootstrapped()) {
            throw PreconditionError("data directory " + cfg_.data_dir.string() + " is already bootstrapped");
        }
        BootstrapParams params{cfg_.predictor, cfg_.hyperparams, cfg_.seed, cfg_.rolling_window};
        BootstrapSummary summary;
        Pipeline next;
        auto drafts = next.bootstrap(history, params, &summary);
        for (auto& d : drafts) {
            log_.append(d.kind, std::move(d.data));
        }
        pipeline_ = std::move(next);
        checkpoint(params.to_json());
        return summary;
    }

    /// Runs `source` through the watermark closer on an ingest thread and feeds closed
    /// windows to the pipeline. Stops at end of input or once `stop` is set, then drains
    /// the queue and checkpoints.
    StreamStats stream(ingest::EventSource& source, const std::atomic<bool>* stop = nullptr) {
        if (!pipeline_.bootstrapped()) {
            throw PreconditionError("no bootstrap state in " + cfg_.data_dir.string() + "; run bootstrap first");
        }
        StreamStats stats;
        ingest::BoundedQueue<AlignedWindow> queue(kWindowQueueCapacity);
        std::exception_ptr ingest_error;
        std::atomic<bool> interrupted{false};
        ingest::WatermarkStats watermark;

        std::jthread ingest_lane([&] {
            try {
                ingest::PacedSource paced(source, cfg_.speed);
                ingest::WindowCloser closer(cfg_.allowed_lateness,
                                            [this](const Tweet& t) { return sentiment::tweet_score(t, lexicon_); });
                std::vector<AlignedWindow> closed;
                auto forward = [&] {
                    for (auto& w : closed) {
                        if (!queue.push(std::move(w))) {
                            return false;
                        }
                    }
                    closed.clear();
                    return true;
                };
                bool open = true;
                while (open) {
                    if (stop != nullptr && stop->load()) {
                        interrupted = true;
                        break;
                    }
                    auto ev = paced.next();
                    if (!ev) {
                        closer.finish(closed);
                        open = false;
                    } else {
                        closer.push(*ev, closed);
                    }
                    if (!forward()) {
                        break;
                    }
                }
                watermark = closer.stats();
            } catch (...) {
                ingest_error = std::current_exception();
            }
            queue.close();
        });

        try {
            while (auto w = queue.pop()) {
                process(*w, stats);
            }
        } catch (...) {
            queue.close();
            throw;
        }
        ingest_lane.join();
        stats.watermark = watermark;
        stats.interrupted = interrupted;
        if (has_uncheckpointed_records()) {
            checkpoint();
            ++stats.checkpoints;
        }
        if (ingest_error) {
            std::rethrow_exception(ingest_error);
        }
        return stats;
    }

    /// Feeds already-closed windows through the pipeline on the calling thread.
    StreamStats stream_windows(std::span<const AlignedWindow> windows) {
        if (!pipeline_.bootstrapped()) {
            throw PreconditionError("no bootstrap state in " + cfg_.data_dir.string() + "; run bootstrap first");
        }
        StreamStats stats;
        for (const auto& w : windows) {
            process(w, stats);
        }
        if (has_uncheckpointed_records()) {
            checkpoint();
            ++stats.checkpoints;
        }
        return stats;
    }

    /// Writes a snapshot of the current state and logs its marker. `bootstrap` marks the
    /// group that created the model.
    void checkpoint(std::optional<nlohmann::json> bootstrap = std::nullopt) {
        const auto marker_seq = log_.next_sequence();
        persistence::Checkpoint c{marker_seq, covered_time(), pipeline_.snapshot()};
        persistence::write_checkpoint(cfg_.data_dir, c);
        fault(FaultPoint::snapshot_written);
        nlohmann::json marker{{"up_to_sequence", marker_seq}};
        if (bootstrap) {
            marker["bootstrap"] = std::move(*bootstrap);
        }
        log_.append(RecordKind::checkpoint_marker, std::move(marker), true);
        log_.sync();
        last_marker_ = marker_seq;
        persistence::prune_checkpoints(cfg_.data_dir);
    }

private:
    static constexpr std::size_t kWindowQueueCapacity = 1024;

    static persistence::RecoveryPlan plan(const std::filesystem::path& dir) {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) {
            throw IoError("cannot create data directory " + dir.string() + ": " + ec.message());
        }
        return persistence::plan_recovery(dir);
    }

    void fault(FaultPoint p) {
        if (hooks_.fault) {
            hooks_.fault(p, pipeline_.stream_windows());
        }
    }

    [[nodiscard]] bool has_uncheckpointed_records() const {
        return !last_marker_ || *last_marker_ + 1 < log_.next_sequence();
    }

    [[nodiscard]] Timestamp covered_time() const {
        auto w = pipeline_.last_window();
        return w ? w->end() : Timestamp{};
    }

    void process(const AlignedWindow& w, StreamStats& stats) {
        auto drafts = pipeline_.step(w, hooks_.warn);
        if (drafts.empty()) {
            return;
        }
        ++stats.windows;
        for (std::size_t i = 0; i < drafts.size(); ++i) {
            auto& d = drafts[i];
            if (d.kind == RecordKind::actual) {
                ++stats.completed;
                if (hooks_.progress) {
                    nlohmann::ordered_json line;
                    for (const char* key : {"window", "predicted", "actual", "error"}) {
                        line[key] = d.data.at(key);
                    }
                    hooks_.progress(line);
                }
            }
            log_.append(d.kind, std::move(d.data), i + 1 == drafts.size());
        }
        fault(FaultPoint::group_buffered);
        log_.commit_group();
        fault(FaultPoint::group_committed);
        if (pipeline_.stream_windows() % cfg_.checkpoint_every == 0) {
            checkpoint();
            ++stats.checkpoints;
        }
    }

    void recover() {
        auto plan = std::exchange(plan_, {});
        for (const auto& w : plan.warnings) {
            warn(w);
        }
        recovery_.torn_tail = plan.torn_tail;
        recovery_.discarded_records = plan.discarded_records;
        recovery_.fresh = plan.next_sequence == 0;
        if (plan.torn_tail) {
            warn("dropped a torn record at the end of the log");
        }
        if (plan.discarded_records > 0) {
            warn("dropped " + std::to_string(plan.discarded_records) + " uncommitted record(s) at the end of the log");
        }
        if (plan.checkpoint) {
            pipeline_ = Pipeline::restore(plan.checkpoint->payload);
            recovery_.checkpoint = plan.checkpoint->up_to_sequence;
            last_marker_ = plan.checkpoint->up_to_sequence;
        }
        recovery_.replayed_records = plan.replay.size();
        replay(plan.replay);
    }

    /// Re-applies committed groups and checks that they regenerate the logged records.
    void replay(std::span<const persistence::LogRecord> records) {
        std::size_t begin = 0;
        while (begin < records.size()) {
            std::size_t end = begin;
            while (!records[end].commit) {
                ++end;
            }
            auto group = records.subspan(begin, end - begin + 1);
            apply_group(group);
            begin = end + 1;
        }
    }

    void apply_group(std::span<const persistence::LogRecord> group) {
        const auto& last = group.back();
        try {
            if (last.kind == RecordKind::checkpoint_marker) {
                last_marker_ = last.seq;
                if (!last.data.contains("bootstrap")) {
                    if (group.size() != 1) {
                        throw CorruptionError("checkpoint marker closes a multi-record group", last.seq);
                    }
                    return;
                }
                std::vector<AlignedWindow> history;
                for (const auto& r : group.first(group.size() - 1)) {
                    if (r.kind == RecordKind::closed_window) {
                        history.push_back(window_from_json(r.data));
                    }
                }
                auto params = BootstrapParams::from_json(last.data.at("bootstrap"));
                Pipeline next;
                auto drafts = next.bootstrap(history, params);
                expect_match(drafts, group.first(group.size() - 1));
                pipeline_ = std::move(next);
                return;
            }
            if (group.front().kind != RecordKind::closed_window) {
                throw CorruptionError("log group does not start with a closed window", group.front().seq);
            }
            auto drafts = pipeline_.step(window_from_json(group.front().data), hooks_.warn);
            expect_match(drafts, group);
        } catch (const nlohmann::json::exception& e) {
            throw CorruptionError(std::string("malformed log record: ") + e.what(), group.front().seq);
        } catch (const CorruptionError&) {
            throw;
        } catch (const Error& e) {
            throw CorruptionError(std::string("log replay failed: ") + e.what(), group.front().seq);
        }
    }

    static void expect_match(std::span<const Draft> drafts, std::span<const persistence::LogRecord> logged) {
        for (std::size_t i = 0; i < std::max(drafts.size(), logged.size()); ++i) {
            if (i >= drafts.size() || i >= logged.size()) {
                auto seq = i < logged.size() ? logged[i].seq : logged.back().seq;
                throw CorruptionError("log group length differs from its replay", seq);
            }
            if (drafts[i].kind != logged[i].kind || drafts[i].data != logged[i].data) {
                throw CorruptionError("record does not match its replay", logged[i].seq);
            }
        }
    }

    void warn(const std::string& msg) const {
        if (hooks_.warn) {
            hooks_.warn(msg);
        }
    }

    EngineConfig cfg_;
    SessionHooks hooks_;
    sentiment::Lexicon lexicon_;
    persistence::RecoveryPlan plan_; ///< consumed by recover()
    persistence::EventLog log_;
    Pipeline pipeline_;
    RecoveryReport recovery_;
    std::optional<std::uint64_t> last_marker_;
};

} // namespace sentcast::engine
