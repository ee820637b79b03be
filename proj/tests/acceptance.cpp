// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [criterion numbers...]

#include <sentcast/analytics/correlation.hpp>
#include <sentcast/analytics/report.hpp>
#include <sentcast/engine/commands.hpp>
#include <sentcast/sentiment/score.hpp>

#include "temp_dir.hpp"

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace sentcast;
using namespace sentcast::engine;
using sentcast::testing::read_file;
using sentcast::testing::TempDir;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s.precision(precision);
    s << std::fixed << v;
    return s.str();
}

/// Runs a command with its output discarded; any failure aborts the criterion.
template <typename F>
void quietly(F&& f, CommandContext* ctx_out = nullptr) {
    std::ostringstream out;
    std::ostringstream err;
    CommandContext ctx{out, err, false, nullptr, {}};
    if (ctx_out != nullptr) {
        ctx.fault = ctx_out->fault;
    }
    int code = run_command(err, [&] { f(ctx); });
    if (code != 0) {
        throw std::runtime_error("command failed with exit " + std::to_string(code) + ": " + err.str());
    }
}

void full_run(const EngineConfig& cfg, const std::filesystem::path& report_dir) {
    quietly([&](auto& ctx) { cmd_bootstrap(cfg, ctx); });
    quietly([&](auto& ctx) { cmd_stream(cfg, ctx); });
    quietly([&](auto& ctx) { cmd_report(cfg, report_dir, ctx); });
}

double rmse_of(const std::vector<double>& errors) {
    double se = 0.0;
    for (double e : errors) {
        se += e * e;
    }
    return std::sqrt(se / static_cast<double>(errors.size()));
}

// 1. Online model versus the previous-close baseline on a 2000-window lag-1 stream.
Outcome online_beats_naive() {
    TempDir dir;
    EngineConfig cfg;
    cfg.data_dir = dir / "data";
    cfg.synthetic.n_windows = 2000;
    cfg.synthetic.lag_k = 1;
    cfg.bootstrap_windows = 500;
    full_run(cfg, dir / "report");
    auto run = run_data_from_log(cfg.data_dir);
    double model = analytics::rmse(run.predictions);
    double naive = analytics::naive_rmse(run.predictions);
    // Also score only the predictions after the first 500 live windows.
    std::vector<analytics::PredictionRow> late(run.predictions.begin() + 500, run.predictions.end());
    double late_model = analytics::rmse(late);
    double late_naive = analytics::naive_rmse(late);
    return {model <= naive && late_model <= late_naive,
            "rmse " + fmt(model) + " vs naive " + fmt(naive) + "; after 500 live windows " + fmt(late_model) +
                " vs " + fmt(late_naive)};
}

// 2. The lag sweep recovers a 3-minute lead.
Outcome lag_recovery() {
    TempDir dir;
    EngineConfig cfg;
    cfg.data_dir = dir / "data";
    cfg.synthetic.n_windows = 2000;
    cfg.synthetic.lag_k = 3;
    full_run(cfg, dir / "report");
    std::istringstream csv(read_file(dir / "report/lag_correlations.csv"));
    std::string line;
    std::getline(csv, line);
    std::size_t best_lag = 0;
    double best_r = 0.0;
    while (std::getline(csv, line)) {
        std::size_t lag = 0;
        double r = 0.0;
        if (std::sscanf(line.c_str(), "%zu,%lf", &lag, &r) == 2 && std::fabs(r) > std::fabs(best_r)) {
            best_lag = lag;
            best_r = r;
        }
    }
    bool pass = best_lag >= 2 && best_lag <= 4 && std::fabs(best_r) > 0.5;
    return {pass, "argmax lag " + std::to_string(best_lag) + ", r = " + fmt(best_r)};
}

// 3. Continuous updates versus a frozen copy of the bootstrap model after the coefficient flips.
Outcome online_adapts_to_flip() {
    TempDir dir;
    EngineConfig cfg;
    cfg.data_dir = dir / "data";
    cfg.synthetic.n_windows = 2000;
    cfg.synthetic.flip_at = 1000;
    quietly([&](auto& ctx) { cmd_bootstrap(cfg, ctx); });
    std::unique_ptr<predictor::OnlinePredictor> frozen;
    {
        Session s(cfg, SessionHooks{{}, {}, {}});
        frozen = s.pipeline().model().clone();
    }
    quietly([&](auto& ctx) { cmd_stream(cfg, ctx); });

    const WindowKey flip{window_key(cfg.synthetic.start).epoch_minute + cfg.synthetic.flip_at};
    auto scan = persistence::scan_log(cfg.data_dir / "events.log");
    std::map<WindowKey, features::FeatureVector> features;
    std::vector<double> online_err;
    std::vector<double> frozen_err;
    for (const auto& r : scan.records) {
        if (r.kind == RecordKind::prediction) {
            auto w = window_key(parse_timestamp(r.data.at("window").get<std::string>()));
            features[w] = predictor::feature_vector_from_json(r.data.at("features"));
        } else if (r.kind == RecordKind::actual) {
            auto w = window_key(parse_timestamp(r.data.at("window").get<std::string>()));
            if (w < flip) {
                continue;
            }
            double actual = r.data.at("actual").get<double>();
            online_err.push_back(r.data.at("predicted").get<double>() - actual);
            frozen_err.push_back(frozen->predict(features.at(w)) - actual);
        }
    }
    double online = rmse_of(online_err);
    double still = rmse_of(frozen_err);
    double gain = 1.0 - online / still;
    return {gain >= 0.10, "second-half rmse " + fmt(online) + " vs frozen " + fmt(still) + " (" +
                              fmt(100.0 * gain, 1) + "% lower, " + std::to_string(online_err.size()) + " windows)"};
}

// 4. SIGKILL at random points, then recover: predictions.csv must match the uninterrupted run.
Outcome crash_anywhere() {
    TempDir root;
    EngineConfig cfg;
    cfg.synthetic.n_windows = 1000;
    cfg.data_dir = root / "reference";
    full_run(cfg, root / "reference-report");
    const auto expected = read_file(root / "reference-report/predictions.csv");

    std::mt19937_64 rng(20190801);
    const FaultPoint points[] = {FaultPoint::group_buffered, FaultPoint::group_committed,
                                 FaultPoint::snapshot_written};
    std::size_t matched = 0;
    std::ostringstream detail;
    for (int i = 0; i < 10; ++i) {
        auto run_dir = root / ("crash-" + std::to_string(i));
        cfg.data_dir = run_dir / "data";
        quietly([&](auto& ctx) { cmd_bootstrap(cfg, ctx); });

        FaultPoint point = points[rng() % 3];
        std::uint64_t at = 1 + rng() % 1000;
        if (point == FaultPoint::snapshot_written) {
            at = cfg.checkpoint_every * (1 + rng() % (1000 / cfg.checkpoint_every));
        }
        const bool torn = rng() % 2 == 0;

        std::cout.flush();
        std::cerr.flush();
        pid_t pid = fork();
        if (pid < 0) {
            throw std::runtime_error("fork failed");
        }
        if (pid == 0) {
            CommandContext hook{std::cout, std::cerr, false, nullptr, [&](FaultPoint p, std::uint64_t w) {
                                    if (p == point && w == at) {
                                        std::raise(SIGKILL);
                                    }
                                }};
            try {
                quietly([&](auto& ctx) { cmd_stream(cfg, ctx); }, &hook);
            } catch (...) {
                _exit(2);
            }
            _exit(0);
        }
        int status = 0;
        waitpid(pid, &status, 0);
        const bool killed = WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL;

        if (torn) {
            // A record that was half written when the process died.
            persistence::LogRecord partial{999999, RecordKind::closed_window, {{"window", "torn"}}, true};
            auto frame = persistence::frame_record(partial);
            std::ofstream log(cfg.data_dir / "events.log", std::ios::binary | std::ios::app);
            log << frame.substr(0, frame.size() / 2);
        }
        quietly([&](auto& ctx) { cmd_recover(cfg, ctx); });
        quietly([&](auto& ctx) { cmd_report(cfg, run_dir / "report", ctx); });
        bool same = killed && read_file(run_dir / "report/predictions.csv") == expected;
        matched += same ? 1 : 0;
        if (!same) {
            detail << " [run " << i << " killed=" << killed << " point=" << static_cast<int>(point) << " at=" << at
                   << " differs]";
        }
    }
    return {matched == 10, std::to_string(matched) + "/10 recovered runs byte-identical" + detail.str()};
}

// 5. Scorer range, weighting properties and the worked examples.
Outcome scorer_properties() {
    const auto& lex = sentiment::bundled_lexicon();
    std::mt19937_64 rng(5);
    auto words = lex.words_with_sign(1);
    auto neg = lex.words_with_sign(-1);
    words.insert(words.end(), neg.begin(), neg.end());
    for (const char* w : {"not", "never", "very", "extremely", "barely", "http://t.co/x", "#btc", "@whale", "!!"}) {
        words.emplace_back(w);
    }
    std::size_t range_violations = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string text;
        auto tokens = rng() % 60;
        for (std::size_t k = 0; k < tokens; ++k) {
            if (rng() % 4 == 0) {
                auto len = 1 + rng() % 12;
                for (std::size_t c = 0; c < len; ++c) {
                    text += static_cast<char>(rng() % 256);
                }
            } else {
                text += words[rng() % words.size()];
            }
            text += ' ';
        }
        double c = sentiment::compound_score(text, lex).compound;
        range_violations += (c >= -1.0 && c <= 1.0) ? 0 : 1;
    }

    std::uniform_real_distribution<double> compound(-1.0, 1.0);
    std::uniform_int_distribution<std::int64_t> count(0, 1'000'000);
    std::uniform_int_distribution<std::int64_t> engagement(0, 10'000);
    std::size_t property_violations = 0;
    for (int i = 0; i < 10000; ++i) {
        double c = compound(rng);
        auto f = count(rng);
        auto l = engagement(rng);
        auto r = engagement(rng);
        auto base = sentiment::weight_score(c, f, l, r).normalized;
        property_violations += sentiment::weight_score(-c, f, l, r).normalized == -base ? 0 : 1;
        property_violations += sentiment::weight_score(c, 0, l, r).normalized == 0.0 ? 0 : 1;
        double pc = std::fabs(c);
        auto p = sentiment::weight_score(pc, f, l, r).normalized;
        property_violations += sentiment::weight_score(pc, f + 1 + count(rng) % 1000, l, r).normalized >= p ? 0 : 1;
        property_violations += sentiment::weight_score(pc, f, l + 1 + engagement(rng), r).normalized >= p ? 0 : 1;
        property_violations += sentiment::weight_score(pc, f, l, r + 1 + engagement(rng)).normalized >= p ? 0 : 1;
    }

    double a = sentiment::weight_score(0.5, 1000, 0, 0).normalized;
    double b = sentiment::weight_score(-0.4, 100, 1, 0).normalized;
    double z = sentiment::weight_score(0.9, 0, 50, 10).normalized;
    bool worked = std::fabs(a - 22.3607) < 1e-4 && std::fabs(b + 8.9443) < 1e-4 && z == 0.0;
    return {range_violations == 0 && property_violations == 0 && worked,
            std::to_string(range_violations) + " range and " + std::to_string(property_violations) +
                " property violations; worked examples " + fmt(a) + ", " + fmt(b) + ", " + fmt(z)};
}

// 6. Correlations against a definitional oracle.
double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    long double n = static_cast<long double>(x.size());
    long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += static_cast<long double>(x[i]) * x[i];
        syy += static_cast<long double>(y[i]) * y[i];
        sxy += static_cast<long double>(x[i]) * y[i];
    }
    return static_cast<double>((n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy)));
}

std::vector<double> oracle_ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double below = 0, equal = 0;
        for (double w : v) {
            below += w < v[i] ? 1 : 0;
            equal += w == v[i] ? 1 : 0;
        }
        r[i] = 1.0 + below + (equal - 1.0) / 2.0;
    }
    return r;
}

Outcome correlation_oracle() {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> d(0.0, 10.0);
    auto series = [&](std::size_t n, bool ties) {
        std::vector<double> v(n);
        for (auto& x : v) {
            x = ties ? std::round(d(rng) / 8.0) : d(rng);
        }
        return v;
    };
    auto constant = [](const std::vector<double>& v) { return std::set<double>(v.begin(), v.end()).size() < 2; };
    double worst = 0.0;
    int with_ties = 0;
    for (int i = 0; i < 100; ++i) {
        std::vector<double> x;
        std::vector<double> y;
        std::size_t n = 3 + rng() % 18;
        bool ties = i % 2 == 0;
        do {
            x = series(n, ties);
            y = series(n, ties);
        } while (constant(x) || constant(y));
        with_ties += std::set<double>(x.begin(), x.end()).size() < n ? 1 : 0;
        worst = std::max(worst, std::fabs(analytics::pearson(x, y) - oracle_pearson(x, y)));
        worst = std::max(worst,
                         std::fabs(analytics::spearman(x, y) - oracle_pearson(oracle_ranks(x), oracle_ranks(y))));
    }
    std::vector<double> a{1, 2, 3, 4, 5};
    std::vector<double> b{2, 4, 5, 4, 5};
    double hand = analytics::pearson(a, b);
    bool pass = worst <= 1e-9 && std::fabs(hand - 6.0 / std::sqrt(60.0)) <= 1e-9 && with_ties > 0;
    std::ostringstream s;
    s << "max deviation " << worst << " over 100 pairs (" << with_ties << " with ties); hand example " << fmt(hand);
    return {pass, s.str()};
}

// 7. A 25k-tweet day replayed from files at full speed with per-window fsync.
Outcome throughput() {
    TempDir dir;
    EngineConfig cfg;
    cfg.data_dir = dir / "data";
    cfg.synthetic.n_windows = 1440;
    cfg.synthetic.tweets_per_window_mean = 17.5;
    quietly([&](auto& ctx) { cmd_synth_gen(cfg, dir / "feeds", ctx); });
    cfg.source = SourceKind::replay;
    cfg.stream_tweets = dir / "feeds/tweets.jsonl";
    cfg.stream_prices = dir / "feeds/prices.csv";
    cfg.bootstrap_tweets = dir / "feeds/bootstrap_tweets.jsonl";
    cfg.bootstrap_prices = dir / "feeds/bootstrap_prices.csv";
    cfg.speed = ingest::Speed::max();
    cfg.durability = persistence::Durability::per_window;
    quietly([&](auto& ctx) { cmd_bootstrap(cfg, ctx); });

    auto t0 = std::chrono::steady_clock::now();
    quietly([&](auto& ctx) { cmd_stream(cfg, ctx); });
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    auto run = run_data_from_log(cfg.data_dir);
    std::int64_t tweets = 0;
    for (const auto& w : run.windows) {
        tweets += w.tweet_count;
    }
    return {tweets >= 25000 && seconds < 30.0,
            std::to_string(tweets) + " tweets over " + std::to_string(run.windows.size()) + " windows in " +
                fmt(seconds, 2) + " s"};
}

// 8. Two identical runs produce identical bytes everywhere.
Outcome determinism() {
    TempDir a;
    TempDir b;
    EngineConfig cfg;
    cfg.synthetic.n_windows = 1000;
    for (const auto* d : {&a, &b}) {
        cfg.data_dir = d->path() / "data";
        full_run(cfg, d->path() / "report");
    }
    std::size_t files = 0;
    std::vector<std::string> differing;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(a.path())) {
        if (!entry.is_regular_file()) {
            continue;
        }
        auto rel = std::filesystem::relative(entry.path(), a.path());
        ++files;
        if (!std::filesystem::exists(b.path() / rel) || read_file(entry.path()) != read_file(b.path() / rel)) {
            differing.push_back(rel.string());
        }
    }
    std::size_t files_b = 0;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(b.path())) {
        files_b += entry.is_regular_file() ? 1 : 0;
    }
    std::string detail = std::to_string(files) + " files compared";
    for (const auto& f : differing) {
        detail += "; differs: " + f;
    }
    return {differing.empty() && files == files_b && files >= 10, detail};
}

struct Criterion {
    int id;
    const char* name;
    double time_limit_s; ///< 0: no limit
    Outcome (*run)();
};

} // namespace

int main(int argc, char** argv) {
    const Criterion criteria[] = {
        {1, "online model RMSE <= naive baseline (2000 windows, lag 1)", 60.0, online_beats_naive},
        {2, "lag sweep recovers lag 3 +/- 1 with |r| > 0.5", 10.0, lag_recovery},
        {3, "online second-half RMSE >= 10% below frozen model after flip", 0.0, online_adapts_to_flip},
        {4, "crash at 10 random points, recovered predictions.csv identical", 0.0, crash_anywhere},
        {5, "scorer fuzz, weighting properties and worked examples", 0.0, scorer_properties},
        {6, "pearson/spearman match definitional oracle to 1e-9", 0.0, correlation_oracle},
        {7, "25k-tweet day replay at max speed with durable log < 30 s", 30.0, throughput},
        {8, "identical config and seed give identical logs, checkpoints, reports", 0.0, determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        selected.insert(std::atoi(argv[i]));
    }
    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.contains(c.id)) {
            continue;
        }
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool in_time = c.time_limit_s <= 0.0 || seconds < c.time_limit_s;
        if (!in_time) {
            o.detail += "; exceeded " + fmt(c.time_limit_s, 0) + " s";
        }
        bool pass = o.pass && in_time;
        failures += pass ? 0 : 1;
        std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.name << " -- " << o.detail
                  << " (" << fmt(seconds, 2) << " s)" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
