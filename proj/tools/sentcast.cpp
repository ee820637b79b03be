#include <sentcast/engine/commands.hpp>

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <iostream>
#include <optional>
#include <string>

namespace {

std::atomic<bool> g_stop{false};
static_assert(std::atomic<bool>::is_always_lock_free);

extern "C" void on_signal(int) { g_stop.store(true); }

struct Overrides {
    std::string config;
    std::string data_dir;
    std::optional<std::uint64_t> seed;
    std::string speed;
    bool relaxed = false;
    bool json = false;
};

sentcast::engine::EngineConfig load(const Overrides& o) {
    using namespace sentcast::engine;
    EngineConfig cfg = o.config.empty() ? EngineConfig{} : load_config(o.config);
    if (!o.data_dir.empty()) {
        cfg.data_dir = o.data_dir;
    }
    if (o.seed) {
        cfg.seed = *o.seed;
        cfg.synthetic.seed = *o.seed;
    }
    if (!o.speed.empty()) {
        cfg.speed = sentcast::ingest::parse_speed(o.speed);
    }
    if (o.relaxed) {
        cfg.durability = sentcast::persistence::Durability::relaxed;
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    using namespace sentcast::engine;

    CLI::App app{"sentcast: sentiment-driven one-minute price forecasting"};
    app.require_subcommand(1);
    Overrides o;
    app.add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
    app.add_option("--data-dir", o.data_dir, "directory holding the event log and checkpoints");
    app.add_option("--seed", o.seed, "seed for the model and the synthetic source");
    app.add_option("--speed", o.speed, "replay speed factor, or 'max'");
    app.add_flag("--relaxed-durability", o.relaxed, "fsync only at checkpoints");
    app.add_flag("--json", o.json, "line-delimited JSON progress on stdout");

    auto* bootstrap = app.add_subcommand("bootstrap", "train the initial model on historical data");
    std::string tweets;
    std::string prices;
    bootstrap->add_option("--tweets", tweets, "historical tweets (JSONL)");
    bootstrap->add_option("--prices", prices, "historical minute bars (CSV)");

    auto* stream = app.add_subcommand("stream", "predict and learn over the configured source");
    auto* recover = app.add_subcommand("recover", "restore state and continue streaming");

    auto* report = app.add_subcommand("report", "write CSV reports from the event log");
    std::string report_dir = "report";
    report->add_option("out_dir", report_dir, "output directory");

    auto* synth = app.add_subcommand("synth-gen", "write the synthetic streams as replay files");
    std::string synth_dir = "synthetic";
    synth->add_option("out_dir", synth_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    CommandContext ctx{std::cout, std::cerr, o.json, &g_stop, {}};
    return run_command(std::cerr, [&] {
        auto cfg = load(o);
        if (bootstrap->parsed()) {
            if (!tweets.empty() || !prices.empty()) {
                if (tweets.empty() || prices.empty()) {
                    throw sentcast::ConfigError("--tweets and --prices must be given together");
                }
                cfg.bootstrap_tweets = tweets;
                cfg.bootstrap_prices = prices;
            }
            cmd_bootstrap(cfg, ctx);
        } else if (stream->parsed()) {
            cmd_stream(cfg, ctx);
        } else if (recover->parsed()) {
            cmd_recover(cfg, ctx);
        } else if (report->parsed()) {
            cmd_report(cfg, report_dir, ctx);
        } else if (synth->parsed()) {
            cmd_synth_gen(cfg, synth_dir, ctx);
        }
    });
}
