#include <sentcast/predictor/online.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sentcast;
using namespace sentcast::predictor;
using sentcast::features::FeatureVector;

namespace {

LabeledExample example(std::int64_t minute, double score, double close, double target) {
    return LabeledExample{FeatureVector{WindowKey{minute}, score, close, close, score / 2.0}, target};
}

std::vector<LabeledExample> random_walk_examples(std::size_t n, std::uint64_t seed, double lo = 9000.0,
                                                 double hi = 9100.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> price(lo, hi);
    std::normal_distribution<double> score(0.0, 20.0);
    std::vector<LabeledExample> out;
    for (std::size_t i = 0; i < n; ++i) {
        double c = price(rng);
        out.push_back(example(static_cast<std::int64_t>(i), score(rng), c, price(rng)));
    }
    return out;
}

double rmse_of(const ModelState& m, std::span<const LabeledExample> ex) {
    double se = 0.0;
    for (const auto& e : ex) {
        double d = m.predict(e.features) - e.target;
        se += d * d;
    }
    return std::sqrt(se / static_cast<double>(ex.size()));
}

} // namespace

TEST(Bootstrap, ConstantTargetFromConstantPrice) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> score(0.0, 30.0);
    std::vector<LabeledExample> ex;
    for (int i = 0; i < 500; ++i) {
        ex.push_back(example(i, score(rng), 100.0, 100.0));
    }
    auto m = bootstrap_train(ex, Hyperparams{}, 7);
    for (int i = 0; i < 100; ++i) {
        EXPECT_NEAR(predict(m, FeatureVector{WindowKey{i}, score(rng), 100.0, 100.0, score(rng)}), 100.0, 1e-6);
    }
}

TEST(Bootstrap, ConstantTargetWithoutAnchorIgnoresFeatures) {
    auto ex = random_walk_examples(500, 2);
    for (auto& e : ex) {
        e.target = 100.0;
    }
    Hyperparams hp;
    hp.anchor = Anchor::none;
    auto m = bootstrap_train(ex, hp, 7);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> any(-1e4, 1e4);
    for (int i = 0; i < 100; ++i) {
        EXPECT_NEAR(m.predict(FeatureVector{WindowKey{0}, any(rng), any(rng), any(rng), any(rng)}), 100.0, 1e-6);
    }
}

TEST(Bootstrap, DeterministicForFixedSeed) {
    auto ex = random_walk_examples(400, 4);
    Hyperparams hp;
    hp.subsample = 0.7;
    auto a = to_json(bootstrap_train(ex, hp, 99)).dump();
    auto b = to_json(bootstrap_train(ex, hp, 99)).dump();
    EXPECT_EQ(a, b);
    auto c = to_json(bootstrap_train(ex, hp, 100)).dump();
    EXPECT_NE(a, c);
}

TEST(Bootstrap, BeatsMeanPredictorOnLinearTarget) {
    auto ex = random_walk_examples(600, 5);
    for (auto& e : ex) {
        e.target = 2.0 * e.features.previous_close - 8000.0;
    }
    double mean = 0.0;
    for (const auto& e : ex) {
        mean += e.target;
    }
    mean /= static_cast<double>(ex.size());
    double mean_se = 0.0;
    for (const auto& e : ex) {
        mean_se += (e.target - mean) * (e.target - mean);
    }
    double mean_rmse = std::sqrt(mean_se / static_cast<double>(ex.size()));
    for (auto anchor : {Anchor::previous_close, Anchor::none}) {
        Hyperparams hp;
        hp.anchor = anchor;
        auto m = bootstrap_train(ex, hp, 1);
        EXPECT_LE(rmse_of(m, ex), mean_rmse);
    }
}

TEST(Bootstrap, RejectsShortOrNonFiniteInput) {
    auto ex = random_walk_examples(1, 6);
    EXPECT_THROW(bootstrap_train(ex, Hyperparams{}, 1), DataError);
    ex = random_walk_examples(10, 6);
    ex[3].target = std::nan("");
    EXPECT_THROW(bootstrap_train(ex, Hyperparams{}, 1), DataError);
}

TEST(Predict, PureAndBounded) {
    auto ex = random_walk_examples(800, 8);
    auto m = bootstrap_train(ex, Hyperparams{}, 3);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> price(9000.0, 9100.0);
    std::normal_distribution<double> score(0.0, 20.0);
    for (int i = 0; i < 500; ++i) {
        double c = price(rng);
        FeatureVector f{WindowKey{i}, score(rng), c, price(rng), score(rng)};
        double p = m.predict(f);
        EXPECT_EQ(p, m.predict(f));
        EXPECT_TRUE(std::isfinite(p));
        EXPECT_GE(p, 8000.0);
        EXPECT_LE(p, 10100.0);
    }
}

TEST(Predict, UnbootstrappedIsAnError) {
    ModelState m(Hyperparams{}, 1);
    EXPECT_THROW((void)m.predict(FeatureVector{}), PreconditionError);
    EXPECT_THROW(m.update(example(0, 0, 1, 1)), PreconditionError);
}

TEST(Update, RepeatedExampleConverges) {
    auto ex = random_walk_examples(300, 9);
    Hyperparams hp;
    hp.min_samples_leaf = 1;
    hp.full_retrain_period = 0;
    auto m = bootstrap_train(ex, hp, 2);
    auto target = example(1000, 55.0, 9050.0, 9400.0);
    double last = std::fabs(m.predict(target.features) - target.target);
    for (int k = 0; k < 30; ++k) {
        m.update(target);
        double err = std::fabs(m.predict(target.features) - target.target);
        EXPECT_LE(err, last + 1e-9) << "step " << k;
        last = err;
    }
}

TEST(Update, SerializeThenReplayMatchesLiveUpdate) {
    auto ex = random_walk_examples(300, 10);
    Hyperparams hp;
    hp.subsample = 0.8;
    hp.full_retrain_period = 3;
    auto live = bootstrap_train(ex, hp, 5);
    auto stream = random_walk_examples(10, 11);
    for (std::size_t i = 0; i < stream.size(); ++i) {
        auto blob = to_json(live).dump();
        live.update(stream[i]);
        auto replayed = model_state_from_json(nlohmann::json::parse(blob));
        replayed.update(stream[i]);
        ASSERT_EQ(to_json(replayed).dump(), to_json(live).dump()) << "update " << i;
    }
}

TEST(Update, RingBufferEvictsOldest) {
    Hyperparams hp;
    hp.buffer_capacity = 50;
    auto ex = random_walk_examples(80, 12);
    auto m = bootstrap_train(ex, hp, 1);
    ASSERT_EQ(m.buffer().size(), 50u);
    EXPECT_EQ(m.buffer().front(), ex[30]);
    auto extra = example(500, 1.0, 9000.0, 9001.0);
    m.update(extra);
    EXPECT_EQ(m.buffer().size(), 50u);
    EXPECT_EQ(m.buffer().front(), ex[31]);
    EXPECT_EQ(m.buffer().back(), extra);
    EXPECT_EQ(m.version(), 1u);
}

TEST(Update, NonFiniteLeavesStateUnchanged) {
    auto m = bootstrap_train(random_walk_examples(100, 13), Hyperparams{}, 1);
    auto before = to_json(m).dump();
    auto bad = example(1, 0.0, 9000.0, std::numeric_limits<double>::infinity());
    EXPECT_THROW(m.update(bad), DataError);
    EXPECT_EQ(to_json(m).dump(), before);
    EXPECT_THROW(update(m, bad), DataError);
    EXPECT_EQ(to_json(m).dump(), before);
}

TEST(Update, FullRetrainEveryUpdateEqualsBootstrapOnBuffer) {
    Hyperparams hp;
    hp.trees_per_update = 0;
    hp.full_retrain_period = 1;
    hp.bootstrap_trees = 20;
    auto m = bootstrap_train(random_walk_examples(200, 14), hp, 1);
    m.update(example(999, 3.0, 9010.0, 9020.0));
    std::vector<LabeledExample> buffer(m.buffer().begin(), m.buffer().end());
    auto fresh = bootstrap_train(buffer, hp, 1);
    EXPECT_EQ(m.trees(), fresh.trees());
    EXPECT_EQ(m.base_score(), fresh.base_score());
}

TEST(Update, VersionCountsUpdatesAndTreesGrow) {
    Hyperparams hp;
    hp.full_retrain_period = 5;
    hp.bootstrap_trees = 10;
    auto m = bootstrap_train(random_walk_examples(100, 15), hp, 1);
    EXPECT_EQ(m.trees().size(), 10u);
    for (int i = 0; i < 4; ++i) {
        m.update(example(200 + i, 1.0, 9000.0, 9001.0));
    }
    EXPECT_EQ(m.trees().size(), 14u);
    m.update(example(300, 1.0, 9000.0, 9001.0));
    EXPECT_EQ(m.trees().size(), 10u);
    EXPECT_EQ(m.version(), 5u);
    EXPECT_LE(m.trees().front().depth(), 3u);
}

TEST(Serialization, RoundTripPreservesPredictions) {
    Hyperparams hp;
    hp.subsample = 0.9;
    auto m = bootstrap_train(random_walk_examples(300, 16), hp, 77);
    for (auto& e : random_walk_examples(5, 17)) {
        m.update(e);
    }
    auto back = model_state_from_json(nlohmann::json::parse(to_json(m).dump()));
    EXPECT_EQ(back, m);
    std::mt19937_64 rng(18);
    std::uniform_real_distribution<double> any(8000.0, 10000.0);
    for (int i = 0; i < 200; ++i) {
        FeatureVector f{WindowKey{i}, any(rng) - 9000.0, any(rng), any(rng), any(rng) - 9000.0};
        EXPECT_EQ(back.predict(f), m.predict(f));
    }
}

TEST(Serialization, RejectsGarbage) {
    EXPECT_THROW(model_state_from_json(nlohmann::json::parse(R"({"format":"other"})")), CorruptionError);
    EXPECT_THROW(predictor_from_json(nlohmann::json::parse(R"({"format":"sentcast-gbrt"})")), CorruptionError);
}

TEST(NaivePredict, ReturnsPreviousClose) {
    EXPECT_EQ(naive_predict(100.0), 100.0);
    EXPECT_EQ(naive_predict(9123.45), 9123.45);
    EXPECT_EQ(naive_predict(0.0), 0.0);
}

TEST(LinearPredictor, LearnsLinearDriftAndRoundTrips) {
    std::vector<LabeledExample> ex;
    std::mt19937_64 rng(19);
    std::normal_distribution<double> score(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        double s = score(rng);
        ex.push_back(example(i, s, 9000.0 + i, 9000.0 + i + 5.0 * s));
    }
    LinearPredictor p;
    p.bootstrap(ex);
    EXPECT_NEAR(p.predict(ex[10].features), ex[10].target, 1e-3);
    p.update(example(400, 1.0, 9400.0, 9405.0));
    auto back = predictor_from_json(p.to_json());
    EXPECT_EQ(back->kind(), "linear");
    EXPECT_EQ(back->predict(ex[20].features), p.predict(ex[20].features));
    EXPECT_EQ(back->version(), 1u);
}

TEST(MakePredictor, KnownKinds) {
    EXPECT_EQ(make_predictor("gbrt", Hyperparams{}, 1)->kind(), "gbrt");
    EXPECT_EQ(make_predictor("linear", Hyperparams{}, 1)->kind(), "linear");
    EXPECT_THROW(make_predictor("lstm", Hyperparams{}, 1), ConfigError);
}
