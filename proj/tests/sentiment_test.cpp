#include <sentcast/sentiment/score.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

using namespace sentcast::sentiment;

namespace {

Lexicon tiny_lexicon() {
    Lexicon lex;
    lex.entries = {{"good", 1.9}, {"bad", -2.5}};
    lex.negators = {"not"};
    lex.boosters = {{"very", kBoosterIncrement}, {"slightly", -kBoosterIncrement}};
    return lex;
}

// Direct evaluation of the normalization, independent of the scorer.
double normalized(double s) { return s / std::sqrt(s * s + 15.0); }

} // namespace

TEST(CleanText, Empty) { EXPECT_EQ(clean_text(""), ""); }

TEST(CleanText, RemovesLinksAndHashtags) {
    EXPECT_EQ(clean_text("BTC to the moon! https://t.co/xyz #BTC"), "BTC to the moon!");
}

TEST(CleanText, RemovesMentionsAndCollapsesWhitespace) {
    EXPECT_EQ(clean_text("@alice   great   coin"), "great coin");
}

TEST(CleanText, RemovesMediaPlaceholders) {
    EXPECT_EQ(clean_text("look [IMAGE] pic.twitter.com/abc at\tthis [video]"), "look at this");
    EXPECT_EQ(clean_text("  www.example.com  t.co/abc http://x.y "), "");
}

TEST(CleanText, Idempotent) {
    std::mt19937_64 rng(3);
    const std::vector<std::string> pieces{"good", "#tag", "@who", "https://t.co/a", " ", "\t", "moon!", "[gif]",
                                          "not",  "x",    "\n",   "é",              "  "};
    for (int i = 0; i < 2000; ++i) {
        std::string text;
        for (int k = 0; k < 12; ++k) {
            text += pieces[rng() % pieces.size()];
            if (rng() % 3 == 0) {
                text += ' ';
            }
        }
        auto once = clean_text(text);
        EXPECT_EQ(clean_text(once), once);
    }
}

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
    EXPECT_EQ(tokenize("Good,BAD! don't"), (std::vector<std::string>{"good", "bad", "don't"}));
    EXPECT_EQ(tokenize("'quoted'"), (std::vector<std::string>{"quoted"}));
}

TEST(CompoundScore, EmptyTextIsNeutral) { EXPECT_EQ(compound_score("", tiny_lexicon()).compound, 0.0); }

TEST(CompoundScore, SingleHit) {
    auto r = compound_score("good", tiny_lexicon());
    EXPECT_DOUBLE_EQ(r.compound, normalized(1.9));
    EXPECT_NEAR(r.compound, 0.4404, 1e-4);
}

TEST(CompoundScore, NegationFlipsAndShrinks) {
    auto r = compound_score("not good", tiny_lexicon());
    EXPECT_DOUBLE_EQ(r.compound, normalized(1.9 * -0.74));
    EXPECT_NEAR(r.compound, -0.3413, 1e-4);
}

TEST(CompoundScore, NegationWindowIsThreeTokens) {
    auto lex = tiny_lexicon();
    EXPECT_LT(compound_score("not a b good", lex).compound, 0.0);
    EXPECT_GT(compound_score("not a b c good", lex).compound, 0.0);
}

TEST(CompoundScore, BoostersMoveAwayFromZero) {
    auto lex = tiny_lexicon();
    EXPECT_DOUBLE_EQ(compound_score("very good", lex).compound, normalized(1.9 + kBoosterIncrement));
    EXPECT_DOUBLE_EQ(compound_score("very bad", lex).compound, normalized(-2.5 - kBoosterIncrement));
    EXPECT_DOUBLE_EQ(compound_score("slightly good", lex).compound, normalized(1.9 - kBoosterIncrement));
    // Booster applies before negation.
    EXPECT_DOUBLE_EQ(compound_score("not very good", lex).compound,
                     normalized((1.9 + kBoosterIncrement) * -0.74));
}

TEST(CompoundScore, NoHitsIsZero) { EXPECT_EQ(compound_score("the price today", tiny_lexicon()).compound, 0.0); }

TEST(CompoundScore, StaysInRangeOnFuzzedText) {
    const auto& lex = bundled_lexicon();
    std::mt19937_64 rng(11);
    auto words = lex.words_with_sign(1);
    auto neg = lex.words_with_sign(-1);
    words.insert(words.end(), neg.begin(), neg.end());
    words.insert(words.end(), {"not", "very", "never", "extremely", "!!!", "...", "btc"});
    for (int i = 0; i < 2000; ++i) {
        std::string text;
        int n = static_cast<int>(rng() % 200);
        for (int k = 0; k < n; ++k) {
            text += words[rng() % words.size()];
            text += ' ';
        }
        double c = compound_score(text, lex).compound;
        EXPECT_GE(c, -1.0);
        EXPECT_LE(c, 1.0);
    }
}

TEST(WeightScore, ZeroFollowersIsZero) {
    auto w = weight_score(0.9, 0, 50, 10);
    EXPECT_EQ(w.raw, 0.0);
    EXPECT_EQ(w.normalized, 0.0);
}

TEST(WeightScore, WorkedExamples) {
    auto a = weight_score(0.5, 1000, 0, 0);
    EXPECT_DOUBLE_EQ(a.raw, 500.0);
    EXPECT_NEAR(a.normalized, 22.3607, 1e-4);
    auto b = weight_score(-0.4, 100, 1, 0);
    EXPECT_DOUBLE_EQ(b.raw, -80.0);
    EXPECT_NEAR(b.normalized, -8.9443, 1e-4);
}

TEST(WeightScore, SignedRootAppliesBelowOne) {
    auto w = weight_score(0.25, 1, 0, 0);
    EXPECT_DOUBLE_EQ(w.normalized, 0.5);
}

TEST(Lexicon, BundledFilesMatchEmbeddedCopy) {
    auto dir = std::string(SENTCAST_SOURCE_DIR) + "/data/lexicon/";
    auto lex = load_lexicon(dir + "valences.tsv", dir + "boosters.txt", dir + "negators.txt");
    const auto& embedded = bundled_lexicon();
    EXPECT_EQ(lex.entries, embedded.entries);
    EXPECT_EQ(lex.boosters, embedded.boosters);
    EXPECT_EQ(lex.negators, embedded.negators);
}

TEST(Lexicon, RejectsBadFiles) {
    std::istringstream out_of_range("great\t4.5\n");
    EXPECT_THROW(parse_valences(out_of_range, "x"), sentcast::ConfigError);
    std::istringstream no_tab("great 3.1\n");
    EXPECT_THROW(parse_valences(no_tab, "x"), sentcast::ConfigError);
    std::istringstream extra_columns("great\t3.1\t0.7\t[3, 3]\n");
    EXPECT_DOUBLE_EQ(parse_valences(extra_columns, "x").at("great"), 3.1);
    EXPECT_THROW(validate(Lexicon{}), sentcast::ConfigError);
    EXPECT_THROW(load_lexicon("/nonexistent/lexicon.tsv", "", ""), sentcast::ConfigError);
}
