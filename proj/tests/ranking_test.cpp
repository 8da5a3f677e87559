#include "petdet/ranking.hpp"

#include <random>

#include <gtest/gtest.h>

namespace petdet {
namespace {

ShiftVector sv(std::array<double, 5> d) { return ShiftVector{d}; }

TEST(Shift, IdentityIsZero) {
  SentimentLexicon lex;
  lex.set("bad", -0.7, 0.4);
  const auto s = Scorer::lexicon(lex);
  EXPECT_EQ(shift(s, "a bad day", "a bad day"), ShiftVector{});
}

TEST(Shift, NeutralToExtreme) {
  SentimentLexicon lex;
  lex.set("slur", -1, 1);
  const auto s = Scorer::lexicon(lex);
  EXPECT_EQ(shift(s, "a word", "a slur"), sv({1, -1, 0, -1, 1}));
}

TEST(Shift, GroupsSumToZero) {
  const SentimentVector a{0.2, 0.3, 0.5, 0.6, 0.4}, b{0.7, 0.2, 0.1, 0.1, 0.9};
  const auto s = b - a;
  EXPECT_NEAR(s[0] + s[1] + s[2], 0, 1e-12);
  EXPECT_NEAR(s[3] + s[4], 0, 1e-12);
}

TEST(Aggregate, EmptyIsZero) { EXPECT_EQ(aggregate({}, Weights{}), 0.0); }

TEST(Aggregate, OnlyIncreasesCountWithOffensivenessWeighted) {
  EXPECT_EQ(aggregate({sv({0.5, -0.5, 0, -0.2, 0.2})}, Weights{}), 0.9);
}

TEST(Aggregate, AdditiveOverRepeats) {
  const auto s = sv({0.31, -0.11, -0.2, 0.05, -0.05});
  const double one = aggregate({s}, Weights{});
  EXPECT_EQ(aggregate({s, s}, Weights{}), 2 * one);
}

TEST(Aggregate, MeanAndMax) {
  const std::vector<ShiftVector> s{sv({0.5, -0.5, 0, -0.2, 0.2}), sv({0.1, 0, -0.1, 0, 0})};
  EXPECT_DOUBLE_EQ(aggregate(s, Weights{}, Aggregator::sum), 1.0);
  EXPECT_DOUBLE_EQ(aggregate(s, Weights{}, Aggregator::mean), 0.5);
  EXPECT_DOUBLE_EQ(aggregate(s, Weights{}, Aggregator::max), 0.9);
}

TEST(Aggregator, ParseRoundTrip) {
  for (auto a : {Aggregator::sum, Aggregator::mean, Aggregator::max}) EXPECT_EQ(parse_aggregator(to_string(a)), a);
  EXPECT_THROW(parse_aggregator("median"), Error);
}

TEST(AggregateProperty, NonNegativeAndMonotone) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<ShiftVector> s(1 + rng() % 5);
    for (auto& x : s)
      for (auto& d : x.d) d = u(rng);
    const double base = aggregate(s, Weights{});
    EXPECT_GE(base, 0);
    auto bumped = s;
    bumped[rng() % s.size()].d[rng() % 5] += 0.1;
    EXPECT_GE(aggregate(bumped, Weights{}), base);
  }
}

// Fixed scorer + embedding-free replacement sets: "bad" words raise offence.
class RankTest : public ::testing::Test {
 protected:
  Scorer scorer = [] {
    SentimentLexicon lex;
    lex.set("slur", -1, 1);
    lex.set("insult", -0.8, 0.9);
    lex.set("chair", 0, 0);
    lex.set("seat", 0, 0);
    return Scorer::lexicon(lex);
  }();
  std::vector<Token> tokens{"the", "mentally_disabled", "sat", "on", "a", "bench"};
  QualityPhrase a{"mentally_disabled", "mentally disabled", 2.0, 1};
  QualityPhrase b{"bench", "bench", 1.8, 5};

  static ReplacementSet set(const QualityPhrase& q, std::vector<std::string> words) {
    ReplacementSet r{q, {}};
    for (auto& w : words) r.replacements.push_back({w, 0.9});
    return r;
  }
};

TEST_F(RankTest, OffensiveNeighboursRankFirst) {
  const auto res = rank_sentence(scorer, tokens, {set(b, {"chair", "seat"}), set(a, {"slur", "insult"})}, RankOptions{});
  ASSERT_EQ(res.ranked.size(), 2u);
  EXPECT_EQ(res.ranked[0].phrase.token, "mentally_disabled");
  EXPECT_EQ(res.pets.size(), 2u);
  EXPECT_EQ(res.sentence, "the mentally disabled sat on a bench");
  // Direct formula: slur shift (1,-1,0,-1,1) -> 1+2 = 3; insult (0.8,-0.8,0,-0.9,0.9) -> 0.8+1.8 = 2.6.
  EXPECT_NEAR(res.ranked[0].aggregate, 5.6, 1e-12);
  EXPECT_EQ(res.ranked[1].aggregate, 0.0);
}

TEST_F(RankTest, SingleCandidateIsTheOnlyPet) {
  const auto res = rank_sentence(scorer, tokens, {set(a, {"slur"})}, RankOptions{});
  ASSERT_EQ(res.pets.size(), 1u);
  EXPECT_EQ(res.pets[0].phrase.token, "mentally_disabled");
}

TEST_F(RankTest, NoCandidatesGivesEmptyResult) {
  const auto res = rank_sentence(scorer, tokens, {}, RankOptions{});
  EXPECT_TRUE(res.ranked.empty());
  EXPECT_TRUE(res.pets.empty());
}

TEST_F(RankTest, EmptyReplacementSetScoresZeroButIsKept) {
  const auto res = rank_sentence(scorer, tokens, {set(a, {}), set(b, {})}, RankOptions{});
  ASSERT_EQ(res.ranked.size(), 2u);
  EXPECT_EQ(res.ranked[0].phrase.token, "mentally_disabled");  // tie: earlier position
  EXPECT_EQ(res.ranked[0].aggregate, 0.0);
}

TEST_F(RankTest, TiesFavourEarlierPosition) {
  const auto res = rank_sentence(scorer, tokens, {set(b, {"slur"}), set(a, {"slur"})}, RankOptions{});
  EXPECT_EQ(res.ranked[0].phrase.sentence_position, 1u);
}

TEST_F(RankTest, AlignmentIsChecked) {
  EXPECT_THROW(rank_sentence(scorer, tokens, {a, b}, {set(b, {}), set(a, {})}, RankOptions{}), std::invalid_argument);
  EXPECT_THROW(rank_sentence(scorer, tokens, {a}, {set(a, {}), set(b, {})}, RankOptions{}), std::invalid_argument);
  EXPECT_NO_THROW(rank_sentence(scorer, tokens, {a, b}, {set(a, {}), set(b, {})}, RankOptions{}));
}

TEST_F(RankTest, ScoresEachTextOnce) {
  rank_sentence(scorer, tokens, {set(a, {"slur", "chair"}), set(b, {"chair", "slur"})}, RankOptions{});
  EXPECT_EQ(scorer.backend_calls(), 5u);
}

TEST_F(RankTest, StoredAggregatesRecompute) {
  RankOptions opts;
  opts.weights.w = {0.3, 0.1, 0.7, 1.9, 2.2};
  const auto res = rank_sentence(scorer, tokens, {set(a, {"slur", "chair", "insult"}), set(b, {"seat", "insult"})}, opts);
  for (const auto& c : res.ranked) {
    EXPECT_NEAR(c.aggregate, aggregate(c.shifts(), opts.weights), 1e-9);
    for (const auto& r : c.per_replacement) {
      EXPECT_NEAR(r.shift[0] + r.shift[1] + r.shift[2], 0, 1e-12);
      EXPECT_NEAR(r.shift[3] + r.shift[4], 0, 1e-12);
    }
  }
}

TEST(SortCandidates, PermutationSortedAndScaleInvariant) {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RankedCandidate> cands(1 + rng() % 8);
    for (std::size_t i = 0; i < cands.size(); ++i) {
      cands[i].phrase.sentence_position = i;
      for (int r = 0; r < 3; ++r) {
        ShiftVector s;
        for (auto& d : s.d) d = u(rng);
        cands[i].per_replacement.push_back({"r", s});
      }
    }
    auto order = [&](const Weights& w) {
      auto c = cands;
      for (auto& x : c) x.aggregate = aggregate(x.shifts(), w);
      sort_candidates(c);
      std::vector<std::size_t> pos;
      for (std::size_t i = 0; i < c.size(); ++i) {
        pos.push_back(c[i].phrase.sentence_position);
        if (i) {
          EXPECT_GE(c[i - 1].aggregate, c[i].aggregate);
        }
      }
      return pos;
    };
    const auto base = order(Weights{});
    auto sorted = base;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
    EXPECT_EQ(order(Weights{}.scaled(0.5)), base);
    EXPECT_EQ(order(Weights{}.scaled(4)), base);
  }
}

}  // namespace
}  // namespace petdet
