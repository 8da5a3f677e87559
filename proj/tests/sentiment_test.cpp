#include "petdet/sentiment.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace petdet {
namespace {

void expect_vector(const SentimentVector& v, std::array<double, 5> want, double tol = 1e-12) {
  const auto got = v.as_array();
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(got[i], want[i], tol) << "component " << i;
}

SentimentLexicon toy_lexicon() {
  SentimentLexicon lex;
  lex.set("slur", -1, 1);
  lex.set("love", 1, 0.5);
  lex.set("table", 0, 0.5);
  lex.set("nice", 0.4, 0);
  return lex;
}

TEST(ScoreLexicon, NoMatchIsNeutral) { expect_vector(score_lexicon(toy_lexicon(), "a plain sentence"), {0, 1, 0, 1, 0}); }

TEST(ScoreLexicon, ExtremePoint) { expect_vector(score_lexicon(toy_lexicon(), "Slur!"), {1, 0, 0, 0, 1}); }

TEST(ScoreLexicon, MeanOfMatchedWords) {
  expect_vector(score_lexicon(toy_lexicon(), "I love this table"), {0, 0.5, 0.5, 0.5, 0.5});
}

TEST(ScoreLexicon, PropertySimplexAndOrderInvariance) {
  const auto lex = SentimentLexicon::load(std::string(PETDET_DATA_DIR) + "/sentiment_lexicon.tsv");
  const std::vector<std::string> pool{"good", "bad", "idiot", "hate", "love", "death", "the", "table", "kill", "happy"};
  std::mt19937 rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> words;
    for (int i = 0; i < static_cast<int>(rng() % 8); ++i) words.push_back(pool[rng() % pool.size()]);
    const auto v = score_lexicon(lex, sentence_text(words));
    EXPECT_TRUE(satisfies_simplex(v, 1e-6));
    std::shuffle(words.begin(), words.end(), rng);
    const auto w = score_lexicon(lex, sentence_text(words));
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(v.as_array()[i], w.as_array()[i], 1e-12);
  }
}

TEST(SentimentLexicon, LoadValidates) {
  testing::TempDir dir;
  EXPECT_EQ(SentimentLexicon::load(dir.write("ok.tsv", "# c\nGood\t0.5\t0\n")).find("good")->valence, 0.5);
  EXPECT_THROW(SentimentLexicon::load(dir.write("r.tsv", "x\t2\t0\n")), ParseError);
  EXPECT_THROW(SentimentLexicon::load(dir.write("n.tsv", "x\tabc\t0\n")), ParseError);
  EXPECT_THROW(SentimentLexicon::load(dir.write("c.tsv", "x\t0.1\n")), ParseError);
  EXPECT_THROW(SentimentLexicon::load(dir.file("none.tsv")), IoError);
}

TEST(Scorer, LexiconHandleEqualsDirectScore) {
  const auto s = Scorer::lexicon(toy_lexicon());
  EXPECT_EQ(s.kind(), Scorer::Kind::lexicon);
  EXPECT_EQ(s.score("love the slur"), score_lexicon(toy_lexicon(), "love the slur"));
}

TEST(Scorer, MemoisesIdenticalText) {
  const auto s = Scorer::lexicon(toy_lexicon());
  const auto a = s.score("nice table");
  const auto b = s.score("nice table");
  EXPECT_EQ(a, b);
  EXPECT_EQ(s.backend_calls(), 1u);
  s.score_batch({"x", "y", "x", "nice table"});
  EXPECT_EQ(s.backend_calls(), 3u);
}

TEST(Scorer, ConcurrentCallersSeeSameValues) {
  const auto s = Scorer::lexicon(toy_lexicon());
  std::vector<std::thread> threads;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&] {
      for (int i = 0; i < 200; ++i) {
        const std::string text = "love " + std::to_string(i % 20);
        if (!(s.score(text) == score_lexicon(toy_lexicon(), text))) ++mismatches;
      }
    });
  for (auto& th : threads) th.join();
  EXPECT_EQ(mismatches.load(), 0);
  EXPECT_EQ(s.backend_calls(), 20u);
}

TEST(ParseScoreResponse, Conforming) {
  const auto v = parse_score_response(R"({"results":[{"sentiment":[0.1,0.2,0.7],"offense":[0.9,0.1]}]})", 1);
  ASSERT_EQ(v.size(), 1u);
  expect_vector(v[0], {0.1, 0.2, 0.7, 0.9, 0.1});
}

TEST(ParseScoreResponse, RenormalisesSmallDrift) {
  const auto v = parse_score_response(R"({"results":[{"sentiment":[0.1,0.2,0.7005],"offense":[0.9,0.1]}]})", 1);
  EXPECT_TRUE(satisfies_simplex(v[0], 1e-12));
  EXPECT_NEAR(v[0].pos, 0.7005 / 1.0005, 1e-12);
}

TEST(ParseScoreResponse, RejectsViolations) {
  EXPECT_THROW(parse_score_response(R"({"results":[{"sentiment":[0.5,0.5,0.5],"offense":[0.9,0.1]}]})", 1),
               ProtocolError);
  EXPECT_THROW(parse_score_response(R"({"results":[{"sentiment":[0.5,0.5],"offense":[0.9,0.1]}]})", 1), ProtocolError);
  EXPECT_THROW(parse_score_response(R"({"results":[{"sentiment":[1.2,-0.2,0],"offense":[0.9,0.1]}]})", 1),
               ProtocolError);
  EXPECT_THROW(parse_score_response(R"({"results":[]})", 1), ProtocolError);
  EXPECT_THROW(parse_score_response(R"({"nope":1})", 0), ProtocolError);
  EXPECT_THROW(parse_score_response("not json", 0), ProtocolError);
}

// In-process stand-in for the model server. The response for each text is
// computed by `respond`; every request body is recorded.
class MockServer {
 public:
  using Respond = std::function<nlohmann::json(const std::string&)>;

  explicit MockServer(Respond respond, int status = 200) : respond_(std::move(respond)), status_(status) {
    server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      const auto body = nlohmann::json::parse(req.body);
      {
        std::lock_guard lock(mu_);
        batch_sizes_.push_back(body["texts"].size());
      }
      if (status_ != 200) {
        res.status = status_;
        res.set_content(R"({"error":"bad"})", "application/json");
        return;
      }
      nlohmann::json results = nlohmann::json::array();
      for (const auto& t : body["texts"]) results.push_back(respond_(t.get<std::string>()));
      res.set_content(nlohmann::json{{"results", results}}.dump(), "application/json");
    });
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok","model":"mock"})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_; }
  std::vector<std::size_t> batch_sizes() const {
    std::lock_guard lock(mu_);
    return batch_sizes_;
  }

 private:
  Respond respond_;
  int status_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> requests_{0};
  mutable std::mutex mu_;
  std::vector<std::size_t> batch_sizes_;
};

nlohmann::json positive_if_love(const std::string& text) {
  if (text.find("love") != std::string::npos) return {{"sentiment", {0.05, 0.15, 0.8}}, {"offense", {0.95, 0.05}}};
  return {{"sentiment", {0.6, 0.3, 0.1}}, {"offense", {0.4, 0.6}}};
}

RemoteOptions fast(const std::string& endpoint) {
  RemoteOptions o;
  o.endpoint = endpoint;
  o.timeout = std::chrono::milliseconds(2000);
  return o;
}

TEST(RemoteScorer, ConformingServer) {
  MockServer srv(positive_if_love);
  const RemoteScorer r(fast(srv.endpoint()));
  const auto v = r.score(std::string("I love this"));
  EXPECT_TRUE(satisfies_simplex(v));
  EXPECT_GT(v.pos, v.neg);
  EXPECT_EQ(r.health()["status"], "ok");
}

TEST(RemoteScorer, PreservesOrderAcrossBatches) {
  MockServer srv(positive_if_love);
  auto opts = fast(srv.endpoint());
  opts.batch_size = 3;
  const RemoteScorer r(opts);
  std::vector<std::string> texts;
  for (int i = 0; i < 8; ++i) texts.push_back(i % 3 == 0 ? "love " + std::to_string(i) : "meh " + std::to_string(i));
  const auto v = r.score(texts);
  ASSERT_EQ(v.size(), texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(v[i].pos > 0.5, i % 3 == 0) << i;
  EXPECT_EQ(srv.batch_sizes(), (std::vector<std::size_t>{3, 3, 2}));
}

TEST(RemoteScorer, InvalidSimplexIsProtocolError) {
  MockServer srv([](const std::string&) -> nlohmann::json {
    return {{"sentiment", {0.5, 0.5, 0.5}}, {"offense", {0.5, 0.5}}};
  });
  const RemoteScorer r(fast(srv.endpoint()));
  EXPECT_THROW(r.score(std::string("x")), ProtocolError);
}

TEST(RemoteScorer, HttpErrorStatusIsProtocolError) {
  MockServer srv(positive_if_love, 400);
  const RemoteScorer r(fast(srv.endpoint()));
  EXPECT_THROW(r.score(std::string("x")), ProtocolError);
  EXPECT_EQ(srv.requests(), 1);  // a response, even an error, is not retried
}

TEST(RemoteScorer, ServerDownFailsAfterRetries) {
  auto opts = fast("http://127.0.0.1:" + std::to_string(testing::closed_port()));
  opts.timeout = std::chrono::milliseconds(300);
  const RemoteScorer r(opts);
  try {
    r.score(std::string("x"));
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("3 attempts"), std::string::npos) << e.what();
  }
}

TEST(RemoteScorer, SlowServerTimesOutAfterRetries) {
  MockServer srv([](const std::string& t) {
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    return positive_if_love(t);
  });
  auto opts = fast(srv.endpoint());
  opts.timeout = std::chrono::milliseconds(100);
  opts.retries = 1;
  const RemoteScorer r(opts);
  EXPECT_THROW(r.score(std::string("x")), ProtocolError);
  EXPECT_EQ(srv.requests(), 2);
}

TEST(RemoteScorer, ScorerHandleMemoisesRemoteCalls) {
  MockServer srv(positive_if_love);
  const auto s = Scorer::remote(fast(srv.endpoint()));
  EXPECT_EQ(s.kind(), Scorer::Kind::remote);
  const auto a = s.score_batch({"love it", "hate it", "love it"});
  const auto b = s.score("love it");
  EXPECT_EQ(a[0], b);
  EXPECT_EQ(a[0], a[2]);
  EXPECT_EQ(s.backend_calls(), 2u);
  EXPECT_EQ(srv.requests(), 1);
  EXPECT_EQ(b, RemoteScorer(fast(srv.endpoint())).score(std::string("love it")));
}

TEST(RemoteScorer, ConcurrentRequestsRespectResults) {
  MockServer srv(positive_if_love);
  auto opts = fast(srv.endpoint());
  opts.max_in_flight = 2;
  const RemoteScorer r(opts);
  std::vector<std::thread> threads;
  std::atomic<int> bad{0};
  for (int t = 0; t < 6; ++t)
    threads.emplace_back([&, t] {
      const auto v = r.score(std::string(t % 2 ? "love" : "no"));
      if ((v.pos > 0.5) != (t % 2 == 1)) ++bad;
    });
  for (auto& th : threads) th.join();
  EXPECT_EQ(bad.load(), 0);
}

TEST(RemoteOptions, Validation) {
  RemoteOptions o;
  o.batch_size = 0;
  EXPECT_THROW(RemoteScorer{o}, Error);
  o = RemoteOptions{};
  o.max_in_flight = 0;
  EXPECT_THROW(RemoteScorer{o}, Error);
}

}  // namespace
}  // namespace petdet
