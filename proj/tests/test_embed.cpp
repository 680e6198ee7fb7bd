#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "topiclib/embed.hpp"

using namespace topiclib;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  return cosine_similarity({a.data(), a.size()}, {b.data(), b.size()});
}

}  // namespace

TEST_CASE("stub embeddings are deterministic unit vectors") {
  const auto a = stub_embedding("I felt tired today", 256);
  const auto b = stub_embedding("I felt tired today", 256);
  CHECK(a == b);
  const double n = norm({a.data(), a.size()});
  CHECK(std::fabs(n - 1.0) < 1e-6);

  const auto empty = stub_embedding("", 64);
  CHECK(std::fabs(norm({empty.data(), empty.size()}) - 1.0) < 1e-6);
}

TEST_CASE("stub embeddings share similarity through shared tokens") {
  const int d = 768;
  const auto ab = stub_embedding("a b", d);
  const auto ac = stub_embedding("a c", d);
  const auto xy = stub_embedding("x y", d);
  CHECK(cosine(ab, ac) > cosine(ab, xy));
}

TEST_CASE("stub embeddings separate disjoint-vocabulary themes") {
  const std::vector<std::string> vocab_a = {"soup",  "bread", "eating",
                                            "taste", "meals", "hungry"};
  const std::vector<std::string> vocab_b = {"sleep",  "pillow", "night",
                                            "dreams", "awake",  "tired"};
  Rng rng(12);
  auto make_chunks = [&](const std::vector<std::string>& vocab) {
    std::vector<std::vector<float>> rows;
    for (int i = 0; i < 20; ++i) {
      std::string text;
      for (int w = 0; w < 8; ++w) {
        if (w) text += " ";
        text += vocab[rng.below(vocab.size())];
      }
      rows.push_back(stub_embedding(text, 768));
    }
    return rows;
  };
  const auto theme_a = make_chunks(vocab_a);
  const auto theme_b = make_chunks(vocab_b);
  double within = 0.0, cross = 0.0;
  int wn = 0, cn = 0;
  for (const auto& theme : {theme_a, theme_b}) {
    for (size_t i = 0; i < theme.size(); ++i) {
      for (size_t j = i + 1; j < theme.size(); ++j) {
        within += cosine(theme[i], theme[j]);
        ++wn;
      }
    }
  }
  for (const auto& a : theme_a) {
    for (const auto& b : theme_b) {
      cross += cosine(a, b);
      ++cn;
    }
  }
  CHECK(within / wn > cross / cn);
}

TEST_CASE("embed_terms handles the empty list") {
  EmbedderConfig cfg;
  cfg.dimension = 16;
  const auto m = embed_terms({}, cfg);
  CHECK(m.n_rows == 0);
  CHECK(m.dimension == 16);
}

TEST_CASE("embed_chunks requires chunks and orders rows by chunk_id") {
  EmbedderConfig cfg;
  cfg.dimension = 32;
  CHECK_THROWS_AS(embed_chunks({}, cfg), config_error);

  std::vector<Chunk> chunks;
  chunks.push_back({2, "I0", 2, "later text", 1});
  chunks.push_back({0, "I0", 0, "first text", 1});
  chunks.push_back({1, "I0", 1, "middle text", 1});
  const auto m = embed_chunks(chunks, cfg);
  REQUIRE(m.n_rows == 3);
  CHECK(m.row_keys == std::vector<std::string>{"0", "1", "2"});
  const auto direct = stub_embedding("first text", 32);
  for (int d = 0; d < 32; ++d) CHECK(m.row(0)[d] == direct[d]);
}

TEST_CASE("cache round trip is bit-identical and serves the file backend") {
  const auto dir = temp_dir("topiclib_embed_cache");
  const std::string cache = (dir / "cache.jsonl").string();

  EmbedderConfig writer;
  writer.backend = EmbedBackend::stub;
  writer.dimension = 48;
  writer.cache_path = cache;
  const std::vector<std::string> texts = {"alpha beta", "gamma", "delta eps"};
  const auto first = embed_texts(texts, texts, writer);

  EmbedderConfig reader;
  reader.backend = EmbedBackend::file;
  reader.dimension = 48;
  reader.cache_path = cache;
  const auto second = embed_texts(texts, texts, reader);
  CHECK(first.values == second.values);

  // file backend refuses texts that were never cached
  CHECK_THROWS_AS(embed_texts({"never seen"}, {"never seen"}, reader),
                  backend_error);

  // dimension mismatch between cache and config is a hard error
  EmbedderConfig wrong;
  wrong.backend = EmbedBackend::stub;
  wrong.dimension = 32;
  wrong.cache_path = cache;
  CHECK_THROWS_AS(embed_texts(texts, texts, wrong), config_error);
}

TEST_CASE("warm cache serves remote runs without any network call") {
  const auto dir = temp_dir("topiclib_embed_warm");
  const std::string cache = (dir / "cache.jsonl").string();
  const std::vector<std::string> texts = {"one", "two", "three"};

  EmbedderConfig warm;
  warm.backend = EmbedBackend::stub;
  warm.dimension = 24;
  warm.cache_path = cache;
  const auto expected = embed_texts(texts, texts, warm);

  EmbedderConfig remote;
  remote.backend = EmbedBackend::remote;
  remote.dimension = 24;
  remote.cache_path = cache;
  remote.endpoint_url = "http://127.0.0.1:1/unreachable";  // would fail if contacted
  remote.retry_base_ms = 1;
  const auto served = embed_texts(texts, texts, remote);
  CHECK(served.values == expected.values);
}

namespace {

struct MockEmbedServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;
  std::atomic<int> requests{0};

  explicit MockEmbedServer(int dimension, int fail_first = 0,
                           bool shuffle_timing = false) {
    server.Post("/embed", [this, dimension, fail_first,
                           shuffle_timing](const httplib::Request& req,
                                           httplib::Response& res) {
      const int r = ++requests;
      if (r <= fail_first) {
        res.status = 500;
        return;
      }
      if (shuffle_timing) {
        std::this_thread::sleep_for(
            std::chrono::milliseconds(fnv1a64(req.body) % 17));
      }
      const auto body = nlohmann::json::parse(req.body);
      nlohmann::json out;
      out["embeddings"] = nlohmann::json::array();
      for (const auto& input : body.at("inputs")) {
        // first component encodes the term index for order checks
        const std::string text = input.get<std::string>();
        double id = 0.0;
        if (const auto pos = text.find_last_of('_'); pos != std::string::npos) {
          id = std::stod(text.substr(pos + 1));
        }
        std::vector<double> vec(dimension, 0.25);
        vec[0] = id;
        out["embeddings"].push_back(vec);
      }
      res.set_content(out.dump(), "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~MockEmbedServer() {
    server.stop();
    thread.join();
  }

  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port) + "/embed";
  }
};

}  // namespace

TEST_CASE("remote backend returns rows in input order despite shuffled timing") {
  MockEmbedServer mock(4, 0, /*shuffle_timing=*/true);
  EmbedderConfig cfg;
  cfg.backend = EmbedBackend::remote;
  cfg.dimension = 4;
  cfg.endpoint_url = mock.url();
  cfg.max_in_flight = 4;
  cfg.batch_size = 16;
  cfg.retry_base_ms = 1;

  std::vector<std::string> terms;
  for (int i = 0; i < 1000; ++i) terms.push_back("term_" + std::to_string(i));
  const auto m = embed_texts(terms, terms, cfg);
  REQUIRE(m.n_rows == 1000);
  for (int i = 0; i < 1000; ++i) {
    CHECK(m.row(i)[0] == static_cast<float>(i));
  }
  CHECK(mock.requests.load() >= 63);  // ceil(1000/16) batches
}

TEST_CASE("remote backend retries with backoff and then succeeds") {
  MockEmbedServer mock(4, /*fail_first=*/2);
  EmbedderConfig cfg;
  cfg.backend = EmbedBackend::remote;
  cfg.dimension = 4;
  cfg.endpoint_url = mock.url();
  cfg.max_in_flight = 1;
  cfg.retry_base_ms = 2;
  const auto m = embed_texts({"term_7"}, {"term_7"}, cfg);
  CHECK(m.row(0)[0] == 7.0f);
  CHECK(mock.requests.load() == 3);
}

TEST_CASE("remote backend fails hard after exhausting retries, naming the batch") {
  MockEmbedServer mock(4, /*fail_first=*/1000000);
  EmbedderConfig cfg;
  cfg.backend = EmbedBackend::remote;
  cfg.dimension = 4;
  cfg.endpoint_url = mock.url();
  cfg.retry_base_ms = 1;
  try {
    embed_texts({"term_1"}, {"term_1"}, cfg);
    FAIL("expected backend_error");
  } catch (const backend_error& e) {
    CHECK(std::string(e.what()).find("batch 0") != std::string::npos);
  }
}

TEST_CASE("remote backend rejects wrong response dimensions") {
  MockEmbedServer mock(6);  // serves 6-dim vectors
  EmbedderConfig cfg;
  cfg.backend = EmbedBackend::remote;
  cfg.dimension = 4;  // expects 4
  cfg.endpoint_url = mock.url();
  cfg.retry_base_ms = 1;
  CHECK_THROWS_AS(embed_texts({"term_1"}, {"term_1"}, cfg), backend_error);
}
