#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "topiclib/common.hpp"
#include "topiclib/matrix.hpp"
#include "topiclib/text.hpp"

namespace topiclib {

enum class EmbedBackend { stub, file, remote };

struct EmbedderConfig {
  EmbedBackend backend = EmbedBackend::stub;
  int dimension = 768;
  std::string model_name = "all-mpnet-base-v2";
  std::string endpoint_url;   // required for remote
  std::string cache_path;     // required for file
  int max_in_flight = 4;
  int batch_size = 32;
  int max_retries = 3;
  int retry_base_ms = 1000;

  void validate() const {
    if (dimension <= 0) throw config_error("embedder: dimension must be > 0");
    if (max_in_flight < 1) throw config_error("embedder: max_in_flight must be >= 1");
    if (backend == EmbedBackend::remote && endpoint_url.empty()) {
      throw config_error("embedder: remote backend requires endpoint_url");
    }
    if (backend == EmbedBackend::file && cache_path.empty()) {
      throw config_error("embedder: file backend requires cache_path");
    }
  }
};

inline EmbedBackend parse_embed_backend(const std::string& name) {
  if (name == "stub") return EmbedBackend::stub;
  if (name == "file") return EmbedBackend::file;
  if (name == "remote") return EmbedBackend::remote;
  throw config_error("unknown embedder backend: " + name);
}

inline const char* embed_backend_name(EmbedBackend b) {
  switch (b) {
    case EmbedBackend::stub: return "stub";
    case EmbedBackend::file: return "file";
    case EmbedBackend::remote: return "remote";
  }
  return "stub";
}

// Deterministic pseudo-embedding: a hash-seeded vector averaged with one
// hash-seeded vector per whitespace token, then L2-normalized. Shared tokens
// between two texts produce genuine cosine similarity.
inline std::vector<float> stub_embedding(const std::string& text, int dimension) {
  std::vector<double> acc(dimension, 0.0);
  const std::string lower = to_lower_ascii(text);
  auto add_from_seed = [&](std::uint64_t seed) {
    Rng rng(seed);
    for (int d = 0; d < dimension; ++d) acc[d] += rng.uniform(-1.0, 1.0);
  };
  int count = 1;
  add_from_seed(lower.empty() ? 0 : fnv1a64(lower));
  for (const auto& token : split_whitespace(lower)) {
    add_from_seed(fnv1a64(token));
    ++count;
  }
  double norm2 = 0.0;
  for (auto& v : acc) {
    v /= count;
    norm2 += v * v;
  }
  const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
  std::vector<float> out(dimension);
  for (int d = 0; d < dimension; ++d) {
    out[d] = static_cast<float>(acc[d] * inv);
  }
  if (inv == 0.0 && dimension > 0) out[0] = 1.0f;
  return out;
}

// Content-addressed embedding cache. File format: header "EMB1 <dimension>",
// then one JSON record {"key": <hex>, "vec": [...]} per line.
class EmbedCache {
 public:
  static std::string key_for(const std::string& model, const std::string& text) {
    return hex16(fnv1a64(model + '\x1f' + text));
  }

  void load(const std::filesystem::path& path, int expected_dimension) {
    std::ifstream in(path);
    if (!in) return;  // nothing cached yet
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    std::string magic;
    int dim = 0;
    hs >> magic >> dim;
    if (magic != "EMB1") {
      throw config_error("embedding cache " + path.string() +
                         " has an unrecognized header");
    }
    if (dim != expected_dimension) {
      throw config_error("embedding cache " + path.string() + " has dimension " +
                         std::to_string(dim) + " but the run is configured for " +
                         std::to_string(expected_dimension));
    }
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      const auto rec = nlohmann::json::parse(line);
      std::vector<float> vec;
      vec.reserve(rec.at("vec").size());
      for (const auto& v : rec.at("vec")) {
        vec.push_back(static_cast<float>(v.get<double>()));
      }
      entries_[rec.at("key").get<std::string>()] = std::move(vec);
    }
    dimension_ = expected_dimension;
  }

  void save(const std::filesystem::path& path, int dimension) const {
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw config_error("cannot write embedding cache: " + path.string());
      out << "EMB1 " << dimension << "\n";
      std::vector<std::string> keys;
      keys.reserve(entries_.size());
      for (const auto& [k, v] : entries_) keys.push_back(k);
      std::sort(keys.begin(), keys.end());
      for (const auto& k : keys) {
        nlohmann::json rec;
        rec["key"] = k;
        nlohmann::json vec = nlohmann::json::array();
        for (float v : entries_.at(k)) vec.push_back(static_cast<double>(v));
        rec["vec"] = std::move(vec);
        out << rec.dump() << "\n";
      }
    }
    std::filesystem::rename(tmp, path);
  }

  const std::vector<float>* lookup(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  void insert(const std::string& key, std::vector<float> vec) {
    entries_[key] = std::move(vec);
  }

  size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, std::vector<float>> entries_;
  int dimension_ = 0;
};

namespace detail {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // /...
};

inline ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw config_error("endpoint_url must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

// One batch POST with retries and exponential backoff. Returns rows or an
// error message describing the failing batch.
inline std::optional<std::string> fetch_embedding_batch(
    const EmbedderConfig& config, const std::vector<std::string>& texts,
    size_t batch_index, std::vector<std::vector<float>>* rows) {
  const auto url = parse_url(config.endpoint_url);
  nlohmann::json body;
  body["model"] = config.model_name;
  body["inputs"] = texts;
  const std::string payload = body.dump();
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          config.retry_base_ms * (1LL << (attempt - 1))));
    }
    httplib::Client client(url.base);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    auto res = client.Post(url.path, payload, "application/json");
    if (!res) {
      last_error = "connection failed";
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(res->body);
    } catch (const std::exception& e) {
      last_error = std::string("bad JSON: ") + e.what();
      continue;
    }
    if (!parsed.contains("embeddings") ||
        parsed["embeddings"].size() != texts.size()) {
      last_error = "response embeddings count mismatch";
      continue;
    }
    rows->clear();
    bool ok = true;
    for (const auto& emb : parsed["embeddings"]) {
      if (static_cast<int>(emb.size()) != config.dimension) {
        last_error = "embedding dimension mismatch in response";
        ok = false;
        break;
      }
      std::vector<float> row;
      row.reserve(emb.size());
      for (const auto& v : emb) row.push_back(static_cast<float>(v.get<double>()));
      rows->push_back(std::move(row));
    }
    if (ok) return std::nullopt;
  }
  return "embedding batch " + std::to_string(batch_index) + " failed after " +
         std::to_string(config.max_retries) + " retries: " + last_error;
}

}  // namespace detail

// Embeds texts through the configured backend with a cache-first policy.
// Rows come back in input order regardless of response arrival order.
inline EmbeddingMatrix embed_texts(const std::vector<std::string>& texts,
                                   const std::vector<std::string>& row_keys,
                                   const EmbedderConfig& config) {
  config.validate();
  EmbeddingMatrix m;
  m.n_rows = static_cast<int>(texts.size());
  m.dimension = config.dimension;
  m.values.assign(static_cast<size_t>(m.n_rows) * config.dimension, 0.0f);
  m.row_keys = row_keys;
  if (texts.empty()) return m;

  EmbedCache cache;
  const bool use_cache = !config.cache_path.empty();
  if (use_cache) cache.load(config.cache_path, config.dimension);

  std::vector<size_t> misses;
  for (size_t i = 0; i < texts.size(); ++i) {
    const auto key = EmbedCache::key_for(config.model_name, texts[i]);
    if (const auto* hit = cache.lookup(key)) {
      std::copy(hit->begin(), hit->end(), m.row(static_cast<int>(i)).begin());
    } else {
      misses.push_back(i);
    }
  }

  if (!misses.empty()) {
    switch (config.backend) {
      case EmbedBackend::stub: {
        for (size_t i : misses) {
          const auto vec = stub_embedding(texts[i], config.dimension);
          std::copy(vec.begin(), vec.end(), m.row(static_cast<int>(i)).begin());
          if (use_cache) {
            cache.insert(EmbedCache::key_for(config.model_name, texts[i]), vec);
          }
        }
        break;
      }
      case EmbedBackend::file: {
        throw backend_error(
            "file backend: " + std::to_string(misses.size()) +
            " texts missing from cache " + config.cache_path +
            " (first missing key " +
            EmbedCache::key_for(config.model_name, texts[misses[0]]) + ")");
      }
      case EmbedBackend::remote: {
        std::vector<std::vector<size_t>> batches;
        for (size_t i = 0; i < misses.size(); i += config.batch_size) {
          const size_t end = std::min(misses.size(), i + config.batch_size);
          batches.emplace_back(misses.begin() + i, misses.begin() + end);
        }
        std::vector<std::vector<std::vector<float>>> results(batches.size());
        std::vector<std::optional<std::string>> errors(batches.size());
        std::atomic<size_t> next{0};
        auto worker = [&]() {
          while (true) {
            const size_t b = next.fetch_add(1);
            if (b >= batches.size()) return;
            std::vector<std::string> batch_texts;
            batch_texts.reserve(batches[b].size());
            for (size_t i : batches[b]) batch_texts.push_back(texts[i]);
            errors[b] = detail::fetch_embedding_batch(config, batch_texts, b,
                                                      &results[b]);
          }
        };
        std::vector<std::thread> threads;
        const size_t n_threads =
            std::min<size_t>(config.max_in_flight, batches.size());
        for (size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        for (size_t b = 0; b < batches.size(); ++b) {
          if (errors[b]) throw backend_error(*errors[b]);
          for (size_t r = 0; r < batches[b].size(); ++r) {
            const size_t i = batches[b][r];
            std::copy(results[b][r].begin(), results[b][r].end(),
                      m.row(static_cast<int>(i)).begin());
            if (use_cache) {
              cache.insert(EmbedCache::key_for(config.model_name, texts[i]),
                           results[b][r]);
            }
          }
        }
        break;
      }
    }
    if (use_cache) cache.save(config.cache_path, config.dimension);
  }
  return m;
}

// One row per chunk, ordered by chunk_id.
inline EmbeddingMatrix embed_chunks(const std::vector<Chunk>& chunks,
                                    const EmbedderConfig& config) {
  if (chunks.empty()) throw config_error("embed_chunks: empty chunk list");
  std::vector<const Chunk*> ordered;
  ordered.reserve(chunks.size());
  for (const auto& c : chunks) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(),
            [](const Chunk* a, const Chunk* b) { return a->chunk_id < b->chunk_id; });
  std::vector<std::string> texts, keys;
  texts.reserve(chunks.size());
  keys.reserve(chunks.size());
  for (const auto* c : ordered) {
    texts.push_back(c->text);
    keys.push_back(std::to_string(c->chunk_id));
  }
  return embed_texts(texts, keys, config);
}

// One row per term; terms must be deduplicated by the caller.
inline EmbeddingMatrix embed_terms(const std::vector<std::string>& terms,
                                   const EmbedderConfig& config) {
  return embed_texts(terms, terms, config);
}

}  // namespace topiclib
