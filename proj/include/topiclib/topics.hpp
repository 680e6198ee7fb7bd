#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topiclib/cluster.hpp"
#include "topiclib/common.hpp"
#include "topiclib/embed.hpp"
#include "topiclib/matrix.hpp"
#include "topiclib/stopwords.hpp"
#include "topiclib/text.hpp"

namespace topiclib {

struct VectorizerConfig {
  std::pair<int, int> ngram_range{1, 2};
  int min_df = 1;  // minimum corpus-wide count
  std::set<std::string> standard_stopwords = english_stopwords();
  std::set<std::string> extra_stopwords;
  bool lowercase = true;

  void validate() const {
    if (ngram_range.first < 1 || ngram_range.first > ngram_range.second) {
      throw config_error("vectorizer: invalid ngram_range");
    }
    if (min_df < 1) throw config_error("vectorizer: min_df must be >= 1");
  }
};

struct TermCounts {
  std::vector<std::string> vocab;              // sorted
  std::vector<std::vector<double>> counts;     // [cluster][term]
  std::vector<double> corpus_freq;             // per term, all clusters
};

struct TopicKeywords {
  int topic_id = 0;
  std::vector<std::pair<std::string, double>> terms;  // weight non-increasing
};

struct Topic {
  int topic_id = 0;
  int size = 0;
  TopicKeywords keywords;
  std::vector<float> centroid;
  std::vector<int> representative_chunk_ids;
  std::string label;
};

struct TopicModel {
  std::vector<Topic> topics;
  int noise_count = 0;
  nlohmann::json config_snapshot;
};

inline std::vector<std::string> word_tokens(const std::string& text,
                                            bool lowercase) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current += lowercase ? static_cast<char>(std::tolower(c)) : ch;
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

// Per-cluster n-gram counts. A unigram is dropped when it is a stopword; a
// bigram only when both tokens are (keeps place-name bigrams like "den hoed").
// Terms whose corpus-wide count falls below min_df are dropped.
inline TermCounts vectorize(const std::vector<Chunk>& chunks,
                            const std::vector<int>& labels,
                            const VectorizerConfig& config) {
  config.validate();
  int n_clusters = 0;
  for (int l : labels) n_clusters = std::max(n_clusters, l + 1);

  auto is_stop = [&](const std::string& w) {
    return config.standard_stopwords.count(w) > 0 ||
           config.extra_stopwords.count(w) > 0;
  };

  std::map<std::string, std::vector<double>> counts;  // term -> per-cluster
  for (size_t i = 0; i < chunks.size(); ++i) {
    const int label = labels[i];
    if (label < 0) continue;
    const auto tokens = word_tokens(chunks[i].text, config.lowercase);
    for (int g = config.ngram_range.first; g <= config.ngram_range.second; ++g) {
      if (static_cast<int>(tokens.size()) < g) continue;
      for (size_t t = 0; t + g <= tokens.size(); ++t) {
        int stop_count = 0;
        for (int s = 0; s < g; ++s) {
          if (is_stop(tokens[t + s])) ++stop_count;
        }
        if (g == 1 && stop_count > 0) continue;
        if (g > 1 && stop_count == g) continue;
        std::string term = tokens[t];
        for (int s = 1; s < g; ++s) term += " " + tokens[t + s];
        auto& row = counts[term];
        if (row.empty()) row.assign(n_clusters, 0.0);
        row[label] += 1.0;
      }
    }
  }

  TermCounts out;
  for (auto& [term, row] : counts) {
    double total = 0.0;
    for (double v : row) total += v;
    if (total < config.min_df) continue;
    out.vocab.push_back(term);
    out.counts.push_back(std::move(row));
    out.corpus_freq.push_back(total);
  }
  // counts arrived keyed by term via std::map, so vocab is already sorted;
  // transpose to [cluster][term].
  std::vector<std::vector<double>> by_cluster(
      n_clusters, std::vector<double>(out.vocab.size(), 0.0));
  for (size_t t = 0; t < out.vocab.size(); ++t) {
    for (int c = 0; c < n_clusters; ++c) by_cluster[c][t] = out.counts[t][c];
  }
  out.counts = std::move(by_cluster);
  return out;
}

// Class-based TF-IDF: W(t,c) = tf(t,c) * ln(1 + A / f(t)) with A the mean
// total token count per cluster and f(t) the corpus-wide count of t.
inline std::vector<std::vector<double>> ctfidf(const TermCounts& counts) {
  const size_t n_clusters = counts.counts.size();
  if (n_clusters == 0) throw config_error("ctfidf: need at least one cluster");
  double total_tokens = 0.0;
  for (const auto& row : counts.counts) {
    for (double v : row) total_tokens += v;
  }
  const double mean_per_cluster = total_tokens / n_clusters;
  std::vector<std::vector<double>> weights(
      n_clusters, std::vector<double>(counts.vocab.size(), 0.0));
  for (size_t c = 0; c < n_clusters; ++c) {
    for (size_t t = 0; t < counts.vocab.size(); ++t) {
      const double tf = counts.counts[c][t];
      if (tf == 0.0) continue;
      weights[c][t] = tf * std::log(1.0 + mean_per_cluster / counts.corpus_freq[t]);
    }
  }
  return weights;
}

namespace detail {

inline bool keyword_order(const std::pair<std::string, double>& x,
                          const std::pair<std::string, double>& y) {
  if (x.second != y.second) return x.second > y.second;
  return x.first < y.first;
}

}  // namespace detail

// Top k terms by weight, ties by lexicographic term. With dedup_unigrams, a
// unigram contained in a kept bigram is removed and the ranking refilled
// until stable.
inline TopicKeywords top_keywords(const std::vector<double>& weights,
                                  const std::vector<std::string>& vocab,
                                  int topic_id, int k,
                                  bool dedup_unigrams = false) {
  if (k < 1) throw config_error("top_keywords: k must be >= 1");
  std::vector<std::pair<std::string, double>> ranked;
  for (size_t t = 0; t < vocab.size(); ++t) {
    if (weights[t] > 0.0) ranked.emplace_back(vocab[t], weights[t]);
  }
  std::sort(ranked.begin(), ranked.end(), detail::keyword_order);

  TopicKeywords out;
  out.topic_id = topic_id;
  std::set<std::string> banned;
  while (true) {
    out.terms.clear();
    for (const auto& term : ranked) {
      if (static_cast<int>(out.terms.size()) == k) break;
      if (banned.count(term.first)) continue;
      out.terms.push_back(term);
    }
    if (!dedup_unigrams) return out;
    std::set<std::string> newly_banned;
    for (const auto& [term, w] : out.terms) {
      const auto tokens = split_whitespace(term);
      if (tokens.size() < 2) continue;
      for (const auto& tok : tokens) {
        if (!banned.count(tok)) newly_banned.insert(tok);
      }
    }
    if (newly_banned.empty()) return out;
    banned.insert(newly_banned.begin(), newly_banned.end());
  }
}

// Mean embedding of the member chunks (original embedding space).
inline std::vector<float> topic_centroid(const EmbeddingMatrix& chunk_embeddings,
                                         const std::vector<int>& member_rows) {
  std::vector<double> acc(chunk_embeddings.dimension, 0.0);
  for (int r : member_rows) {
    const auto row = chunk_embeddings.row(r);
    for (int d = 0; d < chunk_embeddings.dimension; ++d) acc[d] += row[d];
  }
  std::vector<float> out(chunk_embeddings.dimension);
  for (int d = 0; d < chunk_embeddings.dimension; ++d) {
    out[d] = static_cast<float>(acc[d] / member_rows.size());
  }
  return out;
}

// Top2Vec-style alternative: rank candidate terms by cosine similarity to the
// topic centroid; similarity is the weight.
inline TopicKeywords centroid_keywords(const std::vector<float>& centroid,
                                       const std::vector<std::string>& candidates,
                                       const EmbedderConfig& embedder,
                                       int topic_id, int k) {
  TopicKeywords out;
  out.topic_id = topic_id;
  if (candidates.empty()) return out;
  const auto term_matrix = embed_terms(candidates, embedder);
  std::vector<std::pair<std::string, double>> ranked;
  ranked.reserve(candidates.size());
  const std::span<const float> c(centroid.data(), centroid.size());
  for (size_t t = 0; t < candidates.size(); ++t) {
    ranked.emplace_back(candidates[t],
                        cosine_similarity(term_matrix.row(static_cast<int>(t)), c));
  }
  std::sort(ranked.begin(), ranked.end(), detail::keyword_order);
  const int take = std::min<int>(k, static_cast<int>(ranked.size()));
  out.terms.assign(ranked.begin(), ranked.begin() + take);
  return out;
}

// The m member chunks closest to the centroid by cosine, ties by lower id.
inline std::vector<int> representative_chunks(
    const EmbeddingMatrix& chunk_embeddings, const std::vector<int>& member_rows,
    const std::vector<int>& member_chunk_ids, const std::vector<float>& centroid,
    int m) {
  const std::span<const float> c(centroid.data(), centroid.size());
  std::vector<std::pair<double, int>> ranked;  // (-sim, chunk_id)
  ranked.reserve(member_rows.size());
  for (size_t i = 0; i < member_rows.size(); ++i) {
    ranked.emplace_back(-cosine_similarity(chunk_embeddings.row(member_rows[i]), c),
                        member_chunk_ids[i]);
  }
  std::sort(ranked.begin(), ranked.end());
  std::vector<int> out;
  const int take = std::min<int>(m, static_cast<int>(ranked.size()));
  for (int i = 0; i < take; ++i) out.push_back(ranked[i].second);
  return out;
}

// Assembles the final model; topic ids stay dense 0..T-1 and sizes plus noise
// must account for every chunk.
inline TopicModel assemble_topic_model(const std::vector<Chunk>& chunks,
                                       const std::vector<int>& labels,
                                       const std::vector<TopicKeywords>& keywords,
                                       const std::vector<std::vector<float>>& centroids,
                                       const std::vector<std::vector<int>>& representatives,
                                       nlohmann::json config_snapshot) {
  int n_topics = 0;
  for (int l : labels) n_topics = std::max(n_topics, l + 1);
  if (static_cast<int>(keywords.size()) != n_topics ||
      static_cast<int>(centroids.size()) != n_topics ||
      static_cast<int>(representatives.size()) != n_topics) {
    throw std::runtime_error("assemble_topic_model: inconsistent inputs: " +
                             std::to_string(n_topics) + " labels vs " +
                             std::to_string(keywords.size()) + " keyword sets");
  }
  TopicModel model;
  model.config_snapshot = std::move(config_snapshot);
  std::vector<int> sizes(n_topics, 0);
  for (int l : labels) {
    if (l >= 0) {
      ++sizes[l];
    } else {
      ++model.noise_count;
    }
  }
  for (int t = 0; t < n_topics; ++t) {
    Topic topic;
    topic.topic_id = t;
    topic.size = sizes[t];
    topic.keywords = keywords[t];
    topic.centroid = centroids[t];
    topic.representative_chunk_ids = representatives[t];
    model.topics.push_back(std::move(topic));
  }
  int total = model.noise_count;
  for (const auto& t : model.topics) total += t.size;
  if (total != static_cast<int>(chunks.size())) {
    throw std::runtime_error("assemble_topic_model: sizes plus noise do not "
                             "cover the chunk list");
  }
  return model;
}

inline nlohmann::json topic_model_to_json(const TopicModel& model) {
  nlohmann::json doc;
  doc["config"] = model.config_snapshot;
  doc["noise_count"] = model.noise_count;
  nlohmann::json topics = nlohmann::json::array();
  for (const auto& t : model.topics) {
    nlohmann::json jt;
    jt["id"] = t.topic_id;
    jt["size"] = t.size;
    nlohmann::json kws = nlohmann::json::array();
    for (const auto& [term, w] : t.keywords.terms) {
      kws.push_back(nlohmann::json::array({term, w}));
    }
    jt["keywords"] = std::move(kws);
    jt["representatives"] = t.representative_chunk_ids;
    jt["label"] = t.label;
    topics.push_back(std::move(jt));
  }
  doc["topics"] = std::move(topics);
  return doc;
}

inline TopicModel topic_model_from_json(const nlohmann::json& doc) {
  TopicModel model;
  model.config_snapshot = doc.at("config");
  model.noise_count = doc.at("noise_count").get<int>();
  for (const auto& jt : doc.at("topics")) {
    Topic t;
    t.topic_id = jt.at("id").get<int>();
    t.size = jt.at("size").get<int>();
    t.keywords.topic_id = t.topic_id;
    for (const auto& kw : jt.at("keywords")) {
      t.keywords.terms.emplace_back(kw.at(0).get<std::string>(),
                                    kw.at(1).get<double>());
    }
    for (const auto& r : jt.at("representatives")) {
      t.representative_chunk_ids.push_back(r.get<int>());
    }
    t.label = jt.at("label").get<std::string>();
    model.topics.push_back(std::move(t));
  }
  return model;
}

}  // namespace topiclib
