#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "topiclib/analyze.hpp"
#include "topiclib/cluster.hpp"
#include "topiclib/common.hpp"
#include "topiclib/embed.hpp"
#include "topiclib/label.hpp"
#include "topiclib/reduce.hpp"
#include "topiclib/synth.hpp"
#include "topiclib/text.hpp"
#include "topiclib/topics.hpp"

namespace topiclib {

enum class KeywordMethod { ctfidf, centroid };

inline KeywordMethod parse_keyword_method(const std::string& name) {
  if (name == "ctfidf") return KeywordMethod::ctfidf;
  if (name == "centroid") return KeywordMethod::centroid;
  throw config_error("unknown keyword method: " + name);
}

inline const char* keyword_method_name(KeywordMethod m) {
  return m == KeywordMethod::ctfidf ? "ctfidf" : "centroid";
}

struct PipelineConfig {
  std::string preset = "individual";
  std::string input_dir;
  std::string output_dir = "out";
  std::string stoplist_path;
  int chunk_sentences = 6;
  bool patient_lines_only = false;
  bool dedup_keywords = false;
  KeywordMethod keyword_method = KeywordMethod::ctfidf;
  int top_k_keywords = 15;
  int representatives = 3;
  std::uint64_t seed = 42;
  PromptMode label_mode = PromptMode::individual;
  bool dump_reduced = false;
  bool dump_tree = false;
  EmbedderConfig embedder;
  LayoutConfig layout;
  ClusterConfig cluster;
  VectorizerConfig vectorizer;
  LabelerConfig labeler;
};

// The paper-shaped presets: "individual" for per-interview runs, "global" for
// whole-corpus runs with broader clustering.
inline PipelineConfig preset_config(const std::string& name) {
  PipelineConfig cfg;
  cfg.preset = name;
  if (name == "individual") {
    cfg.chunk_sentences = 6;
    cfg.label_mode = PromptMode::individual;
    cfg.layout.n_neighbors = 15;
    cfg.layout.min_dist = 0.1;
    cfg.layout.n_components = 5;
    cfg.cluster.min_cluster_size = 10;
    cfg.cluster.selection = ClusterSelection::eom;
  } else if (name == "global") {
    cfg.chunk_sentences = 7;
    cfg.label_mode = PromptMode::global;
    cfg.layout.n_neighbors = 16;
    cfg.layout.min_dist = 0.2;
    cfg.layout.n_components = 4;
    cfg.cluster.min_cluster_size = 11;
    cfg.cluster.selection = ClusterSelection::eom;
  } else {
    throw config_error("unknown preset: " + name +
                       " (shipped presets: individual, global)");
  }
  return cfg;
}

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["preset"] = c.preset;
  j["input_dir"] = c.input_dir;
  j["output_dir"] = c.output_dir;
  j["stoplist_path"] = c.stoplist_path;
  j["chunk_sentences"] = c.chunk_sentences;
  j["patient_only"] = c.patient_lines_only;
  j["dedup_keywords"] = c.dedup_keywords;
  j["keyword_method"] = keyword_method_name(c.keyword_method);
  j["top_k_keywords"] = c.top_k_keywords;
  j["representatives"] = c.representatives;
  j["seed"] = c.seed;
  j["label_mode"] = prompt_mode_name(c.label_mode);
  j["embedder"] = {{"backend", embed_backend_name(c.embedder.backend)},
                   {"dimension", c.embedder.dimension},
                   {"model_name", c.embedder.model_name},
                   {"endpoint_url", c.embedder.endpoint_url},
                   {"cache_path", c.embedder.cache_path},
                   {"max_in_flight", c.embedder.max_in_flight}};
  j["layout"] = {{"n_neighbors", c.layout.n_neighbors},
                 {"min_dist", c.layout.min_dist},
                 {"n_components", c.layout.n_components},
                 {"metric", metric_name(c.layout.metric)},
                 {"n_epochs", c.layout.n_epochs},
                 {"negative_sample_rate", c.layout.negative_sample_rate},
                 {"initial_learning_rate", c.layout.initial_learning_rate}};
  j["cluster"] = {{"min_cluster_size", c.cluster.min_cluster_size},
                  {"selection", selection_name(c.cluster.selection)}};
  if (c.cluster.min_samples) j["cluster"]["min_samples"] = *c.cluster.min_samples;
  j["vectorizer"] = {{"ngram_low", c.vectorizer.ngram_range.first},
                     {"ngram_high", c.vectorizer.ngram_range.second},
                     {"min_df", c.vectorizer.min_df},
                     {"lowercase", c.vectorizer.lowercase}};
  j["labeler"] = {{"backend", label_backend_name(c.labeler.backend)},
                  {"endpoint_url", c.labeler.endpoint_url},
                  {"model_name", c.labeler.model_name}};
  return j;
}

// Overlays fields present in the JSON document; everything absent keeps its
// current (preset) value. min_topic_size is an alias for
// cluster.min_cluster_size; giving both with different values is an error.
inline void apply_config_json(const nlohmann::json& j, PipelineConfig* c) {
  auto get = [&](const char* key, auto& target) {
    if (j.contains(key)) {
      target = j.at(key).get<std::decay_t<decltype(target)>>();
    }
  };
  get("input_dir", c->input_dir);
  get("output_dir", c->output_dir);
  get("stoplist_path", c->stoplist_path);
  get("chunk_sentences", c->chunk_sentences);
  get("patient_only", c->patient_lines_only);
  get("dedup_keywords", c->dedup_keywords);
  get("top_k_keywords", c->top_k_keywords);
  get("representatives", c->representatives);
  get("seed", c->seed);
  if (j.contains("keyword_method")) {
    c->keyword_method = parse_keyword_method(j.at("keyword_method"));
  }
  if (j.contains("label_mode")) {
    c->label_mode = parse_prompt_mode(j.at("label_mode"));
  }
  if (j.contains("embedder")) {
    const auto& e = j.at("embedder");
    if (e.contains("backend")) {
      c->embedder.backend = parse_embed_backend(e.at("backend"));
    }
    if (e.contains("dimension")) c->embedder.dimension = e.at("dimension");
    if (e.contains("model_name")) c->embedder.model_name = e.at("model_name");
    if (e.contains("endpoint_url")) c->embedder.endpoint_url = e.at("endpoint_url");
    if (e.contains("cache_path")) c->embedder.cache_path = e.at("cache_path");
    if (e.contains("max_in_flight")) c->embedder.max_in_flight = e.at("max_in_flight");
    if (e.contains("retry_base_ms")) c->embedder.retry_base_ms = e.at("retry_base_ms");
  }
  if (j.contains("layout")) {
    const auto& l = j.at("layout");
    if (l.contains("n_neighbors")) c->layout.n_neighbors = l.at("n_neighbors");
    if (l.contains("min_dist")) c->layout.min_dist = l.at("min_dist");
    if (l.contains("n_components")) c->layout.n_components = l.at("n_components");
    if (l.contains("metric")) c->layout.metric = parse_metric(l.at("metric"));
    if (l.contains("n_epochs")) c->layout.n_epochs = l.at("n_epochs");
    if (l.contains("negative_sample_rate")) {
      c->layout.negative_sample_rate = l.at("negative_sample_rate");
    }
    if (l.contains("initial_learning_rate")) {
      c->layout.initial_learning_rate = l.at("initial_learning_rate");
    }
  }
  std::optional<int> explicit_mcs;
  if (j.contains("cluster")) {
    const auto& cl = j.at("cluster");
    if (cl.contains("min_cluster_size")) {
      explicit_mcs = cl.at("min_cluster_size").get<int>();
      c->cluster.min_cluster_size = *explicit_mcs;
    }
    if (cl.contains("min_samples") && !cl.at("min_samples").is_null()) {
      c->cluster.min_samples = cl.at("min_samples").get<int>();
    }
    if (cl.contains("selection")) {
      c->cluster.selection = parse_selection(cl.at("selection"));
    }
  }
  if (j.contains("min_topic_size")) {
    const int alias = j.at("min_topic_size").get<int>();
    if (explicit_mcs && *explicit_mcs != alias) {
      throw config_error(
          "min_topic_size (" + std::to_string(alias) +
          ") conflicts with cluster.min_cluster_size (" +
          std::to_string(*explicit_mcs) + "); they are one knob");
    }
    c->cluster.min_cluster_size = alias;
  }
  if (j.contains("vectorizer")) {
    const auto& v = j.at("vectorizer");
    if (v.contains("ngram_low")) c->vectorizer.ngram_range.first = v.at("ngram_low");
    if (v.contains("ngram_high")) c->vectorizer.ngram_range.second = v.at("ngram_high");
    if (v.contains("min_df")) c->vectorizer.min_df = v.at("min_df");
    if (v.contains("lowercase")) c->vectorizer.lowercase = v.at("lowercase");
  }
  if (j.contains("labeler")) {
    const auto& lb = j.at("labeler");
    if (lb.contains("backend")) {
      c->labeler.backend = parse_label_backend(lb.at("backend"));
    }
    if (lb.contains("endpoint_url")) c->labeler.endpoint_url = lb.at("endpoint_url");
    if (lb.contains("model_name")) c->labeler.model_name = lb.at("model_name");
    if (lb.contains("retry_base_ms")) c->labeler.retry_base_ms = lb.at("retry_base_ms");
  }
}

inline PipelineConfig load_config_file(const std::filesystem::path& path,
                                       const std::string& preset) {
  PipelineConfig cfg = preset_config(preset);
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw config_error("config file " + path.string() + ": " + e.what());
  }
  apply_config_json(j, &cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// Stage artifacts on disk.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw config_error("cannot write " + path.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("missing input: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class StageTimer {
 public:
  explicit StageTimer(nlohmann::json* timings) : timings_(timings) {}
  template <typename F>
  auto run(const std::string& stage, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(stage, start);
    } else {
      auto result = f();
      record(stage, start);
      return result;
    }
  }

 private:
  void record(const std::string& stage,
              std::chrono::steady_clock::time_point start) {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    (*timings_)[stage] = ms;
  }
  nlohmann::json* timings_;
};

}  // namespace detail

inline std::string chunks_to_jsonl(const std::vector<Chunk>& chunks) {
  std::string out;
  for (const auto& c : chunks) {
    nlohmann::json j;
    j["chunk_id"] = c.chunk_id;
    j["interview_id"] = c.interview_id;
    j["index"] = c.index_in_interview;
    j["sentence_count"] = c.sentence_count;
    j["text"] = c.text;
    out += j.dump() + "\n";
  }
  return out;
}

inline std::vector<Chunk> chunks_from_jsonl(const std::string& content) {
  std::vector<Chunk> chunks;
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    Chunk c;
    c.chunk_id = j.at("chunk_id").get<int>();
    c.interview_id = j.at("interview_id").get<std::string>();
    c.index_in_interview = j.at("index").get<int>();
    c.sentence_count = j.at("sentence_count").get<int>();
    c.text = j.at("text").get<std::string>();
    chunks.push_back(std::move(c));
  }
  return chunks;
}

// Run manifest: config snapshot, input hashes, per-stage timings, warnings.
// Written atomically at the end of every command.
struct RunContext {
  PipelineConfig config;
  nlohmann::json timings = nlohmann::json::object();
  nlohmann::json input_hashes = nlohmann::json::object();
  std::vector<std::string> warnings;
  std::string command;

  void note_input(const std::filesystem::path& path, const std::string& bytes) {
    input_hashes[path.string()] = hex16(fnv1a64(bytes));
  }

  void write_manifest() const {
    nlohmann::json m;
    m["command"] = command;
    m["config"] = config_to_json(config);
    m["inputs"] = input_hashes;
    m["timings_ms"] = timings;
    m["warnings"] = warnings;
    std::filesystem::create_directories(config.output_dir);
    detail::write_file_atomic(
        std::filesystem::path(config.output_dir) / "manifest.json",
        m.dump(2) + "\n");
  }
};

// ingest: transcripts -> chunks.jsonl
inline std::vector<Chunk> run_ingest(RunContext* ctx) {
  auto& cfg = ctx->config;
  ctx->command = "ingest";
  detail::StageTimer timer(&ctx->timings);

  IngestConfig ingest;
  ingest.chunk_sentences = cfg.chunk_sentences;
  ingest.patient_lines_only = cfg.patient_lines_only;
  if (!cfg.stoplist_path.empty()) {
    ingest.stoplist = load_stoplist(cfg.stoplist_path, &ctx->warnings);
  } else {
    ctx->warnings.push_back("no stoplist configured; custom stopword removal skipped");
  }

  const auto chunks = timer.run("ingest", [&] {
    const auto raw = load_transcripts(cfg.input_dir);
    for (const auto& r : raw) {
      ctx->note_input(std::filesystem::path(cfg.input_dir) / (r.interview_id + ".txt"),
                      join(r.lines.begin(), r.lines.end(), "\n"));
    }
    std::vector<CleanTranscript> cleaned;
    cleaned.reserve(raw.size());
    for (const auto& r : raw) cleaned.push_back(clean_transcript(r, ingest));
    return make_chunks(cleaned, cfg.chunk_sentences);
  });

  std::filesystem::create_directories(cfg.output_dir);
  detail::write_file_atomic(std::filesystem::path(cfg.output_dir) / "chunks.jsonl",
                            chunks_to_jsonl(chunks));
  ctx->write_manifest();
  return chunks;
}

struct ModelArtifacts {
  std::vector<Chunk> chunks;           // ordered by chunk_id
  std::vector<int> labels;             // aligned with chunks
  TopicModel model;
  EmbeddingMatrix embeddings;          // aligned with chunks
};

// model: chunks.jsonl -> embed -> reduce -> cluster -> topics.json (+
// assignments.csv and optional debug dumps).
inline ModelArtifacts run_model(RunContext* ctx) {
  auto& cfg = ctx->config;
  ctx->command = "model";
  detail::StageTimer timer(&ctx->timings);

  const auto chunks_path = std::filesystem::path(cfg.output_dir) / "chunks.jsonl";
  const std::string chunk_bytes = detail::read_file(chunks_path);
  ctx->note_input(chunks_path, chunk_bytes);
  auto chunks = chunks_from_jsonl(chunk_bytes);
  if (chunks.empty()) throw config_error("no chunks in " + chunks_path.string());
  std::sort(chunks.begin(), chunks.end(),
            [](const Chunk& a, const Chunk& b) { return a.chunk_id < b.chunk_id; });

  auto embeddings =
      timer.run("embed", [&] { return embed_chunks(chunks, cfg.embedder); });

  LayoutConfig layout = cfg.layout;
  layout.seed = cfg.seed;
  const auto reduced = timer.run(
      "reduce", [&] { return reduce(embeddings, layout, &ctx->warnings); });
  if (cfg.dump_reduced) {
    std::string csv;
    for (int i = 0; i < reduced.n_rows; ++i) {
      for (int c = 0; c < reduced.n_components; ++c) {
        csv += (c ? "," : "") + detail::format_double(reduced.at(i, c));
      }
      csv += "\n";
    }
    detail::write_file_atomic(std::filesystem::path(cfg.output_dir) / "reduced.csv",
                              csv);
  }

  CondensedTree tree;
  const auto labels = timer.run("cluster", [&] {
    return cluster(reduced, cfg.cluster, &ctx->warnings, &tree);
  });
  if (cfg.dump_tree) {
    std::string csv = "parent,child,lambda,size\n";
    for (const auto& row : tree.rows) {
      csv += std::to_string(row.parent) + "," + std::to_string(row.child) + "," +
             detail::format_double(row.lambda) + "," +
             std::to_string(row.child_size) + "\n";
    }
    detail::write_file_atomic(
        std::filesystem::path(cfg.output_dir) / "condensed_tree.csv", csv);
  }

  const auto model = timer.run("topics", [&] {
    int n_topics = 0;
    for (int l : labels.labels) n_topics = std::max(n_topics, l + 1);

    VectorizerConfig vec = cfg.vectorizer;
    if (!cfg.stoplist_path.empty()) {
      vec.extra_stopwords = load_stoplist(cfg.stoplist_path, nullptr);
    }
    const auto counts = vectorize(chunks, labels.labels, vec);

    std::vector<TopicKeywords> keywords;
    std::vector<std::vector<float>> centroids;
    std::vector<std::vector<int>> reps;
    std::vector<std::vector<int>> member_rows(n_topics), member_ids(n_topics);
    for (size_t i = 0; i < chunks.size(); ++i) {
      const int l = labels.labels[i];
      if (l >= 0) {
        member_rows[l].push_back(static_cast<int>(i));
        member_ids[l].push_back(chunks[i].chunk_id);
      }
    }
    for (int t = 0; t < n_topics; ++t) {
      centroids.push_back(topic_centroid(embeddings, member_rows[t]));
    }
    if (cfg.keyword_method == KeywordMethod::ctfidf) {
      const auto weights = n_topics > 0 ? ctfidf(counts)
                                        : std::vector<std::vector<double>>{};
      for (int t = 0; t < n_topics; ++t) {
        auto kw = top_keywords(weights[t], counts.vocab, t, cfg.top_k_keywords,
                               cfg.dedup_keywords);
        if (static_cast<int>(kw.terms.size()) < cfg.top_k_keywords) {
          ctx->warnings.push_back(
              "topics: topic " + std::to_string(t) + " has only " +
              std::to_string(kw.terms.size()) + " keywords");
        }
        keywords.push_back(std::move(kw));
      }
    } else {
      // Top2Vec-style: unigram vocabulary ranked by centroid similarity.
      std::vector<std::string> candidates;
      for (const auto& term : counts.vocab) {
        if (term.find(' ') == std::string::npos) candidates.push_back(term);
      }
      for (int t = 0; t < n_topics; ++t) {
        keywords.push_back(centroid_keywords(centroids[t], candidates,
                                             cfg.embedder, t,
                                             cfg.top_k_keywords));
      }
    }
    for (int t = 0; t < n_topics; ++t) {
      reps.push_back(representative_chunks(embeddings, member_rows[t],
                                           member_ids[t], centroids[t],
                                           cfg.representatives));
    }
    return assemble_topic_model(chunks, labels.labels, keywords, centroids,
                                reps, config_to_json(cfg));
  });

  detail::write_file_atomic(std::filesystem::path(cfg.output_dir) / "topics.json",
                            topic_model_to_json(model).dump(2) + "\n");
  std::string assignments = "chunk_id,topic_id\n";
  for (size_t i = 0; i < chunks.size(); ++i) {
    assignments += std::to_string(chunks[i].chunk_id) + "," +
                   std::to_string(labels.labels[i]) + "\n";
  }
  detail::write_file_atomic(
      std::filesystem::path(cfg.output_dir) / "assignments.csv", assignments);
  ctx->write_manifest();
  return {std::move(chunks), labels.labels, std::move(model),
          std::move(embeddings)};
}

// label: chunks.jsonl + topics.json -> topics.json with labels filled in.
inline TopicModel run_label(RunContext* ctx) {
  auto& cfg = ctx->config;
  ctx->command = "label";
  detail::StageTimer timer(&ctx->timings);

  const auto chunks_path = std::filesystem::path(cfg.output_dir) / "chunks.jsonl";
  const auto topics_path = std::filesystem::path(cfg.output_dir) / "topics.json";
  const std::string chunk_bytes = detail::read_file(chunks_path);
  const std::string topic_bytes = detail::read_file(topics_path);
  ctx->note_input(chunks_path, chunk_bytes);
  ctx->note_input(topics_path, topic_bytes);
  const auto chunks = chunks_from_jsonl(chunk_bytes);
  auto model = topic_model_from_json(nlohmann::json::parse(topic_bytes));

  timer.run("label", [&] {
    label_topics(&model, chunks, cfg.labeler, cfg.label_mode, &ctx->warnings);
  });
  detail::write_file_atomic(topics_path, topic_model_to_json(model).dump(2) + "\n");
  ctx->write_manifest();
  return model;
}

inline std::vector<int> read_assignments(const std::filesystem::path& path,
                                         const std::vector<Chunk>& chunks) {
  const std::string bytes = detail::read_file(path);
  std::map<int, int> by_chunk;
  std::istringstream in(bytes);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw config_error("bad assignments row: " + line);
    }
    by_chunk[std::stoi(line.substr(0, comma))] =
        std::stoi(line.substr(comma + 1));
  }
  std::vector<int> labels;
  labels.reserve(chunks.size());
  for (const auto& c : chunks) {
    const auto it = by_chunk.find(c.chunk_id);
    if (it == by_chunk.end()) {
      throw config_error("assignments.csv is missing chunk " +
                         std::to_string(c.chunk_id));
    }
    labels.push_back(it->second);
  }
  return labels;
}

struct DistributionArtifacts {
  std::vector<InterviewDistribution> interviews;
  std::vector<RankedTopic> ranking;
};

// distribution: chunks.jsonl + topics.json + assignments.csv ->
// distribution.csv, distribution.svg, ranking.csv.
inline DistributionArtifacts run_distribution(RunContext* ctx) {
  auto& cfg = ctx->config;
  ctx->command = "distribution";
  detail::StageTimer timer(&ctx->timings);

  const auto chunks_path = std::filesystem::path(cfg.output_dir) / "chunks.jsonl";
  const auto topics_path = std::filesystem::path(cfg.output_dir) / "topics.json";
  const auto assign_path =
      std::filesystem::path(cfg.output_dir) / "assignments.csv";
  const std::string chunk_bytes = detail::read_file(chunks_path);
  const std::string topic_bytes = detail::read_file(topics_path);
  ctx->note_input(chunks_path, chunk_bytes);
  ctx->note_input(topics_path, topic_bytes);
  auto chunks = chunks_from_jsonl(chunk_bytes);
  std::sort(chunks.begin(), chunks.end(),
            [](const Chunk& a, const Chunk& b) { return a.chunk_id < b.chunk_id; });
  const auto model = topic_model_from_json(nlohmann::json::parse(topic_bytes));
  const auto labels = read_assignments(assign_path, chunks);

  DistributionArtifacts out;
  timer.run("distribution", [&] {
    const auto embeddings = embed_chunks(chunks, cfg.embedder);
    const int n_topics = static_cast<int>(model.topics.size());
    if (n_topics == 0) {
      throw config_error("distribution: the topic model has no topics");
    }
    std::vector<std::vector<int>> member_rows(n_topics);
    for (size_t i = 0; i < chunks.size(); ++i) {
      if (labels[i] >= 0) member_rows[labels[i]].push_back(static_cast<int>(i));
    }
    std::vector<std::vector<float>> centroids;
    for (int t = 0; t < n_topics; ++t) {
      if (member_rows[t].empty()) {
        throw config_error("distribution: topic " + std::to_string(t) +
                           " has no member chunks in assignments.csv");
      }
      centroids.push_back(topic_centroid(embeddings, member_rows[t]));
    }
    // Group chunk rows per interview, in first-appearance order.
    std::vector<std::string> interview_order;
    std::map<std::string, std::vector<std::vector<double>>> rows_by_interview;
    for (size_t i = 0; i < chunks.size(); ++i) {
      const auto row = chunk_topic_distribution(
          embeddings.row(static_cast<int>(i)), centroids, &ctx->warnings,
          chunks[i].chunk_id);
      if (!rows_by_interview.count(chunks[i].interview_id)) {
        interview_order.push_back(chunks[i].interview_id);
      }
      rows_by_interview[chunks[i].interview_id].push_back(row);
    }
    for (const auto& id : interview_order) {
      out.interviews.push_back(interview_distribution(id, rows_by_interview[id]));
    }
    std::vector<std::string> topic_labels;
    for (const auto& t : model.topics) topic_labels.push_back(t.label);
    out.ranking = global_ranking(out.interviews, topic_labels);

    detail::write_file_atomic(
        std::filesystem::path(cfg.output_dir) / "distribution.csv",
        distribution_csv(out.interviews));
    detail::write_file_atomic(
        std::filesystem::path(cfg.output_dir) / "distribution.svg",
        distribution_svg(out.interviews, topic_labels));
    detail::write_file_atomic(std::filesystem::path(cfg.output_dir) / "ranking.csv",
                              ranking_csv(out.ranking));
  });
  ctx->write_manifest();
  return out;
}

// report: topics.json (+ ranking.csv when present) -> topics.md. The file
// starts with the keyword table; the ranking section follows when available.
inline std::string run_report(RunContext* ctx) {
  auto& cfg = ctx->config;
  ctx->command = "report";
  detail::StageTimer timer(&ctx->timings);

  const auto topics_path = std::filesystem::path(cfg.output_dir) / "topics.json";
  const std::string topic_bytes = detail::read_file(topics_path);
  ctx->note_input(topics_path, topic_bytes);
  const auto model = topic_model_from_json(nlohmann::json::parse(topic_bytes));

  const std::string report = timer.run("report", [&] {
    std::string md = "| Topic ID | Topic Label | Top 15 Keywords |\n";
    md += "|---|---|---|\n";
    for (const auto& t : model.topics) {
      std::string kws;
      for (size_t i = 0; i < t.keywords.terms.size(); ++i) {
        if (i > 0) kws += ", ";
        kws += t.keywords.terms[i].first;
      }
      if (static_cast<int>(t.keywords.terms.size()) < cfg.top_k_keywords) {
        kws += " (short list: " + std::to_string(t.keywords.terms.size()) + ")";
      }
      const std::string label = t.label.empty() ? "(unlabeled)" : t.label;
      md += "| " + std::to_string(t.topic_id) + " | " + label + " | " + kws +
            " |\n";
    }
    md += "\nNoise chunks: " + std::to_string(model.noise_count) + "\n";
    if (model.config_snapshot.is_object()) {
      const auto& snap = model.config_snapshot;
      md += "\n## Configuration\n\n";
      if (snap.contains("keyword_method")) {
        md += "- Keyword method: " +
              snap.at("keyword_method").get<std::string>() + "\n";
      }
      if (snap.contains("vectorizer")) {
        const auto& v = snap.at("vectorizer");
        md += "- Vectorizer: ngram_range (" +
              std::to_string(v.at("ngram_low").get<int>()) + "," +
              std::to_string(v.at("ngram_high").get<int>()) +
              "), custom n-grams and stop words supported\n";
      }
      if (snap.contains("dedup_keywords")) {
        md += std::string("- Keyword dedup flag: ") +
              (snap.at("dedup_keywords").get<bool>() ? "on" : "off") + "\n";
      }
    }
    const auto ranking_path = std::filesystem::path(cfg.output_dir) / "ranking.csv";
    if (std::filesystem::exists(ranking_path)) {
      md += "\n## Most occurring topics overall (approximate distribution)\n\n";
      md += "| Topic ID | Mean Avg. Probability | Topic Label |\n|---|---|---|\n";
      std::istringstream in(detail::read_file(ranking_path));
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 2) continue;
        std::ostringstream prob;
        prob << std::fixed << std::setprecision(3) << std::stod(fields[1]);
        md += "| " + fields[0] + " | " + prob.str() + " | " +
              (fields.size() > 2 ? fields[2] : "") + " |\n";
      }
    }
    return md;
  });
  detail::write_file_atomic(std::filesystem::path(cfg.output_dir) / "topics.md",
                            report);
  ctx->write_manifest();
  return report;
}

// eval-ratings: ratings CSV -> ratings_summary.csv + ratings_means.csv.
inline RatingAggregation run_eval_ratings(RunContext* ctx,
                                          const std::string& ratings_path) {
  auto& cfg = ctx->config;
  ctx->command = "eval-ratings";
  detail::StageTimer timer(&ctx->timings);

  const auto agg = timer.run("eval_ratings", [&] {
    const std::string bytes = detail::read_file(ratings_path);
    ctx->note_input(ratings_path, bytes);
    return aggregate_ratings(load_ratings(ratings_path));
  });

  std::string means = "system,question,topic_id,mean\n";
  for (const auto& [key, mean] : agg.topic_means) {
    means += std::get<0>(key) + "," + std::get<1>(key) + "," +
             std::to_string(std::get<2>(key)) + "," +
             detail::format_double(mean) + "\n";
  }
  std::string summary =
      "system,question,n_topics,min,q1,median,q3,max,count_ge_4\n";
  for (const auto& s : agg.summaries) {
    summary += s.system + "," + s.question + "," + std::to_string(s.n_topics) +
               "," + detail::format_double(s.min) + "," +
               detail::format_double(s.q1) + "," +
               detail::format_double(s.median) + "," +
               detail::format_double(s.q3) + "," +
               detail::format_double(s.max) + "," +
               std::to_string(s.count_ge_4) + "\n";
  }
  std::filesystem::create_directories(cfg.output_dir);
  detail::write_file_atomic(
      std::filesystem::path(cfg.output_dir) / "ratings_means.csv", means);
  detail::write_file_atomic(
      std::filesystem::path(cfg.output_dir) / "ratings_summary.csv", summary);
  ctx->write_manifest();
  return agg;
}

}  // namespace topiclib
