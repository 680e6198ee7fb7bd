#pragma once

#include <algorithm>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "topiclib/pipeline.hpp"

namespace topiclib {

namespace detail {

struct CliOptions {
  std::string preset = "individual";
  std::string config_path;
  std::string input_dir;
  std::string output_dir;
  std::string stoplist;
  std::uint64_t seed = 0;
  int chunk_sentences = 0;
  std::string embedder_backend;
  std::string labeler_backend;
  std::string embedder_url;
  std::string labeler_url;
  std::string cache_path;
  std::string model_name;
  std::string keyword_method;
  int min_topic_size = 0;
  bool dedup_keywords = false;
  bool patient_only = false;
  bool dump_reduced = false;
  bool dump_tree = false;
};

inline void add_common_options(CLI::App* sub, CliOptions* o) {
  sub->add_option("--preset", o->preset,
                  "built-in preset: individual or global");
  sub->add_option("--config", o->config_path, "JSON config file");
  sub->add_option("--input-dir", o->input_dir, "directory of <id>.txt transcripts");
  sub->add_option("--output-dir", o->output_dir, "output directory");
  sub->add_option("--stoplist", o->stoplist, "custom stopword file");
  sub->add_option("--seed", o->seed, "pipeline seed");
  sub->add_option("--chunk-sentences", o->chunk_sentences, "sentences per chunk");
  sub->add_option("--embedder", o->embedder_backend,
                  "embedding backend: stub, file, or remote");
  sub->add_option("--labeler", o->labeler_backend, "labeler backend: stub or remote");
  sub->add_option("--embedder-url", o->embedder_url, "remote embedding endpoint");
  sub->add_option("--labeler-url", o->labeler_url, "remote labeler endpoint");
  sub->add_option("--cache", o->cache_path, "embedding cache file");
  sub->add_option("--model-name", o->model_name, "embedding model name");
  sub->add_option("--keywords", o->keyword_method,
                  "keyword method: ctfidf or centroid");
  sub->add_option("--min-topic-size", o->min_topic_size,
                  "alias for cluster min_cluster_size");
  sub->add_flag("--dedup-keywords", o->dedup_keywords,
                "drop unigrams contained in kept bigrams");
  sub->add_flag("--patient-only", o->patient_only,
                "keep only patient (P:) turns");
  sub->add_flag("--dump-reduced", o->dump_reduced,
                "also write reduced.csv (debug)");
  sub->add_flag("--dump-tree", o->dump_tree,
                "also write condensed_tree.csv (debug)");
}

// Precedence: built-in preset < config file < command-line flags.
inline PipelineConfig build_config(const CLI::App* sub, const CliOptions& o) {
  PipelineConfig cfg = o.config_path.empty()
                           ? preset_config(o.preset)
                           : load_config_file(o.config_path, o.preset);
  if (sub->count("--input-dir")) cfg.input_dir = o.input_dir;
  if (sub->count("--output-dir")) cfg.output_dir = o.output_dir;
  if (sub->count("--stoplist")) cfg.stoplist_path = o.stoplist;
  if (sub->count("--seed")) cfg.seed = o.seed;
  if (sub->count("--chunk-sentences")) cfg.chunk_sentences = o.chunk_sentences;
  if (sub->count("--embedder")) {
    cfg.embedder.backend = parse_embed_backend(o.embedder_backend);
  }
  if (sub->count("--labeler")) {
    cfg.labeler.backend = parse_label_backend(o.labeler_backend);
  }
  if (sub->count("--embedder-url")) cfg.embedder.endpoint_url = o.embedder_url;
  if (sub->count("--labeler-url")) cfg.labeler.endpoint_url = o.labeler_url;
  if (sub->count("--cache")) cfg.embedder.cache_path = o.cache_path;
  if (sub->count("--model-name")) cfg.embedder.model_name = o.model_name;
  if (sub->count("--keywords")) {
    cfg.keyword_method = parse_keyword_method(o.keyword_method);
  }
  if (sub->count("--min-topic-size")) {
    cfg.cluster.min_cluster_size = o.min_topic_size;
  }
  if (sub->count("--dedup-keywords")) cfg.dedup_keywords = true;
  if (sub->count("--patient-only")) cfg.patient_lines_only = true;
  if (sub->count("--dump-reduced")) cfg.dump_reduced = true;
  if (sub->count("--dump-tree")) cfg.dump_tree = true;
  return cfg;
}

}  // namespace detail

// Exit codes: 0 success, 1 configuration error, 2 backend failure.
inline int run_cli(std::vector<std::string> args) {
  CLI::App app{"topicctl - turns interview transcripts into labeled topic models"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  int synth_themes = 5, synth_interviews = 13;
  std::uint64_t synth_seed = 7;
  std::string synth_out = "synth_corpus";
  synth->add_option("--themes", synth_themes, "number of planted themes (max 5)");
  synth->add_option("--interviews", synth_interviews, "number of interviews");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--output-dir", synth_out, "corpus directory");

  detail::CliOptions ingest_opts, model_opts, label_opts, dist_opts,
      report_opts, ratings_opts;
  auto* ingest = app.add_subcommand("ingest", "preprocess and chunk transcripts");
  detail::add_common_options(ingest, &ingest_opts);
  auto* model = app.add_subcommand(
      "model", "run embed -> reduce -> cluster -> topics on chunks.jsonl");
  detail::add_common_options(model, &model_opts);
  auto* label = app.add_subcommand("label", "label topics via the configured backend");
  detail::add_common_options(label, &label_opts);
  auto* distribution = app.add_subcommand(
      "distribution", "soft topic distributions, ranking, and the stacked-bar SVG");
  detail::add_common_options(distribution, &dist_opts);
  auto* report = app.add_subcommand("report", "write the Markdown topic report");
  detail::add_common_options(report, &report_opts);
  auto* eval_ratings =
      app.add_subcommand("eval-ratings", "aggregate survey rating CSVs");
  std::string ratings_path;
  eval_ratings->add_option("ratings", ratings_path, "ratings CSV file")
      ->required();
  detail::add_common_options(eval_ratings, &ratings_opts);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) {
      SynthConfig sc;
      sc.themes = synth_themes;
      sc.interviews = synth_interviews;
      sc.seed = synth_seed;
      write_corpus(synth_out, sc);
      std::cout << "wrote " << sc.interviews << " transcripts under "
                << synth_out << "/transcripts plus " << synth_out
                << "/stopwords.txt\n";
    } else if (*ingest) {
      RunContext ctx{detail::build_config(ingest, ingest_opts)};
      const auto chunks = run_ingest(&ctx);
      std::cout << "wrote " << chunks.size() << " chunks to "
                << ctx.config.output_dir << "/chunks.jsonl\n";
    } else if (*model) {
      RunContext ctx{detail::build_config(model, model_opts)};
      const auto artifacts = run_model(&ctx);
      std::cout << "wrote " << artifacts.model.topics.size() << " topics ("
                << artifacts.model.noise_count << " noise chunks) to "
                << ctx.config.output_dir << "/topics.json\n";
    } else if (*label) {
      RunContext ctx{detail::build_config(label, label_opts)};
      const auto labeled = run_label(&ctx);
      std::cout << "labeled " << labeled.topics.size() << " topics in "
                << ctx.config.output_dir << "/topics.json\n";
    } else if (*distribution) {
      RunContext ctx{detail::build_config(distribution, dist_opts)};
      const auto artifacts = run_distribution(&ctx);
      std::cout << "wrote distribution.csv, distribution.svg, ranking.csv for "
                << artifacts.interviews.size() << " interviews\n";
    } else if (*report) {
      RunContext ctx{detail::build_config(report, report_opts)};
      run_report(&ctx);
      std::cout << "wrote " << ctx.config.output_dir << "/topics.md\n";
    } else if (*eval_ratings) {
      RunContext ctx{detail::build_config(eval_ratings, ratings_opts)};
      const auto agg = run_eval_ratings(&ctx, ratings_path);
      std::cout << "wrote ratings_summary.csv (" << agg.summaries.size()
                << " system/question groups)\n";
    }
  } catch (const backend_error& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return 2;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace topiclib
