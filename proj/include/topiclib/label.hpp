#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "topiclib/common.hpp"
#include "topiclib/embed.hpp"  // detail::parse_url
#include "topiclib/text.hpp"
#include "topiclib/topics.hpp"

namespace topiclib {

enum class PromptMode { individual, global };

inline PromptMode parse_prompt_mode(const std::string& name) {
  if (name == "individual") return PromptMode::individual;
  if (name == "global") return PromptMode::global;
  throw config_error("unknown prompt mode: " + name);
}

inline const char* prompt_mode_name(PromptMode m) {
  return m == PromptMode::individual ? "individual" : "global";
}

// Byte-stable templates; golden-file tests pin both.
inline constexpr const char* kIndividualPromptTemplate =
    "You are an AI that labels discussion topics, from a cancer storytelling "
    "interview, for a software that allows doctors to browse through medical "
    "files without the need to read them from start to finish. Given the "
    "following keywords and sample documents, provide a clear and specific "
    "topic label, focusing mainly on the keyword list and using the document "
    "snippets as supporting context rather than a baseline. Only type the "
    "topic label and nothing else:";

inline constexpr const char* kGlobalPromptTemplate =
    "You are an AI that labels discussion topics, from a collection of cancer "
    "storytelling interviews, for a software that allows doctors to browse "
    "through medical files without the need to read them from start to "
    "finish. Given the following keywords, provide a clear and specific topic "
    "label, with enough context to be interpretable, focusing on the keyword "
    "list. Be general. Keep it short. Only type the topic label and nothing "
    "else.";

enum class LabelBackend { stub, remote };

inline LabelBackend parse_label_backend(const std::string& name) {
  if (name == "stub") return LabelBackend::stub;
  if (name == "remote") return LabelBackend::remote;
  throw config_error("unknown labeler backend: " + name);
}

inline const char* label_backend_name(LabelBackend b) {
  return b == LabelBackend::stub ? "stub" : "remote";
}

struct LabelerConfig {
  LabelBackend backend = LabelBackend::stub;
  std::string endpoint_url;  // required for remote
  std::string model_name = "gpt-4o-mini";
  int max_retries = 3;
  int timeout_s = 30;
  int max_in_flight = 2;
  int retry_base_ms = 1000;

  void validate() const {
    if (backend == LabelBackend::remote && endpoint_url.empty()) {
      throw config_error("labeler: remote backend requires endpoint_url");
    }
  }
};

// Template + keyword line; individual mode appends numbered document blocks
// (required there, never present in global mode).
inline std::string build_prompt(const Topic& topic,
                                const std::vector<std::string>& representative_texts,
                                PromptMode mode) {
  if (topic.keywords.terms.empty()) {
    throw std::runtime_error("build_prompt: topic " +
                             std::to_string(topic.topic_id) +
                             " has no keywords");
  }
  std::string prompt = mode == PromptMode::individual ? kIndividualPromptTemplate
                                                      : kGlobalPromptTemplate;
  prompt += "\nKeywords: ";
  for (size_t i = 0; i < topic.keywords.terms.size(); ++i) {
    if (i > 0) prompt += ", ";
    prompt += topic.keywords.terms[i].first;
  }
  if (mode == PromptMode::individual) {
    if (representative_texts.empty()) {
      throw std::runtime_error("build_prompt: individual mode needs "
                               "representative documents for topic " +
                               std::to_string(topic.topic_id));
    }
    for (size_t i = 0; i < representative_texts.size(); ++i) {
      prompt += "\nDocument " + std::to_string(i + 1) + ": " +
                representative_texts[i];
    }
  }
  return prompt;
}

inline std::string stub_label(const Topic& topic) {
  std::string label = "Topic " + std::to_string(topic.topic_id) + ":";
  const size_t take = std::min<size_t>(3, topic.keywords.terms.size());
  for (size_t i = 0; i < take; ++i) {
    label += (i == 0 ? " " : " / ") + topic.keywords.terms[i].first;
  }
  return label;
}

namespace detail {

// First line of the response, stripped of whitespace and surrounding quotes.
inline std::string clean_label_response(const std::string& raw) {
  std::string s = trim(raw);
  const auto nl = s.find('\n');
  if (nl != std::string::npos) s = trim(s.substr(0, nl));
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\''))) {
    s = trim(s.substr(1, s.size() - 2));
  }
  return s;
}

inline std::optional<std::string> request_label(const LabelerConfig& config,
                                                const std::string& prompt) {
  const auto url = parse_url(config.endpoint_url);
  nlohmann::json body;
  body["model"] = config.model_name;
  body["messages"] = nlohmann::json::array(
      {nlohmann::json{{"role", "user"}, {"content", prompt}}});
  const std::string payload = body.dump();
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          config.retry_base_ms * (1LL << (attempt - 1))));
    }
    httplib::Client client(url.base);
    client.set_connection_timeout(config.timeout_s);
    client.set_read_timeout(config.timeout_s);
    httplib::Headers headers;
    if (const char* key = std::getenv("LABELER_API_KEY")) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res || res->status != 200) continue;
    try {
      const auto parsed = nlohmann::json::parse(res->body);
      const std::string content =
          parsed.at("choices").at(0).at("message").at("content")
              .get<std::string>();
      const std::string label = clean_label_response(content);
      if (!label.empty()) return label;
    } catch (const std::exception&) {
      // malformed response; retry
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Adds a label to every topic. The stub emits "Topic <id>: kw1 / kw2 / kw3";
// the remote backend asks once per topic and falls back to the stub (with a
// warning) when the service fails or answers empty. Keywords, sizes, and
// representatives are never touched.
inline void label_topics(TopicModel* model, const std::vector<Chunk>& chunks,
                         const LabelerConfig& config, PromptMode mode,
                         std::vector<std::string>* warnings = nullptr) {
  config.validate();
  std::map<int, const Chunk*> by_id;
  for (const auto& c : chunks) by_id[c.chunk_id] = &c;

  auto rep_texts = [&](const Topic& topic) {
    std::vector<std::string> texts;
    for (int id : topic.representative_chunk_ids) {
      const auto it = by_id.find(id);
      if (it != by_id.end()) texts.push_back(it->second->text);
    }
    return texts;
  };

  if (config.backend == LabelBackend::stub) {
    for (auto& topic : model->topics) {
      if (topic.keywords.terms.empty()) {
        if (warnings) {
          warnings->push_back("labeler: topic " + std::to_string(topic.topic_id) +
                              " has no keywords and stays unlabeled");
        }
        continue;
      }
      topic.label = stub_label(topic);
    }
    return;
  }

  std::atomic<size_t> next{0};
  std::mutex warn_mutex;
  auto worker = [&]() {
    while (true) {
      const size_t t = next.fetch_add(1);
      if (t >= model->topics.size()) return;
      auto& topic = model->topics[t];
      if (topic.keywords.terms.empty()) {
        std::lock_guard<std::mutex> lock(warn_mutex);
        if (warnings) {
          warnings->push_back("labeler: topic " + std::to_string(topic.topic_id) +
                              " has no keywords and stays unlabeled");
        }
        continue;
      }
      std::optional<std::string> label;
      std::string failure = "remote labeling failed";
      try {
        const std::string prompt = build_prompt(topic, rep_texts(topic), mode);
        label = detail::request_label(config, prompt);
      } catch (const std::exception& e) {
        failure = e.what();
      }
      if (label) {
        topic.label = *label;
      } else {
        topic.label = stub_label(topic);
        std::lock_guard<std::mutex> lock(warn_mutex);
        if (warnings) {
          warnings->push_back("labeler: " + failure + " for topic " +
                              std::to_string(topic.topic_id) +
                              "; used the stub label");
        }
      }
    }
  };
  std::vector<std::thread> threads;
  const size_t n_threads =
      std::min<size_t>(std::max(1, config.max_in_flight), model->topics.size());
  for (size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
  for (auto& th : threads) th.join();
}

}  // namespace topiclib
