#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "topiclib/common.hpp"
#include "topiclib/contractions.hpp"

namespace topiclib {

struct RawTranscript {
  std::string interview_id;
  std::vector<std::string> lines;
};

struct CleanTranscript {
  std::string interview_id;
  std::string text;
};

// The modeling unit: a fixed-size group of consecutive sentences.
struct Chunk {
  int chunk_id = 0;           // global, dense from 0
  std::string interview_id;
  int index_in_interview = 0;
  std::string text;
  int sentence_count = 0;
};

struct IngestConfig {
  int chunk_sentences = 6;
  std::set<std::string> stoplist;  // lowercase, one word each
  bool patient_lines_only = false;
  std::map<std::string, std::string> contractions = builtin_contractions();
};

// Removes a leading speaker marker: single letter P/N/O, colon, optional
// space. Other leading capitals are never stripped.
inline std::string strip_speaker_label(const std::string& line) {
  if (line.size() >= 2 &&
      (line[0] == 'P' || line[0] == 'N' || line[0] == 'O') && line[1] == ':') {
    size_t start = 2;
    if (start < line.size() && line[start] == ' ') ++start;
    return line.substr(start);
  }
  return line;
}

// True for structural markers like "I0-1" alone on a line.
inline bool is_section_header(const std::string& line) {
  const std::string t = trim(line);
  size_t i = 0;
  if (i >= t.size() || t[i] != 'I') return false;
  ++i;
  size_t digits = 0;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) {
    ++i;
    ++digits;
  }
  if (digits == 0 || i >= t.size() || t[i] != '-') return false;
  ++i;
  digits = 0;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) {
    ++i;
    ++digits;
  }
  return digits > 0 && i == t.size();
}

inline std::vector<std::string> strip_section_headers(
    const std::vector<std::string>& lines) {
  std::vector<std::string> out;
  out.reserve(lines.size());
  for (const auto& line : lines) {
    if (!is_section_header(line)) out.push_back(line);
  }
  return out;
}

namespace detail {

inline bool is_ascii_alpha(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0;
}

// U+2019 right single quotation mark, UTF-8 e2 80 99.
inline bool is_curly_apostrophe(const std::string& s, size_t i) {
  return i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xe2 &&
         static_cast<unsigned char>(s[i + 1]) == 0x80 &&
         static_cast<unsigned char>(s[i + 2]) == 0x99;
}

}  // namespace detail

// Replaces every table entry case-insensitively; leading capitalization of
// the match carries over to the expansion. Apostrophe may be U+0027 or U+2019.
inline std::string expand_contractions(
    const std::string& text,
    const std::map<std::string, std::string>& table = builtin_contractions()) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    if (!detail::is_ascii_alpha(text[i])) {
      out += text[i];
      ++i;
      continue;
    }
    // Token: letters plus either apostrophe form.
    size_t j = i;
    std::string normalized;  // apostrophes folded to ', lowercased
    while (j < text.size()) {
      if (detail::is_ascii_alpha(text[j])) {
        normalized += static_cast<char>(
            std::tolower(static_cast<unsigned char>(text[j])));
        ++j;
      } else if (text[j] == '\'') {
        normalized += '\'';
        ++j;
      } else if (detail::is_curly_apostrophe(text, j)) {
        normalized += '\'';
        j += 3;
      } else {
        break;
      }
    }
    const auto it = table.find(normalized);
    if (it != table.end()) {
      std::string expansion = it->second;
      if (std::isupper(static_cast<unsigned char>(text[i])) &&
          !expansion.empty()) {
        expansion[0] = static_cast<char>(
            std::toupper(static_cast<unsigned char>(expansion[0])));
      }
      out += expansion;
    } else {
      out += text.substr(i, j - i);
    }
    i = j;
  }
  return out;
}

// Deletes whitespace tokens whose lowercased alphanumeric core is in the
// stoplist; punctuation attached to a removed token goes with it. Survivors
// are re-joined with single spaces, normalizing whitespace.
inline std::string remove_custom_stopwords(const std::string& text,
                                           const std::set<std::string>& stoplist) {
  std::vector<std::string> kept;
  for (const auto& token : split_whitespace(text)) {
    size_t b = 0, e = token.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(token[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(token[e - 1]))) --e;
    const std::string core = to_lower_ascii(token.substr(b, e - b));
    if (!core.empty() && stoplist.count(core)) continue;
    kept.push_back(token);
  }
  return join(kept.begin(), kept.end(), " ");
}

namespace detail {

// Guard against splitting after abbreviations ("approx. 34,000") and
// single-letter initials ("J. Smith").
inline bool is_abbreviation(const std::string& word) {
  static const std::set<std::string> abbrevs = {
      "approx", "etc", "eg", "ie", "dr", "mr",
      "mrs",    "ms",  "vs", "fig", "st"};
  if (word.size() == 1) return true;
  return abbrevs.count(to_lower_ascii(word)) > 0;
}

inline bool is_opening_quote(const std::string& s, size_t i) {
  const char c = s[i];
  if (c == '"' || c == '\'' || c == '(') return true;
  // U+201C and U+2018
  if (i + 2 < s.size() && static_cast<unsigned char>(c) == 0xe2 &&
      static_cast<unsigned char>(s[i + 1]) == 0x80 &&
      (static_cast<unsigned char>(s[i + 2]) == 0x9c ||
       static_cast<unsigned char>(s[i + 2]) == 0x98)) {
    return true;
  }
  return false;
}

}  // namespace detail

// Splits at . ! ? followed by whitespace and an uppercase letter, digit, or
// opening quote; terminators stay with their sentence. Text without a
// terminator comes back as a single sentence.
inline std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> sentences;
  size_t start = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    size_t j = i + 1;
    while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j])))
      ++j;
    if (j == i + 1 || j >= text.size()) continue;  // needs whitespace + more text
    const unsigned char next = static_cast<unsigned char>(text[j]);
    const bool starts_sentence = std::isupper(next) || std::isdigit(next) ||
                                 detail::is_opening_quote(text, j);
    if (!starts_sentence) continue;
    if (c == '.') {
      size_t wb = i;
      while (wb > 0 && detail::is_ascii_alpha(text[wb - 1])) --wb;
      const std::string word = text.substr(wb, i - wb);
      if (!word.empty() && detail::is_abbreviation(word)) continue;
    }
    const std::string sentence = trim(text.substr(start, i + 1 - start));
    if (!sentence.empty()) sentences.push_back(sentence);
    start = j;
  }
  const std::string tail = trim(text.substr(start));
  if (!tail.empty()) sentences.push_back(tail);
  return sentences;
}

// Consecutive groups of n sentences joined by single spaces; the final chunk
// holds the remainder. chunk_id is assigned by the caller.
inline std::vector<Chunk> chunk_sentences(const std::vector<std::string>& sentences,
                                          int n,
                                          const std::string& interview_id,
                                          int first_chunk_id = 0) {
  if (n < 1) {
    throw config_error("chunk_sentences: sentences-per-chunk must be >= 1, got " +
                       std::to_string(n));
  }
  std::vector<Chunk> chunks;
  for (size_t i = 0; i < sentences.size(); i += static_cast<size_t>(n)) {
    const size_t end = std::min(sentences.size(), i + static_cast<size_t>(n));
    Chunk c;
    c.chunk_id = first_chunk_id + static_cast<int>(chunks.size());
    c.interview_id = interview_id;
    c.index_in_interview = static_cast<int>(chunks.size());
    c.text = join(sentences.begin() + i, sentences.begin() + end, " ");
    c.sentence_count = static_cast<int>(end - i);
    chunks.push_back(std::move(c));
  }
  return chunks;
}

// Full preprocessing pipeline: optional patient filter, header removal,
// speaker-tag stripping, contraction expansion, custom stopword removal,
// whitespace normalization.
inline CleanTranscript clean_transcript(const RawTranscript& raw,
                                        const IngestConfig& config) {
  std::vector<std::string> lines = raw.lines;
  if (config.patient_lines_only) {
    std::vector<std::string> kept;
    for (const auto& line : lines) {
      const bool other_speaker =
          line.size() >= 2 && (line[0] == 'N' || line[0] == 'O') &&
          line[1] == ':';
      if (!other_speaker) kept.push_back(line);
    }
    lines = std::move(kept);
  }
  lines = strip_section_headers(lines);
  for (auto& line : lines) line = strip_speaker_label(line);
  std::string text = join(lines.begin(), lines.end(), " ");
  text = expand_contractions(text, config.contractions);
  text = remove_custom_stopwords(text, config.stoplist);
  return CleanTranscript{raw.interview_id, text};
}

inline std::vector<Chunk> make_chunks(const std::vector<CleanTranscript>& cleaned,
                                      int chunk_sentences_n) {
  std::vector<Chunk> all;
  for (const auto& ct : cleaned) {
    const auto sentences = split_sentences(ct.text);
    auto chunks = chunk_sentences(sentences, chunk_sentences_n, ct.interview_id,
                                  static_cast<int>(all.size()));
    for (auto& c : chunks) all.push_back(std::move(c));
  }
  return all;
}

// One lowercase word per line; blank lines skipped.
inline std::set<std::string> load_stoplist(const std::filesystem::path& path,
                                           std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open stoplist: " + path.string());
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string w = to_lower_ascii(trim(line));
    if (!w.empty()) words.insert(w);
  }
  if (words.empty() && warnings) {
    warnings->push_back("stoplist " + path.string() +
                        " is empty; stopword removal is a no-op");
  }
  return words;
}

inline RawTranscript read_transcript(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open transcript: " + path.string());
  RawTranscript raw;
  raw.interview_id = path.stem().string();
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    raw.lines.push_back(line);
  }
  return raw;
}

// Loads every *.txt in the directory, ordered by interview id so chunk ids
// are stable across runs.
inline std::vector<RawTranscript> load_transcripts(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw config_error("input directory does not exist: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw config_error("no .txt transcripts found in " + dir.string());
  }
  std::vector<RawTranscript> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_transcript(f));
  return out;
}

}  // namespace topiclib
