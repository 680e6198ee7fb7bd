#pragma once

#include <map>
#include <sstream>
#include <string>

#include "topiclib/common.hpp"

namespace topiclib {

namespace detail {
// Bundled contraction table, two tab-separated columns per line. The same
// content ships as data/contractions.tsv for file-based loading.
inline constexpr const char* kContractionsTsv =
    "ain't\tis not\n"
    "aren't\tare not\n"
    "can't\tcannot\n"
    "could've\tcould have\n"
    "couldn't\tcould not\n"
    "daren't\tdare not\n"
    "didn't\tdid not\n"
    "doesn't\tdoes not\n"
    "don't\tdo not\n"
    "hadn't\thad not\n"
    "hasn't\thas not\n"
    "haven't\thave not\n"
    "he'd\the would\n"
    "he'll\the will\n"
    "he's\the is\n"
    "here's\there is\n"
    "how'd\thow did\n"
    "how'll\thow will\n"
    "how's\thow is\n"
    "i'd\ti would\n"
    "i'll\ti will\n"
    "i'm\ti am\n"
    "i've\ti have\n"
    "isn't\tis not\n"
    "it'd\tit would\n"
    "it'll\tit will\n"
    "it's\tit is\n"
    "let's\tlet us\n"
    "might've\tmight have\n"
    "mightn't\tmight not\n"
    "must've\tmust have\n"
    "mustn't\tmust not\n"
    "needn't\tneed not\n"
    "oughtn't\tought not\n"
    "shan't\tshall not\n"
    "she'd\tshe would\n"
    "she'll\tshe will\n"
    "she's\tshe is\n"
    "should've\tshould have\n"
    "shouldn't\tshould not\n"
    "that'll\tthat will\n"
    "that's\tthat is\n"
    "there'd\tthere would\n"
    "there'll\tthere will\n"
    "there's\tthere is\n"
    "they'd\tthey would\n"
    "they'll\tthey will\n"
    "they're\tthey are\n"
    "they've\tthey have\n"
    "this'll\tthis will\n"
    "wasn't\twas not\n"
    "we'd\twe would\n"
    "we'll\twe will\n"
    "we're\twe are\n"
    "we've\twe have\n"
    "weren't\twere not\n"
    "what'll\twhat will\n"
    "what're\twhat are\n"
    "what's\twhat is\n"
    "what've\twhat have\n"
    "when's\twhen is\n"
    "where's\twhere is\n"
    "who'll\twho will\n"
    "who're\twho are\n"
    "who's\twho is\n"
    "who've\twho have\n"
    "why's\twhy is\n"
    "won't\twill not\n"
    "would've\twould have\n"
    "wouldn't\twould not\n"
    "y'all\tyou all\n"
    "you'd\tyou would\n"
    "you'll\tyou will\n"
    "you're\tyou are\n"
    "you've\tyou have\n";
}  // namespace detail

// Parses a two-column tab-separated table; keys lowercased, blank lines and
// lines without a tab are skipped.
inline std::map<std::string, std::string> parse_contractions(
    const std::string& tsv) {
  std::map<std::string, std::string> table;
  std::istringstream in(tsv);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    std::string key = to_lower_ascii(trim(line.substr(0, tab)));
    std::string value = trim(line.substr(tab + 1));
    if (!key.empty() && !value.empty()) table[key] = value;
  }
  return table;
}

inline const std::map<std::string, std::string>& builtin_contractions() {
  static const std::map<std::string, std::string> table =
      parse_contractions(detail::kContractionsTsv);
  return table;
}

}  // namespace topiclib
