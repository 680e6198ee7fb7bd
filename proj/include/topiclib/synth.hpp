#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "topiclib/common.hpp"
#include "topiclib/text.hpp"

namespace topiclib {

struct SynthConfig {
  int themes = 5;       // at most 5 (curated vocabularies)
  int interviews = 13;
  std::uint64_t seed = 7;
};

namespace detail {

// Five disjoint 40-word vocabularies, one conversational theme each.
inline const std::array<std::vector<std::string>, 5>& theme_vocabularies() {
  static const std::array<std::vector<std::string>, 5> themes = {{
      {"appetite",  "eating",   "meals",    "sandwich", "soup",
       "taste",     "hungry",   "snack",    "dietician", "weight",
       "cooking",   "kitchen",  "vegetables", "fruit",  "yogurt",
       "protein",   "shake",    "water",    "swallow",  "portion",
       "breakfast", "dinner",   "lunch",    "calories", "spicy",
       "bland",     "flavor",   "chew",     "stomach",  "digest",
       "cravings",  "dishes",   "grocery",  "recipe",   "salt",
       "sugar",     "dairy",    "bread",    "cheese",   "butter"},
      {"sleeping",  "insomnia", "bedtime",  "pillow",   "blanket",
       "nights",    "awake",    "dozing",   "naps",     "tired",
       "fatigue",   "restless", "dreams",   "snoring",  "mattress",
       "bedroom",   "midnight", "mornings", "drowsy",   "yawning",
       "lying",     "tossing",  "turning",  "quiet",    "darkness",
       "curtains",  "alarm",    "waking",   "exhausted", "energy",
       "refreshed", "routine",  "evenings", "dusk",     "slumber",
       "couch",     "upstairs", "downstairs", "bathrobe", "lamp"},
      {"radiation",  "radiotherapy", "sessions",  "beams",      "marking",
       "tattoos",    "linac",        "oncologist", "schedule",  "fractions",
       "skin",       "burns",        "redness",    "sore",      "machine",
       "table",      "mask",         "positioning", "technicians", "appointment",
       "weekly",     "zapping",      "dosage",     "targeting", "precision",
       "scanner",    "simulation",   "planning",   "treatments", "booth",
       "waiting",    "gown",         "lotion",     "itching",   "peeling",
       "tingling",   "monitor",      "fields",     "margins",   "isotope"},
      {"surgery",    "operation",  "keyhole",   "incision",  "anesthesia",
       "surgeon",    "stitches",   "scar",      "wound",     "healing",
       "recovery",   "portacath",  "catheter",  "needle",    "drains",
       "bandage",    "dressing",   "theatre",   "preop",     "postop",
       "bleeding",   "swelling",   "bruising",  "painkillers", "morphine",
       "ward",       "discharge",  "hospital",  "nurses",    "gurney",
       "scalpel",    "sutures",    "clips",     "probe",     "implant",
       "sedation",   "consent",    "risks",     "complications", "infection"},
      {"family",     "husband",   "wife",      "children",  "daughter",
       "son",        "sister",    "brother",   "mother",    "father",
       "grandchildren", "partner", "friends",  "neighbors", "visits",
       "support",    "talking",   "listening", "hugging",   "crying",
       "laughing",   "together",  "home",      "garden",    "walks",
       "holidays",   "birthday",  "phone",     "calling",   "messages",
       "worry",      "caring",    "love",      "strength",  "courage",
       "sharing",    "stories",   "memories",  "grateful",  "community"},
  }};
  return themes;
}

inline const std::vector<std::string>& glue_words() {
  static const std::vector<std::string> words = {
      "really", "quite", "just",  "thing",   "time",   "week",
      "day",    "bit",   "little", "went",   "came",   "felt",
      "start",  "point", "moment", "talked", "looked", "turned"};
  return words;
}

inline const std::vector<std::string>& orality_words() {
  static const std::vector<std::string> words = {"uh", "yeah", "um", "hmm",
                                                 "okay", "well"};
  return words;
}

inline std::string capitalize(std::string s) {
  if (!s.empty()) {
    s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  }
  return s;
}

}  // namespace detail

inline const std::vector<std::string>& theme_vocabulary(int theme) {
  return detail::theme_vocabularies().at(theme);
}

// The custom stoplist that pairs with generated corpora.
inline std::vector<std::string> synth_stoplist() {
  std::vector<std::string> words = detail::orality_words();
  words.push_back("says");
  return words;
}

// Deterministic synthetic interviews: segments of theme-specific sentences
// with glue words, orality markers, occasional contractions, speaker tags,
// and section headers, so the whole preprocessing path gets exercised.
inline std::vector<RawTranscript> generate_corpus(const SynthConfig& config) {
  if (config.themes < 1 ||
      config.themes > static_cast<int>(detail::theme_vocabularies().size())) {
    throw config_error("synth: themes must be between 1 and " +
                       std::to_string(detail::theme_vocabularies().size()));
  }
  if (config.interviews < 1) {
    throw config_error("synth: interviews must be >= 1");
  }
  Rng rng(config.seed);
  const auto& themes = detail::theme_vocabularies();
  const auto& glue = detail::glue_words();
  const auto& orality = detail::orality_words();

  std::vector<RawTranscript> corpus;
  for (int i = 0; i < config.interviews; ++i) {
    RawTranscript raw;
    raw.interview_id = "I" + std::to_string(i);
    const int segments = 18 + static_cast<int>(rng.below(7));
    for (int s = 0; s < segments; ++s) {
      if (s % 6 == 0) {
        raw.lines.push_back("I" + std::to_string(i) + "-" +
                            std::to_string(s / 6 + 1));
      }
      const int theme = rng.uniform() < 0.3
                            ? static_cast<int>(rng.below(config.themes))
                            : (s + i) % config.themes;
      const auto& vocab = themes[theme];
      if (rng.uniform() < 0.25) {
        const std::string q =
            rng.uniform() < 0.5 ? "How did that go for you?"
                                : "Wasn't that hard to manage?";
        raw.lines.push_back("O: " + q);
      }
      const int n_sentences = 6 + static_cast<int>(rng.below(5));
      for (int sen = 0; sen < n_sentences; ++sen) {
        std::vector<std::string> words;
        if (rng.uniform() < 0.2) {
          words.push_back(orality[rng.below(orality.size())]);
        }
        const int n_words = 6 + static_cast<int>(rng.below(4));
        for (int w = 0; w < n_words; ++w) {
          if (rng.uniform() < 0.18) {
            words.push_back(glue[rng.below(glue.size())]);
          } else {
            words.push_back(vocab[rng.below(vocab.size())]);
          }
        }
        std::string sentence = detail::capitalize(join(words.begin(), words.end(), " ")) + ".";
        const char* speaker = rng.uniform() < 0.12 ? "N: " : "P: ";
        raw.lines.push_back(std::string(speaker) + sentence);
      }
    }
    corpus.push_back(std::move(raw));
  }
  return corpus;
}

// Writes dir/transcripts/I<k>.txt plus dir/stopwords.txt (kept out of the
// transcript directory so it is never ingested as an interview).
inline void write_corpus(const std::filesystem::path& dir,
                         const SynthConfig& config) {
  std::filesystem::create_directories(dir / "transcripts");
  for (const auto& raw : generate_corpus(config)) {
    std::ofstream out(dir / "transcripts" / (raw.interview_id + ".txt"),
                      std::ios::binary);
    if (!out) {
      throw config_error("cannot write transcript in " + dir.string());
    }
    for (const auto& line : raw.lines) out << line << "\n";
  }
  std::ofstream stop(dir / "stopwords.txt", std::ios::binary);
  for (const auto& w : synth_stoplist()) stop << w << "\n";
}

}  // namespace topiclib
