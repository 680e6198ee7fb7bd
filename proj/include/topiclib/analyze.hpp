#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "topiclib/common.hpp"
#include "topiclib/matrix.hpp"

namespace topiclib {

// Soft assignment: ReLU of cosine to each centroid, normalized to the
// simplex; all-nonpositive similarities (or a zero chunk vector) fall back to
// the uniform row.
inline std::vector<double> chunk_topic_distribution(
    std::span<const float> chunk, const std::vector<std::vector<float>>& centroids,
    std::vector<std::string>* warnings = nullptr, int chunk_id = -1) {
  const size_t n_topics = centroids.size();
  if (n_topics == 0) {
    throw config_error("chunk_topic_distribution: need at least one topic");
  }
  std::vector<double> row(n_topics, 0.0);
  if (norm(chunk) == 0.0) {
    if (warnings) {
      warnings->push_back("distribution: zero embedding for chunk " +
                          std::to_string(chunk_id) + "; using the uniform row");
    }
    std::fill(row.begin(), row.end(), 1.0 / n_topics);
    return row;
  }
  double sum = 0.0;
  for (size_t t = 0; t < n_topics; ++t) {
    const std::span<const float> c(centroids[t].data(), centroids[t].size());
    row[t] = std::max(0.0, cosine_similarity(chunk, c));
    sum += row[t];
  }
  if (sum == 0.0) {
    std::fill(row.begin(), row.end(), 1.0 / n_topics);
  } else {
    for (auto& v : row) v /= sum;
  }
  return row;
}

struct InterviewDistribution {
  std::string interview_id;
  std::vector<double> avg_probabilities;
};

// Arithmetic mean of the interview's chunk rows, one value per topic.
inline InterviewDistribution interview_distribution(
    const std::string& interview_id, const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) {
    throw config_error("interview_distribution: interview " + interview_id +
                       " has no chunks");
  }
  InterviewDistribution out;
  out.interview_id = interview_id;
  out.avg_probabilities.assign(rows[0].size(), 0.0);
  for (const auto& row : rows) {
    for (size_t t = 0; t < row.size(); ++t) out.avg_probabilities[t] += row[t];
  }
  for (auto& v : out.avg_probabilities) v /= rows.size();
  return out;
}

struct RankedTopic {
  int topic_id;
  double mean_avg_probability;
  std::string label;
};

// Per topic, the mean over interviews of the averaged probabilities; sorted
// descending, ties by lower topic id.
inline std::vector<RankedTopic> global_ranking(
    const std::vector<InterviewDistribution>& interviews,
    const std::vector<std::string>& labels) {
  if (interviews.empty()) {
    throw config_error("global_ranking: no interviews");
  }
  const size_t n_topics = interviews[0].avg_probabilities.size();
  std::vector<RankedTopic> ranking;
  for (size_t t = 0; t < n_topics; ++t) {
    double mean = 0.0;
    for (const auto& iv : interviews) mean += iv.avg_probabilities[t];
    mean /= interviews.size();
    ranking.push_back({static_cast<int>(t), mean,
                       t < labels.size() ? labels[t] : ""});
  }
  std::sort(ranking.begin(), ranking.end(),
            [](const RankedTopic& a, const RankedTopic& b) {
              if (a.mean_avg_probability != b.mean_avg_probability) {
                return a.mean_avg_probability > b.mean_avg_probability;
              }
              return a.topic_id < b.topic_id;
            });
  return ranking;
}

// ---------------------------------------------------------------------------
// Survey-rating aggregation (Q1/Q2/Q3 records, 1-5 scale).
// ---------------------------------------------------------------------------

struct RatingRecord {
  std::string rater;
  std::string system;    // e.g. "bertopic", "top2vec"
  std::string question;  // Q1, Q2, Q3
  int topic_id;          // -1 for whole-output Q2
  int score;             // 1..5
};

inline std::vector<RatingRecord> load_ratings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open ratings CSV: " + path);
  std::vector<RatingRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (line_no == 1 && line.rfind("rater,", 0) == 0) continue;  // header
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (fields.size() != 5) {
      throw config_error("ratings row " + std::to_string(line_no) +
                         ": expected 5 fields, got " +
                         std::to_string(fields.size()));
    }
    RatingRecord rec;
    rec.rater = fields[0];
    rec.system = fields[1];
    rec.question = fields[2];
    try {
      rec.topic_id = std::stoi(fields[3]);
      rec.score = std::stoi(fields[4]);
    } catch (const std::exception&) {
      throw config_error("ratings row " + std::to_string(line_no) +
                         ": topic_id and score must be integers");
    }
    if (rec.score < 1 || rec.score > 5) {
      throw config_error("ratings row " + std::to_string(line_no) + ": score " +
                         std::to_string(rec.score) + " outside [1,5]");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

// Inclusive (linear interpolation) quantile of an already sorted vector.
inline double quantile_inclusive(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw config_error("quantile of empty set");
  if (sorted.size() == 1) return sorted[0];
  const double h = (sorted.size() - 1) * p;
  const size_t lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

struct RatingSummary {
  std::string system;
  std::string question;
  int n_topics;
  double min, q1, median, q3, max;
  int count_ge_4;  // topics whose mean rating is >= 4.0
};

struct RatingAggregation {
  // (system, question, topic_id) -> mean score over raters
  std::map<std::tuple<std::string, std::string, int>, double> topic_means;
  std::vector<RatingSummary> summaries;  // per (system, question)
};

inline RatingAggregation aggregate_ratings(const std::vector<RatingRecord>& records) {
  std::map<std::tuple<std::string, std::string, int>, std::pair<double, int>> acc;
  for (const auto& r : records) {
    auto& slot = acc[{r.system, r.question, r.topic_id}];
    slot.first += r.score;
    slot.second += 1;
  }
  RatingAggregation out;
  std::map<std::pair<std::string, std::string>, std::vector<double>> grouped;
  for (const auto& [key, sum_count] : acc) {
    const double mean = sum_count.first / sum_count.second;
    out.topic_means[key] = mean;
    grouped[{std::get<0>(key), std::get<1>(key)}].push_back(mean);
  }
  for (auto& [key, means] : grouped) {
    std::sort(means.begin(), means.end());
    RatingSummary s;
    s.system = key.first;
    s.question = key.second;
    s.n_topics = static_cast<int>(means.size());
    s.min = means.front();
    s.q1 = quantile_inclusive(means, 0.25);
    s.median = quantile_inclusive(means, 0.5);
    s.q3 = quantile_inclusive(means, 0.75);
    s.max = means.back();
    s.count_ge_4 = static_cast<int>(
        std::count_if(means.begin(), means.end(), [](double m) { return m >= 4.0; }));
    out.summaries.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report artifacts: distribution CSV, ranking CSV, stacked-bar SVG.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(12) << v;
  return ss.str();
}

// Evenly spread hues, fixed saturation/lightness.
inline std::string topic_color(int topic, int n_topics) {
  const int hue = n_topics > 0 ? (topic * 360) / std::max(1, n_topics) : 0;
  return "hsl(" + std::to_string(hue) + ",65%,52%)";
}

}  // namespace detail

inline std::string distribution_csv(const std::vector<InterviewDistribution>& rows) {
  std::string out = "interview_id";
  const size_t n_topics = rows.empty() ? 0 : rows[0].avg_probabilities.size();
  for (size_t t = 0; t < n_topics; ++t) out += ",topic_" + std::to_string(t);
  out += "\n";
  for (const auto& row : rows) {
    out += row.interview_id;
    for (double v : row.avg_probabilities) {
      out += "," + detail::format_double(v);
    }
    out += "\n";
  }
  return out;
}

inline std::string ranking_csv(const std::vector<RankedTopic>& ranking) {
  std::string out = "topic_id,mean_avg_probability,label\n";
  for (const auto& r : ranking) {
    std::string label = r.label;
    std::replace(label.begin(), label.end(), ',', ';');
    out += std::to_string(r.topic_id) + "," +
           detail::format_double(r.mean_avg_probability) + "," + label + "\n";
  }
  return out;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// One stacked bar per interview (each bar totals 1), one color band per
// topic, legend labeled by topic label when present.
inline std::string distribution_svg(const std::vector<InterviewDistribution>& rows,
                                    const std::vector<std::string>& labels) {
  const int n_topics = rows.empty() ? 0
                                    : static_cast<int>(rows[0].avg_probabilities.size());
  const int bar_w = 48, gap = 16, chart_h = 420, margin = 40;
  const int legend_w = 360;
  const int width = margin * 2 + static_cast<int>(rows.size()) * (bar_w + gap) +
                    legend_w;
  const int height = chart_h + margin * 2 + 20;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    const int x = margin + static_cast<int>(i) * (bar_w + gap);
    double y = margin;
    for (int t = 0; t < n_topics; ++t) {
      const double h = rows[i].avg_probabilities[t] * chart_h;
      svg << "<rect x=\"" << x << "\" y=\"" << detail::format_double(y)
          << "\" width=\"" << bar_w << "\" height=\"" << detail::format_double(h)
          << "\" fill=\"" << detail::topic_color(t, n_topics) << "\"/>\n";
      y += h;
    }
    svg << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << margin + chart_h + 16
        << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">"
        << escape_xml(rows[i].interview_id) << "</text>\n";
  }
  const int lx = margin + static_cast<int>(rows.size()) * (bar_w + gap) + 24;
  for (int t = 0; t < n_topics; ++t) {
    const int ly = margin + t * 20;
    svg << "<rect x=\"" << lx << "\" y=\"" << ly
        << "\" width=\"14\" height=\"14\" fill=\""
        << detail::topic_color(t, n_topics) << "\"/>\n";
    const std::string name = (t < static_cast<int>(labels.size()) &&
                              !labels[t].empty())
                                 ? labels[t]
                                 : "Topic " + std::to_string(t);
    svg << "<text x=\"" << lx + 20 << "\" y=\"" << ly + 12
        << "\" font-size=\"12\" font-family=\"sans-serif\">"
        << escape_xml(name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace topiclib
