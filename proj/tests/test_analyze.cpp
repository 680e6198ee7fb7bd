#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "topiclib/analyze.hpp"

using namespace topiclib;

namespace {

std::vector<float> vec(std::initializer_list<float> v) { return {v}; }

std::span<const float> as_span(const std::vector<float>& v) {
  return {v.data(), v.size()};
}

}  // namespace

TEST_CASE("chunk distribution is one-hot for a centroid-aligned chunk") {
  const std::vector<std::vector<float>> centroids = {vec({1, 0, 0}), vec({0, 1, 0})};
  const auto chunk = vec({1, 0, 0});
  const auto row = chunk_topic_distribution(as_span(chunk), centroids);
  CHECK(row[0] == Catch::Approx(1.0));
  CHECK(row[1] == Catch::Approx(0.0));
}

TEST_CASE("chunk distribution splits evenly between equidistant topics") {
  const std::vector<std::vector<float>> centroids = {vec({1, 0}), vec({0, 1})};
  const auto chunk = vec({1, 1});
  const auto row = chunk_topic_distribution(as_span(chunk), centroids);
  CHECK(row[0] == Catch::Approx(0.5));
  CHECK(row[1] == Catch::Approx(0.5));
}

TEST_CASE("chunk distribution falls back to uniform when all cosines are negative") {
  const std::vector<std::vector<float>> centroids = {vec({1, 0}), vec({0, 1})};
  const auto chunk = vec({-1, -1});
  const auto row = chunk_topic_distribution(as_span(chunk), centroids);
  CHECK(row[0] == Catch::Approx(0.5));
  CHECK(row[1] == Catch::Approx(0.5));
}

TEST_CASE("zero chunk vectors give a warned uniform row") {
  const std::vector<std::vector<float>> centroids = {vec({1, 0}), vec({0, 1})};
  const auto chunk = vec({0, 0});
  std::vector<std::string> warnings;
  const auto row = chunk_topic_distribution(as_span(chunk), centroids, &warnings, 7);
  CHECK(row == std::vector<double>{0.5, 0.5});
  REQUIRE(!warnings.empty());
  CHECK(warnings[0].find("7") != std::string::npos);
}

TEST_CASE("distribution rows live on the simplex") {
  Rng rng(64);
  std::vector<std::vector<float>> centroids;
  for (int t = 0; t < 5; ++t) {
    std::vector<float> c(16);
    for (auto& v : c) v = static_cast<float>(rng.uniform(-1, 1));
    centroids.push_back(c);
  }
  for (int i = 0; i < 200; ++i) {
    std::vector<float> chunk(16);
    for (auto& v : chunk) v = static_cast<float>(rng.uniform(-1, 1));
    const auto row = chunk_topic_distribution(as_span(chunk), centroids);
    double sum = 0.0;
    for (double v : row) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("distribution is invariant to positive centroid scaling") {
  Rng rng(65);
  std::vector<std::vector<float>> centroids, scaled;
  for (int t = 0; t < 4; ++t) {
    std::vector<float> c(8), s(8);
    for (int d = 0; d < 8; ++d) {
      c[d] = static_cast<float>(rng.uniform(-1, 1));
      s[d] = c[d] * 37.5f;
    }
    centroids.push_back(c);
    scaled.push_back(s);
  }
  std::vector<float> chunk(8);
  for (auto& v : chunk) v = static_cast<float>(rng.uniform(-1, 1));
  const auto a = chunk_topic_distribution(as_span(chunk), centroids);
  const auto b = chunk_topic_distribution(as_span(chunk), scaled);
  for (size_t t = 0; t < a.size(); ++t) {
    CHECK(a[t] == Catch::Approx(b[t]).margin(1e-9));
  }
}

TEST_CASE("interview distribution is the arithmetic mean") {
  const auto iv = interview_distribution("I0", {{1.0, 0.0}, {0.0, 1.0}});
  CHECK(iv.avg_probabilities == std::vector<double>{0.5, 0.5});

  const auto single = interview_distribution("I1", {{0.25, 0.75}});
  CHECK(single.avg_probabilities == std::vector<double>{0.25, 0.75});

  Rng rng(66);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> r(6);
    double sum = 0.0;
    for (auto& v : r) {
      v = rng.uniform(0.0, 1.0);
      sum += v;
    }
    for (auto& v : r) v /= sum;
    rows.push_back(std::move(r));
  }
  const auto mean = interview_distribution("I2", rows);
  double total = 0.0;
  for (double v : mean.avg_probabilities) total += v;
  CHECK(std::fabs(total - 1.0) < 1e-9);
}

TEST_CASE("global ranking is order-invariant and sorted") {
  std::vector<InterviewDistribution> interviews = {
      {"I0", {0.5, 0.3, 0.2}},
      {"I1", {0.1, 0.6, 0.3}},
      {"I2", {0.2, 0.2, 0.6}},
  };
  const auto ranking = global_ranking(interviews, {"a", "b", "c"});
  REQUIRE(ranking.size() == 3);
  for (size_t i = 1; i < ranking.size(); ++i) {
    CHECK(ranking[i].mean_avg_probability <= ranking[i - 1].mean_avg_probability);
  }
  std::vector<InterviewDistribution> permuted = {interviews[2], interviews[0],
                                                 interviews[1]};
  const auto ranking2 = global_ranking(permuted, {"a", "b", "c"});
  for (size_t i = 0; i < ranking.size(); ++i) {
    CHECK(ranking[i].topic_id == ranking2[i].topic_id);
    CHECK(ranking[i].mean_avg_probability ==
          Catch::Approx(ranking2[i].mean_avg_probability).margin(1e-12));
  }

  const auto solo = global_ranking({{"I0", {0.2, 0.5, 0.3}}}, {});
  CHECK(solo[0].topic_id == 1);
  CHECK(solo[1].topic_id == 2);
  CHECK(solo[2].topic_id == 0);
}

TEST_CASE("rating aggregation: means, quartiles, and the >=4 count") {
  const auto dir = std::filesystem::temp_directory_path() / "topiclib_ratings";
  std::filesystem::create_directories(dir);
  const auto path = dir / "ratings.csv";
  {
    std::ofstream out(path);
    out << "rater,system,question,topic_id,score\n";
    // one topic rated {4,5,3} -> mean 4.0
    out << "r1,bertopic,Q1,0,4\n";
    out << "r2,bertopic,Q1,0,5\n";
    out << "r3,bertopic,Q1,0,3\n";
    // five per-topic means 1..5 for the quartile check
    for (int t = 0; t < 5; ++t) {
      out << "r1,top2vec,Q3," << t << "," << (t + 1) << "\n";
    }
  }
  const auto agg = aggregate_ratings(load_ratings(path.string()));
  CHECK(agg.topic_means.at({"bertopic", "Q1", 0}) == Catch::Approx(4.0));
  bool found = false;
  for (const auto& s : agg.summaries) {
    if (s.system == "top2vec" && s.question == "Q3") {
      found = true;
      CHECK(s.min == 1.0);
      CHECK(s.q1 == Catch::Approx(2.0));
      CHECK(s.median == Catch::Approx(3.0));
      CHECK(s.q3 == Catch::Approx(4.0));
      CHECK(s.max == 5.0);
    }
  }
  CHECK(found);
  std::filesystem::remove_all(dir);
}

TEST_CASE("rating fixture mirroring the 12-of-17 aggregate") {
  const auto dir = std::filesystem::temp_directory_path() / "topiclib_ratings17";
  std::filesystem::create_directories(dir);
  const auto path = dir / "ratings.csv";
  {
    std::ofstream out(path);
    out << "rater,system,question,topic_id,score\n";
    for (int t = 0; t < 17; ++t) {
      const int base = t < 12 ? 4 : 3;  // 12 topics at mean >= 4.0
      for (const std::string rater : {"r1", "r2", "r3"}) {
        out << rater << ",bertopic,Q1," << t << "," << base << "\n";
      }
    }
    out << "r1,bertopic,Q2,-1,4\n";  // whole-output rating shares the schema
  }
  const auto agg = aggregate_ratings(load_ratings(path.string()));
  bool found = false;
  for (const auto& s : agg.summaries) {
    if (s.system == "bertopic" && s.question == "Q1") {
      found = true;
      CHECK(s.n_topics == 17);
      CHECK(s.count_ge_4 == 12);
    }
  }
  CHECK(found);
  CHECK(agg.topic_means.count({"bertopic", "Q2", -1}) == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("out-of-range scores are rejected naming the row") {
  const auto dir = std::filesystem::temp_directory_path() / "topiclib_ratings_bad";
  std::filesystem::create_directories(dir);
  const auto path = dir / "ratings.csv";
  {
    std::ofstream out(path);
    out << "rater,system,question,topic_id,score\n";
    out << "r1,bertopic,Q1,0,6\n";
  }
  try {
    load_ratings(path.string());
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv and svg artifacts take shape") {
  const std::vector<InterviewDistribution> interviews = {
      {"I0", {0.7, 0.3}},
      {"I1", {0.4, 0.6}},
  };
  const auto csv = distribution_csv(interviews);
  CHECK(csv.rfind("interview_id,topic_0,topic_1\n", 0) == 0);
  CHECK(csv.find("I0,0.7,0.3\n") != std::string::npos);

  const auto ranking = global_ranking(interviews, {"first label", "second"});
  const auto rcsv = ranking_csv(ranking);
  CHECK(rcsv.rfind("topic_id,mean_avg_probability,label\n", 0) == 0);

  const auto svg = distribution_svg(interviews, {"first label", "second"});
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("first label") != std::string::npos);
  // one band per interview per topic
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 8);
  const auto svg2 = distribution_svg(interviews, {"first label", "second"});
  CHECK(svg == svg2);  // deterministic bytes
}
