#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace topiclib {

// Dense row-major float32 matrix keyed by chunk id or term string.
struct EmbeddingMatrix {
  int n_rows = 0;
  int dimension = 0;
  std::vector<float> values;
  std::vector<std::string> row_keys;

  std::span<const float> row(int i) const {
    return {values.data() + static_cast<size_t>(i) * dimension,
            static_cast<size_t>(dimension)};
  }
  std::span<float> row(int i) {
    return {values.data() + static_cast<size_t>(i) * dimension,
            static_cast<size_t>(dimension)};
  }
};

inline double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += double(a[i]) * double(b[i]);
  return s;
}

inline double norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

// Returns 0 when either vector has zero norm; callers that must treat that as
// an error check norms up front.
inline double cosine_similarity(std::span<const float> a,
                                std::span<const float> b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

inline double cosine_distance(std::span<const float> a,
                              std::span<const float> b) {
  double d = 1.0 - cosine_similarity(a, b);
  return d < 0.0 ? 0.0 : d;
}

inline double euclidean_distance(std::span<const float> a,
                                 std::span<const float> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double diff = double(a[i]) - double(b[i]);
    s += diff * diff;
  }
  return std::sqrt(s);
}

}  // namespace topiclib
