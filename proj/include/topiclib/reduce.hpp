#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "topiclib/common.hpp"
#include "topiclib/matrix.hpp"

namespace topiclib {

enum class Metric { cosine, euclidean };

inline Metric parse_metric(const std::string& name) {
  if (name == "cosine") return Metric::cosine;
  if (name == "euclidean") return Metric::euclidean;
  throw config_error("unknown metric: " + name);
}

inline const char* metric_name(Metric m) {
  return m == Metric::cosine ? "cosine" : "euclidean";
}

struct LayoutConfig {
  int n_neighbors = 15;
  double min_dist = 0.1;
  int n_components = 2;
  Metric metric = Metric::cosine;
  int n_epochs = 200;
  int negative_sample_rate = 5;
  double initial_learning_rate = 1.0;  // linear decay to 0
  std::uint64_t seed = 42;
};

struct KnnGraph {
  int n = 0;
  int k = 0;
  std::vector<int> indices;       // n*k, self excluded
  std::vector<double> distances;  // n*k, ascending per row
};

struct FuzzyEdge {
  int i, j;  // i < j
  double w;  // (0, 1]
};

struct FuzzyGraph {
  int n = 0;
  std::vector<FuzzyEdge> edges;
};

struct ReducedMatrix {
  int n_rows = 0;
  int n_components = 0;
  std::vector<double> values;

  double at(int i, int c) const {
    return values[static_cast<size_t>(i) * n_components + c];
  }
};

// Exact brute-force kNN. Cosine distance is 1 - cosine similarity; ties break
// toward the lower index.
inline KnnGraph knn_graph(const EmbeddingMatrix& X, int k, Metric metric) {
  const int n = X.n_rows;
  if (n < k + 1) {
    throw config_error("knn_graph: need at least k+1 points, have " +
                       std::to_string(n) + " for k=" + std::to_string(k));
  }
  std::vector<double> norms(n, 0.0);
  if (metric == Metric::cosine) {
    for (int i = 0; i < n; ++i) {
      norms[i] = norm(X.row(i));
      if (norms[i] == 0.0) {
        throw std::runtime_error(
            "knn_graph: zero vector at row " + std::to_string(i) +
            " cannot be used with the cosine metric");
      }
    }
  }
  KnnGraph g;
  g.n = n;
  g.k = k;
  g.indices.resize(static_cast<size_t>(n) * k);
  g.distances.resize(static_cast<size_t>(n) * k);
  std::vector<std::pair<double, int>> row(n - 1);
  for (int i = 0; i < n; ++i) {
    int m = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double d;
      if (metric == Metric::cosine) {
        d = 1.0 - dot(X.row(i), X.row(j)) / (norms[i] * norms[j]);
        if (d < 0.0) d = 0.0;
      } else {
        d = euclidean_distance(X.row(i), X.row(j));
      }
      row[m++] = {d, j};
    }
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    std::sort(row.begin(), row.begin() + k);
    for (int s = 0; s < k; ++s) {
      g.indices[static_cast<size_t>(i) * k + s] = row[s].second;
      g.distances[static_cast<size_t>(i) * k + s] = row[s].first;
    }
  }
  return g;
}

struct SmoothKnnResult {
  double rho;
  double sigma;
};

// Calibrates sigma so that sum_j exp(-max(0, d_j - rho)/sigma) = log2(k) via
// binary search (64 iterations, tolerance 1e-5); rho is the distance to the
// nearest neighbor. All-zero rows get the documented sigma floor of 1.0;
// otherwise sigma is clamped at 1e-3.
inline SmoothKnnResult smooth_knn(const std::vector<double>& distances, int k) {
  const double rho = *std::min_element(distances.begin(), distances.end());
  if (*std::max_element(distances.begin(), distances.end()) == 0.0) {
    return {0.0, 1.0};
  }
  const double target = std::log2(static_cast<double>(k));
  auto sum_at = [&](double sigma) {
    double s = 0.0;
    for (double d : distances) s += std::exp(-std::max(0.0, d - rho) / sigma);
    return s;
  };
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double mid = 1.0;
  for (int it = 0; it < 64; ++it) {
    const double s = sum_at(mid);
    if (std::fabs(s - target) < 1e-5) break;
    if (s > target) {
      hi = mid;
      mid = 0.5 * (lo + hi);
    } else {
      lo = mid;
      mid = std::isinf(hi) ? mid * 2.0 : 0.5 * (lo + hi);
    }
  }
  return {rho, std::max(mid, 1e-3)};
}

// Probabilistic union of two directed memberships.
inline double fuzzy_union(double a, double b) { return a + b - a * b; }

// Directed weights w_ij = exp(-max(0, d_ij - rho_i)/sigma_i) over kNN edges,
// symmetrized with the probabilistic union.
inline FuzzyGraph fuzzy_graph(const KnnGraph& knn) {
  const int n = knn.n;
  const int k = knn.k;
  std::vector<double> rho(n), sigma(n);
  std::vector<double> row(k);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < k; ++s) {
      row[s] = knn.distances[static_cast<size_t>(i) * k + s];
    }
    const auto r = smooth_knn(row, k);
    rho[i] = r.rho;
    sigma[i] = r.sigma;
  }
  std::map<std::pair<int, int>, std::pair<double, double>> directed;
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < k; ++s) {
      const int j = knn.indices[static_cast<size_t>(i) * k + s];
      const double d = knn.distances[static_cast<size_t>(i) * k + s];
      const double w = std::exp(-std::max(0.0, d - rho[i]) / sigma[i]);
      auto key = std::make_pair(std::min(i, j), std::max(i, j));
      auto& slot = directed[key];
      if (i < j) {
        slot.first = w;
      } else {
        slot.second = w;
      }
    }
  }
  FuzzyGraph g;
  g.n = n;
  g.edges.reserve(directed.size());
  for (const auto& [key, ab] : directed) {
    const double w = fuzzy_union(ab.first, ab.second);
    if (w > 0.0) g.edges.push_back({key.first, key.second, w});
  }
  return g;
}

struct CurveParams {
  double a;
  double b;
};

// Least-squares fit of 1/(1 + a*d^(2b)) against the piecewise target
// (1 for d <= min_dist, exp(-(d - min_dist)) beyond) over 300 samples of
// [0, 3]. Deterministic: coarse grid then fixed-iteration Gauss-Newton.
inline CurveParams fit_ab(double min_dist) {
  constexpr int kSamples = 300;
  std::vector<double> xs(kSamples), ts(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    const double d = 3.0 * i / (kSamples - 1);
    xs[i] = d;
    ts[i] = d <= min_dist ? 1.0 : std::exp(-(d - min_dist));
  }
  auto sse = [&](double a, double b) {
    double s = 0.0;
    for (int i = 0; i < kSamples; ++i) {
      const double f = 1.0 / (1.0 + a * std::pow(xs[i], 2.0 * b));
      s += (f - ts[i]) * (f - ts[i]);
    }
    return s;
  };
  double best_a = 1.0, best_b = 1.0;
  double best = std::numeric_limits<double>::infinity();
  for (int ia = 0; ia < 30; ++ia) {
    const double a = 0.1 * std::pow(100.0, ia / 29.0);  // 0.1 .. 10
    for (int ib = 0; ib < 23; ++ib) {
      const double b = 0.3 + 2.2 * ib / 22.0;  // 0.3 .. 2.5
      const double s = sse(a, b);
      if (s < best) {
        best = s;
        best_a = a;
        best_b = b;
      }
    }
  }
  double a = best_a, b = best_b;
  for (int it = 0; it < 200; ++it) {
    double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
    for (int i = 0; i < kSamples; ++i) {
      const double d = xs[i];
      const double p = d > 0.0 ? std::pow(d, 2.0 * b) : 0.0;
      const double denom = 1.0 + a * p;
      const double f = 1.0 / denom;
      const double r = f - ts[i];
      const double dfda = -p / (denom * denom);
      const double dfdb =
          d > 0.0 ? -2.0 * a * p * std::log(d) / (denom * denom) : 0.0;
      jtj00 += dfda * dfda;
      jtj01 += dfda * dfdb;
      jtj11 += dfdb * dfdb;
      jtr0 += dfda * r;
      jtr1 += dfdb * r;
    }
    jtj00 += 1e-9;
    jtj11 += 1e-9;
    const double det = jtj00 * jtj11 - jtj01 * jtj01;
    if (det == 0.0) break;
    const double da = (-jtr0 * jtj11 + jtr1 * jtj01) / det;
    const double db = (-jtr1 * jtj00 + jtr0 * jtj01) / det;
    a = std::max(1e-3, a + da);
    b = std::max(1e-3, b + db);
  }
  return {a, b};
}

// Seeded SGD layout. Positive edges attract with the gradient of log(Phi),
// negative samples (uniform non-neighbors) repel with the gradient of
// log(1 - Phi); per-component gradients clip to [-4, 4]; learning rate decays
// linearly to zero. Fully determined by config.seed.
inline ReducedMatrix optimize_layout(const FuzzyGraph& graph,
                                     const LayoutConfig& config) {
  const int n = graph.n;
  const int dim = config.n_components;
  const auto [a, b] = fit_ab(config.min_dist);

  Rng rng(config.seed);
  ReducedMatrix out;
  out.n_rows = n;
  out.n_components = dim;
  out.values.resize(static_cast<size_t>(n) * dim);
  for (auto& v : out.values) v = rng.uniform(-10.0, 10.0);

  std::vector<std::vector<int>> neighbors(n);
  for (const auto& e : graph.edges) {
    neighbors[e.i].push_back(e.j);
    neighbors[e.j].push_back(e.i);
  }
  for (auto& lst : neighbors) std::sort(lst.begin(), lst.end());
  auto is_neighbor = [&](int i, int j) {
    const auto& lst = neighbors[i];
    return std::binary_search(lst.begin(), lst.end(), j);
  };

  auto clip = [](double g) { return std::clamp(g, -4.0, 4.0); };
  double* pts = out.values.data();

  for (int epoch = 0; epoch < config.n_epochs; ++epoch) {
    const double alpha =
        config.initial_learning_rate *
        (1.0 - static_cast<double>(epoch) / config.n_epochs);
    for (const auto& e : graph.edges) {
      if (rng.uniform() >= e.w) continue;
      double* xi = pts + static_cast<size_t>(e.i) * dim;
      double* xj = pts + static_cast<size_t>(e.j) * dim;
      double d2 = 0.0;
      for (int c = 0; c < dim; ++c) {
        const double diff = xi[c] - xj[c];
        d2 += diff * diff;
      }
      if (d2 > 0.0) {
        const double coef =
            (-2.0 * a * b * std::pow(d2, b - 1.0)) / (1.0 + a * std::pow(d2, b));
        if (!std::isfinite(coef)) {
          throw std::runtime_error(
              "optimize_layout: non-finite attractive gradient (upstream NaN?)");
        }
        for (int c = 0; c < dim; ++c) {
          const double g = clip(coef * (xi[c] - xj[c]));
          xi[c] += alpha * g;
          xj[c] -= alpha * g;
        }
      }
      for (int s = 0; s < config.negative_sample_rate; ++s) {
        const int t = static_cast<int>(rng.below(n));
        if (t == e.i || is_neighbor(e.i, t)) continue;
        double* xt = pts + static_cast<size_t>(t) * dim;
        double r2 = 0.0;
        for (int c = 0; c < dim; ++c) {
          const double diff = xi[c] - xt[c];
          r2 += diff * diff;
        }
        if (r2 > 0.0) {
          const double coef =
              2.0 * b / ((0.001 + r2) * (1.0 + a * std::pow(r2, b)));
          if (!std::isfinite(coef)) {
            throw std::runtime_error(
                "optimize_layout: non-finite repulsive gradient (upstream NaN?)");
          }
          for (int c = 0; c < dim; ++c) {
            xi[c] += alpha * clip(coef * (xi[c] - xt[c]));
          }
        } else {
          for (int c = 0; c < dim; ++c) xi[c] += alpha * 4.0;
        }
      }
    }
  }
  for (double v : out.values) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("optimize_layout: non-finite coordinate in output");
    }
  }
  return out;
}

// Full reduction: exact kNN, smooth-kNN calibration, fuzzy union, seeded SGD.
// Pure function of (X, config); n_neighbors is clamped to n-1 when the input
// is smaller than the configured neighborhood.
inline ReducedMatrix reduce(const EmbeddingMatrix& X, const LayoutConfig& config,
                            std::vector<std::string>* warnings = nullptr) {
  if (X.n_rows < 2) {
    throw config_error("reduce: need at least 2 points, have " +
                       std::to_string(X.n_rows));
  }
  int k = config.n_neighbors;
  if (k > X.n_rows - 1) {
    k = X.n_rows - 1;
    if (warnings) {
      warnings->push_back("reduce: n_neighbors clamped to " + std::to_string(k) +
                          " for " + std::to_string(X.n_rows) + " points");
    }
  }
  const auto knn = knn_graph(X, k, config.metric);
  const auto graph = fuzzy_graph(knn);
  return optimize_layout(graph, config);
}

}  // namespace topiclib
