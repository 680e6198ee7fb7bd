#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "topiclib/common.hpp"
#include "topiclib/reduce.hpp"

namespace topiclib {

enum class ClusterSelection { eom, leaf };

inline ClusterSelection parse_selection(const std::string& name) {
  if (name == "eom") return ClusterSelection::eom;
  if (name == "leaf") return ClusterSelection::leaf;
  throw config_error("unknown cluster selection: " + name);
}

inline const char* selection_name(ClusterSelection s) {
  return s == ClusterSelection::eom ? "eom" : "leaf";
}

struct ClusterConfig {
  int min_cluster_size = 10;
  std::optional<int> min_samples;  // defaults to min_cluster_size
  ClusterSelection selection = ClusterSelection::eom;
};

// Guard for zero-weight merges so lambdas stay finite.
inline constexpr double kLambdaCap = 1e12;

struct MstEdge {
  int a, b;
  double w;
};

struct DendroNode {
  int left, right;  // ids: 0..n-1 points, n.. merge nodes
  double distance;
  int size;
};

// Condensed hierarchy row: child < n_points means a point falling out of
// parent at lambda; child >= n_points is a cluster born at lambda.
struct CondensedNode {
  int parent;
  int child;
  double lambda;
  int child_size;
};

struct CondensedTree {
  int n_points = 0;
  int n_clusters = 0;  // cluster ids are n_points .. n_points+n_clusters-1
  std::vector<CondensedNode> rows;
  std::vector<double> stability;     // per cluster, indexed by id - n_points
  std::vector<double> birth_lambda;  // per cluster
  std::vector<int> cluster_parent;   // per cluster; root's parent is -1
};

struct ClusterLabels {
  std::vector<int> labels;  // -1 noise
  int n_clusters = 0;
};

// Distance from each point to its min_samples-th nearest neighbor.
inline std::vector<double> core_distances(const ReducedMatrix& X,
                                          int min_samples) {
  const int n = X.n_rows;
  if (n <= min_samples) {
    throw config_error("core_distances: need n > min_samples");
  }
  std::vector<double> core(n);
  std::vector<double> row(n - 1);
  for (int i = 0; i < n; ++i) {
    int m = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0.0;
      for (int c = 0; c < X.n_components; ++c) {
        const double diff = X.at(i, c) - X.at(j, c);
        s += diff * diff;
      }
      row[m++] = std::sqrt(s);
    }
    std::nth_element(row.begin(), row.begin() + (min_samples - 1), row.end());
    core[i] = row[min_samples - 1];
  }
  return core;
}

inline double mutual_reachability(double d, double core_i, double core_j) {
  return std::max({d, core_i, core_j});
}

// Prim's O(n^2) MST; deterministic tie-break by (weight, lower node index).
template <typename Weight>
std::vector<MstEdge> minimum_spanning_tree(int n, Weight weight) {
  if (n < 2) throw config_error("minimum_spanning_tree: need n >= 2");
  std::vector<bool> in_tree(n, false);
  std::vector<double> best_w(n, std::numeric_limits<double>::infinity());
  std::vector<int> best_from(n, 0);
  in_tree[0] = true;
  for (int j = 1; j < n; ++j) best_w[j] = weight(0, j);
  std::vector<MstEdge> edges;
  edges.reserve(n - 1);
  for (int step = 1; step < n; ++step) {
    int u = -1;
    for (int j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      if (u == -1 || best_w[j] < best_w[u]) u = j;
    }
    edges.push_back({std::min(best_from[u], u), std::max(best_from[u], u),
                     best_w[u]});
    in_tree[u] = true;
    for (int j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double w = weight(u, j);
      if (w < best_w[j]) {
        best_w[j] = w;
        best_from[j] = u;
      }
    }
  }
  return edges;
}

// Single-linkage merge tree from MST edges sorted ascending; union-find with
// size tracking. Node ids n..2n-2, root is the last node.
inline std::vector<DendroNode> build_hierarchy(std::vector<MstEdge> edges,
                                               int n) {
  std::sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) {
    if (x.w != y.w) return x.w < y.w;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<int> node_of(n);      // current dendrogram node per root
  std::vector<int> size_of(n, 1);   // per root
  std::iota(node_of.begin(), node_of.end(), 0);
  std::vector<DendroNode> nodes;
  nodes.reserve(n - 1);
  int next_id = n;
  for (const auto& e : edges) {
    const int ra = find(e.a), rb = find(e.b);
    const int na = node_of[ra], nb = node_of[rb];
    DendroNode node;
    node.left = std::min(na, nb);
    node.right = std::max(na, nb);
    node.distance = e.w;
    node.size = size_of[ra] + size_of[rb];
    parent[ra] = rb;
    node_of[rb] = next_id++;
    size_of[rb] = node.size;
    nodes.push_back(node);
  }
  return nodes;
}

namespace detail {

inline int dendro_size(const std::vector<DendroNode>& nodes, int id, int n) {
  return id < n ? 1 : nodes[id - n].size;
}

inline void dendro_leaves(const std::vector<DendroNode>& nodes, int id, int n,
                          std::vector<int>* out) {
  std::vector<int> stack{id};
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (v < n) {
      out->push_back(v);
    } else {
      stack.push_back(nodes[v - n].left);
      stack.push_back(nodes[v - n].right);
    }
  }
}

inline double merge_lambda(double distance) {
  return distance > 0.0 ? std::min(1.0 / distance, kLambdaCap) : kLambdaCap;
}

}  // namespace detail

// Condenses the dendrogram: splits where both sides have at least
// min_cluster_size points spawn child clusters; smaller sides fall out as
// points at the split lambda. stability(C) = sum over points of
// (lambda_leaving - lambda_birth).
inline CondensedTree condense_tree(const std::vector<DendroNode>& nodes,
                                   int n, int min_cluster_size) {
  CondensedTree tree;
  tree.n_points = n;
  if (n == 0) return tree;
  const int root_cluster = n;
  tree.n_clusters = 1;
  tree.birth_lambda.push_back(0.0);
  tree.cluster_parent.push_back(-1);

  if (nodes.empty()) {  // single point
    tree.rows.push_back({root_cluster, 0, kLambdaCap, 1});
  } else {
    struct Item {
      int dendro_id;
      int cluster;
    };
    std::vector<Item> stack{{static_cast<int>(nodes.size()) - 1 + n,
                             root_cluster}};
    while (!stack.empty()) {
      const auto [id, cluster] = stack.back();
      stack.pop_back();
      const auto& node = nodes[id - n];
      const double lambda = detail::merge_lambda(node.distance);
      const int ls = detail::dendro_size(nodes, node.left, n);
      const int rs = detail::dendro_size(nodes, node.right, n);
      const bool keep_left = ls >= min_cluster_size;
      const bool keep_right = rs >= min_cluster_size;
      auto drop_points = [&](int sub_id) {
        std::vector<int> leaves;
        detail::dendro_leaves(nodes, sub_id, n, &leaves);
        std::sort(leaves.begin(), leaves.end());
        for (int p : leaves) tree.rows.push_back({cluster, p, lambda, 1});
      };
      auto descend = [&](int sub_id, int into_cluster) {
        if (sub_id < n) {
          tree.rows.push_back({into_cluster, sub_id, lambda, 1});
        } else {
          stack.push_back({sub_id, into_cluster});
        }
      };
      if (keep_left && keep_right) {
        for (const int side : {node.left, node.right}) {
          const int child = n + tree.n_clusters;
          ++tree.n_clusters;
          tree.birth_lambda.push_back(lambda);
          tree.cluster_parent.push_back(cluster);
          tree.rows.push_back(
              {cluster, child, lambda, detail::dendro_size(nodes, side, n)});
          descend(side, child);
        }
      } else if (keep_left) {
        drop_points(node.right);
        descend(node.left, cluster);
      } else if (keep_right) {
        drop_points(node.left);
        descend(node.right, cluster);
      } else {
        drop_points(node.left);
        drop_points(node.right);
      }
    }
  }

  tree.stability.assign(tree.n_clusters, 0.0);
  for (const auto& row : tree.rows) {
    tree.stability[row.parent - n] +=
        (row.lambda - tree.birth_lambda[row.parent - n]) * row.child_size;
  }
  return tree;
}

// Flat clustering from the condensed tree. EOM keeps a cluster over its
// descendants when its stability is >= their selected total; leaf keeps the
// tree leaves. The root is only used as a fallback when no split survived
// condensation: then the maximal-lambda core becomes cluster 0 if it has at
// least min_cluster_size points, otherwise everything is noise. Labels are
// renumbered by decreasing size, ties by lower minimum point id.
inline ClusterLabels select_clusters(const CondensedTree& tree,
                                     ClusterSelection selection,
                                     int min_cluster_size) {
  const int n = tree.n_points;
  ClusterLabels out;
  out.labels.assign(n, -1);
  if (n == 0) return out;

  std::vector<char> selected(tree.n_clusters, 0);
  if (tree.n_clusters == 1) {
    // Root-only tree.
    double lam_max = 0.0;
    for (const auto& row : tree.rows) lam_max = std::max(lam_max, row.lambda);
    std::vector<int> core;
    for (const auto& row : tree.rows) {
      if (row.child < n && row.lambda >= lam_max) core.push_back(row.child);
    }
    if (static_cast<int>(core.size()) >= min_cluster_size) {
      for (int p : core) out.labels[p] = 0;
      out.n_clusters = 1;
    }
    return out;
  }

  if (selection == ClusterSelection::eom) {
    std::vector<double> subtree(tree.n_clusters, 0.0);
    std::vector<std::vector<int>> children(tree.n_clusters);
    for (int c = 1; c < tree.n_clusters; ++c) {
      children[tree.cluster_parent[c] - n].push_back(c);
    }
    for (int c = tree.n_clusters - 1; c >= 1; --c) {
      double child_sum = 0.0;
      for (int ch : children[c]) child_sum += subtree[ch];
      if (children[c].empty() || tree.stability[c] >= child_sum) {
        selected[c] = 1;
        subtree[c] = tree.stability[c];
      } else {
        subtree[c] = child_sum;
      }
    }
    // Parents win over any selected descendants.
    for (int c = 1; c < tree.n_clusters; ++c) {
      if (!selected[c]) continue;
      int p = tree.cluster_parent[c];
      while (p != -1 && p != n) {
        if (selected[p - n]) {
          selected[c] = 0;
          break;
        }
        p = tree.cluster_parent[p - n];
      }
    }
  } else {  // leaf
    std::vector<char> has_child(tree.n_clusters, 0);
    for (int c = 1; c < tree.n_clusters; ++c) {
      has_child[tree.cluster_parent[c] - n] = 1;
    }
    for (int c = 1; c < tree.n_clusters; ++c) {
      if (!has_child[c]) selected[c] = 1;
    }
  }

  // Each point resolves to the nearest selected ancestor of its fall-out
  // cluster; reaching the root means noise.
  std::vector<std::vector<int>> members(tree.n_clusters);
  for (const auto& row : tree.rows) {
    if (row.child >= n) continue;
    int c = row.parent - n;
    while (c != 0 && !selected[c]) c = tree.cluster_parent[c] - n;
    if (selected[c]) members[c].push_back(row.child);
  }

  std::vector<int> order;
  for (int c = 0; c < tree.n_clusters; ++c) {
    if (selected[c] && !members[c].empty()) order.push_back(c);
  }
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (members[x].size() != members[y].size()) {
      return members[x].size() > members[y].size();
    }
    return *std::min_element(members[x].begin(), members[x].end()) <
           *std::min_element(members[y].begin(), members[y].end());
  });
  for (size_t label = 0; label < order.size(); ++label) {
    for (int p : members[order[label]]) {
      out.labels[p] = static_cast<int>(label);
    }
  }
  out.n_clusters = static_cast<int>(order.size());
  return out;
}

// Full pipeline: core distances, mutual reachability, MST, single-linkage
// hierarchy, condensation, selection. Deterministic; no RNG anywhere.
inline ClusterLabels cluster(const ReducedMatrix& X, const ClusterConfig& config,
                             std::vector<std::string>* warnings = nullptr,
                             CondensedTree* tree_out = nullptr) {
  const int n = X.n_rows;
  ClusterLabels out;
  if (n < config.min_cluster_size) {
    out.labels.assign(n, -1);
    if (warnings) {
      warnings->push_back("cluster: only " + std::to_string(n) +
                          " points for min_cluster_size " +
                          std::to_string(config.min_cluster_size) +
                          "; everything is noise");
    }
    return out;
  }
  int min_samples = config.min_samples.value_or(config.min_cluster_size);
  if (min_samples > n - 1) {
    min_samples = n - 1;
    if (warnings) {
      warnings->push_back("cluster: min_samples clamped to " +
                          std::to_string(min_samples));
    }
  }
  const auto core = core_distances(X, min_samples);
  auto mreach = [&](int i, int j) {
    double s = 0.0;
    for (int c = 0; c < X.n_components; ++c) {
      const double diff = X.at(i, c) - X.at(j, c);
      s += diff * diff;
    }
    return mutual_reachability(std::sqrt(s), core[i], core[j]);
  };
  const auto mst = minimum_spanning_tree(n, mreach);
  const auto dendro = build_hierarchy(mst, n);
  const auto tree = condense_tree(dendro, n, config.min_cluster_size);
  if (tree_out) *tree_out = tree;
  return select_clusters(tree, config.selection, config.min_cluster_size);
}

}  // namespace topiclib
