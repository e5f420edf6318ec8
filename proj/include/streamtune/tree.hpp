#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "streamtune/dataset.hpp"
#include "streamtune/errors.hpp"

namespace streamtune {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = -1;  // majority label at this node
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // node 0 is the root
  std::size_t dim = 0;
};

namespace detail {

inline double gini_impurity(const std::map<int, int>& counts, int total) {
  if (total <= 0) return 0.0;
  double g = 1.0;
  for (const auto& [label, c] : counts) {
    const double f = static_cast<double>(c) / total;
    g -= f * f;
  }
  return g;
}

inline int majority_label(const std::map<int, int>& counts) {
  int best = counts.begin()->first;
  int best_c = counts.begin()->second;
  for (const auto& [label, c] : counts)  // ascending: ties keep smaller id
    if (c > best_c) {
      best_c = c;
      best = label;
    }
  return best;
}

struct TreeBuilder {
  const Dataset& d;
  int max_depth;
  int min_leaf;
  std::vector<TreeNode> nodes;

  int build(std::vector<std::size_t> idx, int depth) {
    std::map<int, int> counts;
    for (auto i : idx) ++counts[d.rows[i].label];
    const int n = static_cast<int>(idx.size());
    const double node_gini = gini_impurity(counts, n);

    const int me = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[me].label = majority_label(counts);

    if (depth >= max_depth || node_gini == 0.0 || n < 2 * min_leaf)
      return me;

    // Best axis-aligned split: lowest weighted child Gini, scanning features
    // in order and thresholds ascending so ties keep the first candidate.
    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = node_gini;
    for (std::size_t f = 0; f < d.dim(); ++f) {
      std::vector<double> vals;
      vals.reserve(idx.size());
      for (auto i : idx) vals.push_back(d.rows[i].x[f]);
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      for (std::size_t v = 0; v + 1 < vals.size(); ++v) {
        const double thr = 0.5 * (vals[v] + vals[v + 1]);
        std::map<int, int> lc, rc;
        int ln = 0, rn = 0;
        for (auto i : idx) {
          if (d.rows[i].x[f] <= thr) {
            ++lc[d.rows[i].label];
            ++ln;
          } else {
            ++rc[d.rows[i].label];
            ++rn;
          }
        }
        if (ln < min_leaf || rn < min_leaf) continue;
        const double score =
            (ln * gini_impurity(lc, ln) + rn * gini_impurity(rc, rn)) / n;
        if (score < best_score - 1e-15) {
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = thr;
        }
      }
    }
    if (best_feature < 0) return me;  // nothing improves impurity

    std::vector<std::size_t> li, ri;
    for (auto i : idx)
      (d.rows[i].x[best_feature] <= best_threshold ? li : ri).push_back(i);
    nodes[me].feature = best_feature;
    nodes[me].threshold = best_threshold;
    const int l = build(std::move(li), depth + 1);
    const int r = build(std::move(ri), depth + 1);
    nodes[me].left = l;
    nodes[me].right = r;
    return me;
  }
};

}  // namespace detail

inline TreeModel train_tree(const Dataset& d, int max_depth, int min_leaf) {
  if (max_depth < 1) throw InvalidArgumentError("tree max_depth must be >= 1");
  if (min_leaf < 1) throw InvalidArgumentError("tree min_leaf must be >= 1");
  if (d.rows.empty())
    throw DegenerateDatasetError("tree training requires at least one row");
  d.validate();

  detail::TreeBuilder builder{d, max_depth, min_leaf, {}};
  std::vector<std::size_t> all(d.rows.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  builder.build(std::move(all), 0);

  TreeModel m;
  m.nodes = std::move(builder.nodes);
  m.dim = d.dim();
  return m;
}

inline int predict_tree(const TreeModel& m, const std::vector<double>& p) {
  if (p.size() != m.dim)
    throw InputError("probe has dimension " + std::to_string(p.size()) +
                     ", model expects " + std::to_string(m.dim));
  std::size_t at = 0;
  while (m.nodes[at].feature >= 0)
    at = static_cast<std::size_t>(p[static_cast<std::size_t>(
                                      m.nodes[at].feature)] <=
                                          m.nodes[at].threshold
                                      ? m.nodes[at].left
                                      : m.nodes[at].right);
  return m.nodes[at].label;
}

}  // namespace streamtune
