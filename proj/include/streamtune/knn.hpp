#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "streamtune/dataset.hpp"
#include "streamtune/errors.hpp"

namespace streamtune {

struct KnnModel {
  std::vector<std::vector<double>> points;
  std::vector<int> labels;
  int k = 1;
  bool weighted = false;
  std::size_t dim = 0;
};

inline KnnModel train_knn(const Dataset& d, int k, bool weighted) {
  if (k < 1) throw InvalidArgumentError("knn requires k >= 1");
  d.validate();
  if (d.rows.empty() || static_cast<std::size_t>(k) > d.rows.size())
    throw InvalidArgumentError("knn requires k <= number of training rows");
  KnnModel m;
  m.k = k;
  m.weighted = weighted;
  m.dim = d.dim();
  for (const auto& row : d.rows) {
    m.points.push_back(row.x);
    m.labels.push_back(row.label);
  }
  return m;
}

inline int predict_knn(const KnnModel& m, const std::vector<double>& p) {
  if (p.size() != m.dim)
    throw InputError("probe has dimension " + std::to_string(p.size()) +
                     ", model expects " + std::to_string(m.dim));
  std::vector<std::pair<double, std::size_t>> order(m.points.size());
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double d = m.points[i][j] - p[j];
      d2 += d * d;
    }
    order[i] = {std::sqrt(d2), i};
  }
  std::sort(order.begin(), order.end());

  std::map<int, double> votes;
  for (int i = 0; i < m.k; ++i) {
    const auto& [dist, idx] = order[static_cast<std::size_t>(i)];
    votes[m.labels[idx]] += m.weighted ? 1.0 / (dist + 1e-12) : 1.0;
  }
  int best = votes.begin()->first;
  double best_w = votes.begin()->second;
  for (const auto& [label, w] : votes)  // ascending keys: ties keep smaller id
    if (w > best_w) {
      best_w = w;
      best = label;
    }
  return best;
}

}  // namespace streamtune
