#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "streamtune/errors.hpp"
#include "streamtune/labeling.hpp"

namespace streamtune {

enum class KernelKind { linear, quadratic, gaussian };

inline std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::linear: return "linear";
    case KernelKind::quadratic: return "quadratic";
    case KernelKind::gaussian: return "gaussian";
  }
  return "quadratic";
}

inline KernelKind kernel_from_string(const std::string& s) {
  if (s == "linear") return KernelKind::linear;
  if (s == "quadratic") return KernelKind::quadratic;
  if (s == "gaussian") return KernelKind::gaussian;
  throw ParseError("unknown kernel kind: " + s);
}

struct Hyperparams {
  KernelKind kernel = KernelKind::quadratic;
  double C = 10.0;
  double gamma = 1.0;
  double coef0 = 1.0;
  int knn_k = 3;
  int tree_max_depth = 8;
  int tree_min_leaf = 1;

  void validate() const {
    if (!(C > 0.0)) throw InvalidArgumentError("penalty C must be positive");
    if (!(gamma > 0.0))
      throw InvalidArgumentError("kernel gamma must be positive");
    if (coef0 < 0.0)
      throw InvalidArgumentError("kernel coef0 must be nonnegative");
    if (knn_k < 1 || knn_k > 10)
      throw InvalidArgumentError("knn_k must lie in 1..10");
    if (tree_max_depth < 1)
      throw InvalidArgumentError("tree_max_depth must be at least 1");
    if (tree_min_leaf < 1)
      throw InvalidArgumentError("tree_min_leaf must be at least 1");
  }
};

struct DataRow {
  std::vector<double> x;
  int label = 0;
  SampleMeta meta;
};

struct Dataset {
  std::vector<DataRow> rows;

  std::size_t dim() const { return rows.empty() ? 0 : rows.front().x.size(); }

  std::vector<int> distinct_labels() const {
    std::set<int> s;
    for (const auto& r : rows) s.insert(r.label);
    return {s.begin(), s.end()};
  }

  void validate() const {
    for (const auto& r : rows)
      if (r.x.size() != dim())
        throw InputError("feature rows disagree on dimension");
  }
};

}  // namespace streamtune
