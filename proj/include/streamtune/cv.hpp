#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "streamtune/dataset.hpp"
#include "streamtune/errors.hpp"
#include "streamtune/model.hpp"
#include "streamtune/rng.hpp"

namespace streamtune {

/// Deals row indices into `folds` buckets, label by label, so every fold
/// keeps close to the overall class balance. A global cursor carries over
/// between label groups to even out fold sizes.
inline std::vector<std::vector<std::size_t>> make_stratified_folds(
    const Dataset& d, int folds, std::uint64_t seed) {
  if (folds < 2) throw InvalidArgumentError("cross-validation needs >= 2 folds");
  if (d.rows.empty())
    throw InsufficientDataError("cross-validation needs a non-empty dataset");

  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < d.rows.size(); ++i)
    by_label[d.rows[i].label].push_back(i);

  Rng rng(derive_seed(seed, "cv-folds"));
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  std::size_t cursor = 0;
  for (auto& [label, idx] : by_label) {
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1],
                idx[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<int>(i) - 1))]);
    for (auto row : idx) out[cursor++ % out.size()].push_back(row);
  }
  return out;
}

/// Mean fold accuracy for one hyperparameter candidate. Folds whose training
/// half cannot produce a model (degenerate labels, no convergence) score 0,
/// keeping the search total and deterministic.
inline double cv_score(const Dataset& d,
                       const std::vector<std::vector<std::size_t>>& folds,
                       LearnerKind kind, const Hyperparams& h) {
  double total = 0.0;
  int counted = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (folds[f].empty()) continue;
    Dataset train, test;
    std::vector<bool> held(d.rows.size(), false);
    for (auto i : folds[f]) held[i] = true;
    for (std::size_t i = 0; i < d.rows.size(); ++i)
      (held[i] ? test : train).rows.push_back(d.rows[i]);
    ++counted;
    try {
      const auto model = train_model(train, kind, h);
      total += accuracy(model, test);
    } catch (const Error&) {
      // scored as zero
    }
  }
  return counted > 0 ? total / counted : 0.0;
}

inline Hyperparams grid_search_cv(const Dataset& d, LearnerKind kind,
                                  const std::vector<Hyperparams>& grid,
                                  int folds = 5, std::uint64_t seed = 0) {
  if (grid.empty())
    throw InvalidArgumentError("hyperparameter grid must not be empty");
  const auto split = make_stratified_folds(d, folds, seed);

  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double score = cv_score(d, split, kind, grid[g]);
    if (score > best_score) {  // strict: ties keep the earlier grid entry
      best_score = score;
      best = g;
    }
  }
  return grid[best];
}

}  // namespace streamtune
