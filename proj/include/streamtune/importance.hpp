#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "streamtune/errors.hpp"

namespace streamtune {

struct ImportanceResult {
  // (feature index, importance) sorted by importance descending, ties by
  // feature index ascending.
  std::vector<std::pair<int, double>> ranking;
  std::vector<double> criterion_trace;  // varimax criterion after each sweep
  std::vector<double> rotation;         // k*k net rotation, row-major
  int components = 0;                   // principal components retained
  double explained_variance = 0.0;      // fraction covered by them
  bool rank_deficient = false;          // true => unrotated PCA ranking
};

namespace detail {

/// Varimax criterion: per-column variance of squared loadings, summed.
inline double varimax_criterion(const Eigen::MatrixXd& L) {
  const double p = static_cast<double>(L.rows());
  double total = 0.0;
  for (Eigen::Index c = 0; c < L.cols(); ++c) {
    const auto col2 = L.col(c).array().square();
    const double mean2 = col2.mean();
    total += col2.square().mean() - mean2 * mean2;
  }
  return total * p;  // scale-free ranking either way; p mirrors the textbook form
}

}  // namespace detail

/// PCA (components to >= `variance_cutoff` of total variance) followed by a
/// Kaiser-normalized Varimax rotation; importance of a feature is its sum of
/// squared rotated loadings.  Input rows are scaled training vectors.
inline ImportanceResult feature_importance(
    const std::vector<std::vector<double>>& rows,
    double variance_cutoff = 0.95, double tol = 1e-6, int max_sweeps = 100) {
  if (rows.size() < 3)
    throw InsufficientDataError("feature_importance needs >= 3 samples");
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = static_cast<Eigen::Index>(rows.front().size());
  if (d < 2)
    throw InsufficientDataError("feature_importance needs >= 2 features");
  for (const auto& r : rows)
    if (static_cast<Eigen::Index>(r.size()) != d)
      throw InputError("ragged feature rows");

  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  X.rowwise() -= X.colwise().mean();
  const Eigen::MatrixXd cov = X.transpose() * X / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success)
    throw ConvergenceError("eigendecomposition failed");
  // Ascending order from Eigen; walk from the top.
  const Eigen::VectorXd evals = eig.eigenvalues();
  const Eigen::MatrixXd evecs = eig.eigenvectors();

  double total_var = 0.0;
  int positive = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (evals(i) > 1e-12) {
      total_var += evals(i);
      ++positive;
    }
  }
  if (total_var <= 0.0)
    throw InsufficientDataError("all features constant after scaling");

  int k = 0;
  double covered = 0.0;
  while (k < positive && covered < variance_cutoff * total_var) {
    covered += evals(d - 1 - k);
    ++k;
  }
  if (k < 1) k = 1;

  // Loadings: eigvec * sqrt(eigval), strongest component first.
  Eigen::MatrixXd L(d, k);
  for (int c = 0; c < k; ++c)
    L.col(c) = evecs.col(d - 1 - c) * std::sqrt(std::max(0.0, evals(d - 1 - c)));

  ImportanceResult res;
  res.components = k;
  res.explained_variance = covered / total_var;

  if (positive < 2 || k < 2) {
    res.rank_deficient = true;
  } else {
    // Kaiser normalization: rotate rows scaled to unit communality.
    Eigen::VectorXd comm = L.rowwise().norm();
    Eigen::VectorXd scale = comm;
    for (Eigen::Index i = 0; i < d; ++i)
      if (scale(i) <= 1e-300) scale(i) = 1.0;
    Eigen::MatrixXd R = scale.cwiseInverse().asDiagonal() * L;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(k, k);

    const double p = static_cast<double>(d);
    double prev = detail::varimax_criterion(R);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      for (int a = 0; a < k - 1; ++a) {
        for (int b = a + 1; b < k; ++b) {
          const Eigen::ArrayXd x = R.col(a).array();
          const Eigen::ArrayXd y = R.col(b).array();
          const Eigen::ArrayXd u = x * x - y * y;
          const Eigen::ArrayXd v = 2.0 * x * y;
          const double A = u.sum();
          const double B = v.sum();
          const double C = (u * u - v * v).sum();
          const double D = 2.0 * (u * v).sum();
          const double num = D - 2.0 * A * B / p;
          const double den = C - (A * A - B * B) / p;
          const double phi = 0.25 * std::atan2(num, den);
          if (std::abs(phi) < 1e-14) continue;
          const double c = std::cos(phi), s = std::sin(phi);
          const Eigen::VectorXd ca = R.col(a) * c + R.col(b) * s;
          const Eigen::VectorXd cb = -R.col(a) * s + R.col(b) * c;
          R.col(a) = ca;
          R.col(b) = cb;
          const Eigen::VectorXd qa = Q.col(a) * c + Q.col(b) * s;
          const Eigen::VectorXd qb = -Q.col(a) * s + Q.col(b) * c;
          Q.col(a) = qa;
          Q.col(b) = qb;
        }
      }
      const double cur = detail::varimax_criterion(R);
      res.criterion_trace.push_back(cur);
      if (cur - prev < tol * std::max(1.0, std::abs(prev))) break;
      prev = cur;
    }
    L = scale.asDiagonal() * R;  // undo Kaiser normalization
    res.rotation.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0.0);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        res.rotation[static_cast<std::size_t>(a) * static_cast<std::size_t>(k) +
                     static_cast<std::size_t>(b)] = Q(a, b);
  }

  std::vector<std::pair<int, double>> ranking;
  ranking.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i)
    ranking.push_back({static_cast<int>(i), L.row(i).squaredNorm()});
  std::sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  res.ranking = std::move(ranking);
  return res;
}

}  // namespace streamtune
