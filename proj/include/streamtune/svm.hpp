#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "streamtune/dataset.hpp"
#include "streamtune/errors.hpp"

namespace streamtune {

inline double kernel_eval(const Hyperparams& h, const std::vector<double>& a,
                          const std::vector<double>& b) {
  switch (h.kernel) {
    case KernelKind::linear: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
      return s;
    }
    case KernelKind::quadratic: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
      const double v = h.gamma * s + h.coef0;
      return v * v;
    }
    case KernelKind::gaussian: {
      double d2 = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
      }
      return std::exp(-h.gamma * d2);
    }
  }
  return 0.0;
}

struct SmoResult {
  std::vector<double> alpha;
  double bias = 0.0;
  long iterations = 0;
};

// Solves the C-SVC dual  min 1/2 a'Qa - e'a  s.t.  y'a = 0, 0 <= a <= C
// by sequential minimal optimization with maximal-violating-pair selection
// (ties to the smaller index). Stops once the KKT gap drops to 1e-3.
inline SmoResult solve_smo(const std::vector<std::vector<double>>& x,
                           const std::vector<int>& y, const Hyperparams& h) {
  constexpr double kTol = 1e-3;
  constexpr double kTau = 1e-12;
  const std::size_t n = x.size();
  if (n == 0 || y.size() != n)
    throw InputError("smo requires matching points and signs");

  std::vector<double> kmat(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      kmat[i * n + j] = kmat[j * n + i] = kernel_eval(h, x[i], x[j]);

  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);
  // Quadratic in n for big problems, but floored: tiny inseparable problems
  // with a large C legitimately need more passes than 10*n^2.
  const long max_iter = std::max(
      200000L, 10L * static_cast<long>(n) * static_cast<long>(n));

  double lo = 0.0, hi = 0.0;  // final KKT bracket for the bias
  bool converged = false;
  long it = 0;
  for (; it < max_iter; ++it) {
    // i maximizes -y*g over I_up, j minimizes it over I_low.
    double m = -std::numeric_limits<double>::infinity();
    double M = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = -y[k] * grad[k];
      const bool up = y[k] > 0 ? alpha[k] < h.C : alpha[k] > 0.0;
      const bool low = y[k] > 0 ? alpha[k] > 0.0 : alpha[k] < h.C;
      if (up && v > m) {
        m = v;
        i = k;
      }
      if (low && v < M) {
        M = v;
        j = k;
      }
    }
    lo = m;
    hi = M;
    if (i == n || j == n || m - M <= kTol) {
      converged = true;
      break;
    }

    double eta = kmat[i * n + i] + kmat[j * n + j] - 2.0 * kmat[i * n + j];
    if (eta < kTau) eta = kTau;
    const double box_i = y[i] > 0 ? h.C - alpha[i] : alpha[i];
    const double box_j = y[j] > 0 ? alpha[j] : h.C - alpha[j];
    const double delta = std::min({(m - M) / eta, box_i, box_j});

    // Land exactly on the box when the step is bound-limited, so the
    // working-set membership tests above stay crisp.
    if (delta == box_i)
      alpha[i] = y[i] > 0 ? h.C : 0.0;
    else
      alpha[i] += y[i] * delta;
    if (delta == box_j)
      alpha[j] = y[j] > 0 ? 0.0 : h.C;
    else
      alpha[j] -= y[j] * delta;

    for (std::size_t k = 0; k < n; ++k)
      grad[k] += y[k] * delta * (kmat[k * n + i] - kmat[k * n + j]);
  }
  if (!converged)
    throw ConvergenceError("smo did not converge within " +
                           std::to_string(max_iter) + " iterations");

  // Bias: average the exact stationarity value over free vectors when any
  // exist, otherwise take the midpoint of the KKT bracket.
  double sum_free = 0.0;
  int n_free = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (alpha[k] > 0.0 && alpha[k] < h.C) {
      sum_free += -y[k] * grad[k];
      ++n_free;
    }
  double bias;
  if (n_free > 0)
    bias = sum_free / n_free;
  else if (std::isfinite(lo) && std::isfinite(hi))
    bias = 0.5 * (lo + hi);
  else
    bias = std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0);

  return {std::move(alpha), bias, it};
}

struct BinarySvm {
  int label_pos = 0;  // class mapped to y = +1 (the smaller label id)
  int label_neg = 0;
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> coef;  // alpha_i * y_i per support vector
  double bias = 0.0;

  double decision(const Hyperparams& h, const std::vector<double>& p) const {
    double f = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i)
      f += coef[i] * kernel_eval(h, support_vectors[i], p);
    return f;
  }
};

struct SvmModel {
  Hyperparams params;
  std::size_t dim = 0;
  std::vector<int> labels;          // sorted distinct label ids
  std::vector<BinarySvm> machines;  // one per pair (a, b), a < b, in order

  int predict(const std::vector<double>& p) const {
    if (p.size() != dim)
      throw InputError("probe has dimension " + std::to_string(p.size()) +
                       ", model expects " + std::to_string(dim));
    std::map<int, int> votes;
    for (const auto& m : machines)
      ++votes[m.decision(params, p) >= 0.0 ? m.label_pos : m.label_neg];
    int best = labels.empty() ? 0 : labels.front();
    int best_votes = -1;
    for (int l : labels) {  // ascending, so ties keep the smaller id
      const auto it = votes.find(l);
      const int v = it == votes.end() ? 0 : it->second;
      if (v > best_votes) {
        best_votes = v;
        best = l;
      }
    }
    return best;
  }
};

inline SvmModel train_svm(const Dataset& d, const Hyperparams& h) {
  h.validate();
  d.validate();
  const auto labels = d.distinct_labels();
  if (labels.size() < 2)
    throw DegenerateDatasetError(
        "svm training requires at least two distinct labels");

  SvmModel model;
  model.params = h;
  model.dim = d.dim();
  model.labels = labels;
  for (std::size_t a = 0; a < labels.size(); ++a)
    for (std::size_t b = a + 1; b < labels.size(); ++b) {
      std::vector<std::vector<double>> x;
      std::vector<int> y;
      for (const auto& row : d.rows) {
        if (row.label == labels[a]) {
          x.push_back(row.x);
          y.push_back(+1);
        } else if (row.label == labels[b]) {
          x.push_back(row.x);
          y.push_back(-1);
        }
      }
      const auto res = solve_smo(x, y, h);
      BinarySvm m;
      m.label_pos = labels[a];
      m.label_neg = labels[b];
      m.bias = res.bias;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (res.alpha[i] > 0.0) {
          m.support_vectors.push_back(x[i]);
          m.coef.push_back(res.alpha[i] * y[i]);
        }
      model.machines.push_back(std::move(m));
    }
  return model;
}

}  // namespace streamtune
