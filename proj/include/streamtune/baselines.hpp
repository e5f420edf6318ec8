#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "streamtune/errors.hpp"
#include "streamtune/types.hpp"

namespace streamtune {

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
};

inline OlsFit fit_line(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 2)
    throw SingularFitError("line fit needs at least two samples");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx <= 0.0)
    throw SingularFitError("line fit needs at least two distinct abscissae");

  OlsFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& [x, y] : pts) {
    const double e = y - (fit.slope * x + fit.intercept);
    ss_res += e * e;
    ss_tot += (y - my) * (y - my);
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res <= 0.0 ? 1.0 : 0.0);
  return fit;
}

/// Linear cost model: transfer T_t(m) = alpha*m + beta and compute
/// T_c(m) = eta*m + gamma, both in seconds for a task of m elements.
struct LiuCoefficients {
  double alpha = 1.0;
  double beta = 0.0;
  double eta = 1.0;
  double gamma = 1.0;
  double r2_transfer = 1.0;
  double r2_compute = 1.0;
};

inline LiuCoefficients fit_liu(
    const std::vector<std::pair<double, double>>& transfer_samples,
    const std::vector<std::pair<double, double>>& compute_samples) {
  const auto t = fit_line(transfer_samples);
  const auto c = fit_line(compute_samples);
  LiuCoefficients out;
  out.alpha = t.slope;
  out.beta = t.intercept;
  out.eta = c.slope;
  out.gamma = c.intercept;
  out.r2_transfer = t.r2;
  out.r2_compute = c.r2;
  return out;
}

inline void to_json(json& j, const LiuCoefficients& c) {
  j = {{"alpha", c.alpha},         {"beta", c.beta},
       {"eta", c.eta},             {"gamma", c.gamma},
       {"r2_transfer", c.r2_transfer}, {"r2_compute", c.r2_compute}};
}

inline void from_json(const json& j, LiuCoefficients& c) {
  try {
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
    c.eta = j.at("eta").get<double>();
    c.gamma = j.at("gamma").get<double>();
    c.r2_transfer = j.value("r2_transfer", 1.0);
    c.r2_compute = j.value("r2_compute", 1.0);
  } catch (const json::exception& e) {
    throw ParseError(std::string("liu coefficients: ") + e.what());
  }
}

struct LiuPlan {
  double m_star = 1.0;  // continuous optimal granularity, clamped to [1, N]
  long n = 1;           // resulting task count
  StreamConfig config;
};

/// Closed-form optimum of T(m) = alpha*m + N*gamma/m + N*eta + beta:
/// m* = sqrt(N*gamma/alpha). The task count n = N/m* doubles as the
/// partition count, snapped onto the tuning grid.
inline LiuPlan liu_optimal_tasks(const LiuCoefficients& c,
                                 std::int64_t elements, const Grid& grid) {
  if (!(c.alpha > 0.0) || !(c.gamma > 0.0))
    throw InvalidCoefficientsError(
        "granularity optimum needs alpha > 0 and gamma > 0");
  if (elements < 1)
    throw InvalidArgumentError("element count must be at least 1");
  grid.validate();

  const double n_elems = static_cast<double>(elements);
  LiuPlan plan;
  plan.m_star =
      std::clamp(std::sqrt(n_elems * c.gamma / c.alpha), 1.0, n_elems);
  const long hi = std::max(grid.partitions.back(), grid.tasks.back());
  plan.n = std::clamp(static_cast<long>(std::llround(n_elems / plan.m_star)),
                      1L, hi);
  const int n_int = static_cast<int>(plan.n);
  plan.config = grid.snap({n_int, n_int});
  return plan;
}

/// LogGP-style communication parameters. L, o and P ride along for
/// completeness; the stream-count equation below does not involve them.
struct LogGPParams {
  double L = 0.0;
  double o = 0.0;
  double g = 0.0;  // gap per message, seconds
  int P = 1;
  double G_hd = 1.0;  // seconds per byte, host to device
  double G_dh = 1.0;  // seconds per byte, device to host
  double B_hd = 0.0;  // bytes host to device
  double B_dh = 0.0;  // bytes device to host
  double T_kernel = 0.0;
};

inline void to_json(json& j, const LogGPParams& p) {
  j = {{"L", p.L},         {"o", p.o},         {"g", p.g},
       {"P", p.P},         {"G_hd", p.G_hd},   {"G_dh", p.G_dh},
       {"B_hd", p.B_hd},   {"B_dh", p.B_dh},   {"T_kernel", p.T_kernel}};
}

inline void from_json(const json& j, LogGPParams& p) {
  try {
    p.g = j.at("g").get<double>();
    p.G_hd = j.at("G_hd").get<double>();
    p.G_dh = j.at("G_dh").get<double>();
    p.B_hd = j.at("B_hd").get<double>();
    p.B_dh = j.at("B_dh").get<double>();
    p.T_kernel = j.at("T_kernel").get<double>();
    p.L = j.value("L", 0.0);
    p.o = j.value("o", 0.0);
    p.P = j.value("P", 1);
  } catch (const json::exception& e) {
    throw ParseError(std::string("loggp parameters: ") + e.what());
  }
}

struct WerkhovenPlan {
  double ns_continuous = 1.0;
  long ns = 1;
  StreamConfig config;
  bool first_case = true;  // B_dh > B_hd branch
  double rhs = 0.0;        // case-selected right-hand side
};

/// Solves g*x^2 + (B_dh*G_dh - g)*x - RHS = 0 for the positive root, where
/// RHS = T_kernel + B_dh*G_dh when B_dh > B_hd and B_hd*G_hd + T_kernel
/// otherwise; both partitions and tasks are set to the rounded root.
inline WerkhovenPlan werkhoven_optimal_streams(const LogGPParams& p,
                                               const Grid& grid) {
  if (p.g < 0.0) throw InvalidArgumentError("gap g must be nonnegative");
  if (!(p.G_hd > 0.0) || !(p.G_dh > 0.0))
    throw InvalidArgumentError("per-byte costs G must be positive");
  if (p.B_hd < 0.0 || p.B_dh < 0.0 || p.T_kernel < 0.0)
    throw InvalidArgumentError("buffer sizes and kernel time must be >= 0");
  if (p.T_kernel == 0.0 && p.B_hd == 0.0 && p.B_dh == 0.0)
    throw InvalidArgumentError(
        "at least one of T_kernel, B_hd, B_dh must be nonzero");
  grid.validate();

  WerkhovenPlan plan;
  plan.first_case = p.B_dh > p.B_hd;
  const double bg = p.B_dh * p.G_dh;
  plan.rhs = plan.first_case ? p.T_kernel + bg : p.B_hd * p.G_hd + p.T_kernel;

  if (p.g == 0.0) {
    if (bg == 0.0)
      throw NoSolutionError(
          "equation degenerates: no gap and no device-to-host volume");
    plan.ns_continuous = plan.rhs / bg;
  } else {
    // Stable positive root of g*x^2 + b*x - rhs with b = bg - g.
    const double b = bg - p.g;
    const double disc = std::sqrt(b * b + 4.0 * p.g * plan.rhs);
    plan.ns_continuous =
        b > 0.0 ? 2.0 * plan.rhs / (b + disc) : (disc - b) / (2.0 * p.g);
  }

  plan.ns =
      std::max(1L, static_cast<long>(std::llround(plan.ns_continuous)));
  const long hi = std::max(grid.partitions.back(), grid.tasks.back());
  plan.ns = std::min(plan.ns, hi);
  const int ns_int = static_cast<int>(plan.ns);
  plan.config = grid.snap({ns_int, ns_int});
  return plan;
}

}  // namespace streamtune
