#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "streamtune/io.hpp"
#include "streamtune/rng.hpp"
#include "streamtune/types.hpp"

namespace streamtune {

/// Cores available to each partition.  Partitioning wastes the remainder.
inline int cores_per_partition(const WorkloadSpec& w, const StreamConfig& c) {
  return std::max(1, w.total_cores / c.partitions);
}

namespace detail {

inline void check_runnable(const WorkloadSpec& w, const StreamConfig& c) {
  if (c.partitions < 1 || c.tasks < 1)
    throw InvalidConfigError("config must have >=1 partition and >=1 task: " +
                             to_string(c));
  if (c.partitions > w.total_cores)
    throw InvalidConfigError("more partitions than cores: " + to_string(c));
  if (c.tasks > w.elements)
    throw InvalidConfigError("more tasks than elements: " + to_string(c));
}

/// Task chunk sizes: elements/tasks each, last chunk absorbs the remainder.
inline std::vector<std::int64_t> chunk_sizes(std::int64_t elements,
                                             int tasks) {
  const std::int64_t base = elements / tasks;
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(tasks), base);
  sizes.back() = elements - base * (tasks - 1);
  return sizes;
}

}  // namespace detail

/// Host->device transfer time for one chunk of `m` elements.
inline double transfer_in_seconds(const WorkloadSpec& w, std::int64_t m) {
  return w.transfer_alpha * (static_cast<double>(m) * w.bytes_per_element_in) +
         w.transfer_beta;
}

/// Device->host transfer time for one chunk of `m` elements.
inline double transfer_out_seconds(const WorkloadSpec& w, std::int64_t m) {
  return w.transfer_alpha *
             (static_cast<double>(m) * w.bytes_per_element_out) +
         w.transfer_beta;
}

/// Compute time for one chunk of `m` elements under configuration `c`.
/// Thread spawn cost is paid per outer iteration and shared across tasks.
inline double compute_seconds(const WorkloadSpec& w, const StreamConfig& c,
                              std::int64_t m) {
  const int cores = cores_per_partition(w, c);
  return w.compute_eta * static_cast<double>(m) / cores + w.compute_gamma +
         w.thread_overhead * cores * static_cast<double>(w.outer_iterations) /
             c.tasks;
}

/// One noisy end-to-end run of workload `w` under configuration `c`.
///
/// Pipeline model: every task is transfer-in -> compute -> transfer-out.
/// Both transfer directions share one serial channel, granted FIFO by ready
/// time (ties: smaller task index, transfer-in ahead of transfer-out).
/// Task i computes on partition i % partitions; a partition runs one task at
/// a time, in ready order.  Returns seconds.
inline double simulate_run(const WorkloadSpec& w, const StreamConfig& c,
                           std::uint64_t seed) {
  w.validate();
  detail::check_runnable(w, c);

  const int T = c.tasks;
  const int P = c.partitions;
  const auto sizes = detail::chunk_sizes(w.elements, T);

  std::vector<double> d_in(T), d_cmp(T), d_out(T);
  for (int i = 0; i < T; ++i) {
    d_in[i] = transfer_in_seconds(w, sizes[i]);
    d_cmp[i] = compute_seconds(w, c, sizes[i]);
    d_out[i] = transfer_out_seconds(w, sizes[i]);
  }

  // Pending work, ordered exactly by the grant rule.
  // Channel: (ready, task, direction) with direction 0 = in, 1 = out.
  std::set<std::tuple<double, int, int>> xfer_ready;
  std::vector<std::set<std::pair<double, int>>> cmp_ready(P);
  bool channel_busy = false;
  std::vector<char> part_busy(P, 0);

  // Completion events: (time, type 0=transfer / 1=compute, payload).
  using Ev = std::tuple<double, int, int>;
  std::priority_queue<Ev, std::vector<Ev>, std::greater<>> events;

  for (int i = 0; i < T; ++i) xfer_ready.insert({0.0, i, 0});

  auto start_idle = [&](double now) {
    if (!channel_busy && !xfer_ready.empty()) {
      auto [ready, task, dir] = *xfer_ready.begin();
      xfer_ready.erase(xfer_ready.begin());
      channel_busy = true;
      events.push({now + (dir == 0 ? d_in[task] : d_out[task]), 0,
                   task * 2 + dir});
    }
    for (int p = 0; p < P; ++p) {
      if (!part_busy[p] && !cmp_ready[p].empty()) {
        auto [ready, task] = *cmp_ready[p].begin();
        cmp_ready[p].erase(cmp_ready[p].begin());
        part_busy[p] = 1;
        events.push({now + d_cmp[task], 1, task});
      }
    }
  };

  double makespan = 0.0;
  start_idle(0.0);
  while (!events.empty()) {
    const double now = std::get<0>(events.top());
    // Apply every completion at this instant before granting new work, so
    // simultaneous completions cannot reorder the FIFO queue.
    while (!events.empty() && std::get<0>(events.top()) == now) {
      auto [t, type, payload] = events.top();
      events.pop();
      if (type == 0) {
        const int task = payload / 2;
        const int dir = payload % 2;
        channel_busy = false;
        if (dir == 0)
          cmp_ready[task % P].insert({now, task});
        else
          makespan = std::max(makespan, now);
      } else {
        const int task = payload;
        part_busy[task % P] = 0;
        xfer_ready.insert({now, task, 1});
      }
    }
    start_idle(now);
  }

  makespan += w.partition_overhead * P;
  if (w.noise_sigma > 0.0) {
    Rng rng(seed);
    makespan *= 1.0 + rng.truncated_gaussian(w.noise_sigma);
  }
  return makespan;
}

/// Aggregated measurement for one configuration.
struct PerfRecord {
  StreamConfig config;
  double runtime_s = 0.0;  // mean over runs
  int runs = 0;
  bool unconverged = false;
};

struct ProfileOptions {
  int min_runs = 3;
  int max_runs = 100;
  double rel_half_width = 0.05;  // stop when 95% CI width < this * mean
};

/// Repeat simulate_run until the two-sided 95% Student-t confidence interval
/// is narrower than 5% of the running mean (or the run budget is exhausted,
/// which sets `unconverged`).
inline PerfRecord profile_config(const WorkloadSpec& w, const StreamConfig& c,
                                 std::uint64_t seed,
                                 const ProfileOptions& opt = {}) {
  if (opt.min_runs < 2 || opt.max_runs < opt.min_runs)
    throw InvalidArgumentError("profile_config: bad run bounds");
  double mean = 0.0, m2 = 0.0;
  int n = 0;
  while (n < opt.max_runs) {
    const double x = simulate_run(w, c, derive_seed(seed, n));
    ++n;
    const double delta = x - mean;
    mean += delta / n;
    m2 += delta * (x - mean);
    if (n >= opt.min_runs) {
      const double var = m2 / (n - 1);
      const double sd = var > 0.0 ? std::sqrt(var) : 0.0;
      const double width = 2.0 * student_t_975(n - 1) * sd / std::sqrt(n);
      if (sd == 0.0 || width < opt.rel_half_width * mean)
        return {c, mean, n, false};
    }
  }
  return {c, mean, n, true};
}

/// Full profile of one workload over a set of configurations.
struct PerfSurface {
  WorkloadSpec workload;
  double baseline_runtime = 0.0;  // mean runtime at (1,1)
  std::map<StreamConfig, PerfRecord> records;

  const PerfRecord& at(const StreamConfig& c) const {
    auto it = records.find(c);
    if (it == records.end())
      throw LookupError("no record for config " + to_string(c));
    return it->second;
  }

  double speedup_of(const StreamConfig& c) const {
    return baseline_runtime / at(c).runtime_s;
  }
};

namespace detail {

/// Index-deterministic parallel map; results land by index, so the output is
/// identical to the serial order regardless of thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const std::size_t workers = std::min<std::size_t>(hw, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Profile every point of `points` (must include (1,1) for the baseline).
/// Per-config seeds derive from (seed, index in `points`), so results do not
/// depend on thread scheduling.
inline PerfSurface exhaustive_profile(const WorkloadSpec& w,
                                      const std::vector<StreamConfig>& points,
                                      std::uint64_t seed,
                                      const ProfileOptions& opt = {}) {
  if (points.empty()) throw InvalidGridError("no grid points to profile");
  {
    std::set<StreamConfig> seen;
    for (const auto& c : points)
      if (!seen.insert(c).second)
        throw InvalidGridError("duplicate grid point " + to_string(c));
  }
  if (std::find(points.begin(), points.end(), StreamConfig{1, 1}) ==
      points.end())
    throw InvalidGridError("grid must include (1,1) as the baseline");

  std::vector<PerfRecord> recs(points.size());
  detail::parallel_for(points.size(), [&](std::size_t i) {
    recs[i] = profile_config(w, points[i], derive_seed(seed, i), opt);
  });

  PerfSurface s;
  s.workload = w;
  for (auto& r : recs) s.records.emplace(r.config, r);
  s.baseline_runtime = s.at({1, 1}).runtime_s;
  return s;
}

inline PerfSurface exhaustive_profile(const WorkloadSpec& w, const Grid& grid,
                                      std::uint64_t seed,
                                      const ProfileOptions& opt = {}) {
  return exhaustive_profile(w, grid.points(), seed, opt);
}

struct OracleResult {
  StreamConfig config;
  double runtime_s = 0.0;
  double speedup = 0.0;
};

/// Best grid point: lowest mean runtime, ties by (partitions, tasks).
inline OracleResult oracle_best(const PerfSurface& s) {
  if (s.records.empty()) throw InsufficientDataError("empty surface");
  const PerfRecord* best = nullptr;
  for (const auto& [cfg, rec] : s.records) {
    if (!best || rec.runtime_s < best->runtime_s) best = &rec;
    // map iteration is already (partitions, tasks) ascending, so strict '<'
    // keeps the lexicographically smallest config on ties.
  }
  return {best->config, best->runtime_s, s.baseline_runtime / best->runtime_s};
}

/// `partitions,tasks,runtime_s,runs,unconverged` rows in config order.
inline std::string surface_to_csv(const PerfSurface& s) {
  std::string out = "partitions,tasks,runtime_s,runs,unconverged\n";
  for (const auto& [cfg, rec] : s.records) {
    out += std::to_string(cfg.partitions) + "," + std::to_string(cfg.tasks) +
           "," + format_double(rec.runtime_s) + "," +
           std::to_string(rec.runs) + "," + (rec.unconverged ? "1" : "0") +
           "\n";
  }
  return out;
}

struct AnnealOptions {
  double t0 = 0.10;       // initial temperature, relative runtime units
  double cooling = 0.97;  // geometric decay per evaluation
};

struct AnnealResult {
  StreamConfig config;   // best configuration evaluated
  double runtime_s = 0;  // its (noisy) objective value
  double speedup = 0;    // vs the (1,1) baseline, same noise model
  int evaluations = 0;
};

/// Simulated annealing over the grid's index space.  Single-run objective,
/// neighbor = one step along one axis.  t0 = 0 degenerates to greedy
/// hill descent.  Exactly `budget` objective evaluations.
inline AnnealResult anneal_search(const WorkloadSpec& w, const Grid& grid,
                                  int budget, std::uint64_t seed,
                                  const AnnealOptions& opt = {}) {
  grid.validate();
  if (budget < 1) throw InvalidArgumentError("anneal budget < 1");
  // Drop grid points the workload cannot run (validity is config-dependent).
  std::vector<int> ps, ts;
  for (int p : grid.partitions)
    if (p <= w.total_cores) ps.push_back(p);
  for (int t : grid.tasks)
    if (t <= w.elements) ts.push_back(t);
  if (ps.empty() || ts.empty())
    throw InvalidConfigError("no runnable grid point for this workload");

  Rng rng(derive_seed(seed, "anneal"));
  int pi = static_cast<int>(rng.uniform_int(0, static_cast<int>(ps.size()) - 1));
  int ti = static_cast<int>(rng.uniform_int(0, static_cast<int>(ts.size()) - 1));

  int evals = 0;
  auto objective = [&](int p_idx, int t_idx) {
    const StreamConfig c{ps[static_cast<std::size_t>(p_idx)],
                         ts[static_cast<std::size_t>(t_idx)]};
    return simulate_run(w, c, derive_seed(seed, 1000 + evals));
  };

  double cur = objective(pi, ti);
  ++evals;
  StreamConfig best{ps[static_cast<std::size_t>(pi)],
                    ts[static_cast<std::size_t>(ti)]};
  double best_val = cur;
  double temp = opt.t0;

  while (evals < budget) {
    // Collect in-range neighbor moves and pick one uniformly.
    std::vector<std::pair<int, int>> moves;
    if (pi > 0) moves.push_back({pi - 1, ti});
    if (pi + 1 < static_cast<int>(ps.size())) moves.push_back({pi + 1, ti});
    if (ti > 0) moves.push_back({pi, ti - 1});
    if (ti + 1 < static_cast<int>(ts.size())) moves.push_back({pi, ti + 1});
    if (moves.empty()) break;  // 1x1 grid
    const auto [np, nt] =
        moves[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(moves.size()) - 1))];
    const double cand = objective(np, nt);
    ++evals;
    const StreamConfig cand_cfg{ps[static_cast<std::size_t>(np)],
                                ts[static_cast<std::size_t>(nt)]};
    if (cand < best_val ||
        (cand == best_val && cand_cfg < best)) {
      best_val = cand;
      best = cand_cfg;
    }
    const double delta = (cand - cur) / std::max(cur, 1e-300);
    bool accept = delta <= 0.0;
    if (!accept && temp > 0.0)
      accept = rng.uniform01() < std::exp(-delta / temp);
    if (accept) {
      pi = np;
      ti = nt;
      cur = cand;
    }
    temp *= opt.cooling;
  }

  const double base =
      simulate_run(w, {1, 1}, derive_seed(seed, "anneal-baseline"));
  return {best, best_val, base / best_val, evals};
}

}  // namespace streamtune
