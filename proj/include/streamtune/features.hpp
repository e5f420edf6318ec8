#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "streamtune/io.hpp"
#include "streamtune/rng.hpp"
#include "streamtune/simulator.hpp"
#include "streamtune/types.hpp"

namespace streamtune {

inline constexpr int kRawFeatureCount = 38;

using RawFeatures = std::array<double, kRawFeatureCount>;

struct RawFeatureDef {
  const char* name;
  const char* formula;  // documentation of the derivation, kept in the manifest
};

/// The fixed counter manifest.  `pp.*` are per-program profile constants
/// (hashed from program_id), `w.*` are workload fields, `j` is the
/// per-dataset unit jitter for that row.
inline const std::array<RawFeatureDef, kRawFeatureCount>& raw_feature_manifest() {
  static const std::array<RawFeatureDef, kRawFeatureCount> defs = {{
      {"loop_nest", "pp.nest_depth"},
      {"loop_count", "w.elements / pp.vector_width"},
      {"xfer_mem_calls", "pp.calls_per_iteration * w.outer_iterations"},
      {"dts",
       "w.elements * (w.bytes_per_element_in + w.bytes_per_element_out)"},
      {"redundant_transfer_size", "dts * pp.overlap_frac * (1 + 0.10*j)"},
      {"max_blocks", "max(1, floor(w.elements / pp.chunk_elems))"},
      {"min_task_unit", "pp.chunk_elems"},
      {"instruction_count", "w.compute_eta * w.elements * 1e9 * (1 + 0.10*j)"},
      {"branch_hits",
       "instruction_count * pp.branch_density * (1 - branch_rate)"},
      {"branch_misses", "instruction_count * pp.branch_density * branch_rate"},
      {"l1_accesses", "instruction_count * pp.l1_access_density"},
      {"l1_misses", "l1_accesses * l1_rate"},
      {"estage_cycles", "instruction_count * 1.2 * (1 + 0.10*j)"},
      {"issued_instructions", "instruction_count * (1.05 + 0.05*j)"},
      {"stall_cycles", "instruction_count * 0.30 * (1 + 0.15*j)"},
      {"vpu_instructions", "instruction_count * 0.40 * (1 + 0.15*j)"},
      {"transfer_bytes_total", "dts * (1 + 0.05*j)"},
      {"h2d_bytes", "dts * in_fraction"},
      {"d2h_bytes", "dts * (1 - in_fraction)"},
      {"dma_chunk_count", "dts / 4096 * (1 + 0.10*j)"},
      {"xfer_launch_cost", "xfer_mem_calls * (1 + 0.10*j)"},
      {"xfer_queue_depth", "xfer_mem_calls * 0.25 * (1 + 0.15*j)"},
      {"spawn_count", "loop_count * 0.5 * (1 + 0.10*j)"},
      {"loop_trip_total", "loop_count * (1.1 + 0.10*j)"},
      {"inner_loop_trip", "loop_count * 0.9 * (1 + 0.10*j)"},
      {"nest_depth_static", "loop_nest * (1 + 0.05*j)"},
      {"parallel_depth", "loop_nest * (1 + 0.10*j)"},
      {"task_chunk_bytes", "min_task_unit * 4 * (1 + 0.10*j)"},
      {"task_min_elems", "min_task_unit * (1 + 0.05*j)"},
      {"blocks_per_core", "max_blocks / w.total_cores * (1 + 0.10*j)"},
      {"grid_dim_estimate", "max_blocks * (1 + 0.08*j)"},
      {"overlap_bytes", "redundant_transfer_size * (1 + 0.05*j)"},
      {"halo_bytes", "redundant_transfer_size * 0.5 * (1 + 0.10*j)"},
      {"shared_footprint", "redundant_transfer_size * 0.1 * (1 + 0.10*j)"},
      {"l2_miss_ratio", "l1_rate * 0.6 * (1 + 0.10*j)"},
      {"tlb_miss_ratio", "l1_rate * 0.05 * (1 + 0.10*j)"},
      {"mispredict_density", "branch_rate * (1 + 0.08*j)"},
      {"speculation_stall_ratio", "branch_rate * 0.5 * (1 + 0.10*j)"},
  }};
  return defs;
}

inline int raw_feature_index(std::string_view name) {
  const auto& defs = raw_feature_manifest();
  for (int i = 0; i < kRawFeatureCount; ++i)
    if (defs[static_cast<std::size_t>(i)].name == name) return i;
  throw LookupError("unknown raw feature: " + std::string(name));
}

namespace detail {

/// Static per-program source characteristics, derived from the program name
/// alone; two datasets of one program share these.
struct ProgramProfile {
  double nest_depth;
  double vector_width;
  double chunk_elems;
  double overlap_frac;
  double branch_density;
  double branch_miss_base;
  double l1_access_density;
  double l1_miss_base;
  double calls_per_iteration;
};

inline ProgramProfile program_profile(const std::string& program_id) {
  Rng r(derive_seed(fnv1a64(program_id), "program-profile"));
  ProgramProfile p;
  p.nest_depth = static_cast<double>(r.uniform_int(1, 4));
  p.vector_width = std::pow(2.0, static_cast<double>(r.uniform_int(0, 4)));
  p.chunk_elems = std::floor(r.log_uniform(16.0, 512.0));
  p.overlap_frac = r.uniform(0.05, 0.30);
  p.branch_density = r.uniform(0.05, 0.25);
  p.branch_miss_base = r.uniform(0.01, 0.20);
  p.l1_access_density = r.uniform(0.20, 0.60);
  p.l1_miss_base = r.uniform(0.01, 0.15);
  p.calls_per_iteration = 2.0 * static_cast<double>(r.uniform_int(1, 3));
  return p;
}

/// Dataset perturbation seed: everything about the dataset except its size,
/// so datasets that differ only in `elements` perturb identically.
inline std::uint64_t content_seed(const WorkloadSpec& w) {
  std::string key = w.program_id;
  for (double v :
       {w.bytes_per_element_in, w.bytes_per_element_out, w.transfer_alpha,
        w.transfer_beta, w.compute_eta, w.compute_gamma, w.thread_overhead,
        w.partition_overhead, static_cast<double>(w.total_cores),
        static_cast<double>(w.outer_iterations), w.noise_sigma})
    key += "|" + format_double(v);
  return derive_seed(fnv1a64(key), "dataset-jitter");
}

}  // namespace detail

/// Synthesize the 38 raw counters for one workload.  `profile_run` must be
/// the non-streamed (1,1) baseline measurement; the counters model what a
/// profiler would have gathered during that run, reconstructed here from the
/// workload description plus a seeded per-dataset perturbation.
inline RawFeatures extract_features(const WorkloadSpec& w,
                                    const PerfRecord& profile_run) {
  w.validate();
  if (profile_run.config != StreamConfig{1, 1})
    throw InvalidArgumentError("extract_features needs the (1,1) baseline");
  if (!(profile_run.runtime_s > 0.0))
    throw InvalidArgumentError("baseline runtime must be positive");

  const auto pp = detail::program_profile(w.program_id);
  Rng jr(detail::content_seed(w));
  std::array<double, kRawFeatureCount> j{};
  for (auto& v : j) v = jr.uniform(-1.0, 1.0);

  const double elems = static_cast<double>(w.elements);
  const double branch_rate =
      std::clamp(pp.branch_miss_base * (1.0 + 0.25 * j[9]), 0.001, 0.5);
  const double l1_rate =
      std::clamp(pp.l1_miss_base * (1.0 + 0.25 * j[11]), 0.001, 0.5);
  const double bytes_sum = w.bytes_per_element_in + w.bytes_per_element_out;
  const double in_fraction =
      bytes_sum > 0.0 ? w.bytes_per_element_in / bytes_sum : 0.0;

  RawFeatures f{};
  f[0] = pp.nest_depth;
  f[1] = elems / pp.vector_width;
  f[2] = pp.calls_per_iteration * static_cast<double>(w.outer_iterations);
  f[3] = elems * bytes_sum;
  f[4] = f[3] * pp.overlap_frac * (1.0 + 0.10 * j[4]);
  f[5] = std::max(1.0, std::floor(elems / pp.chunk_elems));
  f[6] = pp.chunk_elems;
  f[7] = w.compute_eta * elems * 1e9 * (1.0 + 0.10 * j[7]);
  f[8] = f[7] * pp.branch_density * (1.0 - branch_rate);
  f[9] = f[7] * pp.branch_density * branch_rate;
  f[10] = f[7] * pp.l1_access_density;
  f[11] = f[10] * l1_rate;
  f[12] = f[7] * 1.2 * (1.0 + 0.10 * j[12]);
  f[13] = f[7] * (1.05 + 0.05 * j[13]);
  f[14] = f[7] * 0.30 * (1.0 + 0.15 * j[14]);
  f[15] = f[7] * 0.40 * (1.0 + 0.15 * j[15]);
  f[16] = f[3] * (1.0 + 0.05 * j[16]);
  f[17] = f[3] * in_fraction;
  f[18] = f[3] * (1.0 - in_fraction);
  f[19] = f[3] / 4096.0 * (1.0 + 0.10 * j[19]);
  f[20] = f[2] * (1.0 + 0.10 * j[20]);
  f[21] = f[2] * 0.25 * (1.0 + 0.15 * j[21]);
  f[22] = f[1] * 0.5 * (1.0 + 0.10 * j[22]);
  f[23] = f[1] * (1.1 + 0.10 * j[23]);
  f[24] = f[1] * 0.9 * (1.0 + 0.10 * j[24]);
  f[25] = f[0] * (1.0 + 0.05 * j[25]);
  f[26] = f[0] * (1.0 + 0.10 * j[26]);
  f[27] = f[6] * 4.0 * (1.0 + 0.10 * j[27]);
  f[28] = f[6] * (1.0 + 0.05 * j[28]);
  f[29] = f[5] / static_cast<double>(w.total_cores) * (1.0 + 0.10 * j[29]);
  f[30] = f[5] * (1.0 + 0.08 * j[30]);
  f[31] = f[4] * (1.0 + 0.05 * j[31]);
  f[32] = f[4] * 0.5 * (1.0 + 0.10 * j[32]);
  f[33] = f[4] * 0.1 * (1.0 + 0.10 * j[33]);
  f[34] = l1_rate * 0.6 * (1.0 + 0.10 * j[34]);
  f[35] = l1_rate * 0.05 * (1.0 + 0.10 * j[35]);
  f[36] = branch_rate * (1.0 + 0.08 * j[36]);
  f[37] = branch_rate * 0.5 * (1.0 + 0.10 * j[37]);

  for (double v : f)
    if (!std::isfinite(v))
      throw InvalidArgumentError("non-finite raw feature");
  return f;
}

inline constexpr int kCandidateFeatureCount = 36;

/// Candidate names after combining: four raw counters fold into two rates,
/// everything else passes through in manifest order.
inline const std::vector<std::string>& candidate_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    const auto& defs = raw_feature_manifest();
    for (int i = 0; i < kRawFeatureCount; ++i) {
      if (i == 8) {
        n.push_back("branch_miss_rate");
        n.push_back("l1_dcr");
        continue;
      }
      if (i == 9 || i == 10 || i == 11) continue;
      n.push_back(defs[static_cast<std::size_t>(i)].name);
    }
    return n;
  }();
  return names;
}

/// Fold raw counters into normalized rates: branch_miss_rate and l1_dcr
/// replace the four counters they consume.  Zero denominators yield 0.
inline std::vector<double> combine_features(const RawFeatures& raw) {
  std::vector<double> out;
  out.reserve(kCandidateFeatureCount);
  auto rate = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
  for (int i = 0; i < kRawFeatureCount; ++i) {
    if (i == 8) {
      out.push_back(rate(raw[9], raw[8] + raw[9]));   // branch_miss_rate
      out.push_back(rate(raw[11], raw[10]));          // l1_dcr
      continue;
    }
    if (i == 9 || i == 10 || i == 11) continue;
    out.push_back(raw[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Pearson coefficients over candidate features (rows = samples).
struct CorrelationMatrix {
  int n = 0;
  std::vector<double> r;        // n*n row-major
  std::vector<char> constant;   // zero-variance flags

  double at(int i, int j) const {
    return r[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
             static_cast<std::size_t>(j)];
  }
};

inline CorrelationMatrix pearson_matrix(
    const std::vector<std::vector<double>>& samples) {
  if (samples.size() < 2)
    throw InsufficientDataError("pearson_matrix needs >= 2 samples");
  const std::size_t n = samples.front().size();
  for (const auto& row : samples)
    if (row.size() != n) throw InputError("ragged feature rows");
  const double cnt = static_cast<double>(samples.size());

  std::vector<double> mean(n, 0.0);
  for (const auto& row : samples)
    for (std::size_t k = 0; k < n; ++k) mean[k] += row[k];
  for (auto& m : mean) m /= cnt;

  std::vector<double> var(n, 0.0);
  for (const auto& row : samples)
    for (std::size_t k = 0; k < n; ++k) {
      const double d = row[k] - mean[k];
      var[k] += d * d;
    }

  CorrelationMatrix m;
  m.n = static_cast<int>(n);
  m.r.assign(n * n, 0.0);
  m.constant.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k)
    if (var[k] <= 0.0) m.constant[k] = 1;

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      double v = 0.0;
      if (!m.constant[a] && !m.constant[b]) {
        double cov = 0.0;
        for (const auto& row : samples)
          cov += (row[a] - mean[a]) * (row[b] - mean[b]);
        v = cov / std::sqrt(var[a] * var[b]);
        v = std::clamp(v, -1.0, 1.0);
      }
      m.r[a * n + b] = v;
      m.r[b * n + a] = v;
    }
  }
  return m;
}

/// Greedy manifest-order scan: drop constants, keep a feature iff |r| stays
/// at or below the threshold against everything already kept.
inline std::vector<int> prune_correlated(const CorrelationMatrix& m,
                                         double threshold = 0.7) {
  std::vector<int> kept;
  for (int i = 0; i < m.n; ++i) {
    if (m.constant[static_cast<std::size_t>(i)]) continue;
    bool ok = true;
    for (int k : kept)
      if (std::abs(m.at(i, k)) > threshold) {
        ok = false;
        break;
      }
    if (ok) kept.push_back(i);
  }
  return kept;
}

/// Train-time min/max per feature.
struct ScalingParams {
  std::vector<double> min;
  std::vector<double> max;
};

inline ScalingParams fit_scaler(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw InsufficientDataError("fit_scaler needs >= 1 row");
  const std::size_t n = rows.front().size();
  ScalingParams p;
  p.min.assign(n, std::numeric_limits<double>::infinity());
  p.max.assign(n, -std::numeric_limits<double>::infinity());
  for (const auto& row : rows) {
    if (row.size() != n) throw InputError("ragged feature rows");
    for (std::size_t k = 0; k < n; ++k) {
      p.min[k] = std::min(p.min[k], row[k]);
      p.max[k] = std::max(p.max[k], row[k]);
    }
  }
  return p;
}

/// (x - min) / (max - min), clamped into [0,1]; degenerate features scale
/// to 0 so unseen values cannot explode.
inline std::vector<double> apply_scaler(const ScalingParams& p,
                                        const std::vector<double>& row) {
  if (row.size() != p.min.size())
    throw InputError("feature vector length mismatch with scaler");
  std::vector<double> out(row.size());
  for (std::size_t k = 0; k < row.size(); ++k) {
    const double span = p.max[k] - p.min[k];
    out[k] = span > 0.0 ? std::clamp((row[k] - p.min[k]) / span, 0.0, 1.0)
                        : 0.0;
  }
  return out;
}

}  // namespace streamtune
