#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "streamtune/errors.hpp"
#include "streamtune/features.hpp"
#include "streamtune/io.hpp"
#include "streamtune/labeling.hpp"
#include "streamtune/rng.hpp"
#include "streamtune/simulator.hpp"
#include "streamtune/types.hpp"

namespace streamtune {

/// Closed interval a workload field is drawn from (log-uniform for the
/// physics coefficients, since they span decades).
struct ValueRange {
  double lo = 0.0;
  double hi = 0.0;

  void validate(const std::string& field) const {
    if (!(lo > 0.0) || !(hi >= lo))
      throw ParseError("bad range for '" + field + "': [" +
                       format_double(lo) + ", " + format_double(hi) + "]");
  }
};

/// One behavioural family of programs: every program of the archetype draws
/// its per-dataset workload parameters from these ranges.
struct ArchetypeRanges {
  ValueRange elements;
  ValueRange bytes_in;
  ValueRange bytes_out;
  ValueRange transfer_alpha;
  ValueRange transfer_beta;
  ValueRange compute_eta;
  ValueRange compute_gamma;
  ValueRange thread_overhead;
  ValueRange partition_overhead;
  std::int64_t outer_lo = 1;
  std::int64_t outer_hi = 1;

  void validate(const std::string& name) const {
    elements.validate(name + ".elements");
    bytes_in.validate(name + ".bytes_in");
    bytes_out.validate(name + ".bytes_out");
    transfer_alpha.validate(name + ".transfer_alpha");
    transfer_beta.validate(name + ".transfer_beta");
    compute_eta.validate(name + ".compute_eta");
    compute_gamma.validate(name + ".compute_gamma");
    thread_overhead.validate(name + ".thread_overhead");
    partition_overhead.validate(name + ".partition_overhead");
    if (outer_lo < 1 || outer_hi < outer_lo)
      throw ParseError("bad range for '" + name + ".outer_iterations'");
  }
};

struct ProgramSpec {
  std::string id;
  std::string archetype;
  std::string suite;   // "train" or "test"
  std::string family;  // sibling group for leave-one-out exclusion
};

/// Declarative description of a benchmark corpus.
struct CorpusSpec {
  Grid grid = Grid::desk_default();
  int total_cores = 224;
  double noise_sigma = 0.01;
  int datasets_per_program = 8;
  std::map<std::string, ArchetypeRanges> archetypes;
  std::vector<ProgramSpec> programs;

  void validate() const {
    grid.validate();
    if (total_cores < 1) throw ParseError("total_cores < 1");
    if (!(noise_sigma >= 0.0)) throw ParseError("noise_sigma < 0");
    if (datasets_per_program < 1) throw ParseError("datasets_per_program < 1");
    if (archetypes.empty()) throw ParseError("no archetypes defined");
    if (programs.empty()) throw ParseError("no programs defined");
    if (grid.partitions.back() > total_cores)
      throw ParseError("grid partitions exceed total_cores");
    for (const auto& [name, a] : archetypes) {
      a.validate(name);
      // Every grid point must be runnable on every drawn workload.
      if (a.elements.lo < static_cast<double>(grid.tasks.back()))
        throw ParseError("archetype '" + name +
                         "': elements range dips below the largest task count");
    }
    std::set<std::string> ids;
    for (const auto& p : programs) {
      if (p.id.empty()) throw ParseError("program with empty id");
      if (!ids.insert(p.id).second)
        throw ParseError("duplicate program id '" + p.id + "'");
      if (p.suite != "train" && p.suite != "test")
        throw ParseError("program '" + p.id + "': suite must be train|test");
      if (!archetypes.count(p.archetype))
        throw ParseError("program '" + p.id + "': unknown archetype '" +
                         p.archetype + "'");
    }
  }

  static CorpusSpec parse(const std::string& text);
};

namespace detail {

inline ValueRange range_from_json(const json& j, const std::string& field) {
  const auto it = j.find(field);
  if (it == j.end())
    throw ParseError("archetype missing field '" + field + "'");
  ValueRange r;
  try {
    if (it->is_array()) {
      if (it->size() != 2)
        throw ParseError("range '" + field + "' needs exactly [lo, hi]");
      r.lo = (*it)[0].get<double>();
      r.hi = (*it)[1].get<double>();
    } else {
      r.lo = r.hi = it->get<double>();
    }
  } catch (const json::exception& e) {
    throw ParseError("range '" + field + "': " + e.what());
  }
  return r;
}

}  // namespace detail

inline CorpusSpec CorpusSpec::parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("corpus spec is not valid JSON: ") +
                     e.what());
  }
  CorpusSpec spec;
  try {
    if (j.contains("grid")) {
      spec.grid.partitions =
          j.at("grid").at("partitions").get<std::vector<int>>();
      spec.grid.tasks = j.at("grid").at("tasks").get<std::vector<int>>();
    }
    if (j.contains("total_cores")) spec.total_cores = j.at("total_cores");
    if (j.contains("noise_sigma")) spec.noise_sigma = j.at("noise_sigma");
    if (j.contains("datasets_per_program"))
      spec.datasets_per_program = j.at("datasets_per_program");
    if (!j.contains("archetypes") || !j.at("archetypes").is_object())
      throw ParseError("corpus spec needs an 'archetypes' object");
    for (const auto& [name, aj] : j.at("archetypes").items()) {
      ArchetypeRanges a;
      a.elements = detail::range_from_json(aj, "elements");
      a.bytes_in = detail::range_from_json(aj, "bytes_in");
      a.bytes_out = detail::range_from_json(aj, "bytes_out");
      a.transfer_alpha = detail::range_from_json(aj, "transfer_alpha");
      a.transfer_beta = detail::range_from_json(aj, "transfer_beta");
      a.compute_eta = detail::range_from_json(aj, "compute_eta");
      a.compute_gamma = detail::range_from_json(aj, "compute_gamma");
      a.thread_overhead = detail::range_from_json(aj, "thread_overhead");
      a.partition_overhead =
          detail::range_from_json(aj, "partition_overhead");
      const auto outer = detail::range_from_json(aj, "outer_iterations");
      a.outer_lo = static_cast<std::int64_t>(outer.lo);
      a.outer_hi = static_cast<std::int64_t>(outer.hi);
      spec.archetypes.emplace(name, a);
    }
    if (!j.contains("programs") || !j.at("programs").is_array())
      throw ParseError("corpus spec needs a 'programs' array");
    for (const auto& pj : j.at("programs")) {
      ProgramSpec p;
      p.id = pj.at("id").get<std::string>();
      p.archetype = pj.at("archetype").get<std::string>();
      p.suite = pj.at("suite").get<std::string>();
      p.family = pj.value("family", p.id);
      spec.programs.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("corpus spec field error: ") + e.what());
  }
  spec.validate();
  return spec;
}

/// One (program, dataset) measurement unit: its workload, its exhaustively
/// profiled surface and its combined candidate feature vector.
struct CorpusSample {
  SampleMeta meta;
  std::string suite;
  std::string family;
  std::string archetype;
  WorkloadSpec workload;
  PerfSurface surface;
  std::vector<double> candidates;
};

struct Corpus {
  Grid grid;
  std::vector<ProgramSpec> programs;
  std::vector<CorpusSample> samples;  // sample_id == index

  const CorpusSample& at(int sample_id) const {
    if (sample_id < 0 || sample_id >= static_cast<int>(samples.size()))
      throw LookupError("no sample " + std::to_string(sample_id));
    return samples[static_cast<std::size_t>(sample_id)];
  }

  std::vector<int> suite_sample_ids(const std::string& suite) const {
    std::vector<int> out;
    for (const auto& s : samples)
      if (s.suite == suite) out.push_back(s.meta.sample_id);
    return out;
  }

  /// Order-insensitive fingerprint of everything downstream consumers see.
  std::uint64_t digest() const {
    std::uint64_t h = fnv1a64("corpus");
    for (const auto& s : samples) {
      h = derive_seed(h, s.meta.program_id);
      h = derive_seed(h, s.meta.dataset_id);
      h = derive_seed(h, format_double(s.surface.baseline_runtime));
      for (const auto& [cfg, rec] : s.surface.records)
        h = derive_seed(h, format_double(rec.runtime_s));
      for (double v : s.candidates) h = derive_seed(h, format_double(v));
    }
    return h;
  }
};

namespace detail {

inline double draw_log_uniform(Rng& rng, const ValueRange& r) {
  if (r.hi == r.lo) return r.lo;
  return std::exp(rng.uniform(std::log(r.lo), std::log(r.hi)));
}

}  // namespace detail

/// The workload a given (program, dataset index) pair always materializes to
/// under `seed`, independent of build order.
inline WorkloadSpec draw_workload(const CorpusSpec& spec,
                                  const ProgramSpec& prog, int dataset_index,
                                  std::uint64_t seed) {
  const auto it = spec.archetypes.find(prog.archetype);
  if (it == spec.archetypes.end())
    throw LookupError("unknown archetype '" + prog.archetype + "'");
  const auto& a = it->second;
  Rng rng(derive_seed(seed,
                      prog.id + "/ds" + std::to_string(dataset_index)));
  WorkloadSpec w;
  w.program_id = prog.id;
  w.dataset_id = prog.id + "-d" + std::to_string(dataset_index);
  w.elements =
      static_cast<std::int64_t>(detail::draw_log_uniform(rng, a.elements));
  w.bytes_per_element_in = detail::draw_log_uniform(rng, a.bytes_in);
  w.bytes_per_element_out = detail::draw_log_uniform(rng, a.bytes_out);
  w.transfer_alpha = detail::draw_log_uniform(rng, a.transfer_alpha);
  w.transfer_beta = detail::draw_log_uniform(rng, a.transfer_beta);
  w.compute_eta = detail::draw_log_uniform(rng, a.compute_eta);
  w.compute_gamma = detail::draw_log_uniform(rng, a.compute_gamma);
  w.thread_overhead = detail::draw_log_uniform(rng, a.thread_overhead);
  w.partition_overhead =
      detail::draw_log_uniform(rng, a.partition_overhead);
  w.outer_iterations = rng.uniform_int(a.outer_lo, a.outer_hi);
  w.total_cores = spec.total_cores;
  w.noise_sigma = spec.noise_sigma;
  w.validate();
  return w;
}

/// Materialize the whole corpus: draw workloads, profile every grid point,
/// extract candidate features.  Deterministic in (spec, seed).
inline Corpus build_corpus(const CorpusSpec& spec, std::uint64_t seed,
                           const ProfileOptions& opt = {}) {
  spec.validate();
  Corpus c;
  c.grid = spec.grid;
  c.programs = spec.programs;
  int sample_id = 0;
  for (const auto& prog : spec.programs)
    for (int k = 0; k < spec.datasets_per_program; ++k) {
      CorpusSample s;
      s.meta.sample_id = sample_id++;
      s.suite = prog.suite;
      s.family = prog.family;
      s.archetype = prog.archetype;
      s.workload = draw_workload(spec, prog, k, seed);
      s.meta.program_id = s.workload.program_id;
      s.meta.dataset_id = s.workload.dataset_id;
      s.surface = exhaustive_profile(
          s.workload, spec.grid,
          derive_seed(seed, "surface/" + s.meta.dataset_id), opt);
      s.candidates =
          combine_features(extract_features(s.workload, s.surface.at({1, 1})));
      c.samples.push_back(std::move(s));
    }
  return c;
}

/// Stand-alone demo workload for quick sweeps: a mid-sized stencil with
/// comparable compute and transfer weight, so the heatmap shows structure on
/// both axes.
inline WorkloadSpec default_workload() {
  WorkloadSpec w;
  w.program_id = "stencil-demo";
  w.dataset_id = "default";
  w.elements = 24576;
  w.bytes_per_element_in = 40.0;
  w.bytes_per_element_out = 40.0;
  w.transfer_alpha = 1e-9;
  w.transfer_beta = 4e-5;
  w.compute_eta = 8e-6;
  w.compute_gamma = 1.2e-5;
  w.thread_overhead = 6e-7;
  w.partition_overhead = 2e-5;
  w.total_cores = 224;
  w.outer_iterations = 3;
  w.noise_sigma = 0.01;
  return w;
}

/// Built-in corpus: five behavioural archetypes, three training programs and
/// one held-back test program each, eight datasets per program.
///
/// The archetypes occupy disjoint boxes in the feature-visible quantities
/// (data transfer size, instruction count, outer-loop calls) so that a
/// classifier can recover the behaviour class of a program it has never seen,
/// while the feature-invisible cost knobs (latency, per-task launch, thread
/// spawn, partition overhead) place their optimal configurations in different
/// corners of the grid:
///   - streamblast: bandwidth-bound, nothing to overlap, few tasks win
///   - pingpong:    per-transfer latency dominates, single task wins
///   - pipeline:    balanced transfer/compute, moderate overlap wins
///   - choppy:      heavy per-task launch cost, tasks == partitions wins
///   - kernelstorm: thread-spawn-heavy compute, many partitions win
inline const char* default_corpus_json() {
  return R"JSON({
  "total_cores": 224,
  "noise_sigma": 0.01,
  "datasets_per_program": 8,
  "archetypes": {
    "streamblast": {
      "elements": [24576, 65536],
      "bytes_in": [56, 96],
      "bytes_out": [56, 96],
      "transfer_alpha": [8e-10, 1.2e-9],
      "transfer_beta": [2e-5, 5e-5],
      "compute_eta": [1.5e-6, 2.5e-6],
      "compute_gamma": [3e-6, 8e-6],
      "thread_overhead": [1e-8, 5e-8],
      "partition_overhead": [2e-5, 5e-5],
      "outer_iterations": [1, 2]
    },
    "pingpong": {
      "elements": [8192, 16384],
      "bytes_in": [8, 24],
      "bytes_out": [8, 24],
      "transfer_alpha": [8e-10, 1.2e-9],
      "transfer_beta": [1.5e-3, 4e-3],
      "compute_eta": [2e-6, 5e-6],
      "compute_gamma": [2e-5, 6e-5],
      "thread_overhead": [1e-7, 3e-7],
      "partition_overhead": [1e-5, 3e-5],
      "outer_iterations": [1, 2]
    },
    "pipeline": {
      "elements": [16384, 24576],
      "bytes_in": [28, 52],
      "bytes_out": [28, 52],
      "transfer_alpha": [8e-10, 1.2e-9],
      "transfer_beta": [2e-5, 6e-5],
      "compute_eta": [6e-6, 9e-6],
      "compute_gamma": [8e-6, 2e-5],
      "thread_overhead": [4e-7, 1e-6],
      "partition_overhead": [1e-5, 3e-5],
      "outer_iterations": [2, 4]
    },
    "choppy": {
      "elements": [20480, 32768],
      "bytes_in": [6, 12],
      "bytes_out": [6, 12],
      "transfer_alpha": [8e-10, 1.2e-9],
      "transfer_beta": [2e-5, 5e-5],
      "compute_eta": [1.3e-5, 2e-5],
      "compute_gamma": [1.5e-3, 4e-3],
      "thread_overhead": [2e-6, 5e-6],
      "partition_overhead": [8e-6, 2e-5],
      "outer_iterations": [4, 8]
    },
    "kernelstorm": {
      "elements": [32768, 65536],
      "bytes_in": [4, 12],
      "bytes_out": [4, 12],
      "transfer_alpha": [8e-10, 1.2e-9],
      "transfer_beta": [8e-6, 2e-5],
      "compute_eta": [1.4e-5, 2e-5],
      "compute_gamma": [1e-6, 3e-6],
      "thread_overhead": [3e-6, 7e-6],
      "partition_overhead": [3e-6, 8e-6],
      "outer_iterations": [12, 24]
    }
  },
  "programs": [
    {"id": "memset-sweep", "archetype": "streamblast", "suite": "train"},
    {"id": "saxpy-wide", "archetype": "streamblast", "suite": "train"},
    {"id": "axpy-burst", "archetype": "streamblast", "suite": "train"},
    {"id": "turnstile", "archetype": "pingpong", "suite": "train"},
    {"id": "yield-loop", "archetype": "pingpong", "suite": "train"},
    {"id": "hop-relay", "archetype": "pingpong", "suite": "train"},
    {"id": "conv-separable", "archetype": "pipeline", "suite": "train",
     "family": "conv"},
    {"id": "conv-beam", "archetype": "pipeline", "suite": "train",
     "family": "conv"},
    {"id": "fir-chain", "archetype": "pipeline", "suite": "train"},
    {"id": "kmeans-step", "archetype": "choppy", "suite": "train"},
    {"id": "quantile-bin", "archetype": "choppy", "suite": "train"},
    {"id": "pivot-scan", "archetype": "choppy", "suite": "train"},
    {"id": "sim-lattice", "archetype": "kernelstorm", "suite": "train"},
    {"id": "spin-glass", "archetype": "kernelstorm", "suite": "train"},
    {"id": "ornstein-step", "archetype": "kernelstorm", "suite": "train"},
    {"id": "layer-copy", "archetype": "streamblast", "suite": "test"},
    {"id": "cycle-gate", "archetype": "pingpong", "suite": "test"},
    {"id": "resample-rows", "archetype": "pipeline", "suite": "test"},
    {"id": "batch-pivot", "archetype": "choppy", "suite": "test"},
    {"id": "feistel-spin", "archetype": "kernelstorm", "suite": "test"}
  ]
}
)JSON";
}

inline CorpusSpec default_corpus_spec() {
  return CorpusSpec::parse(default_corpus_json());
}

}  // namespace streamtune
