#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "streamtune/simulator.hpp"
#include "streamtune/types.hpp"

namespace streamtune {

struct SampleMeta {
  int sample_id = 0;
  std::string program_id;
  std::string dataset_id;
};

/// The well-performing configuration set of one sample.
struct LabelSet {
  int sample_id = 0;
  std::vector<StreamConfig> configs;  // sorted, unique, non-empty
};

/// Top `top_pct` percent of the surface by mean runtime.  The cutoff count is
/// ceil(pct/100 * grid size), at least 1; runtime ties resolve by
/// (partitions, tasks) so the set is deterministic.
inline LabelSet well_performing_set(const PerfSurface& s, double top_pct = 3.0,
                                    int sample_id = 0) {
  if (!(top_pct >= 0.0) || !std::isfinite(top_pct))
    throw InvalidArgumentError("top_pct must be >= 0");
  if (s.records.empty()) throw InsufficientDataError("empty surface");
  std::vector<const PerfRecord*> order;
  order.reserve(s.records.size());
  for (const auto& [cfg, rec] : s.records) order.push_back(&rec);
  std::sort(order.begin(), order.end(),
            [](const PerfRecord* a, const PerfRecord* b) {
              if (a->runtime_s != b->runtime_s)
                return a->runtime_s < b->runtime_s;
              return a->config < b->config;
            });
  const auto n = static_cast<double>(order.size());
  std::size_t k = static_cast<std::size_t>(std::ceil(top_pct / 100.0 * n));
  k = std::clamp<std::size_t>(k, 1, order.size());
  LabelSet ls;
  ls.sample_id = sample_id;
  for (std::size_t i = 0; i < k; ++i) ls.configs.push_back(order[i]->config);
  std::sort(ls.configs.begin(), ls.configs.end());
  return ls;
}

/// Everything the merge needs to know about one sample.
struct LabeledSample {
  SampleMeta meta;
  LabelSet labels;
  double oracle_speedup = 1.0;
  // oracle runtime / runtime(cfg) for every profiled config: 1 at the oracle,
  // smaller elsewhere.  Used to pick class representative configs.
  std::map<StreamConfig, double> norm_perf;
};

inline LabeledSample make_labeled_sample(const SampleMeta& meta,
                                         const PerfSurface& s,
                                         double top_pct = 3.0) {
  LabeledSample out;
  out.meta = meta;
  out.labels = well_performing_set(s, top_pct, meta.sample_id);
  const auto oracle = oracle_best(s);
  out.oracle_speedup = oracle.speedup;
  for (const auto& [cfg, rec] : s.records)
    out.norm_perf[cfg] = oracle.runtime_s / rec.runtime_s;
  return out;
}

struct MergeOptions {
  int target_nr = 1;
  double same_program_weight = 150.0;
  double same_dataset_weight = 30.0;
};

struct MergedClass {
  int label_id = 0;
  std::vector<int> members;           // sample ids, ascending
  std::vector<StreamConfig> rep_set;  // sorted representative set
  StreamConfig rep_config;            // deployment representative
};

struct MergeResult {
  std::map<int, int> assignments;  // sample_id -> label_id
  std::vector<MergedClass> classes;
  int merges = 0;
  bool target_met = false;  // false when pair weights died out first

  int class_count() const { return static_cast<int>(classes.size()); }
};

namespace detail {

struct MergeClassState {
  std::vector<int> members;  // ascending; front() is the tie-break key
  std::set<std::string> programs;
  std::set<std::string> datasets;
  std::vector<StreamConfig> reps;  // sorted
};

inline int rep_intersection_size(const std::vector<StreamConfig>& a,
                                 const std::vector<StreamConfig>& b) {
  int n = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib)
      ++ia;
    else if (*ib < *ia)
      ++ib;
    else {
      ++n;
      ++ia;
      ++ib;
    }
  }
  return n;
}

template <typename T>
bool sets_intersect(const std::set<T>& a, const std::set<T>& b) {
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  for (const auto& v : small)
    if (large.count(v)) return true;
  return false;
}

}  // namespace detail

/// Label merging.  Pair weight = |rep_s ∩ rep_t| + 150 if the classes share a
/// program + 30 if they share a dataset; the heaviest pair merges (ties by
/// smallest member-id pair), its representative set becoming the intersection
/// when non-empty, otherwise the lexicographically smallest well-performing
/// config of the highest-oracle-speedup member sample.  Repeats until the
/// representative sets are pairwise disjoint and at most `target_nr` classes
/// remain, or every pair weight is zero (reported via `target_met`).
inline MergeResult merge_labels(const std::vector<LabeledSample>& samples,
                                const MergeOptions& opt) {
  if (samples.empty()) throw InsufficientDataError("merge_labels: no samples");
  if (opt.target_nr < 1)
    throw InvalidArgumentError("target_nr must be >= 1");
  if (opt.target_nr > static_cast<int>(samples.size()))
    throw InvalidArgumentError("target_nr exceeds the sample count");

  std::map<int, const LabeledSample*> by_id;
  std::set<std::pair<std::string, std::string>> seen_pd;
  for (const auto& s : samples) {
    if (!by_id.emplace(s.meta.sample_id, &s).second)
      throw InputError("duplicate sample_id " +
                       std::to_string(s.meta.sample_id));
    if (!seen_pd.emplace(s.meta.program_id, s.meta.dataset_id).second)
      throw InputError("duplicate (program, dataset) pair for sample " +
                       std::to_string(s.meta.sample_id));
    if (s.labels.configs.empty())
      throw InputError("empty label set for sample " +
                       std::to_string(s.meta.sample_id));
  }

  std::vector<detail::MergeClassState> cls;
  cls.reserve(samples.size());
  for (const auto& [id, sp] : by_id) {
    detail::MergeClassState c;
    c.members = {id};
    c.programs = {sp->meta.program_id};
    c.datasets = {sp->meta.dataset_id};
    c.reps = sp->labels.configs;
    std::sort(c.reps.begin(), c.reps.end());
    c.reps.erase(std::unique(c.reps.begin(), c.reps.end()), c.reps.end());
    cls.push_back(std::move(c));
  }

  MergeResult res;
  const auto k_max_merges = samples.size();  // must terminate in N-1 steps
  for (std::size_t guard = 0; guard <= k_max_merges; ++guard) {
    // Termination test: pairwise-disjoint representatives and small enough.
    bool disjoint = true;
    for (std::size_t a = 0; a < cls.size() && disjoint; ++a)
      for (std::size_t b = a + 1; b < cls.size() && disjoint; ++b)
        if (detail::rep_intersection_size(cls[a].reps, cls[b].reps) > 0)
          disjoint = false;
    if (disjoint && static_cast<int>(cls.size()) <= opt.target_nr) {
      res.target_met = true;
      break;
    }

    double best_w = 0.0;
    std::size_t best_a = 0, best_b = 0;
    bool found = false;
    for (std::size_t a = 0; a < cls.size(); ++a) {
      for (std::size_t b = a + 1; b < cls.size(); ++b) {
        double w = detail::rep_intersection_size(cls[a].reps, cls[b].reps);
        if (detail::sets_intersect(cls[a].programs, cls[b].programs))
          w += opt.same_program_weight;
        if (detail::sets_intersect(cls[a].datasets, cls[b].datasets))
          w += opt.same_dataset_weight;
        if (w <= 0.0) continue;
        // Tie rule: the pair with the smallest (min key, max key).
        const auto key = std::make_pair(
            std::min(cls[a].members.front(), cls[b].members.front()),
            std::max(cls[a].members.front(), cls[b].members.front()));
        bool better = false;
        if (!found || w > best_w) {
          better = true;
        } else if (w == best_w) {
          const auto cur = std::make_pair(
              std::min(cls[best_a].members.front(),
                       cls[best_b].members.front()),
              std::max(cls[best_a].members.front(),
                       cls[best_b].members.front()));
          better = key < cur;
        }
        if (better) {
          best_w = w;
          best_a = a;
          best_b = b;
          found = true;
        }
      }
    }
    if (!found) break;  // all weights zero: accept what we have

    auto& A = cls[best_a];
    auto& B = cls[best_b];
    std::vector<StreamConfig> inter;
    std::set_intersection(A.reps.begin(), A.reps.end(), B.reps.begin(),
                          B.reps.end(), std::back_inserter(inter));
    if (inter.empty()) {
      // Fall back to the best member sample's best-loved config.
      const LabeledSample* champ = nullptr;
      for (const auto& grp : {&A, &B})
        for (int id : grp->members) {
          const auto* s = by_id.at(id);
          if (!champ || s->oracle_speedup > champ->oracle_speedup ||
              (s->oracle_speedup == champ->oracle_speedup &&
               s->meta.sample_id < champ->meta.sample_id))
            champ = s;
        }
      inter = {*std::min_element(champ->labels.configs.begin(),
                                 champ->labels.configs.end())};
    }
    std::vector<int> members;
    std::merge(A.members.begin(), A.members.end(), B.members.begin(),
               B.members.end(), std::back_inserter(members));
    A.members = std::move(members);
    A.programs.insert(B.programs.begin(), B.programs.end());
    A.datasets.insert(B.datasets.begin(), B.datasets.end());
    A.reps = std::move(inter);
    cls.erase(cls.begin() + static_cast<std::ptrdiff_t>(best_b));
    ++res.merges;
  }

  // Label ids follow ascending smallest-member order.
  std::sort(cls.begin(), cls.end(),
            [](const auto& a, const auto& b) {
              return a.members.front() < b.members.front();
            });
  for (std::size_t i = 0; i < cls.size(); ++i) {
    MergedClass mc;
    mc.label_id = static_cast<int>(i);
    mc.members = cls[i].members;
    mc.rep_set = cls[i].reps;
    // Representative config: best mean oracle-normalized performance over
    // member samples; ties toward the smaller config.
    double best_mean = -1.0;
    for (const auto& cfg : mc.rep_set) {
      double sum = 0.0;
      for (int id : mc.members) {
        const auto& np = by_id.at(id)->norm_perf;
        const auto it = np.find(cfg);
        if (it == np.end())
          throw LookupError("sample " + std::to_string(id) +
                            " lacks performance for config " + to_string(cfg));
        sum += it->second;
      }
      const double mean = sum / static_cast<double>(mc.members.size());
      if (mean > best_mean) {
        best_mean = mean;
        mc.rep_config = cfg;
      }
    }
    for (int id : mc.members) res.assignments[id] = mc.label_id;
    res.classes.push_back(std::move(mc));
  }
  return res;
}

/// Deployment config for a merged label.
inline StreamConfig label_to_config(const MergeResult& res, int label_id) {
  for (const auto& c : res.classes)
    if (c.label_id == label_id) return c.rep_config;
  throw LookupError("unknown label id " + std::to_string(label_id));
}

/// `sample_id,program_id,dataset_id,label_id,rep_partitions,rep_tasks` rows,
/// ascending sample id.
inline std::string labels_to_csv(const std::vector<LabeledSample>& samples,
                                 const MergeResult& res) {
  std::map<int, const LabeledSample*> by_id;
  for (const auto& s : samples) by_id[s.meta.sample_id] = &s;
  std::string out =
      "sample_id,program_id,dataset_id,label_id,rep_partitions,rep_tasks\n";
  for (const auto& [id, label] : res.assignments) {
    const auto it = by_id.find(id);
    if (it == by_id.end())
      throw LookupError("assignment for unknown sample " + std::to_string(id));
    const auto cfg = label_to_config(res, label);
    out += std::to_string(id) + "," + it->second->meta.program_id + "," +
           it->second->meta.dataset_id + "," + std::to_string(label) + "," +
           std::to_string(cfg.partitions) + "," + std::to_string(cfg.tasks) +
           "\n";
  }
  return out;
}

}  // namespace streamtune
