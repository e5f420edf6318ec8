#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "streamtune/baselines.hpp"
#include "streamtune/corpus.hpp"
#include "streamtune/cv.hpp"
#include "streamtune/labeling.hpp"
#include "streamtune/model.hpp"

namespace streamtune {

/// Geometric mean; every input must be strictly positive.
inline double geomean(const std::vector<double>& v) {
  if (v.empty()) throw InvalidArgumentError("geomean of nothing");
  double acc = 0.0;
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x))
      throw InvalidArgumentError("geomean needs positive finite values");
    acc += std::log(x);
  }
  return std::exp(acc / static_cast<double>(v.size()));
}

struct CorrelationSummary {
  double r = 0.0;
  int n = 0;
  bool degenerate = false;  // < 2 points or a zero-variance axis
};

inline CorrelationSummary pearson_r(const std::vector<double>& xs,
                                    const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw InputError("pearson_r: length mismatch");
  CorrelationSummary out;
  out.n = static_cast<int>(xs.size());
  if (out.n < 2) {
    out.degenerate = true;
    return out;
  }
  const double cnt = static_cast<double>(out.n);
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < out.n; ++i) {
    mx += xs[static_cast<std::size_t>(i)];
    my += ys[static_cast<std::size_t>(i)];
  }
  mx /= cnt;
  my /= cnt;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (int i = 0; i < out.n; ++i) {
    const double dx = xs[static_cast<std::size_t>(i)] - mx;
    const double dy = ys[static_cast<std::size_t>(i)] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    out.degenerate = true;
    return out;
  }
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return out;
}

/// ln(compute / transfer) of the unstreamed run: the workload-intrinsic
/// balance the speedup study correlates against.
inline double ratio_ln(const WorkloadSpec& w) {
  const double comp = compute_seconds(w, {1, 1}, w.elements);
  const double comm =
      transfer_in_seconds(w, w.elements) + transfer_out_seconds(w, w.elements);
  if (!(comp > 0.0) || !(comm > 0.0))
    throw InvalidArgumentError("compute/transfer ratio needs positive times");
  return std::log(comp / comm);
}

struct TrainOptions {
  LearnerKind kind = LearnerKind::svm_quadratic;
  double top_pct = 3.0;
  int target_nr = 12;
  double same_program_weight = 150.0;
  double same_dataset_weight = 30.0;
  double prune_threshold = 0.7;
  int cv_folds = 5;
  std::uint64_t seed = 0;
  bool merge = true;  // false: one class per distinct best config
  std::vector<Hyperparams> hyper_grid;  // empty = default_hyperparam_grid
};

inline std::vector<Hyperparams> default_hyperparam_grid(LearnerKind kind) {
  std::vector<Hyperparams> grid;
  switch (kind) {
    case LearnerKind::svm_linear:
    case LearnerKind::svm_quadratic:
    case LearnerKind::svm_gaussian:
      for (double c : {0.1, 1.0, 10.0, 100.0}) {
        Hyperparams h;
        h.C = c;
        grid.push_back(h);
      }
      break;
    case LearnerKind::knn:
    case LearnerKind::weighted_knn:
      for (int k : {1, 3, 5, 7}) {
        Hyperparams h;
        h.knn_k = k;
        grid.push_back(h);
      }
      break;
    case LearnerKind::tree:
      for (int d : {4, 8, 12}) {
        Hyperparams h;
        h.tree_max_depth = d;
        grid.push_back(h);
      }
      break;
  }
  return grid;
}

namespace detail {

/// Ablation arm: no merging at all, one class per distinct best config.
inline MergeResult raw_label_classes(
    const std::vector<LabeledSample>& samples) {
  if (samples.empty())
    throw InsufficientDataError("raw labels need samples");
  std::map<StreamConfig, std::vector<int>> groups;
  for (const auto& s : samples) {
    // The best config is the smallest one attaining the top normalized
    // performance, matching the oracle's tie rule.
    const StreamConfig* best = nullptr;
    double best_np = -1.0;
    for (const auto& [cfg, np] : s.norm_perf)
      if (np > best_np) {
        best_np = np;
        best = &cfg;
      }
    groups[*best].push_back(s.meta.sample_id);
  }
  std::vector<MergedClass> classes;
  for (auto& [cfg, members] : groups) {
    std::sort(members.begin(), members.end());
    MergedClass mc;
    mc.members = members;
    mc.rep_set = {cfg};
    mc.rep_config = cfg;
    classes.push_back(std::move(mc));
  }
  std::sort(classes.begin(), classes.end(),
            [](const MergedClass& a, const MergedClass& b) {
              return a.members.front() < b.members.front();
            });
  MergeResult res;
  res.target_met = true;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    classes[i].label_id = static_cast<int>(i);
    for (int id : classes[i].members)
      res.assignments[id] = classes[i].label_id;
  }
  res.classes = std::move(classes);
  return res;
}

inline std::vector<int> candidate_indices(
    const std::vector<std::string>& names) {
  const auto& all = candidate_feature_names();
  std::vector<int> idx;
  idx.reserve(names.size());
  for (const auto& n : names) {
    const auto it = std::find(all.begin(), all.end(), n);
    if (it == all.end()) throw LookupError("unknown feature '" + n + "'");
    idx.push_back(static_cast<int>(it - all.begin()));
  }
  return idx;
}

}  // namespace detail

/// Select the model's features out of a full candidate vector.
inline std::vector<double> project_features(
    const std::vector<std::string>& names,
    const std::vector<double>& candidates) {
  if (candidates.size() != static_cast<std::size_t>(kCandidateFeatureCount))
    throw InputError("candidate vector has wrong length");
  const auto idx = detail::candidate_indices(names);
  std::vector<double> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(candidates[static_cast<std::size_t>(i)]);
  return out;
}

inline StreamConfig predict_config(const TrainedModel& m,
                                   const std::vector<double>& candidates) {
  const auto proj = project_features(m.feature_names, candidates);
  return m.predict(apply_scaler(m.scaling, proj)).second;
}

struct PipelineModel {
  TrainedModel model;
  MergeResult labels;
  Hyperparams chosen;
};

/// The full training pipeline over one set of corpus samples: label, merge,
/// prune correlated features, scale, grid-search hyperparameters, train.
/// Feature selection and scaling are fit on exactly these samples, so a
/// caller holding out data leaks nothing into the model.
inline PipelineModel train_pipeline(const Corpus& corpus,
                                    const std::vector<int>& sample_ids,
                                    const TrainOptions& opt) {
  if (sample_ids.empty())
    throw InsufficientDataError("train_pipeline: no samples");

  std::vector<LabeledSample> labeled;
  labeled.reserve(sample_ids.size());
  for (int id : sample_ids) {
    const auto& s = corpus.at(id);
    labeled.push_back(make_labeled_sample(s.meta, s.surface, opt.top_pct));
  }

  MergeResult labels;
  if (opt.merge) {
    MergeOptions mo;
    mo.target_nr = std::min<int>(opt.target_nr,
                                 static_cast<int>(labeled.size()));
    mo.same_program_weight = opt.same_program_weight;
    mo.same_dataset_weight = opt.same_dataset_weight;
    labels = merge_labels(labeled, mo);
  } else {
    labels = detail::raw_label_classes(labeled);
  }

  std::vector<std::vector<double>> rows;
  rows.reserve(sample_ids.size());
  for (int id : sample_ids) rows.push_back(corpus.at(id).candidates);
  const auto kept = prune_correlated(pearson_matrix(rows),
                                     opt.prune_threshold);
  if (kept.empty())
    throw InsufficientDataError("no informative features survive pruning");

  const auto& all_names = candidate_feature_names();
  std::vector<std::string> names;
  names.reserve(kept.size());
  for (int k : kept) names.push_back(all_names[static_cast<std::size_t>(k)]);

  std::vector<std::vector<double>> proj;
  proj.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<double> p;
    p.reserve(kept.size());
    for (int k : kept) p.push_back(r[static_cast<std::size_t>(k)]);
    proj.push_back(std::move(p));
  }
  const auto scaler = fit_scaler(proj);

  Dataset d;
  d.rows.reserve(proj.size());
  for (std::size_t i = 0; i < proj.size(); ++i) {
    DataRow row;
    row.x = apply_scaler(scaler, proj[i]);
    row.label = labels.assignments.at(
        corpus.at(sample_ids[i]).meta.sample_id);
    row.meta = corpus.at(sample_ids[i]).meta;
    d.rows.push_back(std::move(row));
  }

  const auto grid = opt.hyper_grid.empty()
                        ? default_hyperparam_grid(opt.kind)
                        : opt.hyper_grid;
  const auto best = grid_search_cv(d, opt.kind, grid, opt.cv_folds,
                                   derive_seed(opt.seed, "grid-search"));

  PipelineModel out;
  out.chosen = best;
  out.model = train_model(d, opt.kind, best);
  out.model.feature_names = names;
  out.model.scaling = scaler;
  for (const auto& c : labels.classes)
    out.model.label_configs[c.label_id] = c.rep_config;
  out.labels = std::move(labels);
  return out;
}

// ---------------------------------------------------------------------------
// Scheme evaluation

inline constexpr const char* kSchemeNames[] = {
    "predicted", "fixed-4x16", "fixed-17x85", "liu",
    "werkhoven", "anneal",     "oracle"};

/// Fit the granularity model from four analytic probes (task counts 1..8)
/// and place its optimum on the grid.
inline StreamConfig liu_config(const WorkloadSpec& w, const Grid& grid) {
  std::vector<std::pair<double, double>> transfer_pts, compute_pts;
  for (int t : {1, 2, 4, 8}) {
    const std::int64_t m = std::max<std::int64_t>(1, w.elements / t);
    const double md = static_cast<double>(m);
    transfer_pts.push_back(
        {md, transfer_in_seconds(w, m) + transfer_out_seconds(w, m)});
    compute_pts.push_back({md, compute_seconds(w, {1, t}, m)});
  }
  return liu_optimal_tasks(fit_liu(transfer_pts, compute_pts), w.elements,
                           grid)
      .config;
}

/// Map the workload onto the LogGP stream-count equation. Per-byte costs are
/// symmetric on our single channel; the kernel time is the unstreamed run.
inline StreamConfig werkhoven_config(const WorkloadSpec& w, const Grid& grid) {
  LogGPParams p;
  p.g = w.transfer_beta;
  p.P = w.total_cores;
  p.G_hd = w.transfer_alpha;
  p.G_dh = w.transfer_alpha;
  p.B_hd = static_cast<double>(w.elements) * w.bytes_per_element_in;
  p.B_dh = static_cast<double>(w.elements) * w.bytes_per_element_out;
  p.T_kernel = compute_seconds(w, {1, 1}, w.elements);
  return werkhoven_optimal_streams(p, grid).config;
}

struct EvalRow {
  std::string scheme;
  std::string program_id;
  std::string dataset_id;
  StreamConfig config;
  double speedup = 0.0;
  double pct_of_oracle = 0.0;
};

struct FoldInfo {
  std::string held_out_program;
  std::vector<std::string> training_programs;
  int class_count = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<FoldInfo> folds;

  std::vector<std::string> schemes() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
      if (std::find(out.begin(), out.end(), r.scheme) == out.end())
        out.push_back(r.scheme);
    return out;
  }

  std::vector<double> column(const std::string& scheme, bool pct) const {
    std::vector<double> v;
    for (const auto& r : rows)
      if (r.scheme == scheme) v.push_back(pct ? r.pct_of_oracle : r.speedup);
    if (v.empty()) throw LookupError("no rows for scheme '" + scheme + "'");
    return v;
  }

  double geomean_speedup(const std::string& scheme) const {
    return geomean(column(scheme, false));
  }

  double geomean_pct(const std::string& scheme) const {
    return geomean(column(scheme, true));
  }

  std::string to_csv() const {
    std::string out =
        "scheme,program,dataset,partitions,tasks,speedup,pct_of_oracle\n";
    for (const auto& r : rows) {
      out += r.scheme + "," + r.program_id + "," + r.dataset_id + "," +
             std::to_string(r.config.partitions) + "," +
             std::to_string(r.config.tasks) + "," + format_double(r.speedup) +
             "," + format_double(r.pct_of_oracle) + "\n";
    }
    return out;
  }

  json summary_json() const {
    json schemes_j = json::object();
    for (const auto& s : schemes())
      schemes_j[s] = {{"geomean_speedup", geomean_speedup(s)},
                      {"geomean_pct_of_oracle", geomean_pct(s)}};
    json folds_j = json::array();
    for (const auto& f : folds)
      folds_j.push_back({{"held_out", f.held_out_program},
                         {"trained_on", f.training_programs},
                         {"classes", f.class_count}});
    return {{"rows", rows.size()},
            {"schemes", schemes_j},
            {"folds", folds_j}};
  }
};

namespace detail {

inline EvalRow eval_config(const CorpusSample& s, const std::string& scheme,
                           const StreamConfig& cfg) {
  const auto oracle = oracle_best(s.surface);
  EvalRow r;
  r.scheme = scheme;
  r.program_id = s.meta.program_id;
  r.dataset_id = s.meta.dataset_id;
  r.config = cfg;
  r.speedup = s.surface.speedup_of(cfg);
  r.pct_of_oracle = oracle.runtime_s / s.surface.at(cfg).runtime_s;
  return r;
}

/// All non-predicted schemes for the given samples, in canonical order.
inline void append_baseline_rows(const Corpus& corpus,
                                 const std::vector<int>& ids,
                                 std::uint64_t seed, int anneal_budget,
                                 EvalReport& rep) {
  const auto fixed_a = corpus.grid.snap({4, 16});
  const auto fixed_b = corpus.grid.snap({17, 85});
  for (int id : ids)
    rep.rows.push_back(
        detail::eval_config(corpus.at(id), "fixed-4x16", fixed_a));
  for (int id : ids)
    rep.rows.push_back(
        detail::eval_config(corpus.at(id), "fixed-17x85", fixed_b));
  for (int id : ids) {
    const auto& s = corpus.at(id);
    rep.rows.push_back(
        detail::eval_config(s, "liu", liu_config(s.workload, corpus.grid)));
  }
  for (int id : ids) {
    const auto& s = corpus.at(id);
    rep.rows.push_back(detail::eval_config(
        s, "werkhoven", werkhoven_config(s.workload, corpus.grid)));
  }
  if (anneal_budget > 0) {
    std::vector<StreamConfig> cfgs(ids.size());
    detail::parallel_for(ids.size(), [&](std::size_t i) {
      const auto& s = corpus.at(ids[i]);
      cfgs[i] = anneal_search(s.workload, corpus.grid, anneal_budget,
                              derive_seed(seed, "anneal/" + s.meta.dataset_id))
                    .config;
    });
    for (std::size_t i = 0; i < ids.size(); ++i)
      rep.rows.push_back(
          detail::eval_config(corpus.at(ids[i]), "anneal", cfgs[i]));
  }
  for (int id : ids) {
    const auto& s = corpus.at(id);
    rep.rows.push_back(
        detail::eval_config(s, "oracle", oracle_best(s.surface).config));
  }
}

}  // namespace detail

/// Leave-one-program-out over the training suite.  Each fold retrains the
/// whole pipeline (labels, merge, feature selection, scaling, grid search)
/// without the held-out program or anything in its family, then predicts the
/// held-out program's datasets.  Baseline schemes are evaluated on the same
/// samples for comparison.
inline EvalReport loocv_evaluate(const Corpus& corpus, const TrainOptions& opt,
                                 int anneal_budget = 500) {
  EvalReport rep;
  std::vector<int> eval_ids;
  for (const auto& prog : corpus.programs) {
    if (prog.suite != "train") continue;
    std::vector<int> train_ids;
    std::set<std::string> train_programs;
    for (const auto& s : corpus.samples) {
      if (s.suite != "train") continue;
      if (s.family == prog.family) continue;
      train_ids.push_back(s.meta.sample_id);
      train_programs.insert(s.meta.program_id);
    }
    if (train_ids.empty())
      throw InsufficientDataError("fold for '" + prog.id +
                                  "' has no training samples");
    const auto pipe = train_pipeline(corpus, train_ids, opt);

    FoldInfo fi;
    fi.held_out_program = prog.id;
    fi.training_programs.assign(train_programs.begin(),
                                train_programs.end());
    fi.class_count = pipe.labels.class_count();
    rep.folds.push_back(std::move(fi));

    for (const auto& s : corpus.samples) {
      if (s.meta.program_id != prog.id) continue;
      rep.rows.push_back(detail::eval_config(
          s, "predicted", predict_config(pipe.model, s.candidates)));
      eval_ids.push_back(s.meta.sample_id);
    }
  }
  detail::append_baseline_rows(corpus, eval_ids, opt.seed, anneal_budget,
                               rep);
  return rep;
}

/// Train once on the whole training suite, evaluate every scheme on the
/// held-back test suite.
inline EvalReport compare_schemes(const Corpus& corpus, const TrainOptions& opt,
                                  int anneal_budget = 500) {
  const auto train_ids = corpus.suite_sample_ids("train");
  const auto test_ids = corpus.suite_sample_ids("test");
  if (test_ids.empty())
    throw InsufficientDataError("corpus has no test-suite samples");
  const auto pipe = train_pipeline(corpus, train_ids, opt);

  EvalReport rep;
  FoldInfo fi;
  fi.held_out_program = "";
  std::set<std::string> progs;
  for (int id : train_ids) progs.insert(corpus.at(id).meta.program_id);
  fi.training_programs.assign(progs.begin(), progs.end());
  fi.class_count = pipe.labels.class_count();
  rep.folds.push_back(std::move(fi));

  for (int id : test_ids)
    rep.rows.push_back(detail::eval_config(
        corpus.at(id), "predicted",
        predict_config(pipe.model, corpus.at(id).candidates)));
  detail::append_baseline_rows(corpus, test_ids, opt.seed, anneal_budget,
                               rep);
  return rep;
}

struct AblationResult {
  EvalReport merged;
  EvalReport unmerged;
  double merged_geomean = 0.0;    // predicted-scheme speedup geomeans
  double unmerged_geomean = 0.0;
};

/// Same folds, same seeds, merging on vs off.
inline AblationResult merging_ablation(const Corpus& corpus,
                                       const TrainOptions& opt) {
  TrainOptions with = opt;
  with.merge = true;
  TrainOptions without = opt;
  without.merge = false;
  AblationResult out;
  out.merged = loocv_evaluate(corpus, with, 0);
  out.unmerged = loocv_evaluate(corpus, without, 0);
  out.merged_geomean = out.merged.geomean_speedup("predicted");
  out.unmerged_geomean = out.unmerged.geomean_speedup("predicted");
  return out;
}

/// Pearson correlation between the log compute/transfer ratio and the
/// speedup the given scheme achieved, over that scheme's report rows.
inline CorrelationSummary ratio_speedup_correlation(
    const Corpus& corpus, const EvalReport& rep,
    const std::string& scheme = "predicted") {
  std::map<std::pair<std::string, std::string>, const CorpusSample*> index;
  for (const auto& s : corpus.samples)
    index[{s.meta.program_id, s.meta.dataset_id}] = &s;
  std::vector<double> xs, ys;
  for (const auto& r : rep.rows) {
    if (r.scheme != scheme) continue;
    const auto it = index.find({r.program_id, r.dataset_id});
    if (it == index.end())
      throw LookupError("report row for unknown sample " + r.program_id +
                        "/" + r.dataset_id);
    xs.push_back(ratio_ln(it->second->workload));
    ys.push_back(r.speedup);
  }
  return pearson_r(xs, ys);
}

/// `ratio_ln,speedup` pairs for scatter plots.
inline std::string scatter_csv(const Corpus& corpus, const EvalReport& rep,
                               const std::string& scheme = "predicted") {
  std::map<std::pair<std::string, std::string>, const CorpusSample*> index;
  for (const auto& s : corpus.samples)
    index[{s.meta.program_id, s.meta.dataset_id}] = &s;
  std::string out = "ratio_ln,speedup\n";
  for (const auto& r : rep.rows) {
    if (r.scheme != scheme) continue;
    const auto it = index.find({r.program_id, r.dataset_id});
    if (it == index.end())
      throw LookupError("report row for unknown sample " + r.program_id +
                        "/" + r.dataset_id);
    out += format_double(ratio_ln(it->second->workload)) + "," +
           format_double(r.speedup) + "\n";
  }
  return out;
}

}  // namespace streamtune
