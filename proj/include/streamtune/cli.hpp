#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "streamtune/corpus.hpp"
#include "streamtune/harness.hpp"
#include "streamtune/io.hpp"

namespace streamtune {
namespace detail {

/// Config-file plumbing: argv is parsed first, then a JSON object may fill in
/// any bound flag the command line left untouched.  Explicit flags win.
class ConfigMerge {
 public:
  template <class T>
  void bind(CLI::Option* opt, T& var) {
    rows_[opt->get_lnames().front()] = {
        opt, [&var](const json& v) { var = v.get<T>(); }};
  }

  void apply_file(const std::string& path) {
    if (path.empty()) return;
    json cfg;
    try {
      cfg = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw ParseError("config file " + path + ": " + e.what());
    }
    if (!cfg.is_object())
      throw ParseError("config file must hold a JSON object: " + path);
    for (const auto& [key, value] : cfg.items()) {
      const auto it = rows_.find(key);
      if (it == rows_.end())
        throw InputError("config file sets unknown flag: " + key);
      if (it->second.opt->count() > 0) continue;
      try {
        it->second.set(value);
      } catch (const json::exception& e) {
        throw ParseError("config value for '" + key + "': " + e.what());
      }
      applied_.insert(key);
    }
  }

  bool present(const CLI::Option* opt) const {
    return opt->count() > 0 || applied_.count(opt->get_lnames().front()) > 0;
  }

 private:
  struct Row {
    CLI::Option* opt;
    std::function<void(const json&)> set;
  };
  std::map<std::string, Row> rows_;
  std::set<std::string> applied_;
};

/// Everything a subcommand might take; each subcommand registers only the
/// flags it understands, so unknown flags still fail at parse time.
struct CliArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string corpus_path;
  std::string workload_path;
  std::string features_path;
  std::string model_path;
  std::string grid_text;
  std::string out_dir = ".";
  std::string learner = "svm-quad";
  std::string mode;
  double top_pct = 3.0;
  int target_nr = 12;
  double w2 = 150.0;
  double w3 = 30.0;
  int budget = 500;
  ConfigMerge merge;
};

inline std::string out_path(const CliArgs& a, const std::string& name) {
  const std::filesystem::path dir = a.out_dir.empty() ? "." : a.out_dir;
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

inline CorpusSpec load_corpus_spec(const CliArgs& a) {
  CorpusSpec spec = a.corpus_path.empty()
                        ? default_corpus_spec()
                        : CorpusSpec::parse(read_file(a.corpus_path));
  if (!a.grid_text.empty()) {
    spec.grid = Grid::parse(a.grid_text);
    spec.validate();
  }
  return spec;
}

inline WorkloadSpec load_workload(const std::string& path) {
  if (path.empty()) return default_workload();
  WorkloadSpec w;
  try {
    w = json::parse(read_file(path)).get<WorkloadSpec>();
  } catch (const json::exception& e) {
    throw ParseError("workload file " + path + ": " + e.what());
  }
  w.validate();
  return w;
}

inline Grid load_grid(const CliArgs& a) {
  return a.grid_text.empty() ? Grid::desk_default() : Grid::parse(a.grid_text);
}

inline TrainOptions train_options(const CliArgs& a) {
  TrainOptions opt;
  opt.kind = learner_from_string(a.learner);
  opt.top_pct = a.top_pct;
  opt.target_nr = a.target_nr;
  opt.same_program_weight = a.w2;
  opt.same_dataset_weight = a.w3;
  opt.seed = a.seed;
  return opt;
}

inline int do_gen(const CliArgs& a, std::ostream& err) {
  const Corpus c = build_corpus(load_corpus_spec(a), a.seed);
  std::string csv =
      "sample_id,program,dataset,suite,archetype,partitions,tasks,"
      "runtime_s,speedup\n";
  json samples = json::array();
  for (const auto& s : c.samples) {
    for (const auto& [cfg, rec] : s.surface.records)
      csv += std::to_string(s.meta.sample_id) + "," + s.meta.program_id + "," +
             s.meta.dataset_id + "," + s.suite + "," + s.archetype + "," +
             std::to_string(cfg.partitions) + "," + std::to_string(cfg.tasks) +
             "," + format_double(rec.runtime_s) + "," +
             format_double(s.surface.speedup_of(cfg)) + "\n";
    const auto best = oracle_best(s.surface);
    samples.push_back({{"sample_id", s.meta.sample_id},
                       {"program", s.meta.program_id},
                       {"dataset", s.meta.dataset_id},
                       {"suite", s.suite},
                       {"archetype", s.archetype},
                       {"oracle",
                        {{"partitions", best.config.partitions},
                         {"tasks", best.config.tasks},
                         {"speedup", best.speedup}}}});
  }
  const json manifest = {{"programs", c.programs.size()},
                         {"samples", c.samples.size()},
                         {"digest", c.digest()},
                         {"details", samples}};
  write_file(out_path(a, "corpus.csv"), csv);
  write_file(out_path(a, "corpus.json"), manifest.dump(2) + "\n");
  err << "gen: " << c.samples.size() << " samples over " << c.programs.size()
      << " programs, digest " << c.digest() << "\n";
  return 0;
}

inline int do_sweep(const CliArgs& a, std::ostream& err) {
  const WorkloadSpec w = load_workload(a.workload_path);
  const auto surface = exhaustive_profile(w, load_grid(a), a.seed);
  write_file(out_path(a, "heatmap.csv"), surface_to_csv(surface));
  err << "sweep: " << surface.records.size() << " configurations of "
      << w.program_id << ", oracle speedup "
      << format_double(oracle_best(surface).speedup) << "\n";
  return 0;
}

inline int do_label(const CliArgs& a, std::ostream& err) {
  const Corpus c = build_corpus(load_corpus_spec(a), a.seed);
  std::vector<LabeledSample> labeled;
  for (int id : c.suite_sample_ids("train")) {
    const auto& s = c.at(id);
    labeled.push_back(make_labeled_sample(s.meta, s.surface, a.top_pct));
  }
  MergeOptions mo;
  mo.target_nr = a.target_nr;
  mo.same_program_weight = a.w2;
  mo.same_dataset_weight = a.w3;
  const MergeResult res = merge_labels(labeled, mo);
  json reps = json::array();
  for (const auto& cls : res.classes)
    reps.push_back({{"label", cls.label_id},
                    {"partitions", cls.rep_config.partitions},
                    {"tasks", cls.rep_config.tasks},
                    {"members", cls.members.size()}});
  const json summary = {{"classes", res.class_count()},
                        {"merges", res.merges},
                        {"target_met", res.target_met},
                        {"representatives", reps}};
  write_file(out_path(a, "labels.csv"), labels_to_csv(labeled, res));
  write_file(out_path(a, "labels.json"), summary.dump(2) + "\n");
  err << "label: " << res.class_count() << " classes after " << res.merges
      << " merges\n";
  return 0;
}

inline int do_train(const CliArgs& a, std::ostream& err) {
  const Corpus c = build_corpus(load_corpus_spec(a), a.seed);
  const auto pipe =
      train_pipeline(c, c.suite_sample_ids("train"), train_options(a));
  const std::string model_file =
      a.model_path.empty() ? out_path(a, "model.json") : a.model_path;
  write_file(model_file, pipe.model.to_json().dump(2) + "\n");
  const json summary = {{"learner", to_string(pipe.model.kind)},
                        {"classes", pipe.labels.class_count()},
                        {"merges", pipe.labels.merges},
                        {"hyperparams", hyperparams_to_json(pipe.chosen)},
                        {"features", pipe.model.feature_names}};
  write_file(out_path(a, "train.json"), summary.dump(2) + "\n");
  err << "train: " << pipe.labels.class_count() << " classes, "
      << pipe.model.feature_names.size() << " features, wrote " << model_file
      << "\n";
  return 0;
}

inline int do_predict(const CliArgs& a, std::ostream& out) {
  if (a.model_path.empty()) throw InputError("predict needs --model");
  if (a.features_path.empty() == a.workload_path.empty())
    throw InputError("predict needs exactly one of --features or --workload");
  TrainedModel model;
  try {
    model = TrainedModel::from_json(json::parse(read_file(a.model_path)));
  } catch (const json::exception& e) {
    throw ParseError("model file " + a.model_path + ": " + e.what());
  }

  std::vector<double> candidates;
  if (!a.features_path.empty()) {
    json j;
    try {
      j = json::parse(read_file(a.features_path));
    } catch (const json::exception& e) {
      throw ParseError("features file " + a.features_path + ": " + e.what());
    }
    if (!j.is_object())
      throw ParseError("features file must map names to values");
    for (const auto& name : candidate_feature_names()) {
      if (!j.contains(name))
        throw InputError("features file missing '" + name + "'");
      candidates.push_back(j.at(name).get<double>());
    }
  } else {
    const WorkloadSpec w = load_workload(a.workload_path);
    const auto baseline =
        profile_config(w, {1, 1}, derive_seed(a.seed, "predict"));
    candidates = combine_features(extract_features(w, baseline));
  }

  const StreamConfig cfg = predict_config(model, candidates);
  out << "partitions=" << cfg.partitions << " tasks=" << cfg.tasks << "\n";
  return 0;
}

inline EvalReport keep_scheme(const EvalReport& rep, const std::string& name) {
  EvalReport out;
  out.folds = rep.folds;
  for (const auto& r : rep.rows)
    if (r.scheme == name) out.rows.push_back(r);
  return out;
}

inline int do_eval(const CliArgs& a, std::ostream& err) {
  const Corpus c = build_corpus(load_corpus_spec(a), a.seed);
  const TrainOptions opt = train_options(a);

  const auto write_report = [&](const EvalReport& rep) {
    write_file(out_path(a, "report.csv"), rep.to_csv());
    write_file(out_path(a, "summary.json"), rep.summary_json().dump(2) + "\n");
    err << "eval " << a.mode << ": predicted geomean speedup "
        << format_double(rep.geomean_speedup("predicted")) << ", pct "
        << format_double(rep.geomean_pct("predicted")) << " over "
        << rep.rows.size() << " rows\n";
  };

  if (a.mode == "loocv") {
    write_report(keep_scheme(loocv_evaluate(c, opt, 0), "predicted"));
  } else if (a.mode == "compare") {
    write_report(loocv_evaluate(c, opt, a.budget));
  } else if (a.mode == "cross-suite") {
    write_report(compare_schemes(c, opt, a.budget));
  } else if (a.mode == "ablation") {
    const AblationResult ab = merging_ablation(c, opt);
    write_file(out_path(a, "report_merged.csv"), ab.merged.to_csv());
    write_file(out_path(a, "report_unmerged.csv"), ab.unmerged.to_csv());
    const json summary = {
        {"merged_geomean_speedup", ab.merged_geomean},
        {"unmerged_geomean_speedup", ab.unmerged_geomean},
        {"delta", ab.merged_geomean - ab.unmerged_geomean}};
    write_file(out_path(a, "summary.json"), summary.dump(2) + "\n");
    err << "eval ablation: merged " << format_double(ab.merged_geomean)
        << " vs unmerged " << format_double(ab.unmerged_geomean) << "\n";
  } else if (a.mode == "correlation") {
    const EvalReport rep = loocv_evaluate(c, opt, 0);
    const CorrelationSummary corr = ratio_speedup_correlation(c, rep);
    write_file(out_path(a, "scatter.csv"), scatter_csv(c, rep));
    const json summary = {
        {"r", corr.r}, {"n", corr.n}, {"degenerate", corr.degenerate}};
    write_file(out_path(a, "summary.json"), summary.dump(2) + "\n");
    err << "eval correlation: r = " << format_double(corr.r) << " over "
        << corr.n << " rows\n";
  } else {
    throw InputError("unknown eval mode: " + a.mode);
  }
  return 0;
}

inline int do_anneal(const CliArgs& a, std::ostream& err) {
  const WorkloadSpec w = load_workload(a.workload_path);
  const AnnealResult res = anneal_search(w, load_grid(a), a.budget, a.seed);
  const json summary = {{"partitions", res.config.partitions},
                        {"tasks", res.config.tasks},
                        {"runtime_s", res.runtime_s},
                        {"speedup", res.speedup},
                        {"evaluations", res.evaluations}};
  write_file(out_path(a, "anneal.json"), summary.dump(2) + "\n");
  err << "anneal: (" << res.config.partitions << "," << res.config.tasks
      << ") speedup " << format_double(res.speedup) << " after "
      << res.evaluations << " evaluations\n";
  return 0;
}

}  // namespace detail

/// Front door used by both main() and the tests.  `args` excludes the
/// program name.  Returns the process exit status: 0 success, 2 usage
/// error, 1 anything that went wrong doing the work.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"streamtune: learned stream-configuration autotuning"};
  app.require_subcommand(1);

  detail::CliArgs gen_a, sweep_a, label_a, train_a, predict_a, eval_a,
      anneal_a;

  const auto add_common = [](CLI::App* cmd, detail::CliArgs& a) {
    cmd->add_option("--config", a.config_path,
                    "JSON object supplying defaults for any flag");
    a.seed_opt = cmd->add_option(
        "--seed", a.seed, "master random seed (required; no clock default)");
    a.merge.bind(a.seed_opt, a.seed);
  };
  const auto add_out = [](CLI::App* cmd, detail::CliArgs& a) {
    a.merge.bind(cmd->add_option("--out", a.out_dir, "output directory"),
                 a.out_dir);
  };
  const auto add_corpus = [](CLI::App* cmd, detail::CliArgs& a) {
    a.merge.bind(cmd->add_option("--corpus", a.corpus_path,
                                 "corpus spec JSON (default: built-in)"),
                 a.corpus_path);
  };
  const auto add_grid = [](CLI::App* cmd, detail::CliArgs& a) {
    a.merge.bind(cmd->add_option("--grid", a.grid_text,
                                 "grid '<p,..>x<t,..>', e.g. 1,2,4x8,16"),
                 a.grid_text);
  };
  const auto add_workload = [](CLI::App* cmd, detail::CliArgs& a) {
    a.merge.bind(cmd->add_option("--workload", a.workload_path,
                                 "workload spec JSON (default: built-in)"),
                 a.workload_path);
  };
  const auto add_label_knobs = [](CLI::App* cmd, detail::CliArgs& a) {
    a.merge.bind(cmd->add_option("--top-pct", a.top_pct,
                                 "well-performing threshold, percent"),
                 a.top_pct);
    a.merge.bind(
        cmd->add_option("--target-nr", a.target_nr, "target class count"),
        a.target_nr);
    a.merge.bind(cmd->add_option("--w2", a.w2, "same-program merge weight"),
                 a.w2);
    a.merge.bind(cmd->add_option("--w3", a.w3, "same-dataset merge weight"),
                 a.w3);
  };
  const auto add_learner = [](CLI::App* cmd, detail::CliArgs& a) {
    a.merge.bind(
        cmd->add_option("--learner", a.learner, "classifier kind")
            ->check(CLI::IsMember(
                {"svm-quad", "svm-lin", "svm-rbf", "knn", "wknn", "tree"})),
        a.learner);
  };
  const auto add_budget = [](CLI::App* cmd, detail::CliArgs& a,
                             const char* what) {
    a.merge.bind(cmd->add_option("--budget", a.budget, what), a.budget);
  };

  CLI::App* gen = app.add_subcommand("gen", "build a corpus, dump surfaces");
  add_common(gen, gen_a);
  add_corpus(gen, gen_a);
  add_grid(gen, gen_a);
  add_out(gen, gen_a);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "exhaustively profile one workload, emit heatmap CSV");
  add_common(sweep, sweep_a);
  add_workload(sweep, sweep_a);
  add_grid(sweep, sweep_a);
  add_out(sweep, sweep_a);

  CLI::App* label = app.add_subcommand(
      "label", "well-performing sets + label merging on the train suite");
  add_common(label, label_a);
  add_corpus(label, label_a);
  add_grid(label, label_a);
  add_out(label, label_a);
  add_label_knobs(label, label_a);

  CLI::App* train =
      app.add_subcommand("train", "train a classifier on the train suite");
  add_common(train, train_a);
  add_corpus(train, train_a);
  add_grid(train, train_a);
  add_out(train, train_a);
  add_label_knobs(train, train_a);
  add_learner(train, train_a);
  train_a.merge.bind(
      train->add_option("--model", train_a.model_path,
                        "model output path (default <out>/model.json)"),
      train_a.model_path);

  CLI::App* predict = app.add_subcommand(
      "predict", "predict a stream configuration for one workload");
  add_common(predict, predict_a);
  predict_a.merge.bind(
      predict->add_option("--model", predict_a.model_path, "trained model"),
      predict_a.model_path);
  predict_a.merge.bind(
      predict->add_option("--features", predict_a.features_path,
                          "candidate features JSON (name -> value)"),
      predict_a.features_path);
  add_workload(predict, predict_a);

  CLI::App* eval = app.add_subcommand("eval", "evaluate schemes on a corpus");
  eval->add_option("mode", eval_a.mode,
                   "loocv|cross-suite|compare|ablation|correlation")
      ->required()
      ->check(CLI::IsMember(
          {"loocv", "cross-suite", "compare", "ablation", "correlation"}));
  add_common(eval, eval_a);
  add_corpus(eval, eval_a);
  add_grid(eval, eval_a);
  add_out(eval, eval_a);
  add_label_knobs(eval, eval_a);
  add_learner(eval, eval_a);
  add_budget(eval, eval_a, "annealing-baseline budget (0 skips it)");

  CLI::App* anneal = app.add_subcommand(
      "anneal", "simulated-annealing search over one workload");
  add_common(anneal, anneal_a);
  add_workload(anneal, anneal_a);
  add_grid(anneal, anneal_a);
  add_out(anneal, anneal_a);
  add_budget(anneal, anneal_a, "objective evaluations to spend");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("streamtune");
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    app.exit(e, out, err);
    return 2;
  }

  detail::CliArgs* active = nullptr;
  if (app.got_subcommand(gen)) active = &gen_a;
  if (app.got_subcommand(sweep)) active = &sweep_a;
  if (app.got_subcommand(label)) active = &label_a;
  if (app.got_subcommand(train)) active = &train_a;
  if (app.got_subcommand(predict)) active = &predict_a;
  if (app.got_subcommand(eval)) active = &eval_a;
  if (app.got_subcommand(anneal)) active = &anneal_a;

  try {
    active->merge.apply_file(active->config_path);
    if (!active->merge.present(active->seed_opt)) {
      err << "error: --seed is required (supply it as a flag or in --config)"
          << "\n";
      return 2;
    }
    if (active == &gen_a) return detail::do_gen(gen_a, err);
    if (active == &sweep_a) return detail::do_sweep(sweep_a, err);
    if (active == &label_a) return detail::do_label(label_a, err);
    if (active == &train_a) return detail::do_train(train_a, err);
    if (active == &predict_a) return detail::do_predict(predict_a, out);
    if (active == &eval_a) return detail::do_eval(eval_a, err);
    return detail::do_anneal(anneal_a, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace streamtune
