#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "streamtune/corpus.hpp"
#include "streamtune/harness.hpp"

using namespace streamtune;

namespace {

// Two sharply different archetypes keep the mini corpus cheap while still
// giving the classifier something real to separate: "bulk" moves lots of
// bytes and barely computes, "spawny" computes hard with heavy thread spawn.
const char* kMiniSpec = R"({
  "total_cores": 224,
  "noise_sigma": 0.01,
  "datasets_per_program": 3,
  "grid": {"partitions": [1, 2, 8, 28, 112], "tasks": [1, 4, 16, 64]},
  "archetypes": {
    "bulk": {
      "elements": [16384, 32768],
      "bytes_in": [48, 96], "bytes_out": [48, 96],
      "transfer_alpha": [8e-10, 1.2e-9],
      "transfer_beta": [2e-5, 5e-5],
      "compute_eta": [1.5e-6, 2.5e-6],
      "compute_gamma": [3e-6, 8e-6],
      "thread_overhead": [1e-8, 5e-8],
      "partition_overhead": [2e-5, 5e-5],
      "outer_iterations": [1, 2]
    },
    "spawny": {
      "elements": [32768, 65536],
      "bytes_in": [4, 12], "bytes_out": [4, 12],
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
    {"id": "b-one", "archetype": "bulk", "suite": "train"},
    {"id": "b-two", "archetype": "bulk", "suite": "train"},
    {"id": "s-one", "archetype": "spawny", "suite": "train",
     "family": "spawn"},
    {"id": "s-two", "archetype": "spawny", "suite": "train",
     "family": "spawn"},
    {"id": "s-three", "archetype": "spawny", "suite": "train"},
    {"id": "b-probe", "archetype": "bulk", "suite": "test"},
    {"id": "s-probe", "archetype": "spawny", "suite": "test"}
  ]
})";

const Corpus& mini_corpus() {
  static const Corpus c = build_corpus(CorpusSpec::parse(kMiniSpec), 7);
  return c;
}

TrainOptions mini_options() {
  TrainOptions opt;
  opt.target_nr = 4;
  opt.cv_folds = 3;
  opt.seed = 11;
  return opt;
}

}  // namespace

TEST_CASE("corpus spec parsing rejects malformed input") {
  CHECK_THROWS_AS(CorpusSpec::parse("not json at all"), ParseError);
  CHECK_THROWS_AS(CorpusSpec::parse("{}"), ParseError);

  json base = json::parse(kMiniSpec);

  auto mutated = [&](auto&& edit) {
    json j = base;
    edit(j);
    return j.dump();
  };

  // Duplicate program id.
  CHECK_THROWS_AS(CorpusSpec::parse(mutated([](json& j) {
                    j["programs"].push_back(j["programs"][0]);
                  })),
                  ParseError);
  // Unknown archetype reference.
  CHECK_THROWS_AS(CorpusSpec::parse(mutated([](json& j) {
                    j["programs"][0]["archetype"] = "ghost";
                  })),
                  ParseError);
  // Suite must be train or test.
  CHECK_THROWS_AS(CorpusSpec::parse(mutated([](json& j) {
                    j["programs"][0]["suite"] = "validation";
                  })),
                  ParseError);
  // Element range must keep every grid task count runnable.
  CHECK_THROWS_AS(CorpusSpec::parse(mutated([](json& j) {
                    j["archetypes"]["bulk"]["elements"] = {8, 16};
                  })),
                  ParseError);
  // Ranges must be positive and ordered.
  CHECK_THROWS_AS(CorpusSpec::parse(mutated([](json& j) {
                    j["archetypes"]["bulk"]["compute_eta"] = {2e-6, 1e-6};
                  })),
                  ParseError);
  CHECK_THROWS_AS(CorpusSpec::parse(mutated([](json& j) {
                    j["archetypes"]["bulk"].erase("transfer_beta");
                  })),
                  ParseError);
  // Grid partitions cannot exceed the core count.
  CHECK_THROWS_AS(CorpusSpec::parse(mutated([](json& j) {
                    j["total_cores"] = 64;
                  })),
                  ParseError);
}

TEST_CASE("corpus build is deterministic and completely indexed") {
  const auto spec = CorpusSpec::parse(kMiniSpec);
  const auto& c = mini_corpus();

  REQUIRE(c.samples.size() == 7 * 3);
  for (int i = 0; i < static_cast<int>(c.samples.size()); ++i)
    CHECK(c.at(i).meta.sample_id == i);

  // Program order follows the spec; dataset ids are program-scoped.
  CHECK(c.samples[0].meta.program_id == "b-one");
  CHECK(c.samples[0].meta.dataset_id == "b-one-d0");
  CHECK(c.samples[5].meta.program_id == "b-two");
  CHECK(c.suite_sample_ids("train").size() == 15);
  CHECK(c.suite_sample_ids("test").size() == 6);

  for (const auto& s : c.samples) {
    CHECK(s.candidates.size() ==
          static_cast<std::size_t>(kCandidateFeatureCount));
    CHECK(s.surface.records.size() == c.grid.size());
    CHECK(s.surface.baseline_runtime > 0.0);
  }

  const auto again = build_corpus(spec, 7);
  CHECK(again.digest() == c.digest());
  const auto other = build_corpus(spec, 8);
  CHECK(other.digest() != c.digest());

  CHECK_THROWS_AS(c.at(-1), LookupError);
  CHECK_THROWS_AS(c.at(static_cast<int>(c.samples.size())), LookupError);
}

TEST_CASE("workload draws stay inside their archetype ranges") {
  const auto spec = CorpusSpec::parse(kMiniSpec);
  for (const auto& s : mini_corpus().samples) {
    const auto& a = spec.archetypes.at(s.archetype);
    const auto& w = s.workload;
    CHECK(static_cast<double>(w.elements) >= a.elements.lo - 1.0);
    CHECK(static_cast<double>(w.elements) <= a.elements.hi);
    CHECK(w.bytes_per_element_in >= a.bytes_in.lo);
    CHECK(w.bytes_per_element_in <= a.bytes_in.hi);
    CHECK(w.bytes_per_element_out >= a.bytes_out.lo);
    CHECK(w.bytes_per_element_out <= a.bytes_out.hi);
    CHECK(w.transfer_alpha >= a.transfer_alpha.lo);
    CHECK(w.transfer_alpha <= a.transfer_alpha.hi);
    CHECK(w.transfer_beta >= a.transfer_beta.lo);
    CHECK(w.transfer_beta <= a.transfer_beta.hi);
    CHECK(w.compute_eta >= a.compute_eta.lo);
    CHECK(w.compute_eta <= a.compute_eta.hi);
    CHECK(w.compute_gamma >= a.compute_gamma.lo);
    CHECK(w.compute_gamma <= a.compute_gamma.hi);
    CHECK(w.thread_overhead >= a.thread_overhead.lo);
    CHECK(w.thread_overhead <= a.thread_overhead.hi);
    CHECK(w.partition_overhead >= a.partition_overhead.lo);
    CHECK(w.partition_overhead <= a.partition_overhead.hi);
    CHECK(w.outer_iterations >= a.outer_lo);
    CHECK(w.outer_iterations <= a.outer_hi);
    CHECK(w.total_cores == spec.total_cores);
    CHECK(w.noise_sigma == spec.noise_sigma);
  }

  // Same (seed, program, dataset index) always draws the same workload,
  // independent of anything else in the spec.
  const auto w1 = draw_workload(spec, spec.programs[2], 1, 7);
  const auto w2 = draw_workload(spec, spec.programs[2], 1, 7);
  CHECK(w1.compute_eta == w2.compute_eta);
  CHECK(w1.elements == w2.elements);
  CHECK(mini_corpus().samples[7].workload.compute_eta == w1.compute_eta);
}

TEST_CASE("geomean matches hand-computed values") {
  CHECK(geomean({2.0, 8.0}) == Catch::Approx(4.0).margin(1e-12));
  CHECK(geomean({5.0}) == Catch::Approx(5.0).margin(1e-12));
  CHECK(geomean({1.0, 1.0, 1.0}) == Catch::Approx(1.0).margin(1e-12));
  CHECK(geomean({0.5, 2.0}) == Catch::Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(geomean({}), InvalidArgumentError);
  CHECK_THROWS_AS(geomean({1.0, 0.0}), InvalidArgumentError);
  CHECK_THROWS_AS(geomean({-2.0}), InvalidArgumentError);
}

TEST_CASE("pearson correlation of two distinct points is exactly +-1") {
  const auto up = pearson_r({0.0, 1.0}, {0.0, 2.0});
  CHECK_FALSE(up.degenerate);
  CHECK(up.r == Catch::Approx(1.0).margin(1e-12));

  const auto down = pearson_r({0.0, 1.0}, {2.0, 0.0});
  CHECK_FALSE(down.degenerate);
  CHECK(down.r == Catch::Approx(-1.0).margin(1e-12));

  const auto flat = pearson_r({1.0, 1.0, 1.0}, {0.0, 1.0, 2.0});
  CHECK(flat.degenerate);
  CHECK(flat.r == 0.0);

  const auto single = pearson_r({1.0}, {2.0});
  CHECK(single.degenerate);

  CHECK_THROWS_AS(pearson_r({1.0, 2.0}, {1.0}), InputError);
}

TEST_CASE("ratio_ln matches the stage formulas") {
  WorkloadSpec w = default_workload();
  const double comp = compute_seconds(w, {1, 1}, w.elements);
  const double comm =
      transfer_in_seconds(w, w.elements) + transfer_out_seconds(w, w.elements);
  CHECK(ratio_ln(w) == Catch::Approx(std::log(comp / comm)).margin(1e-12));

  // A workload with zero compute cost has no defined balance.
  w.compute_eta = 0.0;
  w.compute_gamma = 0.0;
  w.thread_overhead = 0.0;
  CHECK_THROWS_AS(ratio_ln(w), InvalidArgumentError);
}

TEST_CASE("liu scheme reproduces the closed-form granularity optimum") {
  const auto w = default_workload();
  const auto grid = Grid::desk_default();

  // Independent fit from the exact per-chunk cost model: the transfer line
  // has slope alpha*(bytes_in + bytes_out) and intercept 2*beta; the compute
  // line's intercept is the per-task launch cost.
  const double slope =
      w.transfer_alpha * (w.bytes_per_element_in + w.bytes_per_element_out);
  const double m_star = std::clamp(
      std::sqrt(static_cast<double>(w.elements) * w.compute_gamma / slope),
      1.0, static_cast<double>(w.elements));
  const long n = std::clamp(
      static_cast<long>(std::llround(static_cast<double>(w.elements) / m_star)),
      1L, 256L);
  const auto expected =
      grid.snap({static_cast<int>(n), static_cast<int>(n)});

  CHECK(liu_config(w, grid) == expected);
}

TEST_CASE("werkhoven scheme maps the workload onto the stream equation") {
  const auto w = default_workload();
  const auto grid = Grid::desk_default();

  LogGPParams p;
  p.g = w.transfer_beta;
  p.P = w.total_cores;
  p.G_hd = w.transfer_alpha;
  p.G_dh = w.transfer_alpha;
  p.B_hd = static_cast<double>(w.elements) * w.bytes_per_element_in;
  p.B_dh = static_cast<double>(w.elements) * w.bytes_per_element_out;
  p.T_kernel = compute_seconds(w, {1, 1}, w.elements);

  CHECK(werkhoven_config(w, grid) ==
        werkhoven_optimal_streams(p, grid).config);
}

TEST_CASE("default hyperparameter grids vary the knob that matters") {
  for (auto kind : {LearnerKind::svm_linear, LearnerKind::svm_quadratic,
                    LearnerKind::svm_gaussian}) {
    const auto g = default_hyperparam_grid(kind);
    REQUIRE(g.size() == 4);
    std::set<double> cs;
    for (const auto& h : g) cs.insert(h.C);
    CHECK(cs.size() == 4);
  }
  for (auto kind : {LearnerKind::knn, LearnerKind::weighted_knn}) {
    const auto g = default_hyperparam_grid(kind);
    REQUIRE(g.size() == 4);
    std::set<int> ks;
    for (const auto& h : g) ks.insert(h.knn_k);
    CHECK(ks == std::set<int>{1, 3, 5, 7});
  }
  const auto g = default_hyperparam_grid(LearnerKind::tree);
  REQUIRE(g.size() == 3);
  std::set<int> ds;
  for (const auto& h : g) ds.insert(h.tree_max_depth);
  CHECK(ds == std::set<int>{4, 8, 12});
}

TEST_CASE("project_features selects candidates by name") {
  const auto& names = candidate_feature_names();
  std::vector<double> candidates(kCandidateFeatureCount);
  for (int i = 0; i < kCandidateFeatureCount; ++i)
    candidates[static_cast<std::size_t>(i)] = 100.0 + i;

  const auto picked =
      project_features({names[3], names[0], names[35]}, candidates);
  REQUIRE(picked.size() == 3);
  CHECK(picked[0] == 103.0);
  CHECK(picked[1] == 100.0);
  CHECK(picked[2] == 135.0);

  CHECK_THROWS_AS(project_features({"no-such-feature"}, candidates),
                  LookupError);
  CHECK_THROWS_AS(project_features({names[0]}, {1.0, 2.0}), InputError);
}

TEST_CASE("train_pipeline fits everything on its own subset") {
  const auto& c = mini_corpus();
  const auto opt = mini_options();

  std::vector<int> subset;
  for (const auto& s : c.samples)
    if (s.suite == "train" && s.meta.program_id != "b-one")
      subset.push_back(s.meta.sample_id);
  const auto pipe = train_pipeline(c, subset, opt);

  // Feature names are a subset of the candidates, without duplicates.
  const auto& all = candidate_feature_names();
  std::set<std::string> seen;
  for (const auto& n : pipe.model.feature_names) {
    CHECK(std::find(all.begin(), all.end(), n) != all.end());
    CHECK(seen.insert(n).second);
  }
  REQUIRE_FALSE(pipe.model.feature_names.empty());

  // Scaling bounds are exactly the subset's min/max per kept feature.
  const std::size_t dim = pipe.model.feature_names.size();
  REQUIRE(pipe.model.scaling.min.size() == dim);
  for (std::size_t k = 0; k < dim; ++k) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int id : subset) {
      const auto row =
          project_features(pipe.model.feature_names, c.at(id).candidates);
      lo = std::min(lo, row[k]);
      hi = std::max(hi, row[k]);
    }
    CHECK(pipe.model.scaling.min[k] == lo);
    CHECK(pipe.model.scaling.max[k] == hi);
  }

  // Every class label resolves to a grid config; every sample in the corpus
  // gets a prediction that is on the grid.
  REQUIRE_FALSE(pipe.labels.classes.empty());
  for (const auto& cls : pipe.labels.classes)
    CHECK(c.grid.contains(cls.rep_config));
  for (const auto& s : c.samples)
    CHECK(c.grid.contains(predict_config(pipe.model, s.candidates)));

  CHECK_THROWS_AS(train_pipeline(c, {}, opt), InsufficientDataError);
}

TEST_CASE("loocv folds exclude the held-out program and its family") {
  const auto& c = mini_corpus();
  const auto rep = loocv_evaluate(c, mini_options(), 0);

  REQUIRE(rep.folds.size() == 5);  // five training programs
  std::map<std::string, std::string> family;
  for (const auto& p : c.programs) family[p.id] = p.family;

  for (const auto& f : rep.folds) {
    const auto& fam = family.at(f.held_out_program);
    for (const auto& tp : f.training_programs) {
      CHECK(tp != f.held_out_program);
      CHECK(family.at(tp) != fam);
    }
    CHECK(f.class_count >= 2);
  }

  // The family "spawn" covers s-one and s-two: holding out either must drop
  // both, leaving exactly the three other-family programs.
  for (const auto& held : {"s-one", "s-two"}) {
    const auto it =
        std::find_if(rep.folds.begin(), rep.folds.end(),
                     [&](const FoldInfo& f) {
                       return f.held_out_program == held;
                     });
    REQUIRE(it != rep.folds.end());
    CHECK(it->training_programs ==
          std::vector<std::string>{"b-one", "b-two", "s-three"});
  }

  // Unrelated programs lose only themselves.
  const auto it = std::find_if(rep.folds.begin(), rep.folds.end(),
                               [](const FoldInfo& f) {
                                 return f.held_out_program == "b-one";
                               });
  REQUIRE(it != rep.folds.end());
  CHECK(it->training_programs ==
        std::vector<std::string>{"b-two", "s-one", "s-three", "s-two"});
}

TEST_CASE("loocv report carries every scheme with sane rows") {
  const auto& c = mini_corpus();
  const auto rep = loocv_evaluate(c, mini_options(), 40);

  const std::vector<std::string> expected = {
      "predicted", "fixed-4x16", "fixed-17x85", "liu",
      "werkhoven", "anneal",     "oracle"};
  CHECK(rep.schemes() == expected);

  const std::size_t train_n = c.suite_sample_ids("train").size();
  CHECK(rep.rows.size() == expected.size() * train_n);

  std::map<std::pair<std::string, std::string>, double> oracle_speedup;
  for (const auto& r : rep.rows)
    if (r.scheme == "oracle")
      oracle_speedup[{r.program_id, r.dataset_id}] = r.speedup;

  for (const auto& r : rep.rows) {
    CHECK(c.grid.contains(r.config));
    CHECK(r.speedup > 0.0);
    CHECK(r.pct_of_oracle > 0.0);
    CHECK(r.pct_of_oracle <= 1.0 + 1e-12);
    // The oracle dominates every scheme on the same sample.
    CHECK(r.speedup <=
          oracle_speedup.at({r.program_id, r.dataset_id}) + 1e-12);
  }
  for (const auto& r : rep.rows)
    if (r.scheme == "oracle") CHECK(r.pct_of_oracle == 1.0);

  // Only training-suite samples are evaluated.
  std::set<std::string> suites;
  for (const auto& r : rep.rows) {
    for (const auto& s : c.samples)
      if (s.meta.program_id == r.program_id &&
          s.meta.dataset_id == r.dataset_id)
        suites.insert(s.suite);
  }
  CHECK(suites == std::set<std::string>{"train"});

  // Identical inputs give byte-identical reports.
  const auto rep2 = loocv_evaluate(c, mini_options(), 40);
  CHECK(rep.to_csv() == rep2.to_csv());
  CHECK(rep.summary_json().dump() == rep2.summary_json().dump());

  // CSV shape: header plus one line per row.
  const auto csv = rep.to_csv();
  CHECK(csv.rfind("scheme,program,dataset,partitions,tasks,speedup,"
                  "pct_of_oracle\n",
                  0) == 0);
  CHECK(static_cast<std::size_t>(
            std::count(csv.begin(), csv.end(), '\n')) ==
        rep.rows.size() + 1);
}

TEST_CASE("compare_schemes evaluates the held-back suite only") {
  const auto& c = mini_corpus();
  const auto rep = compare_schemes(c, mini_options(), 40);

  std::set<std::string> programs;
  for (const auto& r : rep.rows) programs.insert(r.program_id);
  CHECK(programs == std::set<std::string>{"b-probe", "s-probe"});

  const std::size_t test_n = c.suite_sample_ids("test").size();
  CHECK(rep.rows.size() == 7 * test_n);

  REQUIRE(rep.folds.size() == 1);
  CHECK(rep.folds[0].training_programs.size() == 5);

  const auto rep2 = compare_schemes(c, mini_options(), 40);
  CHECK(rep.to_csv() == rep2.to_csv());

  // Geomeans exist for every scheme and the oracle's pct is exactly 1.
  for (const auto& s : rep.schemes()) {
    CHECK(rep.geomean_speedup(s) > 0.0);
    CHECK(rep.geomean_pct(s) > 0.0);
  }
  CHECK(rep.geomean_pct("oracle") == Catch::Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(rep.geomean_speedup("no-such-scheme"), LookupError);
}

TEST_CASE("merging ablation runs both arms on identical folds") {
  const auto& c = mini_corpus();
  const auto ab = merging_ablation(c, mini_options());

  REQUIRE(ab.merged.folds.size() == ab.unmerged.folds.size());
  for (std::size_t i = 0; i < ab.merged.folds.size(); ++i) {
    CHECK(ab.merged.folds[i].held_out_program ==
          ab.unmerged.folds[i].held_out_program);
    CHECK(ab.merged.folds[i].training_programs ==
          ab.unmerged.folds[i].training_programs);
    // Merging can only reduce the class count.
    CHECK(ab.merged.folds[i].class_count <=
          ab.unmerged.folds[i].class_count);
  }
  CHECK(ab.merged_geomean > 0.0);
  CHECK(ab.unmerged_geomean > 0.0);
  CHECK(ab.merged_geomean ==
        Catch::Approx(ab.merged.geomean_speedup("predicted")));
  CHECK(ab.unmerged_geomean ==
        Catch::Approx(ab.unmerged.geomean_speedup("predicted")));
}

TEST_CASE("ratio-speedup correlation and scatter export") {
  const auto& c = mini_corpus();
  const auto rep = loocv_evaluate(c, mini_options(), 0);

  const auto cor = ratio_speedup_correlation(c, rep);
  CHECK(cor.n == static_cast<int>(c.suite_sample_ids("train").size()));
  CHECK_FALSE(cor.degenerate);
  CHECK(std::abs(cor.r) <= 1.0);

  // Hand-built two-row report: correlation is exactly +1 because the sample
  // with the larger compute share got the larger speedup.
  std::vector<const CorpusSample*> by_ratio;
  for (const auto& s : c.samples) by_ratio.push_back(&s);
  std::sort(by_ratio.begin(), by_ratio.end(),
            [](const CorpusSample* a, const CorpusSample* b) {
              return ratio_ln(a->workload) < ratio_ln(b->workload);
            });
  EvalReport two;
  EvalRow lo;
  lo.scheme = "predicted";
  lo.program_id = by_ratio.front()->meta.program_id;
  lo.dataset_id = by_ratio.front()->meta.dataset_id;
  lo.speedup = 1.0;
  EvalRow hi = lo;
  hi.program_id = by_ratio.back()->meta.program_id;
  hi.dataset_id = by_ratio.back()->meta.dataset_id;
  hi.speedup = 3.0;
  two.rows = {lo, hi};
  const auto perfect = ratio_speedup_correlation(c, two);
  CHECK_FALSE(perfect.degenerate);
  CHECK(perfect.r == Catch::Approx(1.0).margin(1e-12));

  // No rows for the scheme: degenerate, flagged, r pinned to zero.
  const auto none = ratio_speedup_correlation(c, two, "oracle");
  CHECK(none.degenerate);
  CHECK(none.r == 0.0);
  CHECK(none.n == 0);

  // Scatter CSV: one line per predicted row plus the header.
  const auto scatter = scatter_csv(c, rep);
  CHECK(scatter.rfind("ratio_ln,speedup\n", 0) == 0);
  CHECK(static_cast<std::size_t>(
            std::count(scatter.begin(), scatter.end(), '\n')) ==
        c.suite_sample_ids("train").size() + 1);

  EvalReport bogus;
  EvalRow ghost;
  ghost.scheme = "predicted";
  ghost.program_id = "nobody";
  ghost.dataset_id = "nothing";
  bogus.rows = {ghost};
  CHECK_THROWS_AS(ratio_speedup_correlation(c, bogus), LookupError);
}

// Diagnostic for corpus calibration; run explicitly with [tune].
TEST_CASE("default corpus diagnostics", "[.][tune]") {
  const auto corpus = build_corpus(default_corpus_spec(), 1);
  TrainOptions opt;
  opt.seed = 1;

  const auto rep = loocv_evaluate(corpus, opt, 0);
  for (const auto& s : rep.schemes())
    WARN(s << ": geomean speedup " << rep.geomean_speedup(s)
           << ", geomean pct " << rep.geomean_pct(s));

  std::map<std::string, std::string> arch;
  for (const auto& s : corpus.samples) arch[s.meta.dataset_id] = s.archetype;
  std::map<std::string, std::vector<double>> pct_by_arch;
  for (const auto& r : rep.rows)
    if (r.scheme == "predicted")
      pct_by_arch[arch.at(r.dataset_id)].push_back(r.pct_of_oracle);
  for (const auto& [a, v] : pct_by_arch) {
    WARN(a << ": predicted pct geomean " << geomean(v) << " min "
           << *std::min_element(v.begin(), v.end()));
  }

  const auto cor = ratio_speedup_correlation(corpus, rep);
  WARN("ratio correlation r = " << cor.r << " over n = " << cor.n);

  const auto ab = merging_ablation(corpus, opt);
  WARN("ablation merged " << ab.merged_geomean << " vs unmerged "
                          << ab.unmerged_geomean);

  std::map<std::string, const CorpusSample*> by_ds;
  for (const auto& s : corpus.samples) by_ds[s.meta.dataset_id] = &s;
  for (const auto& r : rep.rows) {
    if (r.scheme != "predicted" || r.pct_of_oracle >= 0.6) continue;
    const auto* s = by_ds.at(r.dataset_id);
    const auto orc = oracle_best(s->surface);
    WARN("weak: " << r.dataset_id << " [" << s->archetype << "] predicted "
                  << to_string(r.config) << " pct " << r.pct_of_oracle
                  << " oracle " << to_string(orc.config) << " speedup "
                  << orc.speedup);
  }
  std::map<std::string, std::vector<double>> wk_by_arch, orc_by_arch;
  for (const auto& r : rep.rows) {
    if (r.scheme == "werkhoven")
      wk_by_arch[arch.at(r.dataset_id)].push_back(r.pct_of_oracle);
    if (r.scheme == "oracle")
      orc_by_arch[arch.at(r.dataset_id)].push_back(r.speedup);
  }
  for (const auto& [a, v] : wk_by_arch)
    WARN(a << ": werkhoven pct " << geomean(v) << ", oracle speedup "
           << geomean(orc_by_arch.at(a)));

  for (const auto& f : rep.folds)
    WARN("fold " << f.held_out_program << ": " << f.class_count
                 << " classes");

  // Class composition of one full training run.
  TrainOptions full = opt;
  const auto pipe =
      train_pipeline(corpus, corpus.suite_sample_ids("train"), full);
  for (const auto& cls : pipe.labels.classes) {
    std::map<std::string, int> archs;
    for (int id : cls.members) ++archs[corpus.at(id).archetype];
    std::string mix;
    for (const auto& [a, n] : archs)
      mix += a + ":" + std::to_string(n) + " ";
    WARN("class " << cls.label_id << " rep " << to_string(cls.rep_config)
                  << " size " << cls.members.size() << " [" << mix << "]");
  }
  std::string kept;
  for (const auto& n : pipe.model.feature_names) kept += n + " ";
  WARN("kept features: " << kept);
}

TEST_CASE("checked-in default corpus spec matches the embedded one") {
  const std::string file = read_file(std::string(STREAMTUNE_SOURCE_DIR) +
                                     "/data/default_corpus.json");
  CHECK(file == default_corpus_json());
}
