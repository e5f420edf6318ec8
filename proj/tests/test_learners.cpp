#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <vector>

#include "streamtune/cv.hpp"
#include "streamtune/knn.hpp"
#include "streamtune/model.hpp"
#include "streamtune/rng.hpp"
#include "streamtune/tree.hpp"

using namespace streamtune;

namespace {

Dataset line_dataset(const std::vector<double>& xs,
                     const std::vector<int>& labels) {
  Dataset d;
  for (std::size_t i = 0; i < xs.size(); ++i)
    d.rows.push_back({{xs[i]}, labels[i], {static_cast<int>(i), "p", "d"}});
  return d;
}

Dataset blobs2(int per_class, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  int id = 0;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < per_class; ++i)
      d.rows.push_back({{4.0 * c + rng.uniform(-1.0, 1.0),
                         4.0 * c + rng.uniform(-1.0, 1.0)},
                        c,
                        {id++, "p" + std::to_string(c), "d"}});
  return d;
}

// Route every training row through the tree and count rows per leaf node.
std::map<int, int> leaf_counts(const TreeModel& m, const Dataset& d) {
  std::map<int, int> counts;
  for (const auto& r : d.rows) {
    int at = 0;
    while (m.nodes[at].feature >= 0)
      at = r.x[static_cast<std::size_t>(m.nodes[at].feature)] <=
                   m.nodes[at].threshold
               ? m.nodes[at].left
               : m.nodes[at].right;
    ++counts[at];
  }
  return counts;
}

bool bit_equal(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("knn k=1 returns the label of an exact hit") {
  const auto d = line_dataset({0.0, 1.0, 2.0, 10.0}, {3, 3, 7, 7});
  const auto m = train_knn(d, 1, false);
  CHECK(predict_knn(m, {0.0}) == 3);
  CHECK(predict_knn(m, {10.0}) == 7);
}

TEST_CASE("knn k=3 majority vote") {
  // Nearest three to 0.6 are {0, 1, 2} with labels {0, 0, 1}.
  const auto d = line_dataset({0.0, 1.0, 2.0, 10.0}, {0, 0, 1, 1});
  const auto m = train_knn(d, 3, false);
  CHECK(predict_knn(m, {0.6}) == 0);
}

TEST_CASE("weighted knn lets the nearer point win an otherwise tied vote") {
  const auto d = line_dataset({1.0, 0.5}, {0, 1});
  // Unweighted k=2 ties 1:1 and falls to the smaller label id.
  CHECK(predict_knn(train_knn(d, 2, false), {0.0}) == 0);
  // Weighted, the nearer label-1 point dominates: 1/0.5 > 1/1.0.
  CHECK(predict_knn(train_knn(d, 2, true), {0.0}) == 1);
}

TEST_CASE("knn equidistant neighbors resolve by row order") {
  const auto d = line_dataset({-1.0, 1.0}, {5, 2});
  // Both rows sit at distance 1 from the origin; the first row wins the
  // single slot.
  CHECK(predict_knn(train_knn(d, 1, false), {0.0}) == 5);
}

TEST_CASE("knn with k equal to the row count predicts the global majority") {
  Rng rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    Dataset d;
    std::map<int, int> counts;
    const int rows = 5 + rng.uniform_int(0, 10);
    for (int i = 0; i < rows; ++i) {
      const int label = rng.uniform_int(0, 2);
      ++counts[label];
      d.rows.push_back(
          {{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)}, label, {i, "p", "d"}});
    }
    int majority = counts.begin()->first, best = counts.begin()->second;
    for (const auto& [l, c] : counts)
      if (c > best) {
        best = c;
        majority = l;
      }
    const auto m = train_knn(d, rows, false);
    for (int q = 0; q < 5; ++q)
      CHECK(predict_knn(m, {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)}) ==
            majority);
  }
}

TEST_CASE("knn argument validation") {
  const auto d = line_dataset({0.0, 1.0}, {0, 1});
  CHECK_THROWS_AS(train_knn(d, 0, false), InvalidArgumentError);
  CHECK_THROWS_AS(train_knn(d, -2, true), InvalidArgumentError);
  CHECK_THROWS_AS(train_knn(d, 3, false), InvalidArgumentError);  // k > rows
  CHECK_THROWS_AS(train_knn(Dataset{}, 1, false), InvalidArgumentError);
  const auto m = train_knn(d, 1, false);
  CHECK_THROWS_AS(predict_knn(m, {0.0, 1.0}), InputError);
}

TEST_CASE("tree on a pure dataset is a single leaf") {
  const auto d = line_dataset({0.0, 1.0, 2.0}, {4, 4, 4});
  const auto m = train_tree(d, 8, 1);
  REQUIRE(m.nodes.size() == 1);
  CHECK(m.nodes[0].feature == -1);
  for (const auto& r : d.rows) CHECK(predict_tree(m, r.x) == 4);
}

TEST_CASE("tree splits threshold-separable data at depth one") {
  const auto d = line_dataset({0.0, 1.0, 2.0, 3.0}, {0, 0, 1, 1});
  const auto m = train_tree(d, 8, 1);
  REQUIRE(m.nodes.size() == 3);
  CHECK(m.nodes[0].feature == 0);
  CHECK(m.nodes[0].threshold == Catch::Approx(1.5));
  for (const auto& r : d.rows) CHECK(predict_tree(m, r.x) == r.label);
}

TEST_CASE("gini of a balanced binary node is one half") {
  CHECK(detail::gini_impurity({{0, 5}, {1, 5}}, 10) == Catch::Approx(0.5));
  CHECK(detail::gini_impurity({{3, 4}}, 4) == 0.0);
}

TEST_CASE("tree accuracy is non-decreasing in max depth") {
  Rng rng(777);
  for (int trial = 0; trial < 10; ++trial) {
    Dataset d;
    for (int i = 0; i < 40; ++i)
      d.rows.push_back({{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)},
                        static_cast<int>(rng.uniform_int(0, 2)),
                        {i, "p", "d"}});
    double prev = 0.0;
    for (int depth = 1; depth <= 6; ++depth) {
      TrainedModel m;
      m.impl = train_tree(d, depth, 1);
      const double acc = accuracy(m, d);
      CHECK(acc >= prev);
      prev = acc;
    }
  }
}

TEST_CASE("tree honors the minimum leaf size") {
  Rng rng(55);
  Dataset d;
  for (int i = 0; i < 60; ++i)
    d.rows.push_back({{rng.uniform(0.0, 1.0)}, static_cast<int>(rng.uniform_int(0, 1)),
                      {i, "p", "d"}});
  for (int min_leaf : {1, 3, 7}) {
    const auto m = train_tree(d, 10, min_leaf);
    for (const auto& [node, count] : leaf_counts(m, d))
      CHECK(count >= min_leaf);
  }
}

TEST_CASE("tree leaf ties fall to the smaller label") {
  // Identical feature values cannot be split; the 1:1 leaf majority tie
  // resolves to the smaller label id.
  const auto d = line_dataset({1.0, 1.0}, {6, 2});
  const auto m = train_tree(d, 8, 1);
  REQUIRE(m.nodes.size() == 1);
  CHECK(predict_tree(m, {1.0}) == 2);
}

TEST_CASE("tree validation") {
  CHECK_THROWS_AS(train_tree(Dataset{}, 4, 1), DegenerateDatasetError);
  const auto d = line_dataset({0.0, 1.0}, {0, 1});
  CHECK_THROWS_AS(train_tree(d, 0, 1), InvalidArgumentError);
  CHECK_THROWS_AS(train_tree(d, 4, 0), InvalidArgumentError);
  const auto m = train_tree(d, 4, 1);
  CHECK_THROWS_AS(predict_tree(m, {0.0, 1.0}), InputError);
}

TEST_CASE("stratified folds balance each label across folds") {
  Dataset d;
  int id = 0;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 10; ++i)
      d.rows.push_back({{static_cast<double>(i)}, c, {id++, "p", "d"}});
  const auto folds = make_stratified_folds(d, 5, 99);

  REQUIRE(folds.size() == 5);
  std::vector<bool> seen(d.rows.size(), false);
  for (const auto& f : folds)
    for (auto i : f) {
      CHECK(!seen[i]);
      seen[i] = true;
    }
  CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));

  for (int c = 0; c < 3; ++c) {
    for (const auto& f : folds) {
      int n = 0;
      for (auto i : f) n += d.rows[i].label == c;
      CHECK(n == 2);  // 10 rows of each label over 5 folds
    }
  }

  CHECK(make_stratified_folds(d, 5, 99) == folds);  // deterministic
  CHECK(make_stratified_folds(d, 5, 100) != folds);
  CHECK_THROWS_AS(make_stratified_folds(d, 1, 0), InvalidArgumentError);
  CHECK_THROWS_AS(make_stratified_folds(Dataset{}, 5, 0),
                  InsufficientDataError);
}

TEST_CASE("grid search returns the sole candidate") {
  const auto d = blobs2(10, 11);
  Hyperparams h;
  h.knn_k = 4;
  const auto pick = grid_search_cv(d, LearnerKind::knn, {h}, 5, 7);
  CHECK(pick.knn_k == 4);
}

TEST_CASE("grid search ties keep the earlier grid entry") {
  const auto d = blobs2(10, 12);
  // Both candidates score identically for knn (tree_max_depth is inert);
  // the tie must resolve to grid order.
  Hyperparams a, b;
  a.knn_k = b.knn_k = 3;
  a.tree_max_depth = 4;
  b.tree_max_depth = 9;
  const auto pick = grid_search_cv(d, LearnerKind::knn, {a, b}, 5, 7);
  CHECK(pick.tree_max_depth == 4);
}

TEST_CASE("grid search prefers the k that survives label noise") {
  // Two tight clusters plus one mislabeled plant inside each, surrounded by
  // clean victims: k=1 copies the plant's label, k=5 outvotes it.
  Dataset d;
  int id = 0;
  auto add = [&](double x, double y, int label) {
    d.rows.push_back({{x, y}, label, {id++, "p", "d"}});
  };
  for (int c = 0; c < 2; ++c) {
    const double ox = 6.0 * c;
    add(ox + 0.00, 0.00, 1 - c);  // mislabeled plant
    add(ox + 0.05, 0.00, c);
    add(ox - 0.05, 0.00, c);
    add(ox + 0.00, 0.05, c);
    add(ox + 0.00, -0.05, c);
    add(ox + 0.60, 0.60, c);
    add(ox - 0.60, 0.60, c);
    add(ox + 0.60, -0.60, c);
    add(ox - 0.60, -0.60, c);
  }
  Hyperparams k1, k5;
  k1.knn_k = 1;
  k5.knn_k = 5;
  const auto pick = grid_search_cv(d, LearnerKind::knn, {k1, k5}, 5, 42);
  CHECK(pick.knn_k == 5);
}

TEST_CASE("grid search over svm penalties is reproducible") {
  const auto d = blobs2(8, 13);
  std::vector<Hyperparams> grid;
  for (double c : {0.1, 1.0, 10.0, 100.0}) {
    Hyperparams h;
    h.kernel = KernelKind::quadratic;
    h.C = c;
    grid.push_back(h);
  }
  const auto first = grid_search_cv(d, LearnerKind::svm_quadratic, grid, 5, 3);
  const auto again = grid_search_cv(d, LearnerKind::svm_quadratic, grid, 5, 3);
  CHECK(first.C == again.C);
  // Separable blobs score perfectly for every C, so the tie rule pins C to
  // the first grid entry.
  CHECK(first.C == 0.1);
}

TEST_CASE("grid search rejects an empty grid") {
  const auto d = blobs2(5, 14);
  CHECK_THROWS_AS(grid_search_cv(d, LearnerKind::knn, {}, 5, 7),
                  InvalidArgumentError);
}

TEST_CASE("train_model dispatches to every learner kind") {
  const auto d = blobs2(8, 15);
  for (auto kind : {LearnerKind::svm_linear, LearnerKind::svm_quadratic,
                    LearnerKind::svm_gaussian, LearnerKind::knn,
                    LearnerKind::weighted_knn, LearnerKind::tree}) {
    Hyperparams h;
    h.knn_k = 3;
    const auto m = train_model(d, kind, h);
    CHECK(accuracy(m, d) >= 0.9);
    CHECK(learner_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(learner_from_string("perceptron"), ParseError);
}

TEST_CASE("knn and tree models survive a json round trip bit-exactly") {
  const auto d = blobs2(8, 16);
  Rng rng(1234);

  for (auto kind : {LearnerKind::weighted_knn, LearnerKind::tree}) {
    Hyperparams h;
    h.knn_k = 3;
    TrainedModel m = train_model(d, kind, h);
    m.feature_names = {"f0", "f1"};
    m.scaling = {{0.0, 0.0}, {1.0, 1.0}};
    m.label_configs = {{0, {1, 1}}, {1, {8, 32}}};

    const auto back = TrainedModel::from_json(json::parse(m.to_json().dump()));
    CHECK(back.kind == kind);
    for (int t = 0; t < 100; ++t) {
      const std::vector<double> p = {rng.uniform(-1.0, 5.0),
                                     rng.uniform(-1.0, 5.0)};
      CHECK(m.predict_label(p) == back.predict_label(p));
    }
    if (kind == LearnerKind::tree) {
      const auto& ta = std::get<TreeModel>(m.impl);
      const auto& tb = std::get<TreeModel>(back.impl);
      REQUIRE(ta.nodes.size() == tb.nodes.size());
      for (std::size_t i = 0; i < ta.nodes.size(); ++i)
        CHECK(bit_equal(ta.nodes[i].threshold, tb.nodes[i].threshold));
    }
  }
}

TEST_CASE("model predict resolves labels to configurations") {
  const auto d = blobs2(6, 17);
  Hyperparams h;
  h.knn_k = 1;
  TrainedModel m = train_model(d, LearnerKind::knn, h);
  m.label_configs = {{0, {2, 4}}, {1, {16, 64}}};

  const auto [label0, cfg0] = m.predict(d.rows.front().x);
  CHECK(label0 == 0);
  CHECK(cfg0 == StreamConfig{2, 4});
  const auto [label1, cfg1] = m.predict(d.rows.back().x);
  CHECK(label1 == 1);
  CHECK(cfg1 == StreamConfig{16, 64});

  m.label_configs.erase(1);
  CHECK_THROWS_AS(m.predict(d.rows.back().x), LookupError);
}
