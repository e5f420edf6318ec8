#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "streamtune/dataset.hpp"
#include "streamtune/errors.hpp"
#include "streamtune/features.hpp"
#include "streamtune/knn.hpp"
#include "streamtune/svm.hpp"
#include "streamtune/tree.hpp"
#include "streamtune/types.hpp"

namespace streamtune {

enum class LearnerKind {
  svm_linear,
  svm_quadratic,
  svm_gaussian,
  knn,
  weighted_knn,
  tree,
};

inline std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::svm_linear: return "svm-lin";
    case LearnerKind::svm_quadratic: return "svm-quad";
    case LearnerKind::svm_gaussian: return "svm-rbf";
    case LearnerKind::knn: return "knn";
    case LearnerKind::weighted_knn: return "wknn";
    case LearnerKind::tree: return "tree";
  }
  return "svm-quad";
}

inline LearnerKind learner_from_string(const std::string& s) {
  if (s == "svm-lin") return LearnerKind::svm_linear;
  if (s == "svm-quad") return LearnerKind::svm_quadratic;
  if (s == "svm-rbf") return LearnerKind::svm_gaussian;
  if (s == "knn") return LearnerKind::knn;
  if (s == "wknn") return LearnerKind::weighted_knn;
  if (s == "tree") return LearnerKind::tree;
  throw ParseError("unknown learner kind: " + s);
}

/// A classifier plus everything needed to apply it to a fresh workload:
/// which candidate features it consumes, how to scale them, and which
/// stream configuration each class label stands for.
struct TrainedModel {
  LearnerKind kind = LearnerKind::svm_quadratic;
  Hyperparams params;
  std::vector<std::string> feature_names;
  ScalingParams scaling;
  std::map<int, StreamConfig> label_configs;
  std::variant<SvmModel, KnnModel, TreeModel> impl;

  int predict_label(const std::vector<double>& scaled) const {
    if (std::holds_alternative<SvmModel>(impl))
      return std::get<SvmModel>(impl).predict(scaled);
    if (std::holds_alternative<KnnModel>(impl))
      return predict_knn(std::get<KnnModel>(impl), scaled);
    return predict_tree(std::get<TreeModel>(impl), scaled);
  }

  StreamConfig config_for(int label) const {
    const auto it = label_configs.find(label);
    if (it == label_configs.end())
      throw LookupError("model has no configuration for label " +
                        std::to_string(label));
    return it->second;
  }

  std::pair<int, StreamConfig> predict(const std::vector<double>& scaled) const {
    const int label = predict_label(scaled);
    return {label, config_for(label)};
  }

  json to_json() const;
  static TrainedModel from_json(const json& j);
};

/// Trains the classifier part only; callers attach features/scaling/labels.
inline TrainedModel train_model(const Dataset& d, LearnerKind kind,
                                const Hyperparams& h) {
  TrainedModel m;
  m.kind = kind;
  m.params = h;
  switch (kind) {
    case LearnerKind::svm_linear:
      m.params.kernel = KernelKind::linear;
      m.impl = train_svm(d, m.params);
      break;
    case LearnerKind::svm_quadratic:
      m.params.kernel = KernelKind::quadratic;
      m.impl = train_svm(d, m.params);
      break;
    case LearnerKind::svm_gaussian:
      m.params.kernel = KernelKind::gaussian;
      m.impl = train_svm(d, m.params);
      break;
    case LearnerKind::knn:
      m.impl = train_knn(d, h.knn_k, false);
      break;
    case LearnerKind::weighted_knn:
      m.impl = train_knn(d, h.knn_k, true);
      break;
    case LearnerKind::tree:
      m.impl = train_tree(d, h.tree_max_depth, h.tree_min_leaf);
      break;
  }
  return m;
}

inline double accuracy(const TrainedModel& m, const Dataset& d) {
  if (d.rows.empty())
    throw InsufficientDataError("accuracy needs at least one row");
  std::size_t hits = 0;
  for (const auto& r : d.rows)
    if (m.predict_label(r.x) == r.label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(d.rows.size());
}

namespace detail {

inline json hyperparams_to_json(const Hyperparams& h) {
  return json{{"kernel", to_string(h.kernel)},
              {"C", h.C},
              {"gamma", h.gamma},
              {"coef0", h.coef0},
              {"knn_k", h.knn_k},
              {"tree_max_depth", h.tree_max_depth},
              {"tree_min_leaf", h.tree_min_leaf}};
}

inline Hyperparams hyperparams_from_json(const json& j) {
  Hyperparams h;
  h.kernel = kernel_from_string(j.at("kernel").get<std::string>());
  h.C = j.at("C").get<double>();
  h.gamma = j.at("gamma").get<double>();
  h.coef0 = j.at("coef0").get<double>();
  h.knn_k = j.at("knn_k").get<int>();
  h.tree_max_depth = j.at("tree_max_depth").get<int>();
  h.tree_min_leaf = j.at("tree_min_leaf").get<int>();
  return h;
}

}  // namespace detail

inline json TrainedModel::to_json() const {
  json j;
  j["version"] = "1";
  j["kind"] = to_string(kind);
  j["hyperparams"] = detail::hyperparams_to_json(params);
  j["features"] = feature_names;
  j["scaling"] = {{"min", scaling.min}, {"max", scaling.max}};
  json labels = json::array();
  for (const auto& [id, cfg] : label_configs)
    labels.push_back({{"id", id},
                      {"partitions", cfg.partitions},
                      {"tasks", cfg.tasks}});
  j["labels"] = labels;

  if (std::holds_alternative<SvmModel>(impl)) {
    const auto& s = std::get<SvmModel>(impl);
    json machines = json::array();
    for (const auto& m : s.machines)
      machines.push_back({{"pos", m.label_pos},
                          {"neg", m.label_neg},
                          {"bias", m.bias},
                          {"coef", m.coef},
                          {"sv", m.support_vectors}});
    j["svm"] = {{"dim", s.dim}, {"labels", s.labels}, {"machines", machines}};
  } else if (std::holds_alternative<KnnModel>(impl)) {
    const auto& k = std::get<KnnModel>(impl);
    j["knn"] = {{"dim", k.dim},
                {"k", k.k},
                {"weighted", k.weighted},
                {"points", k.points},
                {"labels", k.labels}};
  } else {
    const auto& t = std::get<TreeModel>(impl);
    json nodes = json::array();
    for (const auto& n : t.nodes)
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"label", n.label}});
    j["tree"] = {{"dim", t.dim}, {"nodes", nodes}};
  }
  return j;
}

inline TrainedModel TrainedModel::from_json(const json& j) {
  try {
    if (j.at("version").get<std::string>() != "1")
      throw ParseError("unsupported model file version");
    TrainedModel m;
    m.kind = learner_from_string(j.at("kind").get<std::string>());
    m.params = detail::hyperparams_from_json(j.at("hyperparams"));
    m.feature_names = j.at("features").get<std::vector<std::string>>();
    m.scaling.min = j.at("scaling").at("min").get<std::vector<double>>();
    m.scaling.max = j.at("scaling").at("max").get<std::vector<double>>();
    for (const auto& row : j.at("labels"))
      m.label_configs[row.at("id").get<int>()] = {
          row.at("partitions").get<int>(), row.at("tasks").get<int>()};

    if (j.contains("svm")) {
      SvmModel s;
      s.params = m.params;
      s.dim = j.at("svm").at("dim").get<std::size_t>();
      s.labels = j.at("svm").at("labels").get<std::vector<int>>();
      for (const auto& row : j.at("svm").at("machines")) {
        BinarySvm b;
        b.label_pos = row.at("pos").get<int>();
        b.label_neg = row.at("neg").get<int>();
        b.bias = row.at("bias").get<double>();
        b.coef = row.at("coef").get<std::vector<double>>();
        b.support_vectors =
            row.at("sv").get<std::vector<std::vector<double>>>();
        s.machines.push_back(std::move(b));
      }
      m.impl = std::move(s);
    } else if (j.contains("knn")) {
      KnnModel k;
      k.dim = j.at("knn").at("dim").get<std::size_t>();
      k.k = j.at("knn").at("k").get<int>();
      k.weighted = j.at("knn").at("weighted").get<bool>();
      k.points = j.at("knn").at("points").get<std::vector<std::vector<double>>>();
      k.labels = j.at("knn").at("labels").get<std::vector<int>>();
      m.impl = std::move(k);
    } else if (j.contains("tree")) {
      TreeModel t;
      t.dim = j.at("tree").at("dim").get<std::size_t>();
      for (const auto& row : j.at("tree").at("nodes")) {
        TreeNode n;
        n.feature = row.at("feature").get<int>();
        n.threshold = row.at("threshold").get<double>();
        n.left = row.at("left").get<int>();
        n.right = row.at("right").get<int>();
        n.label = row.at("label").get<int>();
        t.nodes.push_back(n);
      }
      m.impl = std::move(t);
    } else {
      throw ParseError("model file carries no classifier payload");
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace streamtune
