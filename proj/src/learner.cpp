#include "osslc/learner.hpp"

#include <fstream>
#include <sstream>

#include "osslc/error.hpp"

namespace osslc {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_width(const LearnerModel& model, const Matrix& X) {
  if (X.rows() > 0 && X.cols() != model_width(model)) {
    fail(ErrorKind::DimensionMismatch, "input has " + std::to_string(X.cols()) +
                                           " columns, model was trained on " +
                                           std::to_string(model_width(model)));
  }
}

json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from(const json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("data").get<std::vector<double>>());
}

json tree_json(const DecisionTreeModel& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"impurity", n.impurity},
                     {"n_samples", n.n_samples},
                     {"class_counts", n.class_counts},
                     {"left", n.left},
                     {"right", n.right}});
  }
  return {{"classes", t.classes}, {"n_features", t.n_features}, {"nodes", nodes}};
}

DecisionTreeModel tree_from(const json& j, const TreeHyperparams& hp) {
  DecisionTreeModel t;
  t.hyperparams = hp;
  t.classes = j.at("classes").get<std::vector<int>>();
  t.n_features = j.at("n_features").get<std::size_t>();
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.impurity = n.at("impurity").get<double>();
    node.n_samples = n.at("n_samples").get<int>();
    node.class_counts = n.at("class_counts").get<std::vector<double>>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    t.nodes.push_back(std::move(node));
  }
  return t;
}

json regression_tree_json(const RegressionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    nodes.push_back({{"feature", n.feature},
                     {"threshold", n.threshold},
                     {"value", n.value},
                     {"impurity", n.impurity},
                     {"n_samples", n.n_samples},
                     {"left", n.left},
                     {"right", n.right}});
  }
  return nodes;
}

RegressionTree regression_tree_from(const json& j) {
  RegressionTree t;
  for (const auto& n : j) {
    RegressionTree::Node node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.value = n.at("value").get<double>();
    node.impurity = n.at("impurity").get<double>();
    node.n_samples = n.at("n_samples").get<int>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    t.nodes.push_back(node);
  }
  return t;
}

json optional_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string_view family_name(Family f) {
  switch (f) {
    case Family::DecisionTree: return "decision_tree";
    case Family::RandomForest: return "random_forest";
    case Family::GradientBoosting: return "gradient_boosting";
    case Family::SvmRbf: return "svm_rbf";
  }
  return "unknown";
}

std::optional<Family> parse_family(std::string_view name) {
  for (auto f : {Family::DecisionTree, Family::RandomForest, Family::GradientBoosting, Family::SvmRbf})
    if (family_name(f) == name) return f;
  return std::nullopt;
}

Family family_of(const Hyperparams& hp) { return static_cast<Family>(hp.index()); }
Family family_of(const LearnerModel& model) { return static_cast<Family>(model.index()); }

std::string describe(const Hyperparams& hp) { return hyperparams_to_json(hp).dump(); }

const std::vector<int>& model_classes(const LearnerModel& model) {
  return std::visit([](const auto& m) -> const std::vector<int>& { return m.classes; }, model);
}

std::size_t model_width(const LearnerModel& model) {
  return std::visit([](const auto& m) { return m.n_features; }, model);
}

LearnerModel train(const Hyperparams& hp, const Dataset& ds, std::uint64_t seed) {
  return std::visit(
      overloaded{
          [&](const TreeHyperparams& h) -> LearnerModel { return train_decision_tree(ds, h, seed); },
          [&](const ForestHyperparams& h) -> LearnerModel { return train_random_forest(ds, h, seed); },
          [&](const BoostingHyperparams& h) -> LearnerModel {
            return train_gradient_boosting(ds, h, seed);
          },
          [&](const SvmHyperparams& h) -> LearnerModel { return train_svm_rbf(ds, h, seed); },
      },
      hp);
}

std::vector<int> predict(const LearnerModel& model, const Matrix& X) {
  check_width(model, X);
  std::vector<int> out(X.rows());
  std::visit(
      [&](const auto& m) {
        for (std::size_t r = 0; r < X.rows(); ++r) out[r] = m.predict_one(X.row(r));
      },
      model);
  return out;
}

bool supports_proba(const LearnerModel& model) {
  return !std::holds_alternative<SvmRbfModel>(model);
}

Matrix predict_proba(const LearnerModel& model, const Matrix& X) {
  check_width(model, X);
  if (!supports_proba(model)) {
    fail(ErrorKind::NotProbabilistic, "SVM models do not produce class probabilities");
  }
  Matrix out(X.rows(), model_classes(model).size());
  std::visit(
      overloaded{
          [&](const SvmRbfModel&) {},
          [&](const auto& m) {
            for (std::size_t r = 0; r < X.rows(); ++r) {
              const auto p = m.proba_one(X.row(r));
              std::copy(p.begin(), p.end(), out.row(r).begin());
            }
          },
      },
      model);
  return out;
}

std::vector<double> feature_importance(const LearnerModel& model) {
  return std::visit(
      overloaded{
          [](const SvmRbfModel&) -> std::vector<double> {
            fail(ErrorKind::NotProbabilistic, "SVM models have no impurity-based importances");
          },
          [](const auto& m) -> std::vector<double> { return feature_importance(m); },
      },
      model);
}

json hyperparams_to_json(const Hyperparams& hp) {
  return std::visit(
      overloaded{
          [](const TreeHyperparams& h) -> json {
            return {{"max_depth", h.max_depth},
                    {"min_samples_split", h.min_samples_split},
                    {"min_samples_leaf", h.min_samples_leaf},
                    {"max_leaf_nodes", optional_int(h.max_leaf_nodes)},
                    {"ccp_alpha", h.ccp_alpha}};
          },
          [](const ForestHyperparams& h) -> json {
            return {{"n_trees", h.n_trees},
                    {"max_depth", h.max_depth},
                    {"min_samples_leaf", h.min_samples_leaf},
                    {"min_samples_split", h.min_samples_split},
                    {"max_features", h.max_features},
                    {"bootstrap", h.bootstrap}};
          },
          [](const BoostingHyperparams& h) -> json {
            return {{"n_stages", h.n_stages},
                    {"learning_rate", h.learning_rate},
                    {"max_depth", h.max_depth},
                    {"min_samples_leaf", h.min_samples_leaf}};
          },
          [](const SvmHyperparams& h) -> json {
            return {{"C", h.C},
                    {"gamma", h.gamma},
                    {"tolerance", h.tolerance},
                    {"max_iterations", h.max_iterations}};
          },
      },
      hp);
}

Hyperparams hyperparams_from_json(Family family, const json& j) {
  switch (family) {
    case Family::DecisionTree: {
      TreeHyperparams h;
      h.max_depth = j.at("max_depth").get<int>();
      h.min_samples_split = j.at("min_samples_split").get<int>();
      h.min_samples_leaf = j.at("min_samples_leaf").get<int>();
      if (!j.at("max_leaf_nodes").is_null()) h.max_leaf_nodes = j.at("max_leaf_nodes").get<int>();
      h.ccp_alpha = j.at("ccp_alpha").get<double>();
      return h;
    }
    case Family::RandomForest: {
      ForestHyperparams h;
      h.n_trees = j.at("n_trees").get<int>();
      h.max_depth = j.at("max_depth").get<int>();
      h.min_samples_leaf = j.at("min_samples_leaf").get<int>();
      h.min_samples_split = j.at("min_samples_split").get<int>();
      h.max_features = j.at("max_features").get<int>();
      h.bootstrap = j.at("bootstrap").get<bool>();
      return h;
    }
    case Family::GradientBoosting: {
      BoostingHyperparams h;
      h.n_stages = j.at("n_stages").get<int>();
      h.learning_rate = j.at("learning_rate").get<double>();
      h.max_depth = j.at("max_depth").get<int>();
      h.min_samples_leaf = j.at("min_samples_leaf").get<int>();
      return h;
    }
    case Family::SvmRbf: {
      SvmHyperparams h;
      h.C = j.at("C").get<double>();
      h.gamma = j.at("gamma").get<double>();
      h.tolerance = j.at("tolerance").get<double>();
      h.max_iterations = j.at("max_iterations").get<long>();
      return h;
    }
  }
  fail(ErrorKind::UnsupportedFormat, "unknown model family");
}

json model_to_json(const ModelDocument& doc) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["family"] = family_name(family_of(doc.model));
  j["classes"] = model_classes(doc.model);
  j["selected_features"] = doc.selected_features;
  j["provenance"] = doc.provenance;
  std::visit(
      overloaded{
          [&](const DecisionTreeModel& m) {
            j["hyperparams"] = hyperparams_to_json(m.hyperparams);
            j["payload"] = {{"tree", tree_json(m)}};
          },
          [&](const RandomForestModel& m) {
            j["hyperparams"] = hyperparams_to_json(m.hyperparams);
            json trees = json::array();
            for (const auto& t : m.trees) trees.push_back(tree_json(t));
            j["payload"] = {{"n_features", m.n_features}, {"tree_seeds", m.tree_seeds}, {"trees", trees}};
          },
          [&](const GradientBoostingModel& m) {
            j["hyperparams"] = hyperparams_to_json(m.hyperparams);
            json stages = json::array();
            for (const auto& stage : m.stages) {
              json per_class = json::array();
              for (const auto& t : stage) per_class.push_back(regression_tree_json(t));
              stages.push_back(per_class);
            }
            j["payload"] = {{"n_features", m.n_features},
                            {"initial_scores", m.initial_scores},
                            {"train_deviance", m.train_deviance},
                            {"stages", stages}};
          },
          [&](const SvmRbfModel& m) {
            j["hyperparams"] = hyperparams_to_json(m.hyperparams);
            j["standardizer"] = {{"mean", m.standardizer.mean}, {"std", m.standardizer.std}};
            json machines = json::array();
            for (const auto& b : m.machines) {
              machines.push_back({{"positive_class", b.positive_class},
                                  {"support_vectors", matrix_json(b.support_vectors)},
                                  {"dual_coef", b.dual_coef},
                                  {"bias", b.bias},
                                  {"iterations", b.iterations}});
            }
            j["payload"] = {{"n_features", m.n_features}, {"machines", machines}};
          },
      },
      doc.model);
  return j;
}

ModelDocument model_from_json(const json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version > kModelFormatVersion) {
      fail(ErrorKind::UnsupportedFormat, "model format_version " + std::to_string(version) +
                                             " is newer than supported version " +
                                             std::to_string(kModelFormatVersion));
    }
    const auto family = parse_family(j.at("family").get<std::string>());
    if (!family) fail(ErrorKind::UnsupportedFormat, "unknown model family " + j.at("family").dump());
    ModelDocument doc;
    doc.selected_features = j.at("selected_features").get<std::vector<std::string>>();
    doc.provenance = j.value("provenance", json::object());
    const auto hp = hyperparams_from_json(*family, j.at("hyperparams"));
    const auto classes = j.at("classes").get<std::vector<int>>();
    const json& payload = j.at("payload");
    switch (*family) {
      case Family::DecisionTree:
        doc.model = tree_from(payload.at("tree"), std::get<TreeHyperparams>(hp));
        break;
      case Family::RandomForest: {
        RandomForestModel m;
        m.hyperparams = std::get<ForestHyperparams>(hp);
        m.classes = classes;
        m.n_features = payload.at("n_features").get<std::size_t>();
        m.tree_seeds = payload.at("tree_seeds").get<std::vector<std::uint64_t>>();
        TreeHyperparams member;
        member.max_depth = m.hyperparams.max_depth;
        member.min_samples_leaf = m.hyperparams.min_samples_leaf;
        member.min_samples_split = m.hyperparams.min_samples_split;
        for (const auto& t : payload.at("trees")) m.trees.push_back(tree_from(t, member));
        doc.model = std::move(m);
        break;
      }
      case Family::GradientBoosting: {
        GradientBoostingModel m;
        m.hyperparams = std::get<BoostingHyperparams>(hp);
        m.classes = classes;
        m.n_features = payload.at("n_features").get<std::size_t>();
        m.initial_scores = payload.at("initial_scores").get<std::vector<double>>();
        m.train_deviance = payload.at("train_deviance").get<std::vector<double>>();
        for (const auto& stage : payload.at("stages")) {
          std::vector<RegressionTree> trees;
          for (const auto& t : stage) trees.push_back(regression_tree_from(t));
          m.stages.push_back(std::move(trees));
        }
        doc.model = std::move(m);
        break;
      }
      case Family::SvmRbf: {
        SvmRbfModel m;
        m.hyperparams = std::get<SvmHyperparams>(hp);
        m.classes = classes;
        m.n_features = payload.at("n_features").get<std::size_t>();
        m.standardizer.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
        m.standardizer.std = j.at("standardizer").at("std").get<std::vector<double>>();
        for (const auto& b : payload.at("machines")) {
          BinarySvm machine;
          machine.positive_class = b.at("positive_class").get<int>();
          machine.support_vectors = matrix_from(b.at("support_vectors"));
          machine.dual_coef = b.at("dual_coef").get<std::vector<double>>();
          machine.bias = b.at("bias").get<double>();
          machine.iterations = b.at("iterations").get<long>();
          m.machines.push_back(std::move(machine));
        }
        doc.model = std::move(m);
        break;
      }
    }
    return doc;
  } catch (const json::exception& e) {
    fail(ErrorKind::UnsupportedFormat, std::string("malformed model document: ") + e.what());
  }
}

void save_model(const ModelDocument& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << model_to_json(doc).dump(1) << "\n";
}

ModelDocument load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingFile, "cannot open model " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    fail(ErrorKind::UnsupportedFormat, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace osslc
