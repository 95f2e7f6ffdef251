#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "osslc/dataset.hpp"
#include "osslc/ensemble.hpp"
#include "osslc/svm.hpp"
#include "osslc/tree.hpp"

namespace osslc {

/// Model families, declared from computationally cheapest to most expensive.
enum class Family { DecisionTree = 0, RandomForest = 1, GradientBoosting = 2, SvmRbf = 3 };

std::string_view family_name(Family f);
std::optional<Family> parse_family(std::string_view name);

using Hyperparams =
    std::variant<TreeHyperparams, ForestHyperparams, BoostingHyperparams, SvmHyperparams>;

Family family_of(const Hyperparams& hp);
std::string describe(const Hyperparams& hp);

using LearnerModel =
    std::variant<DecisionTreeModel, RandomForestModel, GradientBoostingModel, SvmRbfModel>;

Family family_of(const LearnerModel& model);
const std::vector<int>& model_classes(const LearnerModel& model);
std::size_t model_width(const LearnerModel& model);

LearnerModel train(const Hyperparams& hp, const Dataset& ds, std::uint64_t seed);

/// Throws DimensionMismatch when X has the wrong width.
std::vector<int> predict(const LearnerModel& model, const Matrix& X);

/// Row-stochastic class probabilities (columns follow model_classes). Tree,
/// forest and boosting only; SVM throws NotProbabilistic.
Matrix predict_proba(const LearnerModel& model, const Matrix& X);
bool supports_proba(const LearnerModel& model);

/// Throws NotProbabilistic for SVM models, which have no impurity importances.
std::vector<double> feature_importance(const LearnerModel& model);

// ---------------------------------------------------------------------------
// Persistence

inline constexpr int kModelFormatVersion = 1;

/// A trained model with the columns it was fit on and free-form provenance.
struct ModelDocument {
  LearnerModel model;
  std::vector<std::string> selected_features;
  nlohmann::json provenance = nlohmann::json::object();
};

nlohmann::json hyperparams_to_json(const Hyperparams& hp);
Hyperparams hyperparams_from_json(Family family, const nlohmann::json& j);

nlohmann::json model_to_json(const ModelDocument& doc);
/// Throws UnsupportedFormat for newer format versions or unknown families.
ModelDocument model_from_json(const nlohmann::json& j);

void save_model(const ModelDocument& doc, const std::filesystem::path& path);
ModelDocument load_model(const std::filesystem::path& path);

}  // namespace osslc
