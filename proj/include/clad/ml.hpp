#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "clad/features.hpp"

namespace clad {

// Standardization, four from-scratch classifiers, leave-one-subject-out
// cross-validation and zero-shot cross-lingual evaluation. Everything is
// deterministic given (spec, seed, data).

struct Dataset {
  Eigen::MatrixXd X;  // N x kFeatureCount
  std::vector<int> y;  // 0 = control, 1 = aphasia
  std::vector<std::string> speaker_ids;
  std::string language;
  std::uint64_t schema = feature_schema_fingerprint();

  int rows() const { return static_cast<int>(X.rows()); }
};

// Throws TooFewRows / LengthMismatch / NonFiniteFeature / SchemaMismatch
// when the Dataset invariants do not hold.
void validate_dataset(const Dataset& data);

struct Scaler {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;  // population std; constant columns stored as 1
  std::vector<int> constant_columns;
  int fit_rows = 0;
};

// Column-wise (x - mean) / std with population std. Constant columns pass
// through unchanged and are flagged so callers can warn.
Scaler fit_scaler(const Eigen::MatrixXd& X);
Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& X);

enum class ClassifierKind {
  LinearSvm,
  DecisionTree,
  RandomForest,
  GradientBoosting,
};

const char* classifier_kind_name(ClassifierKind kind);
ClassifierKind classifier_kind_from_name(const std::string& name);

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::LinearSvm;
  std::uint64_t seed = 0;
  // trees (decision_tree / random_forest default depth 6; boosting 3)
  int max_depth = 6;
  int min_leaf = 2;
  // random forest
  int num_trees = 100;
  int mtry = 5;  // ceil(sqrt(24))
  bool bootstrap = true;
  // gradient boosting
  int rounds = 100;
  double learning_rate = 0.1;
  double lambda = 1.0;
  // linear svm
  double cost = 1.0;
  int epochs = 200;
  // applied to every kind by default; may be disabled for tree models
  bool scale_features = true;

  static ClassifierSpec defaults(ClassifierKind kind, std::uint64_t seed = 0);
};

// Builds a spec from a kind name and textual hyperparameter pairs; keys not
// valid for that kind raise ConfigError naming the offending key.
ClassifierSpec make_classifier_spec(
    const std::string& kind_name,
    const std::vector<std::pair<std::string, std::string>>& hyperparameters,
    std::uint64_t seed);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf payload: class-1 probability or boosting weight

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(const Eigen::RowVectorXd& row) const;
};

struct TrainedModel {
  ClassifierSpec spec;
  std::uint64_t schema = feature_schema_fingerprint();
  bool scaled = true;
  Scaler scaler;
  // linear svm
  Eigen::VectorXd weights;
  double bias = 0.0;
  // decision tree / random forest / gradient boosting
  std::vector<Tree> trees;
  double base_raw = 0.0;  // boosting prior logit
};

TrainedModel train(const ClassifierSpec& spec, const Dataset& data);

// Class-1 score in [0, 1]; 0.5 ties predict label 1.
std::vector<double> predict_scores(const TrainedModel& model,
                                   const Eigen::MatrixXd& X);
std::vector<int> predict(const TrainedModel& model, const Eigen::MatrixXd& X);

struct SpeakerOutcome {
  std::string speaker_id;
  int truth = 0;
  int predicted = 0;
};

struct FoldTrace {
  std::string held_out_id;
  std::vector<std::string> train_ids;
  std::vector<std::string> scaler_fit_ids;
  int scaler_fit_rows = 0;
};

struct LosoResult {
  double accuracy = 0.0;
  std::vector<SpeakerOutcome> outcomes;
  std::vector<FoldTrace> folds;
};

// One fold per speaker; the scaler is refit inside each fold on the
// training split only. Requires N >= 3.
LosoResult loso_cv(const ClassifierSpec& spec, const Dataset& data);

struct TransferResult {
  double accuracy = 0.0;
  std::vector<SpeakerOutcome> outcomes;
};

// Scaler fit on source only; classifier trained on all of source;
// accuracy reported on target.
TransferResult zero_shot_eval(const ClassifierSpec& spec,
                              const Dataset& source, const Dataset& target);

// Versioned binary container with the schema fingerprint embedded.
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace clad
