#include "clad/ml.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <string>

#include "clad/error.hpp"
#include "clad/rng.hpp"

namespace clad {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sigmoid(double raw) { return 1.0 / (1.0 + std::exp(-raw)); }

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorCode::ConfigError,
              "hyperparameter '" + key + "' expects a boolean, got '" +
                  value + "'");
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    int parsed = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError,
                "hyperparameter '" + key + "' expects an integer, got '" +
                    value + "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    double parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError,
                "hyperparameter '" + key + "' expects a number, got '" +
                    value + "'");
  }
}

}  // namespace

void validate_dataset(const Dataset& data) {
  if (data.X.cols() != kFeatureCount)
    throw Error(ErrorCode::SchemaMismatch,
                "dataset has " + std::to_string(data.X.cols()) +
                    " columns, schema has " + std::to_string(kFeatureCount));
  const int n = data.rows();
  if (n < 2)
    throw Error(ErrorCode::TooFewRows,
                "dataset needs at least 2 rows, has " + std::to_string(n));
  if (static_cast<int>(data.y.size()) != n ||
      static_cast<int>(data.speaker_ids.size()) != n)
    throw Error(ErrorCode::LengthMismatch,
                "rows, labels and speaker ids must align");
  std::set<std::string> seen;
  for (const std::string& id : data.speaker_ids)
    if (!seen.insert(id).second)
      throw Error(ErrorCode::ConfigError, "duplicate speaker id: " + id);
  for (int label : data.y)
    if (label != 0 && label != 1)
      throw Error(ErrorCode::ConfigError,
                  "labels must be 0 or 1, got " + std::to_string(label));
  if (!data.X.allFinite())
    throw Error(ErrorCode::NonFiniteFeature,
                "dataset contains non-finite feature values");
}

Scaler fit_scaler(const Eigen::MatrixXd& X) {
  const int n = static_cast<int>(X.rows());
  if (n < 2)
    throw Error(ErrorCode::TooFewRows,
                "scaler needs at least 2 rows, has " + std::to_string(n));
  Scaler scaler;
  scaler.fit_rows = n;
  scaler.means = X.colwise().mean();
  scaler.stds.resize(X.cols());
  for (int c = 0; c < X.cols(); ++c) {
    double variance =
        (X.col(c).array() - scaler.means(c)).square().sum() / double(n);
    double std_dev = std::sqrt(variance);
    if (std_dev > 0.0) {
      scaler.stds(c) = std_dev;
    } else {
      scaler.stds(c) = 1.0;
      scaler.constant_columns.push_back(c);
    }
  }
  return scaler;
}

Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& X) {
  if (X.cols() != scaler.means.size())
    throw Error(ErrorCode::SchemaMismatch,
                "matrix has " + std::to_string(X.cols()) +
                    " columns, scaler was fit on " +
                    std::to_string(scaler.means.size()));
  Eigen::MatrixXd out = X;
  out.rowwise() -= scaler.means.transpose();
  out.array().rowwise() /= scaler.stds.transpose().array();
  return out;
}

const char* classifier_kind_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::LinearSvm: return "linear_svm";
    case ClassifierKind::DecisionTree: return "decision_tree";
    case ClassifierKind::RandomForest: return "random_forest";
    case ClassifierKind::GradientBoosting: return "gradient_boosting";
  }
  return "unknown";
}

ClassifierKind classifier_kind_from_name(const std::string& name) {
  if (name == "linear_svm") return ClassifierKind::LinearSvm;
  if (name == "decision_tree") return ClassifierKind::DecisionTree;
  if (name == "random_forest") return ClassifierKind::RandomForest;
  if (name == "gradient_boosting") return ClassifierKind::GradientBoosting;
  throw Error(ErrorCode::ConfigError, "unknown classifier kind: " + name);
}

ClassifierSpec ClassifierSpec::defaults(ClassifierKind kind,
                                        std::uint64_t seed) {
  ClassifierSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  spec.max_depth = kind == ClassifierKind::GradientBoosting ? 3 : 6;
  return spec;
}

ClassifierSpec make_classifier_spec(
    const std::string& kind_name,
    const std::vector<std::pair<std::string, std::string>>& hyperparameters,
    std::uint64_t seed) {
  ClassifierKind kind = classifier_kind_from_name(kind_name);
  ClassifierSpec spec = ClassifierSpec::defaults(kind, seed);
  for (const auto& [key, value] : hyperparameters) {
    if (key == "scale_features") {
      spec.scale_features = parse_bool(key, value);
      continue;
    }
    bool tree_like = kind == ClassifierKind::DecisionTree ||
                     kind == ClassifierKind::RandomForest ||
                     kind == ClassifierKind::GradientBoosting;
    if (tree_like && key == "max_depth") {
      spec.max_depth = parse_int(key, value);
      continue;
    }
    if (tree_like && key == "min_leaf") {
      spec.min_leaf = parse_int(key, value);
      continue;
    }
    switch (kind) {
      case ClassifierKind::RandomForest:
        if (key == "num_trees") {
          spec.num_trees = parse_int(key, value);
          continue;
        }
        if (key == "mtry") {
          spec.mtry = parse_int(key, value);
          continue;
        }
        if (key == "bootstrap") {
          spec.bootstrap = parse_bool(key, value);
          continue;
        }
        break;
      case ClassifierKind::GradientBoosting:
        if (key == "rounds") {
          spec.rounds = parse_int(key, value);
          continue;
        }
        if (key == "learning_rate") {
          spec.learning_rate = parse_real(key, value);
          continue;
        }
        if (key == "lambda") {
          spec.lambda = parse_real(key, value);
          continue;
        }
        break;
      case ClassifierKind::LinearSvm:
        if (key == "c") {
          spec.cost = parse_real(key, value);
          continue;
        }
        if (key == "epochs") {
          spec.epochs = parse_int(key, value);
          continue;
        }
        break;
      case ClassifierKind::DecisionTree:
        break;
    }
    throw Error(ErrorCode::ConfigError,
                "unknown hyperparameter '" + key + "' for classifier " +
                    kind_name);
  }
  if (spec.max_depth < 1 || spec.min_leaf < 1 || spec.num_trees < 1 ||
      spec.rounds < 0 || spec.epochs < 1 || spec.cost <= 0.0 ||
      spec.lambda < 0.0 || spec.learning_rate < 0.0)
    throw Error(ErrorCode::ConfigError,
                "hyperparameters out of range for " + kind_name);
  return spec;
}

double Tree::predict(const Eigen::RowVectorXd& row) const {
  int node = 0;
  while (!nodes[node].is_leaf())
    node = row(nodes[node].feature) <= nodes[node].threshold
               ? nodes[node].left
               : nodes[node].right;
  return nodes[node].value;
}

namespace {

// Shared CART machinery: classification trees minimize weighted Gini
// impurity, boosting trees maximize the second-order gain. Candidate
// thresholds are midpoints between consecutive distinct sorted values;
// ties keep the lowest feature index, then the lowest threshold.
struct TreeBuilder {
  const Eigen::MatrixXd& X;
  int max_depth;
  int min_leaf;
  int mtry;   // <= 0 means all features
  Rng* rng;   // feature subsetting only (random forest)
  Tree tree;

  TreeBuilder(const Eigen::MatrixXd& x, int depth, int leaf, int subset,
              Rng* generator)
      : X(x), max_depth(depth), min_leaf(leaf), mtry(subset), rng(generator) {}

  std::vector<int> candidate_features() {
    const int cols = static_cast<int>(X.cols());
    if (mtry <= 0 || mtry >= cols || rng == nullptr) {
      std::vector<int> all(cols);
      for (int c = 0; c < cols; ++c) all[c] = c;
      return all;
    }
    std::vector<int> pool(cols);
    for (int c = 0; c < cols; ++c) pool[c] = c;
    for (int i = 0; i < mtry; ++i) {
      int j = i + rng->below(cols - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(mtry);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  // deterministic ordering even for equal values
  std::vector<int> sorted_by_feature(const std::vector<int>& idx,
                                     int feature) {
    std::vector<int> order = idx;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      double va = X(a, feature), vb = X(b, feature);
      if (va != vb) return va < vb;
      return a < b;
    });
    return order;
  }

  int add_leaf(double value) {
    TreeNode node;
    node.value = value;
    tree.nodes.push_back(node);
    return static_cast<int>(tree.nodes.size()) - 1;
  }

  int build_classification(const std::vector<int>& idx,
                           const std::vector<int>& labels, int depth) {
    const int n = static_cast<int>(idx.size());
    int ones = 0;
    for (int i : idx) ones += labels[i];
    const double leaf_value = double(ones) / double(n);
    if (depth >= max_depth || n < 2 * min_leaf || ones == 0 || ones == n)
      return add_leaf(leaf_value);

    int best_feature = -1;
    double best_threshold = 0.0, best_score = kInf;
    for (int feature : candidate_features()) {
      std::vector<int> order = sorted_by_feature(idx, feature);
      int left_ones = 0;
      for (int k = 1; k < n; ++k) {
        left_ones += labels[order[k - 1]];
        double prev = X(order[k - 1], feature);
        double curr = X(order[k], feature);
        if (prev == curr) continue;
        if (k < min_leaf || n - k < min_leaf) continue;
        double pl = double(left_ones) / double(k);
        double pr = double(ones - left_ones) / double(n - k);
        double gini_l = 1.0 - pl * pl - (1.0 - pl) * (1.0 - pl);
        double gini_r = 1.0 - pr * pr - (1.0 - pr) * (1.0 - pr);
        double weighted = (k * gini_l + (n - k) * gini_r) / double(n);
        if (weighted < best_score) {
          best_score = weighted;
          best_feature = feature;
          best_threshold = (prev + curr) / 2.0;
        }
      }
    }
    // an impure node splits on the best valid candidate even at zero Gini
    // decrease (an axis-aligned split may only pay off one level deeper)
    if (best_feature < 0) return add_leaf(leaf_value);

    std::vector<int> left, right;
    for (int i : idx)
      (X(i, best_feature) <= best_threshold ? left : right).push_back(i);

    TreeNode node;
    node.feature = best_feature;
    node.threshold = best_threshold;
    tree.nodes.push_back(node);
    int self = static_cast<int>(tree.nodes.size()) - 1;
    int left_child = build_classification(left, labels, depth + 1);
    int right_child = build_classification(right, labels, depth + 1);
    tree.nodes[self].left = left_child;
    tree.nodes[self].right = right_child;
    return self;
  }

  int build_regression(const std::vector<int>& idx,
                       const std::vector<double>& grad,
                       const std::vector<double>& hess, double lambda,
                       int depth) {
    const int n = static_cast<int>(idx.size());
    double total_g = 0.0, total_h = 0.0;
    for (int i : idx) {
      total_g += grad[i];
      total_h += hess[i];
    }
    const double leaf_weight = -total_g / (total_h + lambda);
    if (depth >= max_depth || n < 2 * min_leaf) return add_leaf(leaf_weight);

    const double parent_score = total_g * total_g / (total_h + lambda);
    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 1e-12;
    for (int feature : candidate_features()) {
      std::vector<int> order = sorted_by_feature(idx, feature);
      double left_g = 0.0, left_h = 0.0;
      for (int k = 1; k < n; ++k) {
        left_g += grad[order[k - 1]];
        left_h += hess[order[k - 1]];
        double prev = X(order[k - 1], feature);
        double curr = X(order[k], feature);
        if (prev == curr) continue;
        if (k < min_leaf || n - k < min_leaf) continue;
        double right_g = total_g - left_g, right_h = total_h - left_h;
        double gain = left_g * left_g / (left_h + lambda) +
                      right_g * right_g / (right_h + lambda) - parent_score;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = feature;
          best_threshold = (prev + curr) / 2.0;
        }
      }
    }
    if (best_feature < 0) return add_leaf(leaf_weight);

    std::vector<int> left, right;
    for (int i : idx)
      (X(i, best_feature) <= best_threshold ? left : right).push_back(i);

    TreeNode node;
    node.feature = best_feature;
    node.threshold = best_threshold;
    tree.nodes.push_back(node);
    int self = static_cast<int>(tree.nodes.size()) - 1;
    int left_child = build_regression(left, grad, hess, lambda, depth + 1);
    int right_child = build_regression(right, grad, hess, lambda, depth + 1);
    tree.nodes[self].left = left_child;
    tree.nodes[self].right = right_child;
    return self;
  }
};

std::vector<int> all_rows(int n) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

void train_svm(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
               const std::vector<int>& y, TrainedModel& model) {
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  const double reg = 1.0 / (spec.cost * double(n));
  const double radius = 1.0 / std::sqrt(reg);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  for (int t = 1; t <= spec.epochs; ++t) {
    const double step = 1.0 / (reg * double(t));
    Eigen::VectorXd grad_w = reg * w;
    double grad_b = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sign = y[i] == 1 ? 1.0 : -1.0;
      if (sign * (X.row(i).dot(w) + b) < 1.0) {
        grad_w -= (sign / double(n)) * X.row(i).transpose();
        grad_b -= sign / double(n);
      }
    }
    w -= step * grad_w;
    b -= step * grad_b;
    const double norm = w.norm();
    if (norm > radius) w *= radius / norm;
  }
  model.weights = w;
  model.bias = b;
}

Tree train_classification_tree(const ClassifierSpec& spec,
                               const Eigen::MatrixXd& X,
                               const std::vector<int>& y,
                               const std::vector<int>& idx, Rng* rng,
                               int mtry) {
  TreeBuilder builder(X, spec.max_depth, spec.min_leaf, mtry, rng);
  builder.build_classification(idx, y, 0);
  return std::move(builder.tree);
}

void train_forest(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                  const std::vector<int>& y, TrainedModel& model) {
  const int n = static_cast<int>(X.rows());
  for (int t = 0; t < spec.num_trees; ++t) {
    Rng rng(Rng::mix(spec.seed, static_cast<std::uint64_t>(t)));
    std::vector<int> idx;
    if (spec.bootstrap) {
      idx.reserve(n);
      for (int i = 0; i < n; ++i) idx.push_back(rng.below(n));
      std::sort(idx.begin(), idx.end());
    } else {
      idx = all_rows(n);
    }
    model.trees.push_back(
        train_classification_tree(spec, X, y, idx, &rng, spec.mtry));
  }
}

void train_boosting(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                    const std::vector<int>& y, TrainedModel& model) {
  const int n = static_cast<int>(X.rows());
  double prior = 0.0;
  for (int label : y) prior += label;
  prior = std::clamp(prior / double(n), 1e-7, 1.0 - 1e-7);
  model.base_raw = std::log(prior / (1.0 - prior));

  std::vector<double> raw(n, model.base_raw);
  std::vector<double> grad(n), hess(n);
  std::vector<int> idx = all_rows(n);
  for (int round = 0; round < spec.rounds; ++round) {
    for (int i = 0; i < n; ++i) {
      double p = sigmoid(raw[i]);
      grad[i] = p - double(y[i]);
      hess[i] = p * (1.0 - p);
    }
    TreeBuilder builder(X, spec.max_depth, spec.min_leaf, 0, nullptr);
    builder.build_regression(idx, grad, hess, spec.lambda, 0);
    Tree tree = std::move(builder.tree);
    for (int i = 0; i < n; ++i)
      raw[i] += spec.learning_rate * tree.predict(X.row(i));
    model.trees.push_back(std::move(tree));
  }
}

}  // namespace

TrainedModel train(const ClassifierSpec& spec, const Dataset& data) {
  validate_dataset(data);
  int ones = 0;
  for (int label : data.y) ones += label;
  if (ones == 0 || ones == data.rows())
    throw Error(ErrorCode::SingleClass,
                "training data contains a single class");

  TrainedModel model;
  model.spec = spec;
  model.schema = data.schema;
  model.scaled = spec.scale_features;

  Eigen::MatrixXd X;
  if (spec.scale_features) {
    model.scaler = fit_scaler(data.X);
    X = apply_scaler(model.scaler, data.X);
  } else {
    X = data.X;
  }

  switch (spec.kind) {
    case ClassifierKind::LinearSvm:
      train_svm(spec, X, data.y, model);
      break;
    case ClassifierKind::DecisionTree:
      model.trees.push_back(train_classification_tree(
          spec, X, data.y, all_rows(data.rows()), nullptr, 0));
      break;
    case ClassifierKind::RandomForest:
      train_forest(spec, X, data.y, model);
      break;
    case ClassifierKind::GradientBoosting:
      train_boosting(spec, X, data.y, model);
      break;
  }
  return model;
}

std::vector<double> predict_scores(const TrainedModel& model,
                                   const Eigen::MatrixXd& X) {
  if (X.cols() != kFeatureCount)
    throw Error(ErrorCode::SchemaMismatch,
                "input has " + std::to_string(X.cols()) +
                    " columns, schema has " + std::to_string(kFeatureCount));
  if (model.schema != feature_schema_fingerprint())
    throw Error(ErrorCode::SchemaMismatch,
                "model was trained under a different feature schema");
  if (!X.allFinite())
    throw Error(ErrorCode::NonFiniteFeature,
                "input contains non-finite feature values");

  Eigen::MatrixXd scaled = model.scaled ? apply_scaler(model.scaler, X) : X;
  const int n = static_cast<int>(scaled.rows());
  std::vector<double> scores(n, 0.0);
  switch (model.spec.kind) {
    case ClassifierKind::LinearSvm:
      for (int i = 0; i < n; ++i)
        scores[i] = sigmoid(scaled.row(i).dot(model.weights) + model.bias);
      break;
    case ClassifierKind::DecisionTree:
      for (int i = 0; i < n; ++i)
        scores[i] = model.trees[0].predict(scaled.row(i));
      break;
    case ClassifierKind::RandomForest:
      for (int i = 0; i < n; ++i) {
        int votes = 0;
        for (const Tree& tree : model.trees)
          votes += tree.predict(scaled.row(i)) >= 0.5 ? 1 : 0;
        scores[i] = double(votes) / double(model.trees.size());
      }
      break;
    case ClassifierKind::GradientBoosting:
      for (int i = 0; i < n; ++i) {
        double raw = model.base_raw;
        for (const Tree& tree : model.trees)
          raw += model.spec.learning_rate * tree.predict(scaled.row(i));
        scores[i] = sigmoid(raw);
      }
      break;
  }
  return scores;
}

std::vector<int> predict(const TrainedModel& model, const Eigen::MatrixXd& X) {
  std::vector<double> scores = predict_scores(model, X);
  std::vector<int> labels(scores.size());
  for (size_t i = 0; i < scores.size(); ++i)
    labels[i] = scores[i] >= 0.5 ? 1 : 0;  // ties resolve to aphasia
  return labels;
}

LosoResult loso_cv(const ClassifierSpec& spec, const Dataset& data) {
  validate_dataset(data);
  const int n = data.rows();
  if (n < 3)
    throw Error(ErrorCode::TooFewSpeakers,
                "leave-one-subject-out needs at least 3 speakers, has " +
                    std::to_string(n));

  LosoResult result;
  int correct = 0;
  for (int held = 0; held < n; ++held) {
    Dataset fold;
    fold.language = data.language;
    fold.schema = data.schema;
    fold.X.resize(n - 1, data.X.cols());
    FoldTrace trace;
    trace.held_out_id = data.speaker_ids[held];
    int row = 0;
    for (int i = 0; i < n; ++i) {
      if (i == held) continue;
      fold.X.row(row) = data.X.row(i);
      fold.y.push_back(data.y[i]);
      fold.speaker_ids.push_back(data.speaker_ids[i]);
      trace.train_ids.push_back(data.speaker_ids[i]);
      ++row;
    }
    TrainedModel model = train(spec, fold);
    trace.scaler_fit_ids = fold.speaker_ids;
    trace.scaler_fit_rows = model.scaled ? model.scaler.fit_rows : 0;

    std::vector<int> predicted = predict(model, data.X.row(held));
    SpeakerOutcome outcome;
    outcome.speaker_id = data.speaker_ids[held];
    outcome.truth = data.y[held];
    outcome.predicted = predicted[0];
    if (outcome.predicted == outcome.truth) ++correct;
    result.outcomes.push_back(outcome);
    result.folds.push_back(std::move(trace));
  }
  result.accuracy = double(correct) / double(n);
  return result;
}

TransferResult zero_shot_eval(const ClassifierSpec& spec,
                              const Dataset& source, const Dataset& target) {
  validate_dataset(source);
  validate_dataset(target);
  if (source.schema != target.schema)
    throw Error(ErrorCode::SchemaMismatch,
                "source and target feature schemas differ");

  TrainedModel model = train(spec, source);
  std::vector<int> predicted = predict(model, target.X);

  TransferResult result;
  int correct = 0;
  for (int i = 0; i < target.rows(); ++i) {
    SpeakerOutcome outcome;
    outcome.speaker_id = target.speaker_ids[i];
    outcome.truth = target.y[i];
    outcome.predicted = predicted[i];
    if (outcome.predicted == outcome.truth) ++correct;
    result.outcomes.push_back(outcome);
  }
  result.accuracy = double(correct) / double(target.rows());
  return result;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t value) {
  unsigned char bytes[4] = {
      static_cast<unsigned char>(value & 0xff),
      static_cast<unsigned char>((value >> 8) & 0xff),
      static_cast<unsigned char>((value >> 16) & 0xff),
      static_cast<unsigned char>((value >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

void put_u64(std::ostream& out, std::uint64_t value) {
  put_u32(out, static_cast<std::uint32_t>(value & 0xffffffffULL));
  put_u32(out, static_cast<std::uint32_t>(value >> 32));
}

void put_f64(std::ostream& out, double value) {
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  put_u64(out, bits);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw Error(ErrorCode::BadMagic, "truncated model file");
  return std::uint32_t(bytes[0]) | std::uint32_t(bytes[1]) << 8 |
         std::uint32_t(bytes[2]) << 16 | std::uint32_t(bytes[3]) << 24;
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t lo = get_u32(in);
  std::uint64_t hi = get_u32(in);
  return lo | hi << 32;
}

double get_f64(std::istream& in) {
  std::uint64_t bits = get_u64(in);
  double value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out.write("CLML", 4);
  put_u32(out, 1);  // container version
  put_u64(out, model.schema);
  put_u32(out, static_cast<std::uint32_t>(model.spec.kind));
  put_u64(out, model.spec.seed);
  put_u32(out, static_cast<std::uint32_t>(model.spec.max_depth));
  put_u32(out, static_cast<std::uint32_t>(model.spec.min_leaf));
  put_u32(out, static_cast<std::uint32_t>(model.spec.num_trees));
  put_u32(out, static_cast<std::uint32_t>(model.spec.mtry));
  put_u32(out, model.spec.bootstrap ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(model.spec.rounds));
  put_f64(out, model.spec.learning_rate);
  put_f64(out, model.spec.lambda);
  put_f64(out, model.spec.cost);
  put_u32(out, static_cast<std::uint32_t>(model.spec.epochs));
  put_u32(out, model.spec.scale_features ? 1 : 0);
  put_u32(out, model.scaled ? 1 : 0);

  put_u32(out, static_cast<std::uint32_t>(model.scaler.means.size()));
  for (int c = 0; c < model.scaler.means.size(); ++c)
    put_f64(out, model.scaler.means(c));
  for (int c = 0; c < model.scaler.stds.size(); ++c)
    put_f64(out, model.scaler.stds(c));
  put_u32(out, static_cast<std::uint32_t>(model.scaler.constant_columns.size()));
  for (int c : model.scaler.constant_columns)
    put_u32(out, static_cast<std::uint32_t>(c));
  put_u32(out, static_cast<std::uint32_t>(model.scaler.fit_rows));

  put_u32(out, static_cast<std::uint32_t>(model.weights.size()));
  for (int c = 0; c < model.weights.size(); ++c) put_f64(out, model.weights(c));
  put_f64(out, model.bias);
  put_f64(out, model.base_raw);

  put_u32(out, static_cast<std::uint32_t>(model.trees.size()));
  for (const Tree& tree : model.trees) {
    put_u32(out, static_cast<std::uint32_t>(tree.nodes.size()));
    for (const TreeNode& node : tree.nodes) {
      put_u32(out, static_cast<std::uint32_t>(node.feature));
      put_f64(out, node.threshold);
      put_u32(out, static_cast<std::uint32_t>(node.left));
      put_u32(out, static_cast<std::uint32_t>(node.right));
      put_f64(out, node.value);
    }
  }
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CLML", 4) != 0)
    throw Error(ErrorCode::BadMagic, "expected magic bytes 'CLML'");
  std::uint32_t version = get_u32(in);
  if (version != 1)
    throw Error(ErrorCode::BadMagic,
                "unsupported model container version " +
                    std::to_string(version));

  TrainedModel model;
  model.schema = get_u64(in);
  model.spec.kind = static_cast<ClassifierKind>(get_u32(in));
  model.spec.seed = get_u64(in);
  model.spec.max_depth = static_cast<int>(get_u32(in));
  model.spec.min_leaf = static_cast<int>(get_u32(in));
  model.spec.num_trees = static_cast<int>(get_u32(in));
  model.spec.mtry = static_cast<int>(get_u32(in));
  model.spec.bootstrap = get_u32(in) != 0;
  model.spec.rounds = static_cast<int>(get_u32(in));
  model.spec.learning_rate = get_f64(in);
  model.spec.lambda = get_f64(in);
  model.spec.cost = get_f64(in);
  model.spec.epochs = static_cast<int>(get_u32(in));
  model.spec.scale_features = get_u32(in) != 0;
  model.scaled = get_u32(in) != 0;

  std::uint32_t cols = get_u32(in);
  model.scaler.means.resize(cols);
  model.scaler.stds.resize(cols);
  for (std::uint32_t c = 0; c < cols; ++c) model.scaler.means(c) = get_f64(in);
  for (std::uint32_t c = 0; c < cols; ++c) model.scaler.stds(c) = get_f64(in);
  std::uint32_t constants = get_u32(in);
  for (std::uint32_t c = 0; c < constants; ++c)
    model.scaler.constant_columns.push_back(static_cast<int>(get_u32(in)));
  model.scaler.fit_rows = static_cast<int>(get_u32(in));

  std::uint32_t weight_count = get_u32(in);
  model.weights.resize(weight_count);
  for (std::uint32_t c = 0; c < weight_count; ++c)
    model.weights(c) = get_f64(in);
  model.bias = get_f64(in);
  model.base_raw = get_f64(in);

  std::uint32_t tree_count = get_u32(in);
  for (std::uint32_t t = 0; t < tree_count; ++t) {
    Tree tree;
    std::uint32_t node_count = get_u32(in);
    for (std::uint32_t i = 0; i < node_count; ++i) {
      TreeNode node;
      node.feature = static_cast<int>(get_u32(in));
      node.threshold = get_f64(in);
      node.left = static_cast<int>(get_u32(in));
      node.right = static_cast<int>(get_u32(in));
      node.value = get_f64(in);
      tree.nodes.push_back(node);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace clad
