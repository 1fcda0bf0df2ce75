#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "instrec/dataset.hpp"
#include "instrec/matrix.hpp"
#include "instrec/rng.hpp"

namespace instrec {

enum class ClassifierKind { logistic, tree, forest, boosted, svm_rbf };

std::string_view to_string(ClassifierKind kind) noexcept;
ClassifierKind parse_classifier_kind(std::string_view text);

// ---------------------------------------------------------------------------
// Hyperparameters

/// Multinomial logistic regression fit by full-batch gradient descent; the
/// L2 term is applied as a proximal step so any penalty strength is stable.
struct LogisticParams {
  double l2 = 1e-4;
  double learning_rate = 0.5;
  std::size_t epochs = 2000;
  double tol = 1e-7;  // stop once every gradient entry is below this
};

/// max_depth == 0 means unlimited.
struct TreeParams {
  std::size_t max_depth = 0;
  std::size_t min_leaf = 1;
};

struct ForestParams {
  std::size_t n_trees = 200;
  std::size_t max_depth = 0;
  std::size_t min_leaf = 1;
  std::size_t features_per_split = 0;  // 0 = floor(sqrt(n_features))
  bool bootstrap = true;
};

struct BoostedParams {
  std::size_t n_rounds = 100;
  double learning_rate = 0.1;
  std::size_t tree_depth = 3;
  std::size_t min_leaf = 1;
};

struct SvmParams {
  double c = 10.0;
  std::optional<double> gamma;  // unset = 1 / (n_features * mean column variance)
  double tol = 1e-3;
  std::size_t max_passes = 1000;  // iteration budget = max_passes * n per binary problem
};

using Hyperparams = std::variant<LogisticParams, TreeParams, ForestParams, BoostedParams, SvmParams>;

struct ClassifierSpec {
  Hyperparams params = SvmParams{};
  std::uint64_t seed = 42;

  ClassifierKind kind() const noexcept;
  /// Throws InvalidHyperparameter on out-of-range values.
  void validate() const;
};

/// Field name / value text pairs, as stored in model metadata.
std::vector<std::pair<std::string, std::string>> describe_hyperparams(const Hyperparams& params);

/// Named configurations: logistic, tree, forest, boosted, xgboost, lgbm, svm.
/// The two boosting names are presets of the same gradient-boosted learner.
ClassifierSpec classifier_preset(std::string_view name, std::uint64_t seed = 42);
const std::vector<std::string>& classifier_preset_names();

// ---------------------------------------------------------------------------
// Decision trees

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  std::vector<double> value;  // class probabilities, or a single regression output

  bool is_leaf() const noexcept { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const std::vector<double>& leaf_value(std::span<const double> x) const;
  std::size_t depth() const;
  std::size_t leaf_count() const;
};

struct TreeGrowth {
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_leaf = 1;
  std::size_t features_per_split = 0;  // 0 or >= n_features = all features
};

/// CART classification tree on the given rows (repeats allowed, e.g. a
/// bootstrap sample). Splits maximize Gini gain over midpoints between
/// consecutive distinct values; only splits with positive gain are taken.
/// `rng` is required when features_per_split selects a subset.
DecisionTree fit_classification_tree(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                                     const TreeGrowth& growth, std::span<const std::size_t> rows,
                                     Rng* rng = nullptr);
DecisionTree fit_classification_tree(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                                     const TreeGrowth& growth);

/// Least-squares regression tree; leaves hold the mean target.
DecisionTree fit_regression_tree(const Matrix& x, std::span<const double> target,
                                 const TreeGrowth& growth);

// ---------------------------------------------------------------------------
// Learned parameters

struct LogisticModel {
  Matrix weights;  // n_classes x n_features
  std::vector<double> bias;
};

struct TreeModel {
  DecisionTree tree;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
};

struct BoostedModel {
  std::vector<double> initial_scores;  // log class priors
  double learning_rate = 0.1;
  std::vector<std::vector<DecisionTree>> rounds;  // rounds[r][class]
};

/// One binary machine of the one-vs-one ensemble. decision(x) > 0 votes for
/// positive_class.
struct BinarySvm {
  int positive_class = 0;
  int negative_class = 1;
  Matrix support_vectors;
  std::vector<double> coefficients;  // alpha_i * y_i
  double bias = 0.0;

  double decision(std::span<const double> x, double gamma) const;
};

struct SvmModel {
  double gamma = 1.0;
  double c = 1.0;
  std::vector<BinarySvm> machines;
};

using ModelParams = std::variant<LogisticModel, TreeModel, ForestModel, BoostedModel, SvmModel>;

struct TrainingMeta {
  std::uint64_t seed = 0;
  Hyperparams hyperparams;
  std::string dataset_sha;
};

struct TrainedModel {
  std::vector<std::string> class_names;
  Scaler scaler;
  ModelParams params;
  TrainingMeta meta;

  ClassifierKind kind() const noexcept;
  std::size_t n_classes() const noexcept { return class_names.size(); }
  std::size_t n_features() const noexcept { return scaler.dim(); }
};

struct Prediction {
  int label = 0;
  std::vector<double> scores;  // one per class; argmax (lowest index on ties) == label
};

// ---------------------------------------------------------------------------
// Training

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

/// 1 / (n_features * mean per-column population variance).
double scale_gamma(const Matrix& x);

struct LogisticLossGradient {
  double loss = 0.0;
  Matrix grad_weights;
  std::vector<double> grad_bias;
};

/// Mean cross-entropy plus l2/2 * ||W||^2 (bias unpenalized) and its gradient.
LogisticLossGradient logistic_loss_gradient(const LogisticModel& model, const Matrix& x,
                                            std::span<const int> y, double l2);

LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                           const LogisticParams& params);
TreeModel fit_tree(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                   const TreeParams& params);
ForestModel fit_forest(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                       const ForestParams& params, std::uint64_t seed);
/// `loss_trace`, when given, receives the mean training log-loss before the
/// first round and after every round.
BoostedModel fit_boosted(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                         const BoostedParams& params, std::vector<double>* loss_trace = nullptr);

struct BinarySmoResult {
  std::vector<double> alpha;  // one per training row, in [0, C]
  double bias = 0.0;          // decision(x) = sum alpha_i y_i K(x_i, x) + bias
  std::size_t iterations = 0;
  bool converged = false;
};

/// Soft-margin dual solved by SMO with maximal-violating-pair first choice
/// and second-order second choice. Stops when the KKT gap drops below tol or
/// after max_iterations pair updates. `signs` holds +1 / -1.
BinarySmoResult solve_binary_smo(const Matrix& x, std::span<const int> signs, double c,
                                 double gamma, double tol, std::size_t max_iterations);

/// One-vs-one ensemble over every class pair present in y.
SvmModel fit_svm(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                 const SvmParams& params);

/// Fits the scaler on `train`, scales, and fits the requested learner.
TrainedModel train(const ClassifierSpec& spec, const LabeledDataset& train);

/// Decision on already-scaled features.
Prediction predict_scaled(const TrainedModel& model, std::span<const double> scaled);

/// Applies the stored scaler, then the model. Throws DimensionMismatch or
/// NonFiniteInput on bad input.
Prediction predict(const TrainedModel& model, std::span<const double> features);

std::vector<int> predict_labels(const TrainedModel& model, const Matrix& features);

// ---------------------------------------------------------------------------
// Persistence

inline constexpr int kModelSchemaVersion = 1;

std::string model_to_json(const TrainedModel& model);
/// Throws CorruptModel (unparseable, bad checksum, missing fields) or
/// SchemaVersionMismatch.
TrainedModel model_from_json(std::string_view text);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace instrec
