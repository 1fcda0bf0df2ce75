#include "instrec/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "instrec/error.hpp"
#include "tree_internal.hpp"

namespace instrec {

std::string_view to_string(ClassifierKind kind) noexcept {
  switch (kind) {
    case ClassifierKind::logistic: return "logistic";
    case ClassifierKind::tree: return "tree";
    case ClassifierKind::forest: return "forest";
    case ClassifierKind::boosted: return "boosted";
    case ClassifierKind::svm_rbf: return "svm_rbf";
  }
  return "unknown";
}

ClassifierKind parse_classifier_kind(std::string_view text) {
  for (auto kind : {ClassifierKind::logistic, ClassifierKind::tree, ClassifierKind::forest,
                    ClassifierKind::boosted, ClassifierKind::svm_rbf}) {
    if (text == to_string(kind)) return kind;
  }
  throw Error(ErrorCode::InvalidHyperparameter, "unknown classifier kind '" + std::string(text) + "'");
}

ClassifierKind ClassifierSpec::kind() const noexcept {
  return static_cast<ClassifierKind>(params.index());
}

ClassifierKind TrainedModel::kind() const noexcept {
  return static_cast<ClassifierKind>(params.index());
}

namespace {

[[noreturn]] void bad_param(const std::string& what) {
  throw Error(ErrorCode::InvalidHyperparameter, what);
}

struct Validator {
  void operator()(const LogisticParams& p) const {
    if (!(p.l2 >= 0.0) || !std::isfinite(p.l2)) bad_param("l2 must be finite and >= 0");
    if (!(p.learning_rate > 0.0)) bad_param("learning rate must be > 0");
    if (p.epochs == 0) bad_param("epochs must be >= 1");
    if (!(p.tol >= 0.0)) bad_param("tol must be >= 0");
  }
  void operator()(const TreeParams& p) const {
    if (p.min_leaf == 0) bad_param("min_leaf must be >= 1");
  }
  void operator()(const ForestParams& p) const {
    if (p.n_trees == 0) bad_param("n_trees must be >= 1");
    if (p.min_leaf == 0) bad_param("min_leaf must be >= 1");
  }
  void operator()(const BoostedParams& p) const {
    if (p.n_rounds == 0) bad_param("n_rounds must be >= 1");
    if (!(p.learning_rate >= 0.0 && p.learning_rate <= 1.0)) bad_param("learning rate must lie in [0, 1]");
    if (p.tree_depth == 0) bad_param("tree_depth must be >= 1");
    if (p.min_leaf == 0) bad_param("min_leaf must be >= 1");
  }
  void operator()(const SvmParams& p) const {
    if (!(p.c > 0.0) || !std::isfinite(p.c)) bad_param("C must be finite and > 0");
    if (p.gamma && !(*p.gamma > 0.0 && std::isfinite(*p.gamma))) bad_param("gamma must be finite and > 0");
    if (!(p.tol > 0.0)) bad_param("tol must be > 0");
    if (p.max_passes == 0) bad_param("max_passes must be >= 1");
  }
};

}  // namespace

void ClassifierSpec::validate() const { std::visit(Validator{}, params); }

const std::vector<std::string>& classifier_preset_names() {
  static const std::vector<std::string> names = {"logistic", "tree", "lgbm", "xgboost",
                                                 "forest",   "svm",  "boosted"};
  return names;
}

ClassifierSpec classifier_preset(std::string_view name, std::uint64_t seed) {
  ClassifierSpec spec;
  spec.seed = seed;
  if (name == "logistic") {
    spec.params = LogisticParams{};
  } else if (name == "tree") {
    spec.params = TreeParams{};
  } else if (name == "forest") {
    spec.params = ForestParams{};
  } else if (name == "boosted" || name == "xgboost") {
    spec.params = BoostedParams{};
  } else if (name == "lgbm") {
    // more, shallower-rate rounds with deeper trees
    spec.params = BoostedParams{.n_rounds = 200, .learning_rate = 0.05, .tree_depth = 4, .min_leaf = 5};
  } else if (name == "svm" || name == "svm_rbf") {
    spec.params = SvmParams{};
  } else {
    throw Error(ErrorCode::InvalidHyperparameter, "unknown model '" + std::string(name) + "'");
  }
  return spec;
}

// ---------------------------------------------------------------------------

namespace {

void check_training_input(const Matrix& x, std::span<const int> y, std::size_t n_classes) {
  if (x.rows() == 0) throw Error(ErrorCode::EmptyInput, "no training rows");
  if (y.size() != x.rows()) throw Error(ErrorCode::LengthMismatch, "labels vs feature rows");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteFeature, "training features must be finite");
  }
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label));
    }
  }
}

std::size_t distinct_labels(std::span<const int> y, std::size_t n_classes) {
  std::vector<char> seen(n_classes, 0);
  for (int label : y) seen[static_cast<std::size_t>(label)] = 1;
  return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), 1));
}

void require_two_classes(std::span<const int> y, std::size_t n_classes) {
  if (distinct_labels(y, n_classes) < 2) {
    throw Error(ErrorCode::SingleClassInput, "training data contains fewer than two classes");
  }
}

/// Numerically stable softmax in place.
void softmax(std::span<double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

int argmax(std::span<const double> scores) {
  return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

}  // namespace

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

double scale_gamma(const Matrix& x) {
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::EmptyInput, "no data for gamma");
  const auto n = static_cast<double>(x.rows());
  double total_variance = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
    total_variance += var / n;
  }
  const double mean_variance = total_variance / static_cast<double>(x.cols());
  return mean_variance > 0.0 ? 1.0 / (static_cast<double>(x.cols()) * mean_variance) : 1.0;
}

// ---------------------------------------------------------------------------
// Logistic regression

LogisticLossGradient logistic_loss_gradient(const LogisticModel& model, const Matrix& x,
                                            std::span<const int> y, double l2) {
  const std::size_t k = model.weights.rows();
  const std::size_t d = model.weights.cols();
  const auto n = static_cast<double>(x.rows());
  LogisticLossGradient out{0.0, Matrix(k, d), std::vector<double>(k, 0.0)};
  std::vector<double> z(k);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      const auto w = model.weights.row(c);
      z[c] = std::inner_product(w.begin(), w.end(), row.begin(), model.bias[c]);
    }
    softmax(z);
    const auto label = static_cast<std::size_t>(y[i]);
    out.loss -= std::log(std::max(z[label], std::numeric_limits<double>::min()));
    for (std::size_t c = 0; c < k; ++c) {
      const double residual = z[c] - (c == label ? 1.0 : 0.0);
      out.grad_bias[c] += residual;
      auto g = out.grad_weights.row(c);
      for (std::size_t j = 0; j < d; ++j) g[j] += residual * row[j];
    }
  }
  out.loss /= n;
  for (double& g : out.grad_bias) g /= n;
  double sq = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    auto g = out.grad_weights.row(c);
    const auto w = model.weights.row(c);
    for (std::size_t j = 0; j < d; ++j) {
      g[j] = g[j] / n + l2 * w[j];
      sq += w[j] * w[j];
    }
  }
  out.loss += 0.5 * l2 * sq;
  return out;
}

LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                           const LogisticParams& params) {
  check_training_input(x, y, n_classes);
  require_two_classes(y, n_classes);
  Validator{}(params);

  LogisticModel model{Matrix(n_classes, x.cols()), std::vector<double>(n_classes, 0.0)};
  const double shrink = 1.0 / (1.0 + params.learning_rate * params.l2);
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    // Gradient of the unpenalized loss; the penalty enters through the
    // proximal shrink below.
    LogisticLossGradient lg = logistic_loss_gradient(model, x, y, 0.0);
    double largest = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      auto w = model.weights.row(c);
      const auto g = lg.grad_weights.row(c);
      for (std::size_t j = 0; j < w.size(); ++j) {
        largest = std::max(largest, std::abs(g[j] + params.l2 * w[j]));
        w[j] = (w[j] - params.learning_rate * g[j]) * shrink;
      }
      largest = std::max(largest, std::abs(lg.grad_bias[c]));
      model.bias[c] -= params.learning_rate * lg.grad_bias[c];
    }
    if (largest < params.tol) break;
  }
  return model;
}

// ---------------------------------------------------------------------------
// Trees and ensembles

TreeModel fit_tree(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                   const TreeParams& params) {
  check_training_input(x, y, n_classes);
  Validator{}(params);
  return {fit_classification_tree(x, y, n_classes, TreeGrowth{params.max_depth, params.min_leaf, 0})};
}

ForestModel fit_forest(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                       const ForestParams& params, std::uint64_t seed) {
  check_training_input(x, y, n_classes);
  Validator{}(params);
  const std::size_t per_split =
      params.features_per_split > 0
          ? params.features_per_split
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(x.cols())))));
  const TreeGrowth growth{params.max_depth, params.min_leaf, per_split};
  const detail::Presort presort = detail::presort_columns(x);
  const std::size_t n = x.rows();

  ForestModel forest;
  forest.trees.reserve(params.n_trees);
  std::vector<std::size_t> rows(n);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    Rng rng(Rng::derive(seed, t));
    if (params.bootstrap) {
      for (auto& r : rows) r = rng.index(n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    forest.trees.push_back(detail::grow_classification_tree(x, presort, y, n_classes, growth, rows, &rng));
  }
  return forest;
}

namespace {

double mean_log_loss(const Matrix& scores, std::span<const int> y) {
  std::vector<double> z(scores.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const auto row = scores.row(i);
    const double top = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - top);
    loss += top + std::log(sum) - row[static_cast<std::size_t>(y[i])];
  }
  return loss / static_cast<double>(scores.rows());
}

}  // namespace

BoostedModel fit_boosted(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                         const BoostedParams& params, std::vector<double>* loss_trace) {
  check_training_input(x, y, n_classes);
  Validator{}(params);
  const std::size_t n = x.rows();

  BoostedModel model;
  model.learning_rate = params.learning_rate;
  model.initial_scores.assign(n_classes, 0.0);
  std::vector<double> counts(n_classes, 0.0);
  for (int label : y) counts[static_cast<std::size_t>(label)] += 1.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    // absent classes get a large negative finite score rather than -inf
    model.initial_scores[c] = std::log(std::max(counts[c] / static_cast<double>(n), 1e-12));
  }

  Matrix scores(n, n_classes);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(model.initial_scores.begin(), model.initial_scores.end(), scores.row(i).begin());
  }
  if (loss_trace) loss_trace->assign(1, mean_log_loss(scores, y));

  const detail::Presort presort = detail::presort_columns(x);
  const std::vector<std::size_t> rows = detail::all_rows(n);
  const TreeGrowth growth{params.tree_depth, params.min_leaf, 0};
  Matrix probs(n, n_classes);
  std::vector<double> residual(n);
  model.rounds.reserve(params.n_rounds);
  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      auto p = probs.row(i);
      const auto s = scores.row(i);
      std::copy(s.begin(), s.end(), p.begin());
      softmax(p);
    }
    std::vector<DecisionTree> trees;
    trees.reserve(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        residual[i] = (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0) - probs(i, c);
      }
      trees.push_back(detail::grow_regression_tree(x, presort, residual, growth, rows));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < n_classes; ++c) {
        scores(i, c) += params.learning_rate * trees[c].leaf_value(x.row(i))[0];
      }
    }
    model.rounds.push_back(std::move(trees));
    if (loss_trace) loss_trace->push_back(mean_log_loss(scores, y));
  }
  return model;
}

// ---------------------------------------------------------------------------
// SVM

double BinarySvm::decision(std::span<const double> x, double gamma) const {
  double f = bias;
  for (std::size_t i = 0; i < coefficients.size(); ++i) {
    f += coefficients[i] * rbf_kernel(support_vectors.row(i), x, gamma);
  }
  return f;
}

BinarySmoResult solve_binary_smo(const Matrix& x, std::span<const int> signs, double c,
                                 double gamma, double tol, std::size_t max_iterations) {
  const std::size_t n = x.rows();
  if (signs.size() != n) throw Error(ErrorCode::LengthMismatch, "signs vs feature rows");
  bool has_pos = false, has_neg = false;
  for (int s : signs) {
    if (s == 1) has_pos = true;
    else if (s == -1) has_neg = true;
    else throw Error(ErrorCode::LabelOutOfRange, "binary SMO labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw Error(ErrorCode::SingleClassInput, "binary SMO needs both signs");

  // Full kernel matrix; binary problems here are at most a few thousand rows.
  Matrix kernel(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    kernel(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double k = rbf_kernel(x.row(i), x.row(j), gamma);
      kernel(i, j) = k;
      kernel(j, i) = k;
    }
  }
  auto q = [&](std::size_t i, std::size_t j) { return signs[i] * signs[j] * kernel(i, j); };
  constexpr double kTau = 1e-12;

  BinarySmoResult result;
  result.alpha.assign(n, 0.0);
  std::vector<double>& alpha = result.alpha;
  std::vector<double> grad(n, -1.0);  // gradient of 0.5 a'Qa - e'a
  auto at_upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto at_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  while (result.iterations < max_iterations) {
    // First choice: maximal violator in the "up" set.
    double g_max = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (signs[t] == 1 ? !at_upper(t) : !at_lower(t)) {
        const double v = -signs[t] * grad[t];
        if (v >= g_max) {
          g_max = v;
          i = t;
        }
      }
    }
    // Second choice: largest guaranteed objective decrease among "low" rows.
    double g_max2 = -std::numeric_limits<double>::infinity();
    double best_decrease = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (signs[t] == 1 ? at_lower(t) : at_upper(t)) continue;
      const double v = signs[t] * grad[t];
      g_max2 = std::max(g_max2, v);
      if (i == n) continue;
      const double grad_diff = g_max + v;
      if (grad_diff > 0.0) {
        double curvature = kernel(i, i) + kernel(t, t) - 2.0 * kernel(i, t);
        if (curvature <= 0.0) curvature = kTau;
        const double decrease = -(grad_diff * grad_diff) / curvature;
        if (decrease <= best_decrease) {
          best_decrease = decrease;
          j = t;
        }
      }
    }
    if (i == n || j == n || g_max + g_max2 < tol) {
      result.converged = true;
      break;
    }

    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (signs[i] != signs[j]) {
      double curvature = kernel(i, i) + kernel(j, j) + 2.0 * q(i, j);
      if (curvature <= 0.0) curvature = kTau;
      const double delta = (-grad[i] - grad[j]) / curvature;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double curvature = kernel(i, i) + kernel(j, j) - 2.0 * q(i, j);
      if (curvature <= 0.0) curvature = kTau;
      const double delta = (grad[i] - grad[j]) / curvature;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double d_i = alpha[i] - old_i;
    const double d_j = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(i, t) * d_i + q(j, t) * d_j;
    ++result.iterations;
  }

  // Offset: mean over free vectors, else the midpoint of the feasible interval.
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = signs[t] * grad[t];
    if (at_upper(t)) {
      if (signs[t] == -1) upper = std::min(upper, yg);
      else lower = std::max(lower, yg);
    } else if (at_lower(t)) {
      if (signs[t] == 1) upper = std::min(upper, yg);
      else lower = std::max(lower, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (upper + lower) / 2.0;
  result.bias = -rho;
  return result;
}

SvmModel fit_svm(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                 const SvmParams& params) {
  check_training_input(x, y, n_classes);
  require_two_classes(y, n_classes);
  Validator{}(params);

  SvmModel model;
  model.c = params.c;
  model.gamma = params.gamma.value_or(scale_gamma(x));
  std::vector<std::vector<std::size_t>> members(n_classes);
  for (std::size_t i = 0; i < y.size(); ++i) members[static_cast<std::size_t>(y[i])].push_back(i);

  for (std::size_t a = 0; a < n_classes; ++a) {
    for (std::size_t b = a + 1; b < n_classes; ++b) {
      if (members[a].empty() || members[b].empty()) continue;
      std::vector<std::size_t> rows(members[a]);
      rows.insert(rows.end(), members[b].begin(), members[b].end());
      Matrix sub(rows.size(), x.cols());
      std::vector<int> signs(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto src = x.row(rows[r]);
        std::copy(src.begin(), src.end(), sub.row(r).begin());
        signs[r] = r < members[a].size() ? 1 : -1;
      }
      const BinarySmoResult solved = solve_binary_smo(sub, signs, params.c, model.gamma, params.tol,
                                                      params.max_passes * rows.size());
      BinarySvm machine;
      machine.positive_class = static_cast<int>(a);
      machine.negative_class = static_cast<int>(b);
      machine.bias = solved.bias;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (solved.alpha[r] > 0.0) {
          machine.support_vectors.push_row(sub.row(r));
          machine.coefficients.push_back(solved.alpha[r] * signs[r]);
        }
      }
      if (machine.support_vectors.rows() == 0) machine.support_vectors = Matrix(0, x.cols());
      model.machines.push_back(std::move(machine));
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Training and prediction

TrainedModel train(const ClassifierSpec& spec, const LabeledDataset& data) {
  spec.validate();
  data.validate();
  if (data.size() == 0) throw Error(ErrorCode::EmptyInput, "no training rows");

  TrainedModel model;
  model.class_names = data.class_names;
  model.scaler = fit_scaler(data.features);
  model.meta = TrainingMeta{spec.seed, spec.params, dataset_fingerprint(data)};
  const Matrix x = model.scaler.apply(data.features);
  const std::size_t k = data.n_classes();

  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LogisticParams>) {
          model.params = fit_logistic(x, data.labels, k, p);
        } else if constexpr (std::is_same_v<P, TreeParams>) {
          model.params = fit_tree(x, data.labels, k, p);
        } else if constexpr (std::is_same_v<P, ForestParams>) {
          model.params = fit_forest(x, data.labels, k, p, spec.seed);
        } else if constexpr (std::is_same_v<P, BoostedParams>) {
          model.params = fit_boosted(x, data.labels, k, p);
        } else {
          model.params = fit_svm(x, data.labels, k, p);
        }
      },
      spec.params);
  return model;
}

Prediction predict_scaled(const TrainedModel& model, std::span<const double> x) {
  const std::size_t k = model.n_classes();
  Prediction out;
  out.scores.assign(k, 0.0);
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LogisticModel>) {
          for (std::size_t c = 0; c < k; ++c) {
            const auto w = m.weights.row(c);
            out.scores[c] = std::inner_product(w.begin(), w.end(), x.begin(), m.bias[c]);
          }
          softmax(out.scores);
        } else if constexpr (std::is_same_v<M, TreeModel>) {
          out.scores = m.tree.leaf_value(x);
        } else if constexpr (std::is_same_v<M, ForestModel>) {
          for (const auto& tree : m.trees) out.scores[static_cast<std::size_t>(argmax(tree.leaf_value(x)))] += 1.0;
          for (double& s : out.scores) s /= static_cast<double>(m.trees.size());
        } else if constexpr (std::is_same_v<M, BoostedModel>) {
          out.scores = m.initial_scores;
          for (const auto& round : m.rounds) {
            for (std::size_t c = 0; c < k; ++c) out.scores[c] += m.learning_rate * round[c].leaf_value(x)[0];
          }
          softmax(out.scores);
        } else {
          for (const auto& machine : m.machines) {
            const int winner = machine.decision(x, m.gamma) > 0.0 ? machine.positive_class
                                                                   : machine.negative_class;
            out.scores[static_cast<std::size_t>(winner)] += 1.0;
          }
        }
      },
      model.params);
  out.label = argmax(out.scores);
  return out;
}

Prediction predict(const TrainedModel& model, std::span<const double> features) {
  if (features.size() != model.n_features()) {
    throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.n_features()) +
                                                  " features, got " + std::to_string(features.size()));
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "features must be finite");
  }
  std::vector<double> scaled(features.begin(), features.end());
  model.scaler.apply_row(scaled);
  return predict_scaled(model, scaled);
}

std::vector<int> predict_labels(const TrainedModel& model, const Matrix& features) {
  std::vector<int> labels(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) labels[i] = predict(model, features.row(i)).label;
  return labels;
}

}  // namespace instrec
