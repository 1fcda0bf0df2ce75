#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>

#include "instrec/error.hpp"
#include "instrec/learn.hpp"
#include "tree_internal.hpp"

namespace instrec {

const std::vector<double>& DecisionTree::leaf_value(std::span<const double> x) const {
  std::size_t at = 0;
  while (!nodes[at].is_leaf()) {
    const TreeNode& node = nodes[at];
    at = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold
                                      ? node.left
                                      : node.right);
  }
  return nodes[at].value;
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::size_t deepest = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack = {{0, 0}};
  while (!stack.empty()) {
    const auto [at, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[at].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes[at].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[at].right), d + 1);
    }
  }
  return deepest;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace detail {

Presort presort_columns(const Matrix& x) {
  Presort p(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& order = p[f];
    order.resize(x.rows());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x(a, f) < x(b, f); });
  }
  return p;
}

namespace {

__extension__ using Int128 = __int128;

// Gini split scoring with exact integer arithmetic. For a split with class
// counts L and R, the weighted child impurity is minimized when
// sum(L^2)/|L| + sum(R^2)/|R| is maximized; comparisons of these fractions
// are done by cross multiplication so results are independent of class
// order and free of rounding.
class GiniCriterion {
 public:
  GiniCriterion(std::span<const int> slot_labels, std::size_t n_classes)
      : labels_(slot_labels), total_(n_classes), left_(n_classes), right_(n_classes) {}

  void start(std::span<const std::uint32_t> slots) {
    std::fill(total_.begin(), total_.end(), 0);
    for (auto s : slots) ++total_[static_cast<std::size_t>(labels_[s])];
    n_ = static_cast<std::int64_t>(slots.size());
    sq_total_ = 0;
    for (auto c : total_) sq_total_ += c * c;
    std::fill(left_.begin(), left_.end(), 0);
    right_ = total_;
    sq_left_ = 0;
    sq_right_ = sq_total_;
    n_left_ = 0;
  }

  void move_left(std::uint32_t slot) {
    const auto c = static_cast<std::size_t>(labels_[slot]);
    sq_left_ += 2 * left_[c] + 1;
    ++left_[c];
    sq_right_ -= 2 * right_[c] - 1;
    --right_[c];
    ++n_left_;
  }

  struct Score {
    Int128 num = -1;
    Int128 den = 1;
  };

  Score split_score() const {
    const std::int64_t n_right = n_ - n_left_;
    return {Int128(sq_left_) * n_right + Int128(sq_right_) * n_left_, Int128(n_left_) * n_right};
  }

  static bool better(const Score& a, const Score& b) { return a.num * b.den > b.num * a.den; }

  bool improves_parent(const Score& s) const {
    // s.num / s.den > sq_total / n
    return s.num * n_ > Int128(sq_total_) * s.den;
  }

  bool is_pure(std::span<const std::uint32_t> slots) const {
    return std::all_of(slots.begin(), slots.end(),
                       [&](std::uint32_t s) { return labels_[s] == labels_[slots.front()]; });
  }

  std::vector<double> leaf_value(std::span<const std::uint32_t> slots) const {
    std::vector<double> probs(total_.size(), 0.0);
    for (auto s : slots) probs[static_cast<std::size_t>(labels_[s])] += 1.0;
    for (double& p : probs) p /= static_cast<double>(slots.size());
    return probs;
  }

 private:
  std::span<const int> labels_;
  std::vector<std::int64_t> total_, left_, right_;
  std::int64_t n_ = 0, n_left_ = 0;
  std::int64_t sq_total_ = 0, sq_left_ = 0, sq_right_ = 0;
};

// Squared-error reduction: maximize sumL^2/nL + sumR^2/nR.
class SquaredErrorCriterion {
 public:
  explicit SquaredErrorCriterion(std::span<const double> slot_targets) : targets_(slot_targets) {}

  void start(std::span<const std::uint32_t> slots) {
    sum_ = 0.0;
    for (auto s : slots) sum_ += targets_[s];
    n_ = static_cast<double>(slots.size());
    sum_left_ = 0.0;
    n_left_ = 0.0;
  }

  void move_left(std::uint32_t slot) {
    sum_left_ += targets_[slot];
    n_left_ += 1.0;
  }

  struct Score {
    double value = -1.0;
  };

  Score split_score() const {
    const double sum_right = sum_ - sum_left_;
    return {sum_left_ * sum_left_ / n_left_ + sum_right * sum_right / (n_ - n_left_)};
  }

  static bool better(const Score& a, const Score& b) { return a.value > b.value; }

  bool improves_parent(const Score& s) const { return s.value - sum_ * sum_ / n_ > 1e-12; }

  bool is_pure(std::span<const std::uint32_t> slots) const {
    return std::all_of(slots.begin(), slots.end(),
                       [&](std::uint32_t s) { return targets_[s] == targets_[slots.front()]; });
  }

  std::vector<double> leaf_value(std::span<const std::uint32_t> slots) const {
    double sum = 0.0;
    for (auto s : slots) sum += targets_[s];
    return {sum / static_cast<double>(slots.size())};
  }

 private:
  std::span<const double> targets_;
  double sum_ = 0.0, n_ = 0.0, sum_left_ = 0.0, n_left_ = 0.0;
};

template <typename Criterion>
class CartBuilder {
 public:
  CartBuilder(const Matrix& x, const Presort& presort, std::span<const std::size_t> rows,
              const TreeGrowth& growth, Rng* rng, Criterion criterion)
      : x_(x), rows_(rows), growth_(growth), rng_(rng), criterion_(std::move(criterion)) {
    // Per feature, the slots (positions in `rows`) in ascending value order,
    // derived from the global presort without sorting again.
    std::vector<std::uint32_t> offsets(x.rows() + 1, 0);
    for (auto r : rows) ++offsets[r + 1];
    for (std::size_t r = 0; r < x.rows(); ++r) offsets[r + 1] += offsets[r];
    std::vector<std::uint32_t> slots_by_row(rows.size());
    std::vector<std::uint32_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::uint32_t s = 0; s < rows.size(); ++s) slots_by_row[fill[rows[s]]++] = s;

    order_.resize(x.cols());
    for (std::size_t f = 0; f < x.cols(); ++f) {
      order_[f].reserve(rows.size());
      for (auto r : presort[f]) {
        for (auto k = offsets[r]; k < offsets[r + 1]; ++k) order_[f].push_back(slots_by_row[k]);
      }
    }
    go_left_.resize(rows.size());
    scratch_.resize(rows.size());
    features_.resize(x.cols());
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  DecisionTree build() {
    grow(0, rows_.size(), 0);
    return std::move(tree_);
  }

 private:
  double value(std::uint32_t slot, std::size_t feature) const { return x_(rows_[slot], feature); }

  std::span<const std::uint32_t> node_slots(std::size_t begin, std::size_t end) const {
    return std::span<const std::uint32_t>(order_[0]).subspan(begin, end - begin);
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = x_.cols();
    const std::size_t k = growth_.features_per_split;
    if (k == 0 || k >= d || rng_ == nullptr) return features_;
    std::vector<std::size_t> pool = features_;
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng_->index(d - i)]);
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  int grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const auto slots = node_slots(begin, end);
    tree_.nodes[static_cast<std::size_t>(id)].value = criterion_.leaf_value(slots);

    const std::size_t n = end - begin;
    const bool depth_reached = growth_.max_depth > 0 && depth >= growth_.max_depth;
    if (depth_reached || n < 2 * growth_.min_leaf || criterion_.is_pure(slots)) return id;

    typename Criterion::Score best;
    bool found = false;
    std::size_t best_feature = 0;
    double best_threshold = 0.0;
    for (std::size_t f : candidate_features()) {
      criterion_.start(slots);
      const auto& order = order_[f];
      for (std::size_t i = begin; i + 1 < end; ++i) {
        criterion_.move_left(order[i]);
        const std::size_t n_left = i - begin + 1;
        if (n_left < growth_.min_leaf) continue;
        if (n - n_left < growth_.min_leaf) break;
        const double v = value(order[i], f);
        const double next = value(order[i + 1], f);
        if (!(v < next)) continue;
        const auto score = criterion_.split_score();
        if (!found || Criterion::better(score, best)) {
          best = score;
          found = true;
          best_feature = f;
          double mid = v + (next - v) / 2.0;
          if (!(mid < next)) mid = v;
          best_threshold = mid;
        }
      }
    }
    if (!found || !criterion_.improves_parent(best)) return id;

    const auto& split_order = order_[best_feature];
    std::size_t n_left = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const bool left = value(split_order[i], best_feature) <= best_threshold;
      go_left_[split_order[i]] = left;
      n_left += left;
    }
    for (auto& order : order_) {
      auto it = scratch_.begin();
      for (std::size_t i = begin; i < end; ++i) {
        if (go_left_[order[i]]) *it++ = order[i];
      }
      for (std::size_t i = begin; i < end; ++i) {
        if (!go_left_[order[i]]) *it++ = order[i];
      }
      std::copy(scratch_.begin(), it, order.begin() + static_cast<std::ptrdiff_t>(begin));
    }

    const int left = grow(begin, begin + n_left, depth + 1);
    const int right = grow(begin + n_left, end, depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(best_feature);
    node.threshold = best_threshold;
    node.left = left;
    node.right = right;
    node.value.clear();
    return id;
  }

  const Matrix& x_;
  std::span<const std::size_t> rows_;
  TreeGrowth growth_;
  Rng* rng_;
  Criterion criterion_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<char> go_left_;
  std::vector<std::uint32_t> scratch_;
  std::vector<std::size_t> features_;
  DecisionTree tree_;
};

void check_rows(const Matrix& x, std::span<const std::size_t> rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "cannot grow a tree on no rows");
  for (auto r : rows) {
    if (r >= x.rows()) throw Error(ErrorCode::DimensionMismatch, "tree row index out of range");
  }
}

}  // namespace

DecisionTree grow_classification_tree(const Matrix& x, const Presort& presort, std::span<const int> y,
                                      std::size_t n_classes, const TreeGrowth& growth,
                                      std::span<const std::size_t> rows, Rng* rng) {
  check_rows(x, rows);
  std::vector<int> slot_labels(rows.size());
  for (std::size_t s = 0; s < rows.size(); ++s) {
    const int label = y[rows[s]];
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label));
    }
    slot_labels[s] = label;
  }
  CartBuilder<GiniCriterion> builder(x, presort, rows, growth, rng,
                                     GiniCriterion(slot_labels, n_classes));
  return builder.build();
}

DecisionTree grow_regression_tree(const Matrix& x, const Presort& presort,
                                  std::span<const double> target, const TreeGrowth& growth,
                                  std::span<const std::size_t> rows) {
  check_rows(x, rows);
  std::vector<double> slot_targets(rows.size());
  for (std::size_t s = 0; s < rows.size(); ++s) slot_targets[s] = target[rows[s]];
  CartBuilder<SquaredErrorCriterion> builder(x, presort, rows, growth, nullptr,
                                             SquaredErrorCriterion(slot_targets));
  return builder.build();
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace detail

DecisionTree fit_classification_tree(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                                     const TreeGrowth& growth, std::span<const std::size_t> rows,
                                     Rng* rng) {
  if (y.size() != x.rows()) throw Error(ErrorCode::LengthMismatch, "labels vs feature rows");
  return detail::grow_classification_tree(x, detail::presort_columns(x), y, n_classes, growth, rows,
                                          rng);
}

DecisionTree fit_classification_tree(const Matrix& x, std::span<const int> y, std::size_t n_classes,
                                     const TreeGrowth& growth) {
  const auto rows = detail::all_rows(x.rows());
  return fit_classification_tree(x, y, n_classes, growth, rows);
}

DecisionTree fit_regression_tree(const Matrix& x, std::span<const double> target,
                                 const TreeGrowth& growth) {
  if (target.size() != x.rows()) throw Error(ErrorCode::LengthMismatch, "targets vs feature rows");
  const auto rows = detail::all_rows(x.rows());
  return detail::grow_regression_tree(x, detail::presort_columns(x), target, growth, rows);
}

}  // namespace instrec
