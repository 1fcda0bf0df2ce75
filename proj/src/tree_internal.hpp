#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "instrec/learn.hpp"

namespace instrec::detail {

/// Row indices of each feature column in ascending value order.
using Presort = std::vector<std::vector<std::uint32_t>>;

Presort presort_columns(const Matrix& x);

DecisionTree grow_classification_tree(const Matrix& x, const Presort& presort, std::span<const int> y,
                                      std::size_t n_classes, const TreeGrowth& growth,
                                      std::span<const std::size_t> rows, Rng* rng);

DecisionTree grow_regression_tree(const Matrix& x, const Presort& presort,
                                  std::span<const double> target, const TreeGrowth& growth,
                                  std::span<const std::size_t> rows);

std::vector<std::size_t> all_rows(std::size_t n);

}  // namespace instrec::detail
