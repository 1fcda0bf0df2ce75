#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "instrec/dataset.hpp"
#include "instrec/learn.hpp"

namespace instrec {

/// Rows are actual classes, columns predicted.
struct ConfusionMatrix {
  std::vector<std::vector<std::size_t>> counts;
  std::vector<std::string> class_names;

  std::size_t n_classes() const noexcept { return counts.size(); }
  std::size_t total() const noexcept;
  std::size_t row_sum(std::size_t c) const;
  std::size_t col_sum(std::size_t c) const;
};

/// class_names defaults to "0", "1", ... when empty.
ConfusionMatrix confusion(std::span<const int> actual, std::span<const int> predicted, std::size_t n_classes,
                          std::vector<std::string> class_names = {});

struct ClassMetrics {
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::size_t undefined_ratios = 0;  // 0/0 cases that were reported as 0
};

ClassMetrics precision_recall_f1(const ConfusionMatrix& cm);

/// trace / total. Throws EmptyMatrix when total is 0.
double accuracy(const ConfusionMatrix& cm);

struct MicroAverages {
  double precision = 0.0;
  double recall = 0.0;
};
MicroAverages micro_averages(const ConfusionMatrix& cm);

struct EvalReport {
  std::string model_name;
  ConfusionMatrix confusion;
  ClassMetrics metrics;
  double accuracy = 0.0;
};

EvalReport make_report(std::string model_name, const ConfusionMatrix& cm);

/// Trains on `train`, predicts `test`, and builds the report.
EvalReport evaluate_holdout(std::string model_name, const ClassifierSpec& spec, const LabeledDataset& train,
                            const LabeledDataset& test);

struct CrossValResult {
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double stdev = 0.0;  // population
};

/// Called once per fold with the model fit on the out-of-fold rows.
using FoldObserver = std::function<void(std::size_t fold, const TrainedModel& model,
                                        std::span<const std::size_t> train_rows,
                                        std::span<const std::size_t> test_rows)>;

/// Folds come from kfold_indices(n, folds, seed); each fold refits scaler and
/// model. Up to `jobs` folds run at once; results do not depend on `jobs`.
CrossValResult cross_validate(const ClassifierSpec& spec, const LabeledDataset& ds, std::size_t folds,
                              std::uint64_t seed, const FoldObserver& observer = {}, std::size_t jobs = 1);

enum class Metric { precision, recall, f1 };
std::string_view to_string(Metric metric) noexcept;

struct MetricRow {
  std::string model;
  std::string class_name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// One row per (model, class), in report order then class order.
std::vector<MetricRow> metric_table(std::span<const EvalReport> reports);

/// Quartiles by linear interpolation between order statistics; whiskers reach
/// the most extreme values within 1.5 IQR of the box.
struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
};

double quantile(std::vector<double> values, double q);
BoxStats box_stats(std::span<const double> values);

void write_per_class_metrics_csv(std::ostream& out, std::span<const EvalReport> reports,
                                 std::span<const std::string> comment_lines = {});
void write_model_accuracy_csv(std::ostream& out, std::span<const EvalReport> reports,
                              std::span<const std::string> comment_lines = {});
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm,
                         std::span<const std::string> comment_lines = {});
void write_boxplot_csv(std::ostream& out, std::span<const EvalReport> reports, Metric metric,
                       std::span<const std::string> comment_lines = {});

/// Reads per_class_metrics.csv back (comment lines skipped).
std::vector<MetricRow> read_per_class_metrics_csv(std::istream& in);

}  // namespace instrec
