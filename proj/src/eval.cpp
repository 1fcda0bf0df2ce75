#include "instrec/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "instrec/error.hpp"

namespace instrec {

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t t = 0;
  for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t c) const {
  return std::accumulate(counts.at(c).begin(), counts.at(c).end(), std::size_t{0});
}

std::size_t ConfusionMatrix::col_sum(std::size_t c) const {
  std::size_t s = 0;
  for (const auto& row : counts) s += row.at(c);
  return s;
}

ConfusionMatrix confusion(std::span<const int> actual, std::span<const int> predicted, std::size_t n_classes,
                          std::vector<std::string> class_names) {
  if (actual.size() != predicted.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(actual.size()) + " actual vs " + std::to_string(predicted.size()) + " predicted");
  }
  if (class_names.empty()) {
    for (std::size_t c = 0; c < n_classes; ++c) class_names.push_back(std::to_string(c));
  } else if (class_names.size() != n_classes) {
    throw Error(ErrorCode::LengthMismatch, "class name count does not match n_classes");
  }
  ConfusionMatrix cm{std::vector<std::vector<std::size_t>>(n_classes, std::vector<std::size_t>(n_classes, 0)),
                     std::move(class_names)};
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const int a = actual[i], p = predicted[i];
    if (a < 0 || p < 0 || static_cast<std::size_t>(a) >= n_classes || static_cast<std::size_t>(p) >= n_classes) {
      throw Error(ErrorCode::LabelOutOfRange, "sample " + std::to_string(i) + " has label outside [0, " +
                                                  std::to_string(n_classes) + ")");
    }
    ++cm.counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)];
  }
  return cm;
}

ClassMetrics precision_recall_f1(const ConfusionMatrix& cm) {
  const std::size_t k = cm.n_classes();
  ClassMetrics m;
  m.precision.resize(k);
  m.recall.resize(k);
  m.f1.resize(k);
  auto ratio = [&](double num, double den) {
    if (den == 0.0) {
      ++m.undefined_ratios;
      return 0.0;
    }
    return num / den;
  };
  for (std::size_t c = 0; c < k; ++c) {
    const auto tp = static_cast<double>(cm.counts[c][c]);
    m.precision[c] = ratio(tp, static_cast<double>(cm.col_sum(c)));
    m.recall[c] = ratio(tp, static_cast<double>(cm.row_sum(c)));
    m.f1[c] = ratio(2.0 * m.precision[c] * m.recall[c], m.precision[c] + m.recall[c]);
  }
  return m;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix has no samples");
  std::size_t trace = 0;
  for (std::size_t c = 0; c < cm.n_classes(); ++c) trace += cm.counts[c][c];
  return static_cast<double>(trace) / static_cast<double>(total);
}

MicroAverages micro_averages(const ConfusionMatrix& cm) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t c = 0; c < cm.n_classes(); ++c) {
    tp += cm.counts[c][c];
    fp += cm.col_sum(c) - cm.counts[c][c];
    fn += cm.row_sum(c) - cm.counts[c][c];
  }
  const auto frac = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  return {frac(tp, tp + fp), frac(tp, tp + fn)};
}

EvalReport make_report(std::string model_name, const ConfusionMatrix& cm) {
  return {std::move(model_name), cm, precision_recall_f1(cm), accuracy(cm)};
}

EvalReport evaluate_holdout(std::string model_name, const ClassifierSpec& spec, const LabeledDataset& train_set,
                            const LabeledDataset& test_set) {
  const TrainedModel model = train(spec, train_set);
  const std::vector<int> predicted = predict_labels(model, test_set.features);
  return make_report(std::move(model_name),
                     confusion(test_set.labels, predicted, test_set.n_classes(), test_set.class_names));
}

CrossValResult cross_validate(const ClassifierSpec& spec, const LabeledDataset& ds, std::size_t folds,
                              std::uint64_t seed, const FoldObserver& observer, std::size_t jobs) {
  if (folds < 2) throw Error(ErrorCode::InvalidConfig, "cross-validation needs at least 2 folds");
  ds.validate();
  const auto fold_rows = kfold_indices(ds.size(), folds, seed);
  CrossValResult result;
  result.fold_accuracies.assign(folds, 0.0);

  std::vector<std::exception_ptr> errors(folds);
  std::mutex observer_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < folds; f = next++) {
      try {
        std::vector<std::size_t> train_rows;
        for (std::size_t g = 0; g < folds; ++g) {
          if (g != f) train_rows.insert(train_rows.end(), fold_rows[g].begin(), fold_rows[g].end());
        }
        std::sort(train_rows.begin(), train_rows.end());
        const LabeledDataset train_set = ds.subset(train_rows);
        const LabeledDataset test_set = ds.subset(fold_rows[f]);
        const TrainedModel model = train(spec, train_set);
        const std::vector<int> predicted = predict_labels(model, test_set.features);
        result.fold_accuracies[f] = accuracy(confusion(test_set.labels, predicted, ds.n_classes()));
        if (observer) {
          const std::lock_guard lock(observer_mutex);
          observer(f, model, train_rows, fold_rows[f]);
        }
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, folds);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const auto n = static_cast<double>(folds);
  result.mean = std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) / n;
  double var = 0.0;
  for (double a : result.fold_accuracies) var += (a - result.mean) * (a - result.mean);
  result.stdev = std::sqrt(var / n);
  return result;
}

std::string_view to_string(Metric metric) noexcept {
  switch (metric) {
    case Metric::precision: return "precision";
    case Metric::recall: return "recall";
    case Metric::f1: return "f1";
  }
  return "unknown";
}

std::vector<MetricRow> metric_table(std::span<const EvalReport> reports) {
  if (reports.empty()) throw Error(ErrorCode::EmptyInput, "no reports");
  std::vector<MetricRow> rows;
  for (const auto& r : reports) {
    for (std::size_t c = 0; c < r.confusion.n_classes(); ++c) {
      rows.push_back({r.model_name, r.confusion.class_names[c], r.metrics.precision[c], r.metrics.recall[c],
                      r.metrics.f1[c]});
    }
  }
  return rows;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "quantile of no values");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidConfig, "quantile outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BoxStats box_stats(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  if (v.empty()) throw Error(ErrorCode::EmptyInput, "box stats of no values");
  std::sort(v.begin(), v.end());
  BoxStats b;
  b.min = v.front();
  b.max = v.back();
  b.q1 = quantile(v, 0.25);
  b.median = quantile(v, 0.5);
  b.q3 = quantile(v, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = b.q1;
  b.whisker_high = b.q3;
  for (double x : v) {
    if (x < lo_fence || x > hi_fence) {
      b.outliers.push_back(x);
    } else {
      b.whisker_low = std::min(b.whisker_low, x);
      b.whisker_high = std::max(b.whisker_high, x);
    }
  }
  return b;
}

namespace {

void write_comments(std::ostream& out, std::span<const std::string> lines) {
  for (const auto& line : lines) out << "# " << line << '\n';
}

}  // namespace

void write_per_class_metrics_csv(std::ostream& out, std::span<const EvalReport> reports,
                                 std::span<const std::string> comment_lines) {
  write_comments(out, comment_lines);
  out << "model,class,precision,recall,f1\n";
  for (const auto& row : metric_table(reports)) {
    out << csv_quote(row.model) << ',' << csv_quote(row.class_name) << ',' << format_double(row.precision) << ','
        << format_double(row.recall) << ',' << format_double(row.f1) << '\n';
  }
}

void write_model_accuracy_csv(std::ostream& out, std::span<const EvalReport> reports,
                              std::span<const std::string> comment_lines) {
  write_comments(out, comment_lines);
  out << "model,accuracy\n";
  for (const auto& r : reports) out << csv_quote(r.model_name) << ',' << format_double(r.accuracy) << '\n';
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm, std::span<const std::string> comment_lines) {
  write_comments(out, comment_lines);
  out << "actual\\predicted";
  for (const auto& name : cm.class_names) out << ',' << csv_quote(name);
  out << '\n';
  for (std::size_t a = 0; a < cm.n_classes(); ++a) {
    out << csv_quote(cm.class_names[a]);
    for (std::size_t count : cm.counts[a]) out << ',' << count;
    out << '\n';
  }
}

void write_boxplot_csv(std::ostream& out, std::span<const EvalReport> reports, Metric metric,
                       std::span<const std::string> comment_lines) {
  write_comments(out, comment_lines);
  out << "model,min,whisker_low,q1,median,q3,whisker_high,max,outliers\n";
  for (const auto& r : reports) {
    const auto& values = metric == Metric::precision ? r.metrics.precision
                         : metric == Metric::recall  ? r.metrics.recall
                                                     : r.metrics.f1;
    const BoxStats b = box_stats(values);
    std::string outliers;
    for (double o : b.outliers) outliers += (outliers.empty() ? "" : ";") + format_double(o);
    out << csv_quote(r.model_name) << ',' << format_double(b.min) << ',' << format_double(b.whisker_low) << ','
        << format_double(b.q1) << ',' << format_double(b.median) << ',' << format_double(b.q3) << ','
        << format_double(b.whisker_high) << ',' << format_double(b.max) << ',' << csv_quote(outliers) << '\n';
  }
}

std::vector<MetricRow> read_per_class_metrics_csv(std::istream& in) {
  std::vector<MetricRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto f = csv_split(line);
    if (f.size() != 5) throw Error(ErrorCode::SchemaMismatch, "metrics row needs 5 fields");
    rows.push_back({f[0], f[1], std::stod(f[2]), std::stod(f[3]), std::stod(f[4])});
  }
  return rows;
}

}  // namespace instrec
