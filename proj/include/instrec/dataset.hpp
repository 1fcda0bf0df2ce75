#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "instrec/matrix.hpp"

namespace instrec {

/// IRMAS folder codes for the six instruments used here, in label order.
const std::vector<std::string>& irmas_class_codes();

/// "flu" -> "Flute" etc. Unknown codes are returned unchanged.
std::string instrument_display_name(std::string_view code);

struct LabeledDataset {
  Matrix features;  // n_samples x n_features
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::vector<std::string> paths;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t n_classes() const noexcept { return class_names.size(); }

  /// Throws InvalidDataset on shape mismatch, out-of-range labels or
  /// non-finite features.
  void validate() const;

  /// Rows in the given order (indices may repeat).
  LabeledDataset subset(std::span<const std::size_t> rows) const;
};

struct ScanEntry {
  std::filesystem::path path;
  int label = 0;
};

/// Lists `<root>/<class>/**.wav` for every class, in class order then
/// lexicographic path order.
std::vector<ScanEntry> scan_instrument_dirs(const std::filesystem::path& root,
                                            std::span<const std::string> class_names);

struct SplitSpec {
  double test_fraction = 0.2;
  std::size_t folds = 10;
  std::uint64_t seed = 42;
  bool stratified = false;

  void validate() const;
};

struct IndexSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Shuffles indices with the seed and sends the first ceil(fraction * n) to
/// test. With `stratified`, the same rule is applied per class.
IndexSplit split_indices(std::span<const int> labels, const SplitSpec& spec);

std::pair<LabeledDataset, LabeledDataset> train_test_split(const LabeledDataset& ds,
                                                           const SplitSpec& spec);

/// k folds over a seeded shuffle of 0..n-1; the first n % k folds get one
/// extra index.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k,
                                                    std::uint64_t seed);

struct Scaler {
  std::vector<double> means;
  std::vector<double> stdevs;

  std::size_t dim() const noexcept { return means.size(); }
  void apply_row(std::span<double> row) const;
  Matrix apply(const Matrix& features) const;
  Matrix unscale(const Matrix& features) const;
};

/// Column means and population standard deviations; constant columns get stdev 1.
Scaler fit_scaler(const Matrix& features);
Matrix apply_scaler(const Scaler& scaler, const Matrix& features);

/// Feature CSV. Comment lines start with '#'; `# classes: a,b,c` fixes the
/// label order, otherwise labels are ordered by first appearance.
void write_feature_csv(std::ostream& out, const LabeledDataset& ds,
                       std::span<const std::string> comment_lines = {});
LabeledDataset read_feature_csv(std::istream& in);
LabeledDataset read_feature_csv(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

/// RFC 4180 field quoting.
std::string csv_quote(std::string_view field);
std::vector<std::string> csv_split(std::string_view line);

/// SHA-256 (hex) over labels and the exact bit patterns of the features.
std::string dataset_fingerprint(const LabeledDataset& ds);

std::string sha256_hex(std::string_view bytes);

}  // namespace instrec
