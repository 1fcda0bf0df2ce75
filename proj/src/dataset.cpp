#include "instrec/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>

#include "instrec/error.hpp"
#include "instrec/features.hpp"
#include "instrec/rng.hpp"

namespace instrec {

const std::vector<std::string>& irmas_class_codes() {
  static const std::vector<std::string> codes = {"flu", "pia", "tru", "gac", "voi", "org"};
  return codes;
}

std::string instrument_display_name(std::string_view code) {
  static const std::map<std::string, std::string, std::less<>> names = {
      {"flu", "Flute"}, {"pia", "Piano"}, {"tru", "Trumpet"},
      {"gac", "Guitar"}, {"voi", "Voice"}, {"org", "Organ"}};
  const auto it = names.find(code);
  return it == names.end() ? std::string(code) : it->second;
}

void LabeledDataset::validate() const {
  if (features.rows() != labels.size() || paths.size() != labels.size()) {
    throw Error(ErrorCode::InvalidDataset, "feature rows, labels and paths differ in length");
  }
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= class_names.size()) {
      throw Error(ErrorCode::InvalidDataset, "label " + std::to_string(label) + " out of range");
    }
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidDataset, "non-finite feature value");
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.class_names = class_names;
  out.features = Matrix(rows.size(), features.cols());
  out.labels.reserve(rows.size());
  out.paths.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = features.row(rows[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels.push_back(labels[rows[i]]);
    out.paths.push_back(paths[rows[i]]);
  }
  return out;
}

std::vector<ScanEntry> scan_instrument_dirs(const std::filesystem::path& root,
                                            std::span<const std::string> class_names) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) {
    throw Error(ErrorCode::MissingClassDir, root.string() + " is not a directory");
  }
  std::vector<ScanEntry> entries;
  for (std::size_t label = 0; label < class_names.size(); ++label) {
    const fs::path dir = root / class_names[label];
    if (!fs::is_directory(dir)) {
      throw Error(ErrorCode::MissingClassDir, dir.string() + " does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (ext == ".wav") files.push_back(entry.path());
    }
    if (files.empty()) {
      throw Error(ErrorCode::EmptyClassDir, dir.string() + " contains no .wav files");
    }
    std::sort(files.begin(), files.end());
    for (auto& f : files) entries.push_back({std::move(f), static_cast<int>(label)});
  }
  return entries;
}

void SplitSpec::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "test fraction must lie in (0, 1)");
  }
  if (folds < 2) throw Error(ErrorCode::InvalidConfig, "need at least two folds");
}

namespace {

std::size_t test_count(double fraction, std::size_t n) {
  // the epsilon keeps exact products such as 0.2 * 10 from rounding up
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

std::vector<std::size_t> shuffled_range(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(idx));
  return idx;
}

}  // namespace

IndexSplit split_indices(std::span<const int> labels, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = labels.size();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "cannot split an empty dataset");
  Rng rng(spec.seed);
  const std::vector<std::size_t> order = shuffled_range(n, rng);

  IndexSplit split;
  if (!spec.stratified) {
    const std::size_t n_test = test_count(spec.test_fraction, n);
    split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n_test, n)));
    split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(std::min(n_test, n)), order.end());
  } else {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i : order) by_class[labels[i]].push_back(i);
    for (const auto& [label, members] : by_class) {
      const std::size_t n_test = std::min(test_count(spec.test_fraction, members.size()), members.size());
      split.test.insert(split.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
      split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
    }
  }
  if (split.train.empty() || split.test.empty()) {
    throw Error(ErrorCode::DegenerateSplit, "split of " + std::to_string(n) +
                                                " rows leaves one side empty");
  }
  return split;
}

std::pair<LabeledDataset, LabeledDataset> train_test_split(const LabeledDataset& ds,
                                                           const SplitSpec& spec) {
  const IndexSplit split = split_indices(ds.labels, spec);
  return {ds.subset(split.train), ds.subset(split.test)};
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k,
                                                    std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidConfig, "need at least two folds");
  if (k > n) {
    throw Error(ErrorCode::TooManyFolds,
                std::to_string(k) + " folds for " + std::to_string(n) + " samples");
  }
  Rng rng(seed);
  const std::vector<std::size_t> order = shuffled_range(n, rng);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return folds;
}

void Scaler::apply_row(std::span<double> row) const {
  if (row.size() != dim()) {
    throw Error(ErrorCode::DimensionMismatch, "scaler expects " + std::to_string(dim()) +
                                                  " features, got " + std::to_string(row.size()));
  }
  for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - means[j]) / stdevs[j];
}

Matrix Scaler::apply(const Matrix& features) const {
  Matrix out = features;
  for (std::size_t i = 0; i < out.rows(); ++i) apply_row(out.row(i));
  return out;
}

Matrix Scaler::unscale(const Matrix& features) const {
  Matrix out = features;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = row[j] * stdevs[j] + means[j];
  }
  return out;
}

Scaler fit_scaler(const Matrix& features) {
  if (features.rows() == 0) throw Error(ErrorCode::EmptyInput, "cannot fit a scaler on no rows");
  const std::size_t d = features.cols();
  const auto n = static_cast<double>(features.rows());
  Scaler s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) s.means[j] += features(i, j);
  }
  for (double& m : s.means) m /= n;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = features(i, j) - s.means[j];
      s.stdevs[j] += dev * dev;
    }
  }
  for (double& sd : s.stdevs) {
    sd = std::sqrt(sd / n);
    if (!(sd > 0.0)) sd = 1.0;
  }
  return s;
}

Matrix apply_scaler(const Scaler& scaler, const Matrix& features) { return scaler.apply(features); }

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), result.ptr);
}

std::string csv_quote(std::string_view field) {
  // a leading '#' would otherwise read back as a comment line
  if (field.find_first_of(",\"\r\n") == std::string_view::npos && !field.starts_with('#')) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

namespace {

// A record may span lines when a quoted field contains a newline.
bool read_record(std::istream& in, std::string& record) {
  record.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  record = line;
  while (std::count(record.begin(), record.end(), '"') % 2 == 1 && std::getline(in, line)) {
    record += '\n';
    record += line;
  }
  return true;
}

constexpr std::string_view kClassesComment = "# classes:";

}  // namespace

void write_feature_csv(std::ostream& out, const LabeledDataset& ds,
                       std::span<const std::string> comment_lines) {
  ds.validate();
  if (ds.features.cols() != kFeatureDim) {
    throw Error(ErrorCode::SchemaMismatch, "feature CSV rows carry exactly 17 features");
  }
  for (const auto& line : comment_lines) out << "# " << line << '\n';
  out << kClassesComment << ' ';
  for (std::size_t c = 0; c < ds.class_names.size(); ++c) {
    out << (c ? "," : "") << ds.class_names[c];
  }
  out << '\n' << "path,label";
  for (auto name : feature_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << csv_quote(ds.paths[i]) << ',' << csv_quote(ds.class_names[ds.labels[i]]);
    for (double v : ds.features.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

LabeledDataset read_feature_csv(std::istream& in) {
  LabeledDataset ds;
  std::vector<std::string> declared_classes;
  std::string record;
  std::vector<std::string> header;
  while (read_record(in, record)) {
    if (record.empty()) continue;
    if (record.starts_with(kClassesComment)) {
      std::string_view rest = std::string_view(record).substr(kClassesComment.size());
      while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
      declared_classes = csv_split(rest);
      continue;
    }
    if (record.front() == '#') continue;
    header = csv_split(record);
    break;
  }
  if (header.empty()) throw Error(ErrorCode::SchemaMismatch, "missing header row");

  auto column_of = [&](std::string_view name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::SchemaMismatch, "missing column '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t path_col = column_of("path");
  const std::size_t label_col = column_of("label");
  std::array<std::size_t, kFeatureDim> feature_cols{};
  for (std::size_t j = 0; j < kFeatureDim; ++j) feature_cols[j] = column_of(feature_names()[j]);

  std::map<std::string, int, std::less<>> class_index;
  for (const auto& name : declared_classes) {
    class_index.emplace(name, static_cast<int>(ds.class_names.size()));
    ds.class_names.push_back(name);
  }

  std::array<double, kFeatureDim> row{};
  std::size_t line_no = 0;
  while (read_record(in, record)) {
    ++line_no;
    if (record.empty() || record.front() == '#') continue;
    const std::vector<std::string> fields = csv_split(record);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::SchemaMismatch, "data row " + std::to_string(line_no) + " has " +
                                                 std::to_string(fields.size()) + " fields, header has " +
                                                 std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
      const std::string& text = fields[feature_cols[j]];
      const auto result = std::from_chars(text.data(), text.data() + text.size(), row[j]);
      if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
        throw Error(ErrorCode::SchemaMismatch, "data row " + std::to_string(line_no) + ": column '" +
                                                   std::string(feature_names()[j]) +
                                                   "' is not a number: '" + text + "'");
      }
    }
    const std::string& label = fields[label_col];
    auto it = class_index.find(label);
    if (it == class_index.end()) {
      if (!declared_classes.empty()) {
        throw Error(ErrorCode::SchemaMismatch, "undeclared class '" + label + "'");
      }
      it = class_index.emplace(label, static_cast<int>(ds.class_names.size())).first;
      ds.class_names.push_back(label);
    }
    ds.features.push_row(row);
    ds.labels.push_back(it->second);
    ds.paths.push_back(fields[path_col]);
  }
  if (ds.size() == 0) ds.features = Matrix(0, kFeatureDim);
  try {
    ds.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaMismatch, e.detail());
  }
  return ds;
}

LabeledDataset read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return read_feature_csv(in);
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoFailure, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

std::string dataset_fingerprint(const LabeledDataset& ds) {
  std::string bytes;
  auto append_u64 = [&](std::uint64_t v) {
    for (int shift = 0; shift < 64; shift += 8) bytes += static_cast<char>((v >> shift) & 0xFF);
  };
  append_u64(ds.size());
  append_u64(ds.features.cols());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    append_u64(static_cast<std::uint64_t>(ds.labels[i]));
    for (double v : ds.features.row(i)) append_u64(std::bit_cast<std::uint64_t>(v));
  }
  return sha256_hex(bytes);
}

}  // namespace instrec
