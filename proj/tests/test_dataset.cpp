#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "instrec/dataset.hpp"
#include "instrec/error.hpp"

using namespace instrec;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoFailure;
}

void touch(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << "x";
}

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::vector<std::size_t> iota_vec(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

TEST_CASE("class codes") {
  CHECK(irmas_class_codes() == std::vector<std::string>{"flu", "pia", "tru", "gac", "voi", "org"});
  CHECK(instrument_display_name("flu") == "Flute");
  CHECK(instrument_display_name("gac") == "Guitar");
  CHECK(instrument_display_name("xyz") == "xyz");
}

TEST_CASE("scan instrument folders") {
  const auto root = fixture::temp_dir("scan");
  touch(root / "flu" / "b.wav");
  touch(root / "flu" / "a.WAV");
  touch(root / "flu" / "notes.txt");
  touch(root / "pia" / "z.wav");
  touch(root / "pia" / "sub" / "y.wav");
  touch(root / "pia" / "c.wav");
  const std::vector<std::string> classes{"flu", "pia"};
  const auto entries = scan_instrument_dirs(root, classes);
  REQUIRE(entries.size() == 5);
  std::vector<int> labels;
  for (const auto& e : entries) labels.push_back(e.label);
  CHECK(labels == std::vector<int>{0, 0, 1, 1, 1});
  CHECK(entries[0].path.filename() == "a.WAV");
  CHECK(entries[2].path.filename() == "c.wav");
  CHECK(entries[3].path.filename() == "y.wav");

  const auto again = scan_instrument_dirs(root, classes);
  for (std::size_t i = 0; i < entries.size(); ++i) CHECK(again[i].path == entries[i].path);

  const std::vector<std::string> missing{"flu", "tru"};
  CHECK(code_of([&] { scan_instrument_dirs(root, missing); }) == ErrorCode::MissingClassDir);
  fs::create_directories(root / "org");
  touch(root / "org" / "readme.txt");
  const std::vector<std::string> empty{"org"};
  try {
    scan_instrument_dirs(root, empty);
    FAIL("expected EmptyClassDir");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyClassDir);
    CHECK(std::string(e.what()).find("org") != std::string::npos);
  }
}

TEST_CASE("train/test split") {
  const std::vector<int> labels(10, 0);
  const IndexSplit s = split_indices(labels, SplitSpec{});
  CHECK(s.test.size() == 2);
  CHECK(s.train.size() == 8);
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.test.begin(), s.test.end());
  CHECK(sorted(all) == iota_vec(10));

  const IndexSplit again = split_indices(labels, SplitSpec{});
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);

  const std::vector<int> big(3846, 0);
  CHECK(split_indices(big, SplitSpec{}).test.size() == 770);

  const std::vector<int> one(1, 0);
  CHECK(code_of([&] { split_indices(one, SplitSpec{}); }) == ErrorCode::DegenerateSplit);
  SplitSpec bad;
  bad.test_fraction = 1.0;
  CHECK_THROWS_AS(split_indices(labels, bad), Error);
}

TEST_CASE("stratified split keeps class shares") {
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) labels.push_back(i < 40 ? 0 : 1);
  SplitSpec spec;
  spec.stratified = true;
  const IndexSplit s = split_indices(labels, spec);
  const auto ones = std::count_if(s.test.begin(), s.test.end(), [&](std::size_t i) { return labels[i] == 1; });
  CHECK(ones == 2);
  CHECK(s.test.size() == 10);
}

TEST_CASE("k folds") {
  auto folds = kfold_indices(10, 10, 1);
  for (const auto& f : folds) CHECK(f.size() == 1);

  folds = kfold_indices(23, 10, 1);
  std::vector<std::size_t> sizes;
  for (const auto& f : folds) sizes.push_back(f.size());
  CHECK(std::count(sizes.begin(), sizes.end(), 3) == 3);
  CHECK(std::count(sizes.begin(), sizes.end(), 2) == 7);

  CHECK(code_of([] { kfold_indices(5, 6, 1); }) == ErrorCode::TooManyFolds);

  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(200);
    const std::size_t k = 2 + rng.index(n - 1);
    const auto fs_ = kfold_indices(n, k, rng.next());
    std::vector<std::size_t> all;
    std::size_t lo = n, hi = 0;
    for (const auto& f : fs_) {
      all.insert(all.end(), f.begin(), f.end());
      lo = std::min(lo, f.size());
      hi = std::max(hi, f.size());
    }
    CHECK(sorted(all) == iota_vec(n));
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("scaler") {
  Matrix m(2, 2);
  m(0, 0) = 1;
  m(1, 0) = 3;
  m(0, 1) = 5;
  m(1, 1) = 5;
  const Scaler s = fit_scaler(m);
  CHECK(s.means == std::vector<double>{2.0, 5.0});
  CHECK(s.stdevs == std::vector<double>{1.0, 1.0});
  const Matrix z = apply_scaler(s, m);
  CHECK(z(0, 0) == -1.0);
  CHECK(z(1, 0) == 1.0);
  CHECK(z(0, 1) == 0.0);
  CHECK(z(1, 1) == 0.0);
  CHECK(code_of([] { fit_scaler(Matrix()); }) == ErrorCode::EmptyInput);

  const Matrix x = fixture::random_matrix(200, 17, 6);
  Matrix shifted = x;
  for (double& v : shifted.data()) v = 3.0 * v + 10.0;
  const Scaler fitted = fit_scaler(shifted);
  const Matrix scaled = fitted.apply(shifted);
  for (std::size_t j = 0; j < 17; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 200; ++i) mean += scaled(i, j);
    CHECK(std::abs(mean / 200.0) < 1e-9);
  }
  const Matrix back = fitted.unscale(scaled);
  for (std::size_t i = 0; i < back.data().size(); ++i) CHECK(std::abs(back.data()[i] - shifted.data()[i]) < 1e-9);
}

TEST_CASE("feature CSV round trip") {
  LabeledDataset ds = fixture::blobs(3, 2, 17, 4.0, 1);
  ds.class_names = {"flu", "pia"};
  ds.paths[0] = "odd, \"name\".wav";
  ds.paths[1] = "#hash.wav";
  ds.features(0, 0) = 0.1;
  ds.features(0, 1) = 1e-300;
  ds.features(0, 2) = -123456789.123456789;
  std::stringstream buf;
  const std::vector<std::string> comments{"seed=42", "note"};
  write_feature_csv(buf, ds, comments);
  const std::string text = buf.str();
  CHECK(text.rfind("# seed=42\n# note\n# classes: flu,pia\npath,label,mfcc_0,", 0) == 0);
  const LabeledDataset back = read_feature_csv(buf);
  CHECK(back.class_names == ds.class_names);
  CHECK(back.labels == ds.labels);
  CHECK(back.paths == ds.paths);
  CHECK(back.features == ds.features);
  CHECK(dataset_fingerprint(back) == dataset_fingerprint(ds));
}

TEST_CASE("feature CSV schema errors") {
  std::istringstream missing("path,label,mfcc_0\nx.wav,flu,1\n");
  try {
    read_feature_csv(missing);
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaMismatch);
    CHECK(std::string(e.what()).find("mfcc_1") != std::string::npos);
  }
  std::istringstream empty("");
  CHECK(code_of([&] { read_feature_csv(empty); }) == ErrorCode::SchemaMismatch);
}

TEST_CASE("fingerprint and hashing") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  LabeledDataset a = fixture::blobs(2, 2, 3, 1.0, 1);
  LabeledDataset b = a;
  CHECK(dataset_fingerprint(a) == dataset_fingerprint(b));
  b.features(0, 0) = std::nextafter(b.features(0, 0), 1e9);
  CHECK(dataset_fingerprint(a) != dataset_fingerprint(b));
}

TEST_CASE("format_double is shortest round trip") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 123456789.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(csv_split("a,\"b,c\",\"d\"\"e\"") == std::vector<std::string>{"a", "b,c", "d\"e"});
}

TEST_CASE("dataset validation") {
  LabeledDataset ds = fixture::blobs(2, 2, 3, 1.0, 1);
  ds.labels[0] = 5;
  CHECK(code_of([&] { ds.validate(); }) == ErrorCode::InvalidDataset);
  ds = fixture::blobs(2, 2, 3, 1.0, 1);
  ds.features(1, 1) = std::nan("");
  CHECK(code_of([&] { ds.validate(); }) == ErrorCode::InvalidDataset);
}
