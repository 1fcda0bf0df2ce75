#include <doctest.h>

#include <algorithm>
#include <cstring>

#include "fixtures.hpp"
#include "instrec/error.hpp"
#include "instrec/features.hpp"
#include "oracles.hpp"

using namespace instrec;

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

std::vector<double> bin_freqs(std::size_t n_bins, double rate = 44100.0) {
  std::vector<double> f(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) f[k] = static_cast<double>(k) * rate / (2.0 * static_cast<double>(n_bins - 1));
  return f;
}

}  // namespace

TEST_CASE("mel scale") {
  CHECK(hz_to_mel(0.0) == 0.0);
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-12));
  CHECK(std::abs(hz_to_mel(700.0) - 781.17) < 0.01);
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)).epsilon(1e-15));
  CHECK(hz_to_mel(22050.0) == doctest::Approx(3923.33).epsilon(1e-5));
  CHECK(mel_to_hz(0.0) == 0.0);
  CHECK(mel_to_hz(hz_to_mel(1000.0)) == doctest::Approx(1000.0).epsilon(1e-12));
  CHECK(mel_to_hz(781.177) == doctest::Approx(700.0).epsilon(1e-5));
  CHECK(code_of([] { hz_to_mel(-1.0); }) == ErrorCode::NegativeFrequency);
  CHECK(code_of([] { mel_to_hz(-1.0); }) == ErrorCode::NegativeMel);
}

TEST_CASE("mel round trip on random frequencies") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double f = 22050.0 * rng.uniform();
    const double m = hz_to_mel(f);
    CHECK(std::abs(mel_to_hz(m) - f) <= 1e-9 * f + 1e-12);
    CHECK(std::abs(hz_to_mel(mel_to_hz(m)) - m) <= 1e-9 * m + 1e-12);
  }
}

TEST_CASE("filterbank against the definition") {
  const MelFilterbank fb = build_mel_filterbank(40, 513, 44100);
  const auto ref = oracle::filterbank(40, 513, 44100.0);
  REQUIRE(fb.n_mels() == 40);
  REQUIRE(fb.n_bins() == 513);
  double err = 0.0;
  for (std::size_t j = 0; j < 40; ++j) {
    double row_sum = 0.0;
    for (std::size_t k = 0; k < 513; ++k) {
      err = std::max(err, std::abs(fb.weights(j, k) - ref[j][k]));
      row_sum += fb.weights(j, k);
    }
    CHECK(row_sum > 0.0);
  }
  CHECK(err < 1e-9);

  REQUIRE(fb.break_hz.size() == 42);
  const double step = hz_to_mel(fb.break_hz[1]) - hz_to_mel(fb.break_hz[0]);
  for (std::size_t i = 0; i + 1 < fb.break_hz.size(); ++i) {
    CHECK(std::abs(hz_to_mel(fb.break_hz[i + 1]) - hz_to_mel(fb.break_hz[i]) - step) < 1e-9);
    CHECK(fb.break_hz[i + 1] > fb.break_hz[i]);
  }
}

TEST_CASE("filterbank rows are triangles inside their band") {
  const MelFilterbank fb = build_mel_filterbank(40, 513, 44100);
  const auto freqs = bin_freqs(513);
  for (std::size_t j = 0; j < fb.n_mels(); ++j) {
    const auto row = fb.weights.row(j);
    const auto peak = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    for (std::size_t k = 1; k <= peak; ++k) CHECK(row[k] >= row[k - 1]);
    for (std::size_t k = peak + 1; k < row.size(); ++k) CHECK(row[k] <= row[k - 1]);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (freqs[k] <= fb.break_hz[j] || freqs[k] >= fb.break_hz[j + 2]) CHECK(row[k] == 0.0);
      CHECK(row[k] <= 1.0);
    }
  }
}

TEST_CASE("single filter peaks mid band") {
  const MelFilterbank fb = build_mel_filterbank(1, 513, 44100);
  CHECK(fb.weights(0, 0) == 0.0);
  CHECK(fb.weights(0, 512) == 0.0);
  const auto row = fb.weights.row(0);
  const auto peak = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  const double peak_hz = bin_freqs(513)[peak];
  CHECK(std::abs(peak_hz - fb.break_hz[1]) <= 44100.0 / 1024.0);
}

TEST_CASE("too many filters for the bins") {
  CHECK(code_of([] { build_mel_filterbank(128, 33, 44100); }) == ErrorCode::TooManyFilters);
}

TEST_CASE("DCT-II matrix") {
  const Matrix t = dct2_matrix(40, 40);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 40; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < 40; ++k) dot += t(i, k) * t(j, k);
      CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-9);
    }
  }
  Rng rng(2);
  std::vector<double> x(40);
  for (double& v : x) v = rng.normal();
  const auto ref = oracle::naive_dct2(x);
  for (std::size_t k = 0; k < 40; ++k) {
    double c = 0.0;
    for (std::size_t i = 0; i < 40; ++i) c += t(k, i) * x[i];
    CHECK(std::abs(c - ref[k]) < 1e-9);
  }
}

TEST_CASE("mfcc of a hand-sized bank") {
  // identity filterbank over four bins gives mel energies equal to the bins
  MelFilterbank fb;
  fb.weights = Matrix(4, 4);
  for (std::size_t i = 0; i < 4; ++i) fb.weights(i, i) = 1.0;
  PowerSpectrogram spec;
  spec.values = Matrix(1, 4);
  const double e = std::exp(1.0);
  spec.values(0, 0) = 1.0;
  spec.values(0, 1) = e;
  spec.values(0, 2) = e * e;
  spec.values(0, 3) = e * e * e;
  spec.bin_freqs_hz = {0, 1, 2, 3};
  const Matrix c = mfcc_frames(spec, fb, 4, 1e-10);
  const auto ref = oracle::naive_dct2({0.0, 1.0, 2.0, 3.0});
  for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(c(0, k) - ref[k]) < 1e-9);

  fb.weights = Matrix(4, 5);
  CHECK(code_of([&] { mfcc_frames(spec, fb, 4, 1e-10); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("mfcc of silence is the constant-log DCT") {
  PowerSpectrogram spec;
  spec.values = Matrix(3, 513);
  spec.bin_freqs_hz = bin_freqs(513);
  const MelFilterbank fb = build_mel_filterbank(40, 513, 44100);
  const Matrix c = mfcc_frames(spec, fb, 13, 1e-10);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(c(t, 0) == doctest::Approx(std::sqrt(40.0) * std::log(1e-10)).epsilon(1e-12));
    for (std::size_t k = 1; k < 13; ++k) CHECK(std::abs(c(t, k)) < 1e-9);
  }
}

TEST_CASE("zero crossing rate") {
  CHECK(zero_crossing_rate(std::vector<double>{0.3, 0.3, 0.3}) == 0.0);
  CHECK(zero_crossing_rate(std::vector<double>{1, -1, 1, -1, 1, -1}) == 1.0);
  CHECK(zero_crossing_rate(std::vector<double>{1, -1, -1, 1}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(zero_crossing_rate(std::vector<double>{0, -1, 0, 1}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(zero_crossing_rate(std::vector<double>{0, 0, 0}) == 0.0);
  CHECK(code_of([] { zero_crossing_rate(std::vector<double>{1.0}); }) == ErrorCode::FrameTooShort);
}

TEST_CASE("spectral centroid and bandwidth") {
  const std::vector<double> f{100, 200, 300};
  CHECK(spectral_centroid(std::vector<double>{0, 9, 0}, f) == 200.0);
  CHECK(spectral_centroid(std::vector<double>{4, 0, 4}, f) == doctest::Approx(200.0));
  CHECK(spectral_bandwidth(std::vector<double>{4, 0, 4}, f, 200.0) == doctest::Approx(100.0));
  CHECK(spectral_bandwidth(std::vector<double>{0, 9, 0}, f, 200.0) == 0.0);
  // magnitudes 1 and 3 are powers 1 and 9
  const std::vector<double> f2{100, 200};
  const double c = spectral_centroid(std::vector<double>{1, 9}, f2);
  CHECK(c == doctest::Approx(175.0).epsilon(1e-14));
  CHECK(spectral_bandwidth(std::vector<double>{1, 9}, f2, c) ==
        doctest::Approx(std::sqrt((75.0 * 75.0 + 3.0 * 25.0 * 25.0) / 4.0)).epsilon(1e-14));
  CHECK(spectral_centroid(std::vector<double>{0, 0}, f2) == 0.0);
  CHECK(spectral_bandwidth(std::vector<double>{0, 0}, f2, 0.0) == 0.0);
  CHECK(code_of([&] { spectral_centroid(std::vector<double>{1, 2, 3}, f2); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("spectral rolloff") {
  std::vector<double> f(10);
  for (std::size_t i = 0; i < 10; ++i) f[i] = 10.0 * static_cast<double>(i);
  std::vector<double> point(10, 0.0);
  point[7] = 3.0;
  CHECK(spectral_rolloff(point, f, 0.1) == f[7]);
  CHECK(spectral_rolloff(point, f, 0.99) == f[7]);
  CHECK(spectral_rolloff(std::vector<double>(10, 1.0), f, 0.85) == f[8]);
  CHECK(spectral_rolloff(std::vector<double>{1, 1, 2}, std::vector<double>{0, 10, 20}, 0.5) == 10.0);
  CHECK(spectral_rolloff(std::vector<double>(10, 0.0), f, 0.85) == 0.0);
  CHECK(code_of([&] { spectral_rolloff(point, f, 1.0); }) == ErrorCode::InvalidFraction);
  CHECK(code_of([&] { spectral_rolloff(point, f, 0.0); }) == ErrorCode::InvalidFraction);
}

TEST_CASE("clip features") {
  const FeatureExtractor fx;
  SUBCASE("silence") {
    const FeatureVector v = fx.extract(make_clip(std::vector<double>(132300, 0.0)));
    CHECK(v.zcr == 0.0);
    CHECK(v.centroid_hz == 0.0);
    CHECK(v.bandwidth_hz == 0.0);
    CHECK(v.rolloff_hz == 0.0);
    CHECK(v.mfcc[0] == doctest::Approx(std::sqrt(40.0) * std::log(1e-10)).epsilon(1e-12));
    for (std::size_t k = 1; k < 13; ++k) CHECK(std::abs(v.mfcc[k]) < 1e-9);
  }
  SUBCASE("pure tone") {
    const FeatureVector v = fx.extract(make_clip(fixture::sine(2756.25, 132300)));
    CHECK(std::abs(v.centroid_hz - 2756.25) <= 44100.0 / 1024.0);
    for (double x : v.values()) CHECK(std::isfinite(x));
    CHECK(fx.mfcc(make_clip(fixture::sine(2756.25, 132300))).rows() == 259);
  }
  SUBCASE("deterministic") {
    Rng rng(9);
    std::vector<double> s(44100);
    for (double& x : s) x = 0.5 * (rng.uniform() - 0.5);
    const auto a = fx.extract(make_clip(s)).values();
    const auto b = extract_clip_features(make_clip(s)).values();
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
  }
}

TEST_CASE("descriptors are invariant to gain") {
  Rng rng(12);
  std::vector<double> s(44100);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = 0.3 * std::sin(0.05 * static_cast<double>(i)) + 0.1 * (rng.uniform() - 0.5);
  }
  const FeatureExtractor fx;
  const FeatureVector base = fx.extract(make_clip(s));
  for (double gain : {0.01, 0.5, 2.0}) {
    std::vector<double> scaled(s);
    for (double& x : scaled) x *= gain;
    const FeatureVector v = fx.extract(make_clip(scaled));
    CHECK(std::abs(v.zcr - base.zcr) <= 1e-9 * base.zcr);
    CHECK(std::abs(v.centroid_hz - base.centroid_hz) <= 1e-9 * base.centroid_hz);
    CHECK(std::abs(v.bandwidth_hz - base.bandwidth_hz) <= 1e-9 * base.bandwidth_hz);
    CHECK(std::abs(v.rolloff_hz - base.rolloff_hz) <= 1e-9 * base.rolloff_hz);
    for (std::size_t k = 1; k < 13; ++k) CHECK(std::abs(v.mfcc[k] - base.mfcc[k]) < 1e-6);
  }
}

TEST_CASE("extraction config validation") {
  ExtractionConfig c;
  c.rolloff_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.n_mfcc = 12;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.n_mels = 10;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(feature_names()[0] == "mfcc_0");
  CHECK(feature_names()[16] == "rolloff");
}
