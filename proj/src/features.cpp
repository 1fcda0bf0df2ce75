#include "instrec/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "instrec/error.hpp"

namespace instrec {

const std::array<std::string_view, kFeatureDim>& feature_names() {
  static const std::array<std::string_view, kFeatureDim> names = {
      "mfcc_0", "mfcc_1", "mfcc_2",  "mfcc_3",  "mfcc_4", "mfcc_5",   "mfcc_6",    "mfcc_7",  "mfcc_8",
      "mfcc_9", "mfcc_10", "mfcc_11", "mfcc_12", "zcr",    "centroid", "bandwidth", "rolloff"};
  return names;
}

double hz_to_mel(double hz) {
  if (!(hz >= 0.0)) throw Error(ErrorCode::NegativeFrequency, std::to_string(hz) + " Hz");
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_to_hz(double mel) {
  if (!(mel >= 0.0)) throw Error(ErrorCode::NegativeMel, std::to_string(mel) + " mel");
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank build_mel_filterbank(std::size_t n_mels, std::size_t n_bins, int sample_rate_hz,
                                   double f_min_hz, double f_max_hz) {
  if (n_mels == 0) throw Error(ErrorCode::InvalidConfig, "need at least one mel filter");
  if (n_bins < 2) throw Error(ErrorCode::InvalidConfig, "need at least two spectrum bins");
  const double nyquist = sample_rate_hz / 2.0;
  if (f_max_hz < 0.0) f_max_hz = nyquist;
  if (f_min_hz < 0.0 || f_max_hz <= f_min_hz || f_max_hz > nyquist) {
    throw Error(ErrorCode::InvalidConfig, "mel band edges must satisfy 0 <= f_min < f_max <= Nyquist");
  }

  MelFilterbank fb;
  fb.f_min_hz = f_min_hz;
  fb.f_max_hz = f_max_hz;
  const double mel_lo = hz_to_mel(f_min_hz);
  const double mel_hi = hz_to_mel(f_max_hz);
  fb.break_hz.resize(n_mels + 2);
  for (std::size_t i = 0; i < n_mels + 2; ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                    static_cast<double>(n_mels + 1);
    fb.break_hz[i] = mel_to_hz(mel);
  }
  fb.break_hz.front() = f_min_hz;
  fb.break_hz.back() = f_max_hz;

  const double frame_size = 2.0 * static_cast<double>(n_bins - 1);
  fb.weights = Matrix(n_mels, n_bins);
  for (std::size_t j = 0; j < n_mels; ++j) {
    const double lo = fb.break_hz[j];
    const double mid = fb.break_hz[j + 1];
    const double hi = fb.break_hz[j + 2];
    bool any_positive = false;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / frame_size;
      const double rising = (f - lo) / (mid - lo);
      const double falling = (hi - f) / (hi - mid);
      const double w = f <= lo || f >= hi ? 0.0 : std::min(rising, falling);
      fb.weights(j, k) = w;
      any_positive = any_positive || w > 0.0;
    }
    if (!any_positive) {
      throw Error(ErrorCode::TooManyFilters,
                  "mel filter " + std::to_string(j) + " (" + std::to_string(lo) + "-" +
                      std::to_string(hi) + " Hz) covers no spectrum bin");
    }
  }
  return fb;
}

Matrix dct2_matrix(std::size_t n_out, std::size_t n_in) {
  Matrix t(n_out, n_in);
  const double n = static_cast<double>(n_in);
  for (std::size_t k = 0; k < n_out; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (std::size_t i = 0; i < n_in; ++i) {
      t(k, i) = scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                                 (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n));
    }
  }
  return t;
}

Matrix mfcc_frames(const PowerSpectrogram& spec, const MelFilterbank& fb, std::size_t n_mfcc,
                   double log_floor) {
  if (fb.n_bins() != spec.n_bins()) {
    throw Error(ErrorCode::DimensionMismatch, "filterbank has " + std::to_string(fb.n_bins()) +
                                                  " bins, spectrogram has " +
                                                  std::to_string(spec.n_bins()));
  }
  if (n_mfcc == 0 || n_mfcc > fb.n_mels()) {
    throw Error(ErrorCode::InvalidConfig, "n_mfcc must be in [1, n_mels]");
  }
  if (!(log_floor > 0.0)) throw Error(ErrorCode::InvalidConfig, "log floor must be positive");

  const Matrix dct = dct2_matrix(n_mfcc, fb.n_mels());
  Matrix out(spec.n_frames(), n_mfcc);
  std::vector<double> log_energy(fb.n_mels());
  for (std::size_t t = 0; t < spec.n_frames(); ++t) {
    const auto power = spec.values.row(t);
    for (std::size_t m = 0; m < fb.n_mels(); ++m) {
      const auto w = fb.weights.row(m);
      const double e = std::inner_product(w.begin(), w.end(), power.begin(), 0.0);
      log_energy[m] = std::log(std::max(e, log_floor));
    }
    auto c = out.row(t);
    for (std::size_t k = 0; k < n_mfcc; ++k) {
      const auto basis = dct.row(k);
      c[k] = std::inner_product(basis.begin(), basis.end(), log_energy.begin(), 0.0);
    }
  }
  return out;
}

double zero_crossing_rate(std::span<const double> frame) {
  if (frame.size() < 2) throw Error(ErrorCode::FrameTooShort, "ZCR needs at least two samples");
  std::size_t crossings = 0;
  for (std::size_t i = 1; i < frame.size(); ++i) {
    // zero counts as non-negative
    if ((frame[i - 1] >= 0.0) != (frame[i] >= 0.0)) ++crossings;
  }
  return static_cast<double>(crossings) / static_cast<double>(frame.size() - 1);
}

namespace {

void check_lengths(std::span<const double> power, std::span<const double> freqs) {
  if (power.size() != freqs.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(power.size()) + " power bins vs " +
                                               std::to_string(freqs.size()) + " frequencies");
  }
}

}  // namespace

double spectral_centroid(std::span<const double> power_bins, std::span<const double> bin_freqs_hz) {
  check_lengths(power_bins, bin_freqs_hz);
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < power_bins.size(); ++k) {
    const double magnitude = std::sqrt(power_bins[k]);
    weighted += bin_freqs_hz[k] * magnitude;
    total += magnitude;
  }
  return total > 0.0 ? weighted / total : 0.0;
}

double spectral_bandwidth(std::span<const double> power_bins, std::span<const double> bin_freqs_hz,
                          double centroid_hz) {
  check_lengths(power_bins, bin_freqs_hz);
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < power_bins.size(); ++k) {
    const double magnitude = std::sqrt(power_bins[k]);
    const double d = bin_freqs_hz[k] - centroid_hz;
    weighted += magnitude * d * d;
    total += magnitude;
  }
  return total > 0.0 ? std::sqrt(weighted / total) : 0.0;
}

double spectral_rolloff(std::span<const double> power_bins, std::span<const double> bin_freqs_hz,
                        double fraction) {
  check_lengths(power_bins, bin_freqs_hz);
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::InvalidFraction, "rolloff fraction must lie in (0, 1)");
  }
  const double total = std::accumulate(power_bins.begin(), power_bins.end(), 0.0);
  if (!(total > 0.0)) return 0.0;
  const double threshold = fraction * total;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < power_bins.size(); ++k) {
    cumulative += power_bins[k];
    if (cumulative >= threshold) return bin_freqs_hz[k];
  }
  return bin_freqs_hz.back();
}

void ExtractionConfig::validate() const {
  frame.validate();
  if (n_mfcc != kMfccCount) {
    throw Error(ErrorCode::InvalidConfig,
                "feature vectors carry exactly " + std::to_string(kMfccCount) + " MFCCs");
  }
  if (n_mfcc > n_mels) throw Error(ErrorCode::InvalidConfig, "n_mfcc exceeds n_mels");
  if (!(rolloff_fraction > 0.0 && rolloff_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidFraction, "rolloff fraction must lie in (0, 1)");
  }
  if (!(log_floor > 0.0)) throw Error(ErrorCode::InvalidConfig, "log floor must be positive");
}

std::array<double, kFeatureDim> FeatureVector::values() const {
  std::array<double, kFeatureDim> v{};
  std::copy(mfcc.begin(), mfcc.end(), v.begin());
  v[kMfccCount] = zcr;
  v[kMfccCount + 1] = centroid_hz;
  v[kMfccCount + 2] = bandwidth_hz;
  v[kMfccCount + 3] = rolloff_hz;
  return v;
}

FeatureExtractor::FeatureExtractor(const ExtractionConfig& config, int sample_rate_hz)
    : config_(config) {
  config_.validate();
  filterbank_ = build_mel_filterbank(config_.n_mels, config_.frame.frame_size / 2 + 1, sample_rate_hz);
}

Matrix FeatureExtractor::mfcc(const AudioClip& clip) const {
  const PowerSpectrogram spec = power_spectrogram(clip, config_.frame);
  return mfcc_frames(spec, filterbank_, config_.n_mfcc, config_.log_floor);
}

FeatureVector FeatureExtractor::extract(const AudioClip& clip) const {
  const Matrix frames = frame_signal(clip, config_.frame);
  const PowerSpectrogram spec = power_spectrogram(frames, clip.sample_rate_hz);
  const Matrix coefficients = mfcc_frames(spec, filterbank_, config_.n_mfcc, config_.log_floor);
  const auto n_frames = static_cast<double>(frames.rows());

  FeatureVector fv;
  for (std::size_t t = 0; t < coefficients.rows(); ++t) {
    for (std::size_t k = 0; k < kMfccCount; ++k) fv.mfcc[k] += coefficients(t, k);
  }
  for (double& c : fv.mfcc) c /= n_frames;

  for (std::size_t t = 0; t < frames.rows(); ++t) {
    fv.zcr += zero_crossing_rate(frames.row(t));
    const auto power = spec.values.row(t);
    const double centroid = spectral_centroid(power, spec.bin_freqs_hz);
    fv.centroid_hz += centroid;
    fv.bandwidth_hz += spectral_bandwidth(power, spec.bin_freqs_hz, centroid);
    fv.rolloff_hz += spectral_rolloff(power, spec.bin_freqs_hz, config_.rolloff_fraction);
  }
  fv.zcr /= n_frames;
  fv.centroid_hz /= n_frames;
  fv.bandwidth_hz /= n_frames;
  fv.rolloff_hz /= n_frames;
  return fv;
}

FeatureVector extract_clip_features(const AudioClip& clip, const ExtractionConfig& config) {
  return FeatureExtractor(config, clip.sample_rate_hz).extract(clip);
}

}  // namespace instrec
