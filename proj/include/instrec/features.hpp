#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "instrec/audio_io.hpp"
#include "instrec/matrix.hpp"
#include "instrec/spectral.hpp"

namespace instrec {

inline constexpr std::size_t kMfccCount = 13;
inline constexpr std::size_t kFeatureDim = kMfccCount + 4;

/// Column names of the 17 clip-level features, in FeatureVector::values() order.
const std::array<std::string_view, kFeatureDim>& feature_names();

double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct MelFilterbank {
  Matrix weights;  // n_mels x n_bins
  std::vector<double> break_hz;  // n_mels + 2 band edges / centers
  double f_min_hz = 0.0;
  double f_max_hz = 0.0;

  std::size_t n_mels() const noexcept { return weights.rows(); }
  std::size_t n_bins() const noexcept { return weights.cols(); }
};

/// Triangular filters with break points equally spaced in mel between
/// f_min_hz and f_max_hz (default: Nyquist). Rows peak at 1, no area
/// normalization. Throws TooManyFilters when a filter covers no bin.
MelFilterbank build_mel_filterbank(std::size_t n_mels, std::size_t n_bins, int sample_rate_hz,
                                   double f_min_hz = 0.0, double f_max_hz = -1.0);

/// Orthonormal DCT-II rows 0..n_out-1 for inputs of length n_in.
Matrix dct2_matrix(std::size_t n_out, std::size_t n_in);

/// Per-frame MFCCs: mel energies, natural log floored at log_floor, DCT-II.
Matrix mfcc_frames(const PowerSpectrogram& spec, const MelFilterbank& fb, std::size_t n_mfcc,
                   double log_floor);

double zero_crossing_rate(std::span<const double> frame);
double spectral_centroid(std::span<const double> power_bins, std::span<const double> bin_freqs_hz);
double spectral_bandwidth(std::span<const double> power_bins, std::span<const double> bin_freqs_hz,
                          double centroid_hz);
double spectral_rolloff(std::span<const double> power_bins, std::span<const double> bin_freqs_hz,
                        double fraction);

struct ExtractionConfig {
  FramePlan frame;
  std::size_t n_mels = 40;
  std::size_t n_mfcc = kMfccCount;
  double rolloff_fraction = 0.85;
  double log_floor = 1e-10;

  void validate() const;
};

struct FeatureVector {
  std::array<double, kMfccCount> mfcc{};
  double zcr = 0.0;
  double centroid_hz = 0.0;
  double bandwidth_hz = 0.0;
  double rolloff_hz = 0.0;

  std::array<double, kFeatureDim> values() const;
};

/// Reusable extractor: builds the filterbank and DCT once per configuration.
/// Safe to share between threads.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const ExtractionConfig& config = {},
                            int sample_rate_hz = kPipelineSampleRate);

  FeatureVector extract(const AudioClip& clip) const;

  /// Per-frame MFCC matrix (n_frames x n_mfcc) for a clip.
  Matrix mfcc(const AudioClip& clip) const;

  const ExtractionConfig& config() const noexcept { return config_; }
  const MelFilterbank& filterbank() const noexcept { return filterbank_; }

 private:
  ExtractionConfig config_;
  MelFilterbank filterbank_;
};

FeatureVector extract_clip_features(const AudioClip& clip, const ExtractionConfig& config = {});

}  // namespace instrec
