#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "instrec/audio_io.hpp"
#include "instrec/matrix.hpp"

namespace instrec {

struct FramePlan {
  std::size_t frame_size = 1024;
  std::size_t hop_size = 512;
  bool centered = true;

  /// Throws InvalidFramePlan unless frame_size is a power of two (>= 2) and
  /// 0 < hop_size <= frame_size.
  void validate() const;
};

/// Frame count for a signal of the given length, without materializing frames.
std::size_t frame_count(std::size_t signal_length, const FramePlan& plan);

/// Periodic Hann window: w[i] = 0.5 * (1 - cos(2*pi*i/n)).
std::vector<double> hann_window(std::size_t n);

/// Splits a signal into frames (one per row). Centered framing pads
/// frame_size/2 samples on each side by mirror reflection that excludes the
/// edge sample.
Matrix frame_signal(std::span<const double> signal, const FramePlan& plan);
inline Matrix frame_signal(const AudioClip& clip, const FramePlan& plan) {
  return frame_signal(clip.samples, plan);
}

/// Precomputed radix-2 transform of one length. Immutable after
/// construction, so one plan can serve many threads.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  /// In-place forward DFT: X[m] = sum_n x[n] exp(-2 pi i m n / N).
  void forward(std::span<std::complex<double>> data) const;

 private:
  std::size_t n_;
  std::vector<std::size_t> bit_reverse_;
  std::vector<std::complex<double>> twiddles_;  // exp(-2 pi i k / N), k < N/2
};

std::vector<std::complex<double>> fft(std::span<const std::complex<double>> x);

struct PowerSpectrogram {
  Matrix values;  // n_frames x n_bins, |X[m]|^2
  std::vector<double> bin_freqs_hz;
  int sample_rate_hz = kPipelineSampleRate;
  std::size_t frame_size = 0;

  std::size_t n_frames() const noexcept { return values.rows(); }
  std::size_t n_bins() const noexcept { return values.cols(); }
};

/// Hann-windowed STFT power, keeping bins 0..frame_size/2.
PowerSpectrogram power_spectrogram(const AudioClip& clip, const FramePlan& plan);

/// Same computation starting from frames produced by frame_signal.
PowerSpectrogram power_spectrogram(const Matrix& frames, int sample_rate_hz);

}  // namespace instrec
