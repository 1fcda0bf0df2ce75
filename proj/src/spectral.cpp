#include "instrec/spectral.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "instrec/error.hpp"

namespace instrec {
namespace {

// Index into a signal of length n extended by mirror reflection (edge
// sample not repeated), folding as many times as needed.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<std::ptrdiff_t>(n) ? m : period - m);
}

}  // namespace

void FramePlan::validate() const {
  if (frame_size < 2 || !std::has_single_bit(frame_size)) {
    throw Error(ErrorCode::InvalidFramePlan,
                "frame size " + std::to_string(frame_size) + " is not a power of two >= 2");
  }
  if (hop_size == 0 || hop_size > frame_size) {
    throw Error(ErrorCode::InvalidFramePlan,
                "hop size " + std::to_string(hop_size) + " must be in [1, frame size]");
  }
}

std::size_t frame_count(std::size_t signal_length, const FramePlan& plan) {
  plan.validate();
  if (plan.centered) return 1 + signal_length / plan.hop_size;
  if (signal_length < plan.frame_size) {
    throw Error(ErrorCode::SignalTooShort, std::to_string(signal_length) +
                                               " samples cannot fill a frame of " +
                                               std::to_string(plan.frame_size));
  }
  return 1 + (signal_length - plan.frame_size) / plan.hop_size;
}

std::vector<double> hann_window(std::size_t n) {
  if (n < 2) throw Error(ErrorCode::InvalidLength, "window length must be >= 2");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                 static_cast<double>(n)));
  }
  return w;
}

Matrix frame_signal(std::span<const double> signal, const FramePlan& plan) {
  if (signal.empty()) throw Error(ErrorCode::EmptySignal, "cannot frame an empty signal");
  const std::size_t n_frames = frame_count(signal.size(), plan);
  const auto pad = plan.centered ? static_cast<std::ptrdiff_t>(plan.frame_size / 2) : 0;

  Matrix frames(n_frames, plan.frame_size);
  for (std::size_t t = 0; t < n_frames; ++t) {
    auto row = frames.row(t);
    const auto start = static_cast<std::ptrdiff_t>(t * plan.hop_size) - pad;
    for (std::size_t j = 0; j < plan.frame_size; ++j) {
      row[j] = signal[reflect_index(start + static_cast<std::ptrdiff_t>(j), signal.size())];
    }
  }
  return frames;
}

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (n < 2 || !std::has_single_bit(n)) {
    throw Error(ErrorCode::NonPowerOfTwoLength, std::to_string(n) + " is not a power of two >= 2");
  }
  const int bits = std::countr_zero(n);
  bit_reverse_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
    bit_reverse_[i] = r;
  }
  twiddles_.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    // Direct evaluation per entry; a rotation recurrence would accumulate error.
    twiddles_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) /
                                       static_cast<double>(n));
  }
}

void FftPlan::forward(std::span<std::complex<double>> data) const {
  if (data.size() != n_) {
    throw Error(ErrorCode::DimensionMismatch, "FFT plan of size " + std::to_string(n_) +
                                                  " given " + std::to_string(data.size()) +
                                                  " values");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (i < bit_reverse_[i]) std::swap(data[i], data[bit_reverse_[i]]);
  }
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> t = twiddles_[k * stride] * data[start + k + half];
        data[start + k + half] = data[start + k] - t;
        data[start + k] += t;
      }
    }
  }
}

std::vector<std::complex<double>> fft(std::span<const std::complex<double>> x) {
  const FftPlan plan(x.size());
  std::vector<std::complex<double>> out(x.begin(), x.end());
  plan.forward(out);
  return out;
}

PowerSpectrogram power_spectrogram(const Matrix& frames, int sample_rate_hz) {
  const std::size_t frame_size = frames.cols();
  const FftPlan plan(frame_size);
  const std::vector<double> window = hann_window(frame_size);
  const std::size_t n_bins = frame_size / 2 + 1;

  PowerSpectrogram spec;
  spec.values = Matrix(frames.rows(), n_bins);
  spec.sample_rate_hz = sample_rate_hz;
  spec.frame_size = frame_size;
  spec.bin_freqs_hz.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    spec.bin_freqs_hz[k] =
        static_cast<double>(k) * sample_rate_hz / static_cast<double>(frame_size);
  }

  std::vector<std::complex<double>> buffer(frame_size);
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    const auto frame = frames.row(t);
    for (std::size_t j = 0; j < frame_size; ++j) buffer[j] = frame[j] * window[j];
    plan.forward(buffer);
    auto out = spec.values.row(t);
    for (std::size_t k = 0; k < n_bins; ++k) out[k] = std::norm(buffer[k]);
  }
  return spec;
}

PowerSpectrogram power_spectrogram(const AudioClip& clip, const FramePlan& plan) {
  return power_spectrogram(frame_signal(clip, plan), clip.sample_rate_hz);
}

}  // namespace instrec
