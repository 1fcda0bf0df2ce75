#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace instrec {

/// The only sample rate admitted into the feature pipeline.
inline constexpr int kPipelineSampleRate = 44100;

/// Raw contents of a PCM WAV file. Samples are interleaved by channel.
struct PcmData {
  std::uint16_t channels = 0;
  std::uint16_t bits_per_sample = 0;
  std::uint32_t sample_rate = 0;
  std::vector<std::int16_t> samples;

  std::size_t frames() const noexcept { return channels == 0 ? 0 : samples.size() / channels; }
};

/// Mono waveform in [-1, 1] at the pipeline rate.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = kPipelineSampleRate;
  std::string source_path;
};

/// Parses a RIFF/WAVE byte image. Accepts 16-bit integer PCM only; unknown
/// chunks are skipped.
PcmData decode_wav(std::span<const std::uint8_t> bytes);

/// Averages channels and scales by 1/32768. Rejects rates other than 44.1 kHz.
AudioClip downmix_to_mono(const PcmData& pcm, std::string source_path = {});

/// Validates and wraps an already-synthesized waveform.
AudioClip make_clip(std::vector<double> samples, int sample_rate_hz = kPipelineSampleRate,
                    std::string source_path = {});

/// Reads, decodes and downmixes a file. IoFailure if it cannot be read.
AudioClip load_wav(const std::filesystem::path& path);

/// Encodes a clip as 16-bit mono PCM, rounding to nearest and clamping to
/// the int16 range.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip);

/// Builds a PCM WAV image from interleaved samples.
std::vector<std::uint8_t> encode_pcm16(std::span<const std::int16_t> interleaved,
                                       std::uint16_t channels, std::uint32_t sample_rate);

void write_wav(const std::filesystem::path& path, const AudioClip& clip);

}  // namespace instrec
