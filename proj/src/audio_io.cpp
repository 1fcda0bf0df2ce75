#include "instrec/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "instrec/error.hpp"

namespace instrec {
namespace {

constexpr std::uint16_t kFormatPcm = 1;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

PcmData decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw Error(ErrorCode::MalformedHeader, "not a RIFF/WAVE stream");
  }

  PcmData pcm;
  bool have_format = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;

    if (tag_is(bytes, pos, "fmt ")) {
      if (chunk_size < 16 || body + 16 > bytes.size()) {
        throw Error(ErrorCode::MalformedHeader, "format chunk too short");
      }
      const std::uint16_t format_tag = read_u16(bytes, body);
      pcm.channels = read_u16(bytes, body + 2);
      pcm.sample_rate = read_u32(bytes, body + 4);
      pcm.bits_per_sample = read_u16(bytes, body + 14);
      if (format_tag != kFormatPcm) {
        throw Error(ErrorCode::UnsupportedEncoding,
                    "format tag " + std::to_string(format_tag) + " is not integer PCM");
      }
      if (pcm.bits_per_sample != 16) {
        throw Error(ErrorCode::UnsupportedEncoding,
                    std::to_string(pcm.bits_per_sample) + "-bit samples are not supported");
      }
      if (pcm.channels == 0 || pcm.sample_rate == 0) {
        throw Error(ErrorCode::MalformedHeader, "zero channels or zero sample rate");
      }
      have_format = true;
    } else if (tag_is(bytes, pos, "data")) {
      if (!have_format) {
        throw Error(ErrorCode::MalformedHeader, "data chunk precedes format chunk");
      }
      if (body + chunk_size > bytes.size()) {
        throw Error(ErrorCode::TruncatedData,
                    "data chunk declares " + std::to_string(chunk_size) + " bytes, " +
                        std::to_string(bytes.size() - body) + " present");
      }
      const std::size_t block = 2u * pcm.channels;
      if (chunk_size % block != 0) {
        throw Error(ErrorCode::TruncatedData, "data chunk ends mid-frame");
      }
      pcm.samples.resize(chunk_size / 2);
      for (std::size_t i = 0; i < pcm.samples.size(); ++i) {
        pcm.samples[i] = static_cast<std::int16_t>(read_u16(bytes, body + 2 * i));
      }
      return pcm;
    }
    // chunks are word aligned
    pos = body + chunk_size + (chunk_size & 1u);
  }
  throw Error(have_format ? ErrorCode::TruncatedData : ErrorCode::MalformedHeader,
              "no data chunk found");
}

AudioClip downmix_to_mono(const PcmData& pcm, std::string source_path) {
  if (pcm.channels != 1 && pcm.channels != 2) {
    throw Error(ErrorCode::UnsupportedChannelCount,
                std::to_string(pcm.channels) + " channels (expected 1 or 2)");
  }
  if (pcm.bits_per_sample != 16) {
    throw Error(ErrorCode::UnsupportedEncoding, "only 16-bit PCM can be downmixed");
  }
  if (pcm.sample_rate != static_cast<std::uint32_t>(kPipelineSampleRate)) {
    throw Error(ErrorCode::UnsupportedFormat,
                "sample rate " + std::to_string(pcm.sample_rate) + " Hz (expected 44100)");
  }

  const std::size_t frames = pcm.frames();
  std::vector<double> mono(frames);
  if (pcm.channels == 1) {
    for (std::size_t i = 0; i < frames; ++i) mono[i] = pcm.samples[i] / 32768.0;
  } else {
    for (std::size_t i = 0; i < frames; ++i) {
      const double sum = static_cast<double>(pcm.samples[2 * i]) + pcm.samples[2 * i + 1];
      mono[i] = sum / 2.0 / 32768.0;
    }
  }
  return make_clip(std::move(mono), kPipelineSampleRate, std::move(source_path));
}

AudioClip make_clip(std::vector<double> samples, int sample_rate_hz, std::string source_path) {
  if (samples.empty()) throw Error(ErrorCode::EmptySignal, "clip has no samples");
  if (sample_rate_hz != kPipelineSampleRate) {
    throw Error(ErrorCode::UnsupportedFormat,
                "sample rate " + std::to_string(sample_rate_hz) + " Hz (expected 44100)");
  }
  for (double s : samples) {
    if (!(s >= -1.0 && s <= 1.0)) {
      throw Error(ErrorCode::SampleOutOfRange, "sample outside [-1, 1] or not finite");
    }
  }
  return AudioClip{std::move(samples), sample_rate_hz, std::move(source_path)};
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return downmix_to_mono(decode_wav(bytes), path.string());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::vector<std::uint8_t> encode_pcm16(std::span<const std::int16_t> interleaved,
                                       std::uint16_t channels, std::uint32_t sample_rate) {
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, channels);
  put_u32(out, sample_rate);
  put_u32(out, sample_rate * channels * 2);
  put_u16(out, static_cast<std::uint16_t>(channels * 2));
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (std::int16_t s : interleaved) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  std::vector<std::int16_t> pcm(clip.samples.size());
  std::transform(clip.samples.begin(), clip.samples.end(), pcm.begin(), [](double s) {
    const double scaled = std::nearbyint(s * 32768.0);
    return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
  });
  return encode_pcm16(pcm, 1, static_cast<std::uint32_t>(clip.sample_rate_hz));
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  const auto bytes = encode_wav(clip);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

}  // namespace instrec
