#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "instrec/eval.hpp"
#include "instrec/spectral.hpp"

namespace instrec::render {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, top row first
};

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // r, g, b per pixel
};

/// One column per frame, one row per bin with low frequencies at the bottom.
/// 10*log10(power + floor), then min-max scaled to 0..255.
GrayImage spectrogram_image(const PowerSpectrogram& spec, double floor = 1e-10);

/// Row-normalized counts on a white-to-blue ramp, `cell` pixels per entry.
RgbImage confusion_heatmap(const ConfusionMatrix& cm, std::size_t cell = 24);

void write_pgm(std::ostream& out, const GrayImage& image);
void write_ppm(std::ostream& out, const RgbImage& image);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

}  // namespace instrec::render
