#include "render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>

#include "instrec/error.hpp"

namespace instrec::render {

GrayImage spectrogram_image(const PowerSpectrogram& spec, double floor) {
  const std::size_t w = spec.n_frames();
  const std::size_t h = spec.n_bins();
  if (w == 0 || h == 0) throw Error(ErrorCode::EmptyInput, "empty spectrogram");
  Matrix db(w, h);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t t = 0; t < w; ++t) {
    for (std::size_t b = 0; b < h; ++b) {
      const double v = 10.0 * std::log10(spec.values(t, b) + floor);
      db(t, b) = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  GrayImage img{w, h, std::vector<std::uint8_t>(w * h, 0)};
  if (hi > lo) {
    for (std::size_t t = 0; t < w; ++t) {
      for (std::size_t b = 0; b < h; ++b) {
        const double scaled = std::round(255.0 * (db(t, b) - lo) / (hi - lo));
        img.pixels[(h - 1 - b) * w + t] = static_cast<std::uint8_t>(scaled);
      }
    }
  }
  return img;
}

RgbImage confusion_heatmap(const ConfusionMatrix& cm, std::size_t cell) {
  const std::size_t k = cm.n_classes();
  if (k == 0 || cell == 0) throw Error(ErrorCode::EmptyMatrix, "nothing to draw");
  RgbImage img{k * cell, k * cell, std::vector<std::uint8_t>(k * cell * k * cell * 3)};
  constexpr double kLow[3] = {255.0, 255.0, 255.0};
  constexpr double kHigh[3] = {8.0, 48.0, 107.0};
  for (std::size_t a = 0; a < k; ++a) {
    const std::size_t row_total = cm.row_sum(a);
    for (std::size_t p = 0; p < k; ++p) {
      const double t = row_total == 0 ? 0.0 : static_cast<double>(cm.counts[a][p]) / static_cast<double>(row_total);
      std::uint8_t rgb[3];
      for (int ch = 0; ch < 3; ++ch) {
        rgb[ch] = static_cast<std::uint8_t>(std::round(kLow[ch] + t * (kHigh[ch] - kLow[ch])));
      }
      for (std::size_t y = a * cell; y < (a + 1) * cell; ++y) {
        for (std::size_t x = p * cell; x < (p + 1) * cell; ++x) {
          std::copy(rgb, rgb + 3, img.pixels.begin() + static_cast<std::ptrdiff_t>((y * img.width + x) * 3));
        }
      }
    }
  }
  return img;
}

void write_pgm(std::ostream& out, const GrayImage& image) {
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

void write_ppm(std::ostream& out, const RgbImage& image) {
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

namespace {

template <typename Image, typename Writer>
void write_file(const std::filesystem::path& path, const Image& image, Writer writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  writer(out, image);
  out.close();
  if (!out) throw Error(ErrorCode::IoFailure, "failed writing " + path.string());
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  write_file(path, image, [](std::ostream& o, const GrayImage& i) { write_pgm(o, i); });
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  write_file(path, image, [](std::ostream& o, const RgbImage& i) { write_ppm(o, i); });
}

}  // namespace instrec::render
