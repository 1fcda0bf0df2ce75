#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "instrec/audio_io.hpp"
#include "instrec/dataset.hpp"
#include "instrec/matrix.hpp"
#include "instrec/rng.hpp"

namespace fixture {

inline std::vector<double> sine(double freq_hz, std::size_t n, double amplitude = 1.0, double rate = 44100.0,
                                double phase = 0.0) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate + phase);
  }
  return s;
}

/// Isotropic Gaussian blobs with class centers spread along distinct axes.
inline instrec::LabeledDataset blobs(std::size_t per_class, std::size_t classes, std::size_t dim,
                                     double separation, std::uint64_t seed, double spread = 1.0) {
  instrec::Rng rng(seed);
  instrec::LabeledDataset ds;
  std::vector<std::vector<double>> centers(classes, std::vector<double>(dim, 0.0));
  for (std::size_t c = 0; c < classes; ++c) {
    centers[c][c % dim] = separation * (c < dim ? 1.0 : -1.0);
    ds.class_names.push_back("c" + std::to_string(c));
  }
  std::vector<double> row(dim);
  for (std::size_t i = 0; i < per_class * classes; ++i) {
    const std::size_t c = i % classes;
    for (std::size_t d = 0; d < dim; ++d) row[d] = centers[c][d] + spread * rng.normal();
    ds.features.push_row(row);
    ds.labels.push_back(static_cast<int>(c));
    ds.paths.push_back("blob/" + std::to_string(i) + ".wav");
  }
  return ds;
}

inline instrec::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  instrec::Rng rng(seed);
  instrec::Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

/// Fresh empty directory under the system temp folder.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("instrec_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
