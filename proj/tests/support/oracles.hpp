#pragma once

// Reference implementations written straight from the definitions. They are
// deliberately slow and share no code with the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;

inline std::vector<Complex> naive_dft(const std::vector<Complex>& x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t m = 0; m < n; ++m) {
    Complex acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      // reduce the index product first so the angle stays small and exact
      const double angle = -2.0 * std::numbers::pi * static_cast<double>((m * t) % n) / static_cast<double>(n);
      acc += x[t] * Complex(std::cos(angle), std::sin(angle));
    }
    out[m] = acc;
  }
  return out;
}

/// Orthonormal DCT-II.
inline std::vector<double> naive_dct2(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) /
                             (2.0 * static_cast<double>(n)));
    }
    const double scale = k == 0 ? std::sqrt(1.0 / static_cast<double>(n)) : std::sqrt(2.0 / static_cast<double>(n));
    out[k] = scale * acc;
  }
  return out;
}

inline double mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

/// Filter j rises from break j to j+1 and falls to j+2, evaluated at each
/// bin frequency k * rate / frame.
inline std::vector<std::vector<double>> filterbank(std::size_t n_mels, std::size_t n_bins, double rate) {
  const double frame = 2.0 * static_cast<double>(n_bins - 1);
  const double top = mel(rate / 2.0);
  std::vector<double> breaks(n_mels + 2);
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    breaks[i] = hz(top * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  std::vector<std::vector<double>> w(n_mels, std::vector<double>(n_bins, 0.0));
  for (std::size_t j = 0; j < n_mels; ++j) {
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * rate / frame;
      const double up = (f - breaks[j]) / (breaks[j + 1] - breaks[j]);
      const double down = (breaks[j + 2] - f) / (breaks[j + 2] - breaks[j + 1]);
      w[j][k] = std::max(0.0, std::min(up, down));
    }
  }
  return w;
}

struct RefMerge {
  std::set<std::size_t> a;
  std::set<std::size_t> b;
  double height = 0.0;
};

/// Greedy agglomeration that recomputes every cluster-pair distance from the
/// member points at each step.
inline std::vector<RefMerge> brute_force_agglomerate(const std::vector<std::vector<double>>& pts,
                                                     const std::string& linkage) {
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t d = 0; d < pts[i].size(); ++d) s += (pts[i][d] - pts[j][d]) * (pts[i][d] - pts[j][d]);
    return std::sqrt(s);
  };
  auto cluster_distance = [&](const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
    if (linkage == "ward") {
      std::vector<double> ca(pts[0].size(), 0.0), cb(pts[0].size(), 0.0);
      for (auto i : a) for (std::size_t d = 0; d < ca.size(); ++d) ca[d] += pts[i][d] / static_cast<double>(a.size());
      for (auto i : b) for (std::size_t d = 0; d < cb.size(); ++d) cb[d] += pts[i][d] / static_cast<double>(b.size());
      double s = 0.0;
      for (std::size_t d = 0; d < ca.size(); ++d) s += (ca[d] - cb[d]) * (ca[d] - cb[d]);
      const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
      return std::sqrt(2.0 * na * nb / (na + nb) * s);
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
    for (auto i : a) {
      for (auto j : b) {
        const double d = dist(i, j);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
        sum += d;
      }
    }
    if (linkage == "single") return lo;
    if (linkage == "complete") return hi;
    return sum / static_cast<double>(a.size() * b.size());
  };

  std::vector<std::set<std::size_t>> clusters;
  for (std::size_t i = 0; i < pts.size(); ++i) clusters.push_back({i});
  std::vector<RefMerge> merges;
  while (clusters.size() > 1) {
    std::size_t bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double d = cluster_distance(clusters[i], clusters[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    merges.push_back({clusters[bi], clusters[bj], best});
    clusters[bi].insert(clusters[bj].begin(), clusters[bj].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return merges;
}

}  // namespace oracle
