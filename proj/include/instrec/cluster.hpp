#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "instrec/matrix.hpp"

namespace instrec {

struct ClusterAssignment {
  std::vector<int> labels;  // in [0, k)
  std::size_t k = 0;
  double inertia = 0.0;  // within-cluster sum of squares (k-means only)
};

struct KMeansParams {
  std::size_t k = 2;
  std::size_t max_iter = 300;
  std::size_t n_init = 10;
  std::uint64_t seed = 42;
};

struct KMeansResult {
  ClusterAssignment assignment;
  Matrix centroids;
  std::vector<double> inertia_trace;  // per Lloyd iteration of the winning restart
};

/// Lloyd iterations from k-means++ seeds, best of n_init restarts. Throws
/// KTooLarge when k exceeds the row count.
KMeansResult kmeans(const Matrix& x, const KMeansParams& params);

/// Runs Lloyd from every k-subset of rows as the initial centroids and keeps
/// the lowest inertia. Only practical for tiny inputs.
KMeansResult kmeans_exhaustive(const Matrix& x, std::size_t k, std::size_t max_iter = 300);

enum class Linkage { ward, average, complete, single };

std::string_view to_string(Linkage linkage) noexcept;
Linkage parse_linkage(std::string_view text);

/// Cluster ids follow the usual convention: 0..n-1 are the input points and
/// merge i creates cluster n + i.
struct Merge {
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t n = 0;
  std::vector<Merge> merges;  // non-decreasing height
};

/// Agglomerative clustering on Euclidean distances with Lance-Williams
/// updates. Ward heights are on the distance scale.
Dendrogram agglomerate(const Matrix& x, Linkage linkage);

/// Flat partition from undoing the last n_clusters - 1 merges. Labels are
/// numbered by first appearance in row order.
ClusterAssignment cut_dendrogram(const Dendrogram& d, std::size_t n_clusters);

double cluster_purity(std::span<const int> assignment, std::span<const int> truth);

void write_dendrogram_csv(std::ostream& out, const Dendrogram& d);

}  // namespace instrec
