#include "instrec/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <string>

#include "instrec/dataset.hpp"
#include "instrec/error.hpp"
#include "instrec/rng.hpp"

namespace instrec {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct LloydState {
  Matrix centroids;
  std::vector<int> labels;
  std::vector<double> trace;
  double inertia = 0.0;
};

/// Lloyd iterations from the given centroids. Empty clusters take the point
/// farthest from its current centroid.
LloydState run_lloyd(const Matrix& x, Matrix centroids, std::size_t max_iter) {
  const std::size_t n = x.rows();
  const std::size_t k = centroids.rows();
  LloydState st;
  st.labels.assign(n, -1);
  std::vector<double> cost(n);
  for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iter, 1); ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(x.row(i), centroids.row(c));
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (st.labels[i] != best) changed = true;
      st.labels[i] = best;
      cost[i] = best_d;
    }

    std::vector<std::size_t> counts(k, 0);
    for (int label : st.labels) ++counts[static_cast<std::size_t>(label)];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      // take the worst-served point from a cluster that can spare it
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(st.labels[i])] > 1 && (far == n || cost[i] > cost[far])) far = i;
      }
      --counts[static_cast<std::size_t>(st.labels[far])];
      st.labels[far] = static_cast<int>(c);
      cost[far] = 0.0;
      counts[c] = 1;
      changed = true;
    }

    st.inertia = std::accumulate(cost.begin(), cost.end(), 0.0);
    st.trace.push_back(st.inertia);

    Matrix next(k, x.cols());
    for (std::size_t i = 0; i < n; ++i) {
      auto row = next.row(static_cast<std::size_t>(st.labels[i]));
      const auto xi = x.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += xi[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (double& v : next.row(c)) v /= static_cast<double>(counts[c]);
    }
    centroids = std::move(next);
    if (!changed && iter > 0) break;
  }
  // inertia against the final centroids
  st.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    st.inertia += squared_distance(x.row(i), centroids.row(static_cast<std::size_t>(st.labels[i])));
  }
  st.centroids = std::move(centroids);
  return st;
}

Matrix plus_plus_seeds(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  Matrix centroids;
  centroids.push_row(x.row(rng.index(n)));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x.row(i), centroids.row(0));
  while (centroids.rows() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double running = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        running += d2[i];
        if (d2[i] > 0.0 && running > target) {
          pick = i;
          break;
        }
      }
      while (d2[pick] <= 0.0) --pick;  // rounding at the top end
    } else {
      pick = rng.index(n);
    }
    centroids.push_row(x.row(pick));
    const auto added = centroids.row(centroids.rows() - 1);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(x.row(i), added));
  }
  return centroids;
}

void check_k(const Matrix& x, std::size_t k) {
  if (x.rows() == 0) throw Error(ErrorCode::EmptyInput, "no rows to cluster");
  if (k == 0) throw Error(ErrorCode::InvalidClusterCount, "k must be >= 1");
  if (k > x.rows()) {
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds " + std::to_string(x.rows()) + " rows");
  }
}

KMeansResult to_result(LloydState st, std::size_t k) {
  KMeansResult r;
  r.assignment.labels = std::move(st.labels);
  r.assignment.k = k;
  r.assignment.inertia = st.inertia;
  r.centroids = std::move(st.centroids);
  r.inertia_trace = std::move(st.trace);
  return r;
}

}  // namespace

KMeansResult kmeans(const Matrix& x, const KMeansParams& params) {
  check_k(x, params.k);
  if (params.n_init == 0) throw Error(ErrorCode::InvalidConfig, "n_init must be >= 1");
  LloydState best;
  bool have = false;
  for (std::size_t r = 0; r < params.n_init; ++r) {
    Rng rng(Rng::derive(params.seed, r));
    LloydState st = run_lloyd(x, plus_plus_seeds(x, params.k, rng), params.max_iter);
    if (!have || st.inertia < best.inertia) {
      best = std::move(st);
      have = true;
    }
  }
  return to_result(std::move(best), params.k);
}

KMeansResult kmeans_exhaustive(const Matrix& x, std::size_t k, std::size_t max_iter) {
  check_k(x, k);
  const std::size_t n = x.rows();
  std::vector<std::size_t> pick(k);
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  LloydState best;
  bool have = false;
  while (true) {
    Matrix seeds;
    for (std::size_t p : pick) seeds.push_row(x.row(p));
    LloydState st = run_lloyd(x, std::move(seeds), max_iter);
    if (!have || st.inertia < best.inertia) {
      best = std::move(st);
      have = true;
    }
    // next k-combination in lexicographic order
    std::size_t i = k;
    while (i > 0 && pick[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
  }
  return to_result(std::move(best), k);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Linkage linkage) noexcept {
  switch (linkage) {
    case Linkage::ward: return "ward";
    case Linkage::average: return "average";
    case Linkage::complete: return "complete";
    case Linkage::single: return "single";
  }
  return "unknown";
}

Linkage parse_linkage(std::string_view text) {
  for (auto l : {Linkage::ward, Linkage::average, Linkage::complete, Linkage::single}) {
    if (text == to_string(l)) return l;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown linkage '" + std::string(text) + "'");
}

namespace {

class CondensedDistances {
 public:
  explicit CondensedDistances(const Matrix& x) : n_(x.rows()), d_(n_ * (n_ - 1) / 2) {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i + 1; j < n_; ++j) d_[offset(i, j)] = std::sqrt(squared_distance(x.row(i), x.row(j)));
    }
  }
  double& operator()(std::size_t i, std::size_t j) { return d_[i < j ? offset(i, j) : offset(j, i)]; }

 private:
  std::size_t offset(std::size_t i, std::size_t j) const { return n_ * i - i * (i + 1) / 2 + (j - i - 1); }
  std::size_t n_;
  std::vector<double> d_;
};

double lance_williams(Linkage linkage, double d_ik, double d_jk, double d_ij, double ni, double nj, double nk) {
  switch (linkage) {
    case Linkage::single: return std::min(d_ik, d_jk);
    case Linkage::complete: return std::max(d_ik, d_jk);
    case Linkage::average: return (ni * d_ik + nj * d_jk) / (ni + nj);
    case Linkage::ward: {
      const double t = ((ni + nk) * d_ik * d_ik + (nj + nk) * d_jk * d_jk - nk * d_ij * d_ij) / (ni + nj + nk);
      return std::sqrt(std::max(t, 0.0));
    }
  }
  return 0.0;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  }
};

}  // namespace

Dendrogram agglomerate(const Matrix& x, Linkage linkage) {
  const std::size_t n = x.rows();
  if (n < 2) throw Error(ErrorCode::EmptyInput, "agglomeration needs at least two rows");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteFeature, "cluster input must be finite");
  }
  CondensedDistances dist(x);
  std::vector<double> size(n, 1.0);
  std::vector<char> active(n, 1);

  // Nearest-neighbour chain; merges come out unordered and are sorted after.
  struct RawMerge {
    std::size_t slot_a, slot_b;
    double height;
  };
  std::vector<RawMerge> raw;
  raw.reserve(n - 1);
  std::vector<std::size_t> chain;
  std::size_t first_active = 0;
  while (raw.size() < n - 1) {
    if (chain.empty()) {
      while (!active[first_active]) ++first_active;
      chain.push_back(first_active);
    }
    std::size_t a = 0, b = 0;
    double best = 0.0;
    while (true) {
      a = chain.back();
      const bool has_prev = chain.size() > 1;
      b = has_prev ? chain[chain.size() - 2] : n;
      best = has_prev ? dist(a, b) : std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (!active[i] || i == a) continue;
        const double d = dist(a, i);
        if (d < best) {
          best = d;
          b = i;
        }
      }
      if (has_prev && b == chain[chain.size() - 2]) break;
      chain.push_back(b);
    }
    chain.pop_back();
    chain.pop_back();

    const std::size_t keep = std::min(a, b);
    const std::size_t drop = std::max(a, b);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      dist(keep, k) = lance_williams(linkage, dist(a, k), dist(b, k), best, size[a], size[b], size[k]);
    }
    size[keep] = size[a] + size[b];
    active[drop] = 0;
    raw.push_back({a, b, best});
  }

  std::stable_sort(raw.begin(), raw.end(), [](const RawMerge& l, const RawMerge& r) { return l.height < r.height; });

  Dendrogram d;
  d.n = n;
  UnionFind uf(n);
  std::vector<std::size_t> cluster_id(n), cluster_size(n, 1);
  std::iota(cluster_id.begin(), cluster_id.end(), std::size_t{0});
  for (std::size_t m = 0; m < raw.size(); ++m) {
    const std::size_t ra = uf.find(raw[m].slot_a);
    const std::size_t rb = uf.find(raw[m].slot_b);
    const std::size_t ia = cluster_id[ra], ib = cluster_id[rb];
    const std::size_t merged = cluster_size[ra] + cluster_size[rb];
    d.merges.push_back({std::min(ia, ib), std::max(ia, ib), raw[m].height, merged});
    uf.parent[rb] = ra;
    cluster_id[ra] = n + m;
    cluster_size[ra] = merged;
  }
  return d;
}

ClusterAssignment cut_dendrogram(const Dendrogram& d, std::size_t n_clusters) {
  if (n_clusters < 1 || n_clusters > d.n) {
    throw Error(ErrorCode::InvalidClusterCount,
                "cannot cut " + std::to_string(d.n) + " points into " + std::to_string(n_clusters) + " clusters");
  }
  if (d.merges.size() + 1 != d.n) throw Error(ErrorCode::InvalidConfig, "dendrogram merge count does not match n");
  // Point representative for each cluster id.
  UnionFind uf(d.n);
  std::vector<std::size_t> rep(2 * d.n - 1);
  std::iota(rep.begin(), rep.begin() + static_cast<std::ptrdiff_t>(d.n), std::size_t{0});
  for (std::size_t m = 0; m < d.merges.size(); ++m) {
    const Merge& mg = d.merges[m];
    if (mg.a >= d.n + m || mg.b >= d.n + m) throw Error(ErrorCode::InvalidConfig, "merge refers to a future cluster");
    const std::size_t ra = uf.find(rep[mg.a]);
    const std::size_t rb = uf.find(rep[mg.b]);
    if (m < d.n - n_clusters) uf.parent[rb] = ra;
    rep[d.n + m] = ra;
  }
  ClusterAssignment out;
  out.k = n_clusters;
  out.labels.resize(d.n);
  std::map<std::size_t, int> numbering;
  for (std::size_t i = 0; i < d.n; ++i) {
    const auto [it, inserted] = numbering.try_emplace(uf.find(i), static_cast<int>(numbering.size()));
    out.labels[i] = it->second;
  }
  return out;
}

double cluster_purity(std::span<const int> assignment, std::span<const int> truth) {
  if (assignment.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(assignment.size()) + " assignments vs " + std::to_string(truth.size()) + " labels");
  }
  if (assignment.empty()) throw Error(ErrorCode::EmptyInput, "no points");
  std::map<int, std::map<int, std::size_t>> counts;
  for (std::size_t i = 0; i < assignment.size(); ++i) ++counts[assignment[i]][truth[i]];
  std::size_t majority = 0;
  for (const auto& [cluster, by_class] : counts) {
    std::size_t top = 0;
    for (const auto& [label, c] : by_class) top = std::max(top, c);
    majority += top;
  }
  return static_cast<double>(majority) / static_cast<double>(assignment.size());
}

void write_dendrogram_csv(std::ostream& out, const Dendrogram& d) {
  out << "merge_index,a,b,height,size\n";
  for (std::size_t m = 0; m < d.merges.size(); ++m) {
    const Merge& mg = d.merges[m];
    out << m << ',' << mg.a << ',' << mg.b << ',' << format_double(mg.height) << ',' << mg.size << '\n';
  }
}

}  // namespace instrec
