#include "dcrnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <unordered_map>

namespace dcrnn {

WeightedDigraph::WeightedDigraph(std::vector<std::string> node_ids, SparseMatrix weights,
                                 double kernel_sigma, double kernel_kappa)
    : node_ids_(std::move(node_ids)),
      weights_(std::move(weights)),
      kernel_sigma_(kernel_sigma),
      kernel_kappa_(kernel_kappa) {
  const std::size_t n = node_ids_.size();
  if (weights_.n_rows() != n || weights_.n_cols() != n) {
    throw Error("graph: weight matrix " + std::to_string(weights_.n_rows()) + "x" +
                std::to_string(weights_.n_cols()) + " does not match " + std::to_string(n) +
                " node ids");
  }
  if (!(kernel_sigma_ > 0.0)) throw Error("graph: kernel sigma must be > 0");
  if (kernel_kappa_ < 0.0) throw Error("graph: kernel kappa must be >= 0");
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = weights_.row_offsets()[r]; k < weights_.row_offsets()[r + 1]; ++k) {
      if (weights_.col_indices()[k] == r) throw Error("graph: self-loop stored at node " + node_ids_[r]);
      if (!(weights_.values()[k] > 0.0)) {
        throw Error("graph: non-positive weight stored at row " + std::to_string(r));
      }
    }
  }
}

std::optional<std::size_t> WeightedDigraph::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < node_ids_.size(); ++i) {
    if (node_ids_[i] == id) return i;
  }
  return std::nullopt;
}

WeightedDigraph build_adjacency(const std::vector<DistanceRecord>& distances,
                                const std::vector<std::string>& node_ids, double kappa) {
  if (distances.empty()) throw Error("build_adjacency: empty distance list (sigma undefined)");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < node_ids.size(); ++i) index[node_ids[i]] = i;

  // Infinite distances mean the pair is unreachable, same as omitting it;
  // sigma is the population std of the finite distances only.
  double sum = 0.0;
  std::size_t count = 0;
  for (const DistanceRecord& d : distances) {
    if (!index.count(d.from)) throw Error("build_adjacency: unknown node id '" + d.from + "'");
    if (!index.count(d.to)) throw Error("build_adjacency: unknown node id '" + d.to + "'");
    if (std::isnan(d.distance) || d.distance < 0.0) {
      throw Error("build_adjacency: bad distance for pair " + d.from + "," + d.to);
    }
    if (!std::isfinite(d.distance)) continue;
    sum += d.distance;
    ++count;
  }
  if (count == 0) throw Error("build_adjacency: no finite distances (sigma undefined)");
  const double mean = sum / static_cast<double>(count);
  double var = 0.0;
  for (const DistanceRecord& d : distances) {
    if (!std::isfinite(d.distance)) continue;
    const double dd = d.distance - mean;
    var += dd * dd;
  }
  const double sigma = std::sqrt(var / static_cast<double>(count));  // population std
  if (!(sigma > 0.0)) throw Error("build_adjacency: all distances identical (sigma = 0)");

  // Later records for the same ordered pair overwrite earlier ones.
  std::map<std::pair<std::size_t, std::size_t>, double> dist;
  for (const DistanceRecord& d : distances) {
    if (!std::isfinite(d.distance)) continue;
    dist[{index[d.from], index[d.to]}] = d.distance;
  }

  std::vector<Triplet> entries;
  for (const auto& [key, d] : dist) {
    if (key.first == key.second) continue;  // diagonal forced to zero
    if (d > kappa) continue;
    entries.push_back({key.first, key.second, std::exp(-(d * d) / (sigma * sigma))});
  }
  return WeightedDigraph(node_ids,
                         SparseMatrix::from_triplets(node_ids.size(), node_ids.size(),
                                                     std::move(entries)),
                         sigma, kappa);
}

namespace {

/// Row-normalizes `w`; rows with zero sum become unit self-loops.
SparseMatrix row_stochastic(const SparseMatrix& w) {
  const std::size_t n = w.n_rows();
  std::vector<double> degree(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = w.row_offsets()[r]; k < w.row_offsets()[r + 1]; ++k) {
      degree[r] += w.values()[k];
    }
  }
  std::vector<Triplet> entries;
  entries.reserve(w.nnz() + n);
  for (std::size_t r = 0; r < n; ++r) {
    if (degree[r] > 0.0) {
      for (std::size_t k = w.row_offsets()[r]; k < w.row_offsets()[r + 1]; ++k) {
        entries.push_back({r, w.col_indices()[k], w.values()[k] / degree[r]});
      }
    } else {
      entries.push_back({r, r, 1.0});  // sink nodes keep their signal
    }
  }
  return SparseMatrix::from_triplets(n, n, std::move(entries));
}

}  // namespace

SparseMatrix out_transition(const WeightedDigraph& g) { return row_stochastic(g.weights()); }

SparseMatrix in_transition(const WeightedDigraph& g) {
  return row_stochastic(transpose(g.weights()));
}

WeightedDigraph symmetrize(const WeightedDigraph& g) {
  const SparseMatrix& w = g.weights();
  const SparseMatrix wt = transpose(w);
  std::map<std::pair<std::size_t, std::size_t>, double> merged;
  for (const Triplet& t : w.to_triplets()) {
    auto& v = merged[{t.row, t.col}];
    v = std::max(v, t.value);
  }
  for (const Triplet& t : wt.to_triplets()) {
    auto& v = merged[{t.row, t.col}];
    v = std::max(v, t.value);
  }
  std::vector<Triplet> entries;
  entries.reserve(merged.size());
  for (const auto& [key, v] : merged) entries.push_back({key.first, key.second, v});
  return WeightedDigraph(g.node_ids(), SparseMatrix::from_triplets(g.n(), g.n(), std::move(entries)),
                         g.kernel_sigma(), g.kernel_kappa());
}

SparseMatrix normalized_laplacian(const WeightedDigraph& g) {
  const SparseMatrix& w = g.weights();
  if (!is_symmetric(w)) throw Error("normalized_laplacian: weights are not symmetric");
  const std::size_t n = g.n();
  std::vector<double> degree(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = w.row_offsets()[r]; k < w.row_offsets()[r + 1]; ++k) {
      degree[r] += w.values()[k];
    }
  }
  std::vector<Triplet> entries;
  for (std::size_t r = 0; r < n; ++r) {
    if (degree[r] <= 0.0) continue;  // isolated node: all-zero row
    entries.push_back({r, r, 1.0});
    for (std::size_t k = w.row_offsets()[r]; k < w.row_offsets()[r + 1]; ++k) {
      const std::size_t c = w.col_indices()[k];
      entries.push_back({r, c, -w.values()[k] / std::sqrt(degree[r] * degree[c])});
    }
  }
  return SparseMatrix::from_triplets(n, n, std::move(entries));
}

SparseMatrix rescaled_laplacian(const SparseMatrix& l, double lambda_max) {
  if (!(lambda_max > 0.0)) throw Error("rescaled_laplacian: lambda_max must be > 0");
  if (l.n_rows() != l.n_cols()) throw Error("rescaled_laplacian: matrix not square");
  std::vector<Triplet> entries = l.to_triplets();
  const double scale = 2.0 / lambda_max;
  for (Triplet& t : entries) t.value *= scale;
  for (std::size_t i = 0; i < l.n_rows(); ++i) entries.push_back({i, i, -1.0});
  return SparseMatrix::from_triplets(l.n_rows(), l.n_cols(), std::move(entries));
}

double estimate_lambda_max(const SparseMatrix& l, std::size_t iterations, std::uint64_t seed) {
  const std::size_t n = l.n_rows();
  if (n == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.1, 1.0);
  DenseMatrix v(n, 1);
  for (std::size_t i = 0; i < n; ++i) v(i, 0) = uni(rng);
  double lambda = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    DenseMatrix w = spmm(l, v);
    const double norm = std::sqrt([&] {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += w(i, 0) * w(i, 0);
      return s;
    }());
    if (norm == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) w(i, 0) /= norm;
    double num = 0.0;
    DenseMatrix lw = spmm(l, w);
    for (std::size_t i = 0; i < n; ++i) num += w(i, 0) * lw(i, 0);
    lambda = num;
    v = std::move(w);
  }
  return lambda;
}

PPRMatrix ppr_stationary(const WeightedDigraph& g, double alpha, PPRMode mode, std::size_t k_max) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("ppr_stationary: alpha must be in (0, 1]");
  const std::size_t n = g.n();
  const SparseMatrix p = out_transition(g);
  PPRMatrix out;
  out.alpha = alpha;
  if (mode == PPRMode::closed_form) {
    // alpha (I - (1-alpha) P)^{-1}
    DenseMatrix a = DenseMatrix::identity(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t k = p.row_offsets()[r]; k < p.row_offsets()[r + 1]; ++k) {
        a(r, p.col_indices()[k]) -= (1.0 - alpha) * p.values()[k];
      }
    }
    DenseMatrix rhs(n, n);
    for (std::size_t i = 0; i < n; ++i) rhs(i, i) = alpha;
    out.matrix = solve_dense(std::move(a), std::move(rhs));
  } else {
    // sum_{k=0}^{k_max} alpha (1-alpha)^k P^k
    DenseMatrix walk = DenseMatrix::identity(n);
    DenseMatrix acc(n, n);
    double coeff = alpha;
    for (std::size_t k = 0;; ++k) {
      axpy_inplace(acc, coeff, walk);
      if (k == k_max) break;
      walk = spmm(p, walk);
      coeff *= (1.0 - alpha);
    }
    out.matrix = std::move(acc);
  }
  return out;
}

}  // namespace dcrnn
