#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dcrnn/sparse.hpp"

namespace dcrnn {

struct DistanceRecord {
  std::string from;
  std::string to;
  double distance = 0.0;
};

/// Weighted directed sensor graph. Row i of the weight matrix holds the
/// out-edges of node i (row = source). Weights lie in (0, 1]; the diagonal is
/// zero and zeros are structurally absent. Immutable after construction.
class WeightedDigraph {
 public:
  WeightedDigraph(std::vector<std::string> node_ids, SparseMatrix weights, double kernel_sigma,
                  double kernel_kappa);

  std::size_t n() const { return node_ids_.size(); }
  const std::vector<std::string>& node_ids() const { return node_ids_; }
  const SparseMatrix& weights() const { return weights_; }
  double kernel_sigma() const { return kernel_sigma_; }
  double kernel_kappa() const { return kernel_kappa_; }

  std::optional<std::size_t> index_of(const std::string& id) const;

 private:
  std::vector<std::string> node_ids_;
  SparseMatrix weights_;
  double kernel_sigma_ = 0.0;
  double kernel_kappa_ = 0.0;
};

/// Thresholded Gaussian kernel adjacency: W_ij = exp(-dist^2 / sigma^2) for
/// dist <= kappa, absent otherwise. sigma is the population standard deviation
/// of all provided distances; the diagonal is forced to zero. Distances may be
/// asymmetric; omitted pairs mean infinite distance. Later records for the
/// same ordered pair overwrite earlier ones.
WeightedDigraph build_adjacency(const std::vector<DistanceRecord>& distances,
                                const std::vector<std::string>& node_ids, double kappa);

/// Forward random-walk transition matrix D_O^{-1} W. Rows with zero out-degree
/// get a unit self-loop so every row sums to 1.
SparseMatrix out_transition(const WeightedDigraph& g);

/// Reverse random-walk transition matrix D_I^{-1} W^T, same self-loop rule.
SparseMatrix in_transition(const WeightedDigraph& g);

/// Undirected version with W_ij = W_ji = max of the two directed entries.
WeightedDigraph symmetrize(const WeightedDigraph& g);

/// Normalized Laplacian D^{-1/2} (D - W) D^{-1/2} of a symmetric graph.
/// Isolated nodes keep an all-zero row. Throws on asymmetric weights.
SparseMatrix normalized_laplacian(const WeightedDigraph& g);

/// Eigenvalue rescaling (2 / lambda_max) L - I.
SparseMatrix rescaled_laplacian(const SparseMatrix& l, double lambda_max);

/// Largest-eigenvalue estimate for a symmetric matrix by power iteration.
double estimate_lambda_max(const SparseMatrix& l, std::size_t iterations = 200,
                           std::uint64_t seed = 0);

/// Personalized PageRank stationary distribution, Eq. of the restart-alpha
/// random walk: rows of `matrix` are per-start-node stationary distributions.
/// Rows sum to 1 for closed_form; truncated rows sum to 1 - (1-alpha)^(k_max+1).
struct PPRMatrix {
  DenseMatrix matrix;
  double alpha = 0.0;
};

enum class PPRMode { closed_form, truncated };

PPRMatrix ppr_stationary(const WeightedDigraph& g, double alpha, PPRMode mode,
                         std::size_t k_max = 0);

// --- file interfaces ---

/// Distance CSV: header line, then `from_id,to_id,distance` records.
std::vector<DistanceRecord> load_distances(const std::filesystem::path& path);
/// Node list: one id per line.
std::vector<std::string> load_node_ids(const std::filesystem::path& path);

/// Writes `row,col,value` triplets to `path` and an N/sigma/kappa/node-order
/// sidecar to `path` + ".meta".
void save_graph(const WeightedDigraph& g, const std::filesystem::path& path);
WeightedDigraph load_graph(const std::filesystem::path& path);

}  // namespace dcrnn
