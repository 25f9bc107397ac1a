#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "dcrnn/graph.hpp"
#include "oracles.hpp"

using namespace dcrnn;

namespace {

WeightedDigraph graph_from_weights(SparseMatrix w) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < w.n_rows(); ++i) ids.push_back("s" + std::to_string(i));
  return WeightedDigraph(std::move(ids), std::move(w), 1.0, 10.0);
}

double row_sum(const SparseMatrix& m, std::size_t r) {
  double s = 0.0;
  for (std::size_t k = m.row_offsets()[r]; k < m.row_offsets()[r + 1]; ++k) s += m.values()[k];
  return s;
}

}  // namespace

TEST_CASE("build_adjacency: kernel values on a hand-computed sigma") {
  // distances {1, 3}: mean 2, population std 1
  const std::vector<DistanceRecord> dist = {{"a", "b", 1.0}, {"b", "a", 3.0}};
  const WeightedDigraph g = build_adjacency(dist, {"a", "b"}, 10.0);
  CHECK(g.kernel_sigma() == doctest::Approx(1.0));
  const DenseMatrix w = g.weights().to_dense();
  CHECK(w(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));  // dist = sigma
  CHECK(w(1, 0) == doctest::Approx(std::exp(-9.0)).epsilon(1e-9));
}

TEST_CASE("build_adjacency: zero distance gives weight 1") {
  const std::vector<DistanceRecord> dist = {{"a", "b", 0.0}, {"b", "a", 2.0}};
  const WeightedDigraph g = build_adjacency(dist, {"a", "b"}, 10.0);
  CHECK(g.weights().to_dense()(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("build_adjacency: beyond-kappa pairs are structurally absent") {
  const std::vector<DistanceRecord> dist = {{"a", "b", 1.0}, {"b", "a", 6.0}, {"a", "c", 2.0},
                                            {"c", "a", 3.0}};
  const WeightedDigraph g = build_adjacency(dist, {"a", "b", "c"}, 5.0);
  const DenseMatrix w = g.weights().to_dense();
  CHECK(w(1, 0) == 0.0);  // dist 6 > kappa 5
  CHECK(w(0, 1) > 0.0);
  CHECK(g.weights().nnz() == 3);
}

TEST_CASE("build_adjacency: diagonal forced to zero, errors") {
  const std::vector<DistanceRecord> self = {{"a", "a", 0.0}, {"a", "b", 2.0}};
  const WeightedDigraph g = build_adjacency(self, {"a", "b"}, 10.0);
  CHECK(g.weights().to_dense()(0, 0) == 0.0);

  CHECK_THROWS_WITH_AS(build_adjacency({{"a", "zzz", 1.0}, {"a", "b", 2.0}}, {"a", "b"}, 10.0),
                       doctest::Contains("zzz"), Error);
  CHECK_THROWS_AS(build_adjacency({}, {"a"}, 1.0), Error);
  CHECK_THROWS_AS(build_adjacency({{"a", "b", 2.0}, {"b", "a", 2.0}}, {"a", "b"}, 10.0),
                  Error);  // sigma = 0
}

TEST_CASE("build_adjacency: infinite distances mean the pair is omitted") {
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<DistanceRecord> dist = {{"a", "b", 1.0}, {"b", "a", 3.0}, {"a", "c", inf}};
  const WeightedDigraph g = build_adjacency(dist, {"a", "b", "c"}, 10.0);
  CHECK(g.kernel_sigma() == doctest::Approx(1.0));  // sigma from the finite {1, 3} only
  CHECK(g.weights().nnz() == 2);
  CHECK(g.weights().to_dense()(0, 2) == 0.0);
  CHECK_THROWS_AS(build_adjacency({{"a", "b", -1.0}, {"b", "a", 1.0}}, {"a", "b"}, 10.0), Error);
}

TEST_CASE("build_adjacency: kappa = 0 keeps only zero-distance pairs") {
  const std::vector<DistanceRecord> dist = {{"a", "b", 0.0}, {"b", "a", 2.0}, {"b", "c", 1.0},
                                            {"c", "a", 0.0}};
  const WeightedDigraph g = build_adjacency(dist, {"a", "b", "c"}, 0.0);
  CHECK(g.weights().nnz() == 2);
  CHECK(g.weights().to_dense()(0, 1) == 1.0);
  CHECK(g.weights().to_dense()(2, 0) == 1.0);
}

TEST_CASE("build_adjacency is permutation-equivariant") {
  std::mt19937_64 rng(11);
  std::vector<std::string> ids = {"n0", "n1", "n2", "n3", "n4"};
  std::vector<DistanceRecord> dist;
  std::uniform_real_distribution<double> d(0.5, 6.0);
  for (const auto& a : ids) {
    for (const auto& b : ids) {
      if (a != b) dist.push_back({a, b, d(rng)});
    }
  }
  const WeightedDigraph g = build_adjacency(dist, ids, 5.0);

  std::vector<std::string> perm_ids = ids;
  std::shuffle(perm_ids.begin(), perm_ids.end(), rng);
  const WeightedDigraph gp = build_adjacency(dist, perm_ids, 5.0);

  const DenseMatrix w = g.weights().to_dense();
  const DenseMatrix wp = gp.weights().to_dense();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = 0; j < ids.size(); ++j) {
      const std::size_t pi = *gp.index_of(ids[i]);
      const std::size_t pj = *gp.index_of(ids[j]);
      CHECK(w(i, j) == wp(pi, pj));
    }
  }
}

TEST_CASE("out_transition: normalization and the sink self-loop rule") {
  SUBCASE("unit degrees are untouched") {
    const auto g = graph_from_weights(
        SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}}));
    const DenseMatrix p = out_transition(g).to_dense();
    CHECK(p(0, 1) == 1.0);
    CHECK(p(1, 0) == 1.0);
  }
  SUBCASE("rows are normalized by out-degree") {
    const auto g = graph_from_weights(
        SparseMatrix::from_triplets(2, 2, {{0, 1, 2.0}, {1, 0, 1.0}}));
    const DenseMatrix p = out_transition(g).to_dense();
    CHECK(p(0, 1) == 1.0);
    CHECK(p(1, 0) == 1.0);
  }
  SUBCASE("zero out-degree becomes a self-loop") {
    const auto g = graph_from_weights(SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}}));
    const DenseMatrix p = out_transition(g).to_dense();
    CHECK(p(0, 1) == 1.0);
    CHECK(p(1, 1) == 1.0);
  }
}

TEST_CASE("in_transition: reverse normalization and self-loops") {
  SUBCASE("symmetric permutation is unchanged") {
    const auto g = graph_from_weights(
        SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}}));
    const DenseMatrix p = in_transition(g).to_dense();
    CHECK(p(0, 1) == 1.0);
    CHECK(p(1, 0) == 1.0);
  }
  SUBCASE("W = [[0,2],[0,0]] gives node b the row [1, 0]") {
    const auto g = graph_from_weights(SparseMatrix::from_triplets(2, 2, {{0, 1, 2.0}}));
    const DenseMatrix p = in_transition(g).to_dense();
    CHECK(p(1, 0) == 1.0);
    CHECK(p(1, 1) == 0.0);
    CHECK(p(0, 0) == 1.0);  // node a has no in-edges
  }
  SUBCASE("all-zero weights give the identity") {
    const auto g = graph_from_weights(SparseMatrix::from_triplets(2, 2, {}));
    CHECK(max_abs_diff(in_transition(g).to_dense(), DenseMatrix::identity(2)) == 0.0);
  }
}

TEST_CASE("transition rows sum to one within 1e-12 on random graphs") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 10; ++rep) {
    const auto g = graph_from_weights(oracle::random_graph_weights(9, 0.3, rng));
    const SparseMatrix po = out_transition(g);
    const SparseMatrix pi = in_transition(g);
    for (std::size_t r = 0; r < 9; ++r) {
      CHECK(row_sum(po, r) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(row_sum(pi, r) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("symmetrize takes the entrywise max") {
  const auto g = graph_from_weights(
      SparseMatrix::from_triplets(2, 2, {{0, 1, 0.5}, {1, 0, 0.2}}));
  const DenseMatrix w = symmetrize(g).weights().to_dense();
  CHECK(w(0, 1) == 0.5);
  CHECK(w(1, 0) == 0.5);

  const auto one_sided = graph_from_weights(SparseMatrix::from_triplets(2, 2, {{0, 1, 0.3}}));
  const DenseMatrix w2 = symmetrize(one_sided).weights().to_dense();
  CHECK(w2(0, 1) == 0.3);
  CHECK(w2(1, 0) == 0.3);

  // idempotence on an already-symmetric graph
  const auto sym = symmetrize(g);
  CHECK(max_abs_diff(symmetrize(sym).weights().to_dense(), sym.weights().to_dense()) == 0.0);
}

TEST_CASE("normalized_laplacian: hand cases and the isolated-node rule") {
  SUBCASE("single edge") {
    const auto g = graph_from_weights(
        SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}}));
    const DenseMatrix l = normalized_laplacian(g).to_dense();
    CHECK(l(0, 0) == doctest::Approx(1.0));
    CHECK(l(0, 1) == doctest::Approx(-1.0));
    CHECK(l(1, 0) == doctest::Approx(-1.0));
    CHECK(l(1, 1) == doctest::Approx(1.0));
  }
  SUBCASE("3-cycle with unit weights") {
    const auto g = graph_from_weights(SparseMatrix::from_triplets(
        3, 3,
        {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}, {2, 1, 1.0}, {0, 2, 1.0}, {2, 0, 1.0}}));
    const DenseMatrix l = normalized_laplacian(g).to_dense();
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(l(i, i) == doctest::Approx(1.0));
      for (std::size_t j = 0; j < 3; ++j) {
        if (i != j) CHECK(l(i, j) == doctest::Approx(-0.5));
      }
    }
  }
  SUBCASE("isolated node keeps an all-zero row") {
    const auto g = graph_from_weights(
        SparseMatrix::from_triplets(3, 3, {{0, 1, 1.0}, {1, 0, 1.0}}));
    const DenseMatrix l = normalized_laplacian(g).to_dense();
    CHECK(l(2, 0) == 0.0);
    CHECK(l(2, 1) == 0.0);
    CHECK(l(2, 2) == 0.0);
  }
  SUBCASE("asymmetric input is rejected") {
    const auto g = graph_from_weights(SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}}));
    CHECK_THROWS_AS(normalized_laplacian(g), Error);
  }
}

TEST_CASE("rescaled_laplacian: formula and edge cases") {
  const SparseMatrix l =
      SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, -1.0}, {1, 0, -1.0}, {1, 1, 1.0}});
  const DenseMatrix lt = rescaled_laplacian(l, 2.0).to_dense();
  CHECK(lt(0, 0) == doctest::Approx(0.0));
  CHECK(lt(0, 1) == doctest::Approx(-1.0));
  CHECK(lt(1, 0) == doctest::Approx(-1.0));
  CHECK(lt(1, 1) == doctest::Approx(0.0));

  const DenseMatrix zt = rescaled_laplacian(SparseMatrix::from_triplets(2, 2, {}), 2.0).to_dense();
  CHECK(max_abs_diff(zt, DenseMatrix::identity(2)) == 2.0);  // equals -I
  CHECK(zt(0, 0) == -1.0);

  CHECK_THROWS_AS(rescaled_laplacian(l, 0.0), Error);
  CHECK_THROWS_AS(rescaled_laplacian(l, -1.0), Error);
}

TEST_CASE("rescaled_laplacian at lambda_max=2 equals -D^{-1/2} W D^{-1/2}") {
  std::mt19937_64 rng(13);
  SparseMatrix w = oracle::random_graph_weights(7, 0.5, rng);
  const auto g = symmetrize(graph_from_weights(std::move(w)));
  const SparseMatrix l = normalized_laplacian(g);
  const DenseMatrix lt = rescaled_laplacian(l, 2.0).to_dense();

  const DenseMatrix wd = g.weights().to_dense();
  std::vector<double> deg(7, 0.0);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 7; ++j) deg[i] += wd(i, j);
  }
  DenseMatrix want(7, 7);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 7; ++j) {
      want(i, j) = -wd(i, j) / std::sqrt(deg[i] * deg[j]);
    }
  }
  CHECK(max_abs_diff(lt, want) < 1e-12);
}

TEST_CASE("similarity identity: L~ = D^{1/2} (-out_transition) D^{-1/2} entrywise") {
  std::mt19937_64 rng(14);
  const auto g = symmetrize(graph_from_weights(oracle::random_graph_weights(8, 0.5, rng)));
  const SparseMatrix l_tilde = rescaled_laplacian(normalized_laplacian(g), 2.0);
  const DenseMatrix p = out_transition(g).to_dense();

  const DenseMatrix wd = g.weights().to_dense();
  std::vector<double> deg(8, 0.0);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) deg[i] += wd(i, j);
  }
  DenseMatrix want(8, 8);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      want(i, j) = std::sqrt(deg[i]) * (-p(i, j)) / std::sqrt(deg[j]);
    }
  }
  CHECK(max_abs_diff(l_tilde.to_dense(), want) < 1e-12);
}

TEST_CASE("estimate_lambda_max approaches 2 on a bipartite-ish graph") {
  // single edge: eigenvalues of L are {0, 2}
  const auto g = graph_from_weights(
      SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}}));
  const double lmax = estimate_lambda_max(normalized_laplacian(g));
  CHECK(lmax == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("ppr_stationary: closed form basics") {
  SUBCASE("alpha = 1 gives the identity") {
    const auto g = graph_from_weights(
        SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}}));
    const PPRMatrix p = ppr_stationary(g, 1.0, PPRMode::closed_form);
    CHECK(max_abs_diff(p.matrix, DenseMatrix::identity(2)) < 1e-12);
    const PPRMatrix pt = ppr_stationary(g, 1.0, PPRMode::truncated, 5);
    CHECK(max_abs_diff(pt.matrix, DenseMatrix::identity(2)) < 1e-12);
  }
  SUBCASE("2x2 inverse by hand: alpha = 0.5 on a swap graph") {
    const auto g = graph_from_weights(
        SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}}));
    const PPRMatrix p = ppr_stationary(g, 0.5, PPRMode::closed_form);
    CHECK(p.matrix(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(p.matrix(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(p.matrix(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(p.matrix(1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("alpha outside (0, 1] is rejected") {
    const auto g = graph_from_weights(
        SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}}));
    CHECK_THROWS_AS(ppr_stationary(g, 0.0, PPRMode::closed_form), Error);
    CHECK_THROWS_AS(ppr_stationary(g, 1.5, PPRMode::closed_form), Error);
  }
}

TEST_CASE("ppr_stationary: row sums and entry signs") {
  std::mt19937_64 rng(15);
  const auto g = graph_from_weights(oracle::random_graph_weights(10, 0.3, rng));
  const PPRMatrix closed = ppr_stationary(g, 0.15, PPRMode::closed_form);
  for (std::size_t r = 0; r < 10; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 10; ++c) {
      CHECK(closed.matrix(r, c) >= -1e-15);
      s += closed.matrix(r, c);
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
  // truncated rows sum to 1 - (1-alpha)^(k_max+1)
  const std::size_t k_max = 20;
  const PPRMatrix trunc = ppr_stationary(g, 0.15, PPRMode::truncated, k_max);
  const double want = 1.0 - std::pow(0.85, static_cast<double>(k_max + 1));
  for (std::size_t r = 0; r < 10; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 10; ++c) s += trunc.matrix(r, c);
    CHECK(s == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("ppr truncation error obeys the geometric tail bound and shrinks monotonically") {
  std::mt19937_64 rng(16);
  const auto g = graph_from_weights(oracle::random_graph_weights(10, 0.3, rng));
  const double alpha = 0.15;
  const PPRMatrix closed = ppr_stationary(g, alpha, PPRMode::closed_form);

  // The tail sum_{k>K} a(1-a)^k P^k has row sums exactly (1-a)^(K+1), which
  // bounds every entry of the nonnegative difference.
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k_max : {10u, 20u, 35u, 50u}) {
    const PPRMatrix trunc = ppr_stationary(g, alpha, PPRMode::truncated, k_max);
    const double diff = max_abs_diff(closed.matrix, trunc.matrix);
    CHECK(diff <= std::pow(1.0 - alpha, static_cast<double>(k_max + 1)));
    CHECK(diff < prev);  // monotone convergence in max-norm
    prev = diff;
    for (std::size_t i = 0; i < trunc.matrix.size(); ++i) {
      CHECK(closed.matrix.data()[i] - trunc.matrix.data()[i] >= -1e-12);
    }
  }
}

TEST_CASE("WeightedDigraph construction enforces its invariants") {
  const std::vector<std::string> ids = {"a", "b"};
  // stored self-loop
  CHECK_THROWS_AS(WeightedDigraph(ids, SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}}), 1.0, 1.0),
                  Error);
  // non-positive stored weight
  CHECK_THROWS_AS(
      WeightedDigraph(ids, SparseMatrix::from_triplets(2, 2, {{0, 1, -0.5}}), 1.0, 1.0), Error);
  // dimension mismatch with the id list
  CHECK_THROWS_AS(WeightedDigraph(ids, SparseMatrix::from_triplets(3, 3, {{0, 1, 1.0}}), 1.0, 1.0),
                  Error);
  // sigma must be positive
  CHECK_THROWS_AS(WeightedDigraph(ids, SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}}), 0.0, 1.0),
                  Error);
}

TEST_CASE("graph save/load round-trips weights and metadata") {
  std::mt19937_64 rng(17);
  const auto g = graph_from_weights(oracle::random_graph_weights(6, 0.4, rng));
  const auto path = std::filesystem::temp_directory_path() / "dcrnn_graph_test.txt";
  save_graph(g, path);
  const WeightedDigraph h = load_graph(path);
  CHECK(h.node_ids() == g.node_ids());
  CHECK(h.kernel_sigma() == g.kernel_sigma());
  CHECK(h.kernel_kappa() == g.kernel_kappa());
  CHECK(max_abs_diff(h.weights().to_dense(), g.weights().to_dense()) == 0.0);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".meta");
}

TEST_CASE("load_distances skips the header and reports bad lines") {
  const auto path = std::filesystem::temp_directory_path() / "dcrnn_dist_test.csv";
  {
    std::ofstream out(path);
    out << "from,to,distance\na,b,1.5\nb,a,2.5\n";
  }
  const auto recs = load_distances(path);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].from == "a");
  CHECK(recs[0].distance == 1.5);
  {
    std::ofstream out(path);
    out << "from,to,distance\na,b,not_a_number\n";
  }
  CHECK_THROWS_WITH_AS(load_distances(path), doctest::Contains(":2"), Error);
  std::filesystem::remove(path);
}
