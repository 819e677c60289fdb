#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "ladg/graph.hpp"

using namespace ladg;
using namespace ladg::testing;

TEST_CASE("orthogonal unit vectors tie-break toward the lower index") {
  Matrix f = Matrix::identity(3);
  NeighborSets nbrs = knn_neighbors(f, 1);
  CHECK(nbrs.neighbors[0] == std::vector<int>{1});
  CHECK(nbrs.neighbors[1] == std::vector<int>{0});
  CHECK(nbrs.neighbors[2] == std::vector<int>{0});
}

TEST_CASE("collinear-ish points rank by cosine similarity") {
  // (x, 1) embeddings of line coordinates 1, 2, 10
  Matrix f = Matrix::from_rows({{1, 1}, {2, 1}, {10, 1}});
  NeighborSets nbrs = knn_neighbors(f, 1);
  CHECK(nbrs.neighbors[2] == std::vector<int>{1});
}

TEST_CASE("k clamps to n-1") {
  std::mt19937 gen(5);
  Matrix f = random_matrix(4, 3, gen);
  NeighborSets nbrs = knn_neighbors(f, 9);
  CHECK(nbrs.k == 3);
  for (const auto& list : nbrs.neighbors) CHECK(list.size() == 3);
}

TEST_CASE("zero-norm rows are rejected") {
  Matrix f(3, 2);
  f(0, 0) = 1.0;
  f(1, 1) = 1.0;
  CHECK_THROWS_AS(knn_neighbors(f, 1), DegenerateInputError);
}

TEST_CASE("affinity values on trivial pairs") {
  // mutual neighbors, identical unit vectors: a12 = exp(tau/2 * 1) = e at tau=2
  Matrix same = Matrix::from_rows({{1, 0}, {1, 0}});
  AffinityGraph g = build_affinity(same, knn_neighbors(same, 1), 2.0);
  CHECK(g.affinity(0, 1) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
  CHECK(g.affinity(0, 0) == 0.0);

  Matrix ortho = Matrix::identity(2);
  AffinityGraph go = build_affinity(ortho, knn_neighbors(ortho, 1), 2.0);
  CHECK(go.affinity(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalized operator is symmetric with spectral radius at most 1") {
  std::mt19937 gen(9);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix f = random_matrix(12, 4, gen);
    AffinityGraph g = build_affinity(f, knn_neighbors(f, 4), 2.0);
    CHECK(max_abs_diff(g.s_norm, g.s_norm.transposed()) <= 1e-12);
    const auto eig = symmetric_eigenvalues(g.s_norm);  // oracle: full spectrum
    double radius = 0.0;
    for (double ev : eig) radius = std::max(radius, std::abs(ev));
    CHECK(radius <= 1.0 + 1e-10);
  }
}

TEST_CASE("row-stochastic mode has unit row sums") {
  std::mt19937 gen(19);
  Matrix f = random_matrix(10, 3, gen);
  AffinityGraph g = build_affinity(f, knn_neighbors(f, 3), 2.0, GraphMode::row_stochastic);
  for (int i = 0; i < 10; ++i) {
    double s = 0.0;
    for (int j = 0; j < 10; ++j) s += g.s_norm(i, j);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("permuting samples permutes the graph consistently") {
  std::mt19937 gen(13);
  const int n = 8;
  Matrix f = random_matrix(n, 3, gen);
  AffinityGraph g = build_affinity(f, knn_neighbors(f, 3), 2.0);

  std::vector<int> perm = {3, 1, 7, 0, 5, 2, 6, 4};
  Matrix fp(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) fp(i, j) = f(perm[i], j);
  }
  AffinityGraph gp = build_affinity(fp, knn_neighbors(fp, 3), 2.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      CHECK(gp.affinity(i, j) == doctest::Approx(g.affinity(perm[i], perm[j])).epsilon(1e-12));
      CHECK(gp.s_norm(i, j) == doctest::Approx(g.s_norm(perm[i], perm[j])).epsilon(1e-12));
    }
  }
}

TEST_CASE("cosine affinity is invariant to positive rescaling") {
  std::mt19937 gen(29);
  Matrix f = random_matrix(9, 4, gen);
  AffinityGraph a = build_affinity(f, knn_neighbors(f, 3), 2.0);
  Matrix scaled = scale(f, 7.5);
  AffinityGraph b = build_affinity(scaled, knn_neighbors(scaled, 3), 2.0);
  CHECK(max_abs_diff(a.affinity, b.affinity) <= 1e-12);
}

TEST_CASE("gradient through the normalized graph passes finite differences") {
  std::mt19937 gen(31);
  Matrix g0 = random_matrix(6, 3, gen);
  const NeighborSets nbrs = knn_neighbors(g0, 2);  // mask held constant
  Matrix w = random_matrix(6, 6, gen);
  auto f = [&](const Matrix& g) {
    ad::Tape t;
    AffinityVars av = build_affinity(t, t.leaf(g), nbrs, 2.0);
    return ad::sum(ad::mul(av.s_norm, t.constant(w))).scalar();
  };
  ad::Tape t;
  ad::Var gv = t.leaf(g0);
  AffinityVars av = build_affinity(t, gv, nbrs, 2.0);
  t.backward(ad::sum(ad::mul(av.s_norm, t.constant(w))));
  CHECK(gradient_check(f, g0, gv.grad()) <= 1e-4);
}
