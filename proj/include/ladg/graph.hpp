#pragma once

#include <vector>

#include "ladg/autodiff.hpp"
#include "ladg/matrix.hpp"

namespace ladg {

// Per-sample nearest-neighbor index lists under cosine similarity.
// Self is excluded; ties break toward the lower sample index; k is clamped
// to n-1.
struct NeighborSets {
  std::vector<std::vector<int>> neighbors;  // descending similarity per sample
  int k = 0;                                // effective (clamped) k
};

NeighborSets knn_neighbors(const Matrix& features, int k);

// How the affinity matrix is normalized into the propagation operator.
//  symmetric:      A <- (A + A^T)/2, S = D^{-1/2} A D^{-1/2}
//  row_stochastic: raw K-NN mask kept asymmetric, S = D^{-1} A
enum class GraphMode { symmetric, row_stochastic };

// 0/1 mask with m_ij = 1 iff j is a neighbor of i; zero diagonal.
Matrix neighbor_mask(const NeighborSets& nbrs, int n);

struct AffinityGraph {
  Matrix affinity;              // A (post-symmetrization in symmetric mode)
  Matrix s_norm;                // S
  std::vector<double> degrees;  // floored at kDegreeFloor
};

struct AffinityVars {
  ad::Var affinity;
  ad::Var s_norm;
  ad::Var degrees;  // n x 1
};

inline constexpr double kDegreeFloor = 1e-12;

// Affinity a_ij = exp((tau/2) cos(g_i, g_j)) on the neighbor mask.
// Differentiable w.r.t. the projected features; the neighbor mask itself is
// held constant.
AffinityVars build_affinity(ad::Tape& tape, ad::Var projected, const NeighborSets& nbrs,
                            double tau, GraphMode mode = GraphMode::symmetric);

// Value-level wrapper; runs the same construction on a scratch tape.
AffinityGraph build_affinity(const Matrix& projected, const NeighborSets& nbrs, double tau,
                             GraphMode mode = GraphMode::symmetric);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace ladg
