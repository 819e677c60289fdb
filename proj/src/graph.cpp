#include "ladg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ladg {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

NeighborSets knn_neighbors(const Matrix& features, int k) {
  const int n = features.rows();
  if (n < 2) throw ShapeError("knn_neighbors: need at least 2 samples");
  if (k < 1) throw ConfigError("knn_neighbors: k must be >= 1");
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (double v : features.row(i)) s += v * v;
    if (!(std::sqrt(s) > 1e-150)) {
      throw DegenerateInputError("knn_neighbors: zero-norm feature row " + std::to_string(i));
    }
  }
  const int kk = std::min(k, n - 1);
  NeighborSets out;
  out.k = kk;
  out.neighbors.resize(n);
  std::vector<int> order(n);
  std::vector<double> sims(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) sims[j] = cosine_similarity(features.row(i), features.row(j));
    std::iota(order.begin(), order.end(), 0);
    // descending similarity, ties toward lower index; self never selected
    std::sort(order.begin(), order.end(), [&](int x, int y) {
      if (sims[x] != sims[y]) return sims[x] > sims[y];
      return x < y;
    });
    auto& nbrs = out.neighbors[i];
    nbrs.reserve(kk);
    for (int j : order) {
      if (j == i) continue;
      nbrs.push_back(j);
      if (static_cast<int>(nbrs.size()) == kk) break;
    }
  }
  return out;
}

Matrix neighbor_mask(const NeighborSets& nbrs, int n) {
  Matrix mask(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j : nbrs.neighbors[i]) mask(i, j) = 1.0;
  }
  return mask;
}

AffinityVars build_affinity(ad::Tape& tape, ad::Var projected, const NeighborSets& nbrs,
                            double tau, GraphMode mode) {
  using namespace ad;
  const int n = projected.rows();
  if (static_cast<int>(nbrs.neighbors.size()) != n) {
    throw ShapeError("build_affinity: neighbor sets do not match sample count");
  }
  Var unit = normalize_rows(projected);
  Var cosines = matmul(unit, transpose(unit));
  Var raw = ad::exp(scale(cosines, tau / 2.0));
  Var mask = tape.constant(neighbor_mask(nbrs, n));
  Var masked = mul(raw, mask);

  AffinityVars out;
  if (mode == GraphMode::symmetric) {
    out.affinity = scale(add(masked, transpose(masked)), 0.5);
    out.degrees = clamp_min(row_sums(out.affinity), kDegreeFloor);
    Var inv_sqrt = rsqrt(out.degrees);
    out.s_norm = mul(out.affinity, matmul(inv_sqrt, transpose(inv_sqrt)));
  } else {
    out.affinity = masked;
    out.degrees = clamp_min(row_sums(out.affinity), kDegreeFloor);
    Var ones_row = tape.constant(Matrix::constant(1, n, 1.0));
    out.s_norm = mul(out.affinity, matmul(reciprocal(out.degrees), ones_row));
  }
  return out;
}

AffinityGraph build_affinity(const Matrix& projected, const NeighborSets& nbrs, double tau,
                             GraphMode mode) {
  ad::Tape tape;
  AffinityVars vars = build_affinity(tape, tape.leaf(projected), nbrs, tau, mode);
  AffinityGraph out;
  out.affinity = vars.affinity.value();
  out.s_norm = vars.s_norm.value();
  const Matrix& d = vars.degrees.value();
  out.degrees.assign(d.data(), d.data() + d.size());
  return out;
}

}  // namespace ladg
