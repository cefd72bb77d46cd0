#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "geoload/data.hpp"
#include "geoload/gcn.hpp"
#include "geoload/graph.hpp"

namespace geoload::test_support {

/// Random symmetric 0/1 adjacency with zero diagonal.
inline AdjacencyMatrix random_adjacency(int n, std::mt19937_64& rng, double density = 0.4) {
  std::bernoulli_distribution edge(density);
  AdjacencyMatrix a{Eigen::MatrixXd::Zero(n, n)};
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (edge(rng)) a.entries(i, j) = a.entries(j, i) = 1.0;
    }
  }
  return a;
}

inline AdjacencyMatrix path_adjacency(int n) {
  AdjacencyMatrix a{Eigen::MatrixXd::Zero(n, n)};
  for (int i = 0; i + 1 < n; ++i) a.entries(i, i + 1) = a.entries(i + 1, i) = 1.0;
  return a;
}

inline Sample random_sample(int n, int m, int exo, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Sample s;
  s.node_features = Eigen::MatrixXd::NullaryExpr(n, m, [&] { return g(rng); });
  s.exo = Eigen::VectorXd::NullaryExpr(exo, [&] { return g(rng); });
  s.target = g(rng);
  return s;
}

inline ArchitectureConfig small_architecture(int exo = 3) {
  ArchitectureConfig arch;
  arch.node_features = 2;
  arch.gcn_dims = {4, 3};
  arch.dense_dims = {5, 4};
  arch.exo_dim = exo;
  return arch;
}

/// Average ranks (1-based) with ties sharing the mean rank.
inline std::vector<double> ranks(const std::vector<double>& v) {
  const int n = static_cast<int>(v.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  for (int k = 0; k < n;) {
    int j = k;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[k]]) ++j;
    for (int q = k; q <= j; ++q) r[idx[q]] = 0.5 * (k + j) + 1.0;
    k = j + 1;
  }
  return r;
}

/// Spearman rank correlation (Pearson correlation of average ranks).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

}  // namespace geoload::test_support
