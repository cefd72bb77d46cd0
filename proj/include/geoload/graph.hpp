#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace geoload {

/// A weather-collection location. Ids are dense in [0, n).
struct Location {
  int id = 0;
  double lat = 0.0;
  double lon = 0.0;
};

enum class NeighborRule { grid, knn };

std::string to_string(NeighborRule rule);
NeighborRule neighbor_rule_from_string(const std::string& name);

/// Grid rule: i~j when the Euclidean distance in degrees is <= threshold_deg.
/// On a 0.25 degree grid, 0.3 gives the 4-neighbourhood and 0.36 the
/// 8-neighbourhood. k-NN rule: symmetrized union of directed k-NN edges.
struct NeighborConfig {
  NeighborRule rule = NeighborRule::grid;
  double threshold_deg = 0.3;
  int k = 4;
};

/// Symmetric binary matrix with zero diagonal. Self-loops are added only
/// when normalizing.
struct AdjacencyMatrix {
  Eigen::MatrixXd entries;

  int size() const { return static_cast<int>(entries.rows()); }
  bool is_valid() const;
};

/// D^-1/2 (A + I) D^-1/2 where D is the row-sum of A + I.
struct Propagation {
  Eigen::MatrixXd entries;

  int size() const { return static_cast<int>(entries.rows()); }
};

AdjacencyMatrix build_adjacency(std::span<const Location> locations,
                                const NeighborConfig& rule);

Propagation normalize(const AdjacencyMatrix& adjacency);

/// Entrywise product of an adjacency matrix and an edge mask.
AdjacencyMatrix apply_edge_mask(const AdjacencyMatrix& adjacency,
                                const Eigen::MatrixXd& edge_mask);

/// Throws unless ids are exactly 0..n-1 (in order) with finite coordinates.
void validate_locations(std::span<const Location> locations);

std::vector<Location> read_locations_csv(const std::filesystem::path& path);
void write_locations_csv(const std::filesystem::path& path,
                         std::span<const Location> locations);

}  // namespace geoload
