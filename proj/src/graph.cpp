#include "geoload/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "geoload/csv.hpp"
#include "geoload/error.hpp"

namespace geoload {

std::string to_string(NeighborRule rule) {
  return rule == NeighborRule::grid ? "grid" : "knn";
}

NeighborRule neighbor_rule_from_string(const std::string& name) {
  if (name == "grid") return NeighborRule::grid;
  if (name == "knn") return NeighborRule::knn;
  throw Error(ErrorKind::config, "unknown neighbor rule '" + name + "' (expected grid or knn)");
}

bool AdjacencyMatrix::is_valid() const {
  if (entries.rows() != entries.cols()) return false;
  for (Eigen::Index i = 0; i < entries.rows(); ++i) {
    if (entries(i, i) != 0.0) return false;
    for (Eigen::Index j = 0; j < entries.cols(); ++j) {
      double a = entries(i, j);
      if ((a != 0.0 && a != 1.0) || a != entries(j, i)) return false;
    }
  }
  return true;
}

void validate_locations(std::span<const Location> locations) {
  for (std::size_t i = 0; i < locations.size(); ++i) {
    const auto& loc = locations[i];
    if (loc.id != static_cast<int>(i)) {
      throw Error(ErrorKind::validation, "location ids must be dense 0..n-1 in order; found id " +
                                             std::to_string(loc.id) + " at position " +
                                             std::to_string(i));
    }
    if (!std::isfinite(loc.lat) || !std::isfinite(loc.lon)) {
      throw Error(ErrorKind::validation,
                  "location " + std::to_string(loc.id) + " has non-finite coordinates");
    }
  }
}

namespace {

double distance_deg(const Location& a, const Location& b) {
  return std::hypot(a.lat - b.lat, a.lon - b.lon);
}

}  // namespace

AdjacencyMatrix build_adjacency(std::span<const Location> locations,
                                const NeighborConfig& rule) {
  const int n = static_cast<int>(locations.size());
  if (n == 0) throw Error(ErrorKind::validation, "build_adjacency: no locations");
  validate_locations(locations);

  AdjacencyMatrix adj{Eigen::MatrixXd::Zero(n, n)};
  if (rule.rule == NeighborRule::grid) {
    if (!(rule.threshold_deg > 0.0)) {
      throw Error(ErrorKind::config, "grid threshold must be positive");
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (distance_deg(locations[i], locations[j]) <= rule.threshold_deg) {
          adj.entries(i, j) = adj.entries(j, i) = 1.0;
        }
      }
    }
    return adj;
  }

  if (rule.k < 1) throw Error(ErrorKind::config, "knn k must be >= 1");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    order.erase(order.begin() + i);
    // Ties on distance resolve to the lower id.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return distance_deg(locations[i], locations[a]) < distance_deg(locations[i], locations[b]);
    });
    const int take = std::min<int>(rule.k, static_cast<int>(order.size()));
    for (int t = 0; t < take; ++t) {
      adj.entries(i, order[t]) = adj.entries(order[t], i) = 1.0;
    }
    order.resize(n);
  }
  return adj;
}

Propagation normalize(const AdjacencyMatrix& adjacency) {
  const int n = adjacency.size();
  Eigen::MatrixXd tilde = adjacency.entries;
  tilde.diagonal().array() += 1.0;
  Eigen::VectorXd inv_sqrt = tilde.rowwise().sum().array().rsqrt();
  Propagation p;
  p.entries.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      p.entries(i, j) = inv_sqrt(i) * tilde(i, j) * inv_sqrt(j);
    }
  }
  return p;
}

AdjacencyMatrix apply_edge_mask(const AdjacencyMatrix& adjacency,
                                const Eigen::MatrixXd& edge_mask) {
  if (edge_mask.rows() != adjacency.entries.rows() ||
      edge_mask.cols() != adjacency.entries.cols()) {
    throw Error(ErrorKind::shape, "edge mask shape does not match adjacency");
  }
  AdjacencyMatrix out{adjacency.entries.cwiseProduct(edge_mask)};
  if (out.entries != out.entries.transpose()) {
    throw Error(ErrorKind::validation, "apply_edge_mask produced a non-symmetric matrix");
  }
  return out;
}

std::vector<Location> read_locations_csv(const std::filesystem::path& path) {
  auto table = csv::read(path);
  csv::require_header(table, {"location_id", "lat", "lon"}, path);
  std::vector<Location> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Location loc;
    loc.id = static_cast<int>(csv::to_int(row.fields[0], row, "location_id", path));
    loc.lat = csv::to_double(row.fields[1], row, "lat", path);
    loc.lon = csv::to_double(row.fields[2], row, "lon", path);
    out.push_back(loc);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  if (out.empty()) throw Error(ErrorKind::validation, path.string() + ": no locations");
  validate_locations(out);
  return out;
}

void write_locations_csv(const std::filesystem::path& path,
                         std::span<const Location> locations) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << "location_id,lat,lon\n";
  for (const auto& loc : locations) {
    out << loc.id << ',' << csv::format_double(loc.lat) << ',' << csv::format_double(loc.lon)
        << '\n';
  }
}

}  // namespace geoload
