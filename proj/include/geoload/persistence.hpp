#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "geoload/data.hpp"
#include "geoload/gcn.hpp"
#include "geoload/graph.hpp"
#include "geoload/trainer.hpp"

namespace geoload {

inline constexpr int kModelFormatVersion = 1;

/// Ordered names of the node and exogenous features this build produces.
std::vector<std::string> node_feature_names();
std::vector<std::string> exo_feature_names();
/// Hash over the feature names, lag depth and normalization scheme.
std::string feature_schema_hash();

/// Content hash of a dataset (locations, load and weather values).
std::string dataset_fingerprint(const Dataset& data);

/// A trained integrated model plus everything needed to reuse it safely.
struct ModelFile {
  IntegratedModel model;
  NeighborConfig graph;
  std::vector<Location> locations;
  SplitSpec split;
  TrainerConfig trainer;
  int best_epoch = 0;
  std::string config_hash;
  std::string data_fingerprint;
  std::string schema_hash = feature_schema_hash();
};

std::string model_to_json(const ModelFile& file);
/// Parse error on malformed JSON, compatibility error on a version or
/// schema mismatch, shape error when parameters do not fit the layers.
ModelFile model_from_json(const std::string& text);

void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

/// Compatibility error unless the dataset's locations match the model's
/// graph and the feature schema matches this build.
void check_compatibility(const ModelFile& file, const Dataset& data);

}  // namespace geoload
