#pragma once

#include <filesystem>
#include <string>

#include "hyperproj/clustering.hpp"
#include "hyperproj/projection.hpp"

namespace hyperproj {

// Model file layout: the magic bytes `HPRJ1`, a UTF-8 JSON header ending in a
// NUL byte, then k centroid rows, k row-major d x d matrices and, for affine
// models, k bias rows. All numbers are little-endian float64.
std::string serialize_model(const ProjectionModel& model);
ProjectionModel deserialize_model(const std::string& bytes);

void write_model(const ProjectionModel& model, const std::filesystem::path& path);
ProjectionModel read_model(const std::filesystem::path& path);

// Cluster models as JSON (centroids, inertia, trace).
std::string cluster_model_json(const ClusterModel& model);
ClusterModel parse_cluster_model_json(const std::string& text);

// Writes bytes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace hyperproj
