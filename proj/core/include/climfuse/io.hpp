#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "climfuse/model.hpp"
#include "climfuse/sampler.hpp"
#include "climfuse/simulate.hpp"

namespace climfuse {

/// Bad or inconsistent input files. what() starts with a category prefix
/// ("manifest:", "dimension:", "chain:", "field:").
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;

void writeGridCsv(const fs::path& path, const Grid& grid);
Grid readGridCsv(const fs::path& path, DistanceMetric metric = DistanceMetric::Euclidean);

/// `x,y,value`, one row per site in grid order.
void writeFieldCsv(const fs::path& path, const Grid& grid, const Eigen::VectorXd& values);
/// Reads a field and checks its sites against the grid (same order).
Eigen::VectorXd readFieldCsv(const fs::path& path, const Grid& grid);

struct ManifestModel {
  std::string name;
  std::vector<std::string> historical, future;
};

/// Paths are stored relative to the manifest's directory.
struct Manifest {
  std::string grid;
  DistanceMetric metric = DistanceMetric::Euclidean;
  std::vector<ManifestModel> models;
  std::vector<std::string> observations;
  std::optional<std::string> truth;  // JSON file with true fields and parameters

  std::size_t historicalRuns() const;
  std::size_t futureRuns() const;
};

Manifest readManifest(const fs::path& path);
void writeManifest(const fs::path& path, const Manifest& manifest);

/// Reads every referenced file. Missing or unreadable files raise
/// InputError("manifest: ..."), site mismatches InputError("dimension: ...").
EnsembleDataset loadDataset(const fs::path& manifestPath);

struct TruthRecord {
  LatentState state;
  HyperParams params;
};

/// Truth files written by writeSimulation, relative to the manifest.
TruthRecord loadTruth(const fs::path& manifestPath, const Grid& grid);

/// grid.csv, runs/, obs/, truth/ and manifest.json under `dir`.
void writeSimulation(const fs::path& dir, const SimulationDesign& design,
                     const SyntheticSample& sample);

/// Chain container: 8-byte magic "CFCHAIN1", little-endian uint64 header
/// length, JSON header, then draw-major little-endian float64 values in the
/// header's parameter order.
void writeChain(const fs::path& path, const ChainOutput& chain);
ChainOutput readChain(const fs::path& path);
std::string chainHeaderJson(const ChainOutput& chain);

}  // namespace climfuse
