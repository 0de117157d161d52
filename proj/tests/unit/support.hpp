#pragma once

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>

#include <Eigen/Core>

#include "climfuse/sampler.hpp"

namespace testing {

inline std::filesystem::path scratchDir(const std::string& name) {
  const char* env = std::getenv("CLIMFUSE_TEST_TMP");
  const std::filesystem::path root =
      env ? std::filesystem::path(env) : std::filesystem::temp_directory_path() / "climfuse_tests";
  const auto dir = root / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Eigen::MatrixXd randomSpd(int n, unsigned seed) {
  std::srand(seed);
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(n, n);
  return a * a.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

inline double relErr(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

using FixtureValue = std::function<double(const std::string& name, int draw, Eigen::Index element)>;

// A chain with every stored parameter on a side x side grid; values come from `value`,
// except V which is the identity unless `value` is asked for it.
inline climfuse::ChainOutput fixtureChain(int draws, int side, int models, const FixtureValue& value) {
  using namespace climfuse;
  ChainOutput out;
  out.config.iterations = draws + 1;
  out.config.burnIn = 1;
  const Grid grid = Grid::regular(side);
  out.sites = grid.sites();
  for (int m = 0; m < models; ++m) out.modelNames.push_back("model" + std::to_string(m + 1));
  out.draws = draws;
  const Eigen::Index n = grid.size();
  for (const auto& name : storedParameterNames()) {
    ParameterTrace t;
    t.name = name;
    if (name == "yH" || name == "yF" || name == "muH" || name == "muF")
      t.shape = {n};
    else if (name == "V")
      t.shape = {models, models};
    else if (name == "phiHm" || name == "phiFm" || name == "gammaHm" || name == "gammaFm")
      t.shape = {models};
    const Eigen::Index w = t.width();
    for (int k = 0; k < draws; ++k)
      for (Eigen::Index j = 0; j < w; ++j) t.values.push_back(value(name, k, j));
    out.traces.push_back(std::move(t));
  }
  out.acceptance["gammaH"] = 0.4;
  return out;
}

inline double identityV(Eigen::Index element, int models) { return element % (models + 1) == 0 ? 1.0 : 0.0; }

}  // namespace testing
