#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "climfuse/model.hpp"
#include "climfuse/sampler.hpp"

namespace climfuse {

struct OracleCheck {
  std::string name;
  std::string metric;  // ks | tv | gradient | hessian
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct OracleReport {
  std::vector<OracleCheck> checks;
  bool passed() const;
  void append(const OracleReport& other);
};

/// A small generated problem (2x2 grid, M = 3, uneven run counts, N = 2)
/// with vague default priors, used by every oracle check.
struct OracleInstance {
  EnsembleDataset data;
  LatentState state;
  HyperParams params;
  PriorConfig priors;
  ModelVariant variant = ModelVariant::Full;
};

OracleInstance oracleInstance(std::uint64_t seed, ModelVariant variant = ModelVariant::Full);

/// Normalized density of one scalar on a fine grid, from exp(logJointDensity)
/// with everything else fixed. Positive parameters are gridded in log space
/// (Jacobian included); `support` holds the transformed grid.
struct GridDensity {
  std::vector<double> support;
  std::vector<double> cdf;
  bool logScale = true;
  double transform(double x) const;
  double cdfAt(double u) const;     // u on the transformed scale
  double inverseCdf(double p) const;  // transformed scale
};

GridDensity gridConditional(const OracleInstance& instance, ScalarParam which, int m,
                            const std::vector<double>& hint, int points = 20001);

/// Kolmogorov-Smirnov distance between draws and a grid CDF.
double ksDistance(const GridDensity& grid, std::vector<double> draws);
/// Total variation over `bins` equal-probability bins of the grid law.
double tvDistance(const GridDensity& grid, const std::vector<double>& draws, int bins = 20);

/// Draws of one scalar from the sampler's own update with everything else fixed.
/// MH parameters adapt for `burnIn` updates first, then the step is frozen.
std::vector<double> conditionalDraws(const OracleInstance& instance, ScalarParam which, int m,
                                     int draws, std::uint64_t seed, int burnIn = 5000);

OracleCheck scalarConditionalCheck(const OracleInstance& instance, ScalarParam which, int m,
                                   int draws, std::uint64_t seed);

/// KS < 0.02 (10^4 draws) for every conjugate scalar and beta; TV < 0.05
/// (10^5 draws) for every MH scalar.
OracleReport scalarConditionalBattery(std::uint64_t seed, int conjugateDraws = 10000,
                                      int mhDraws = 100000);

/// Mean and precision of every Gaussian block against central finite
/// differences of logJointDensity at `points` random states (relative < 1e-6).
OracleReport gaussianBlockChecks(std::uint64_t seed, int points = 3,
                                 ModelVariant variant = ModelVariant::Full);

OracleReport runOracleSuite(std::uint64_t seed);

}  // namespace climfuse
