#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "climfuse/model.hpp"
#include "climfuse/random.hpp"

namespace climfuse {

/// A synthetic-data experiment: grid, ensemble shape and the true parameters.
///
/// truth.phiHm / truth.phiFm are redrawn from their Gamma laws on every
/// generation when drawModelScales is set; everything else in `truth` is fixed.
struct SimulationDesign {
  std::string name = "custom";
  int gridSide = 20;  // regular gridSide x gridSide grid on [0,1]^2
  std::vector<std::string> modelNames;
  std::vector<int> runsH, runsF;
  int observations = 5;
  HyperParams truth;
  Eigen::VectorXd muH, muF;  // fixed consensus fields
  bool drawModelScales = true;
  std::uint64_t seed = 1;

  int models() const { return static_cast<int>(runsH.size()); }
  Grid grid() const { return Grid::regular(gridSide); }
  void validate() const;
};

struct SyntheticSample {
  EnsembleDataset data;
  LatentState truth;
  HyperParams params;  // realized truth (with drawn phiHm / phiFm)
};

/// Forward generation from the full hierarchy using design.seed.
SyntheticSample generate(const SimulationDesign& design);
SyntheticSample generate(const SimulationDesign& design, std::uint64_t seed);

/// 20x20 grid, M = 38 with 10 + 10 runs, N = 5, listed true values.
SimulationDesign paperDesign();
/// M = 38 with the CMIP5 run counts (81 total) and N = 2 on the 20x20 grid.
SimulationDesign cmip5SizedDesign();
/// Desk-scale stand-in: 8x8 grid, M = 6, R = 3, N = 3.
SimulationDesign deskDesign();
/// Desk-scale CMIP5 profile: 8x8 grid, the first 10 CMIP5 models and their
/// run counts (7 of 10 single-run), N = 2.
SimulationDesign cmip5DeskDesign();

/// (model name, run count) in CMIP5 model-index order.
const std::vector<std::pair<std::string, int>>& cmip5RunCounts();

// Fixture fields: smooth, deterministic and synthetic.
Eigen::VectorXd fixtureConsensusH(const Grid& grid);
Eigen::VectorXd fixtureConsensusF(const Grid& grid);
/// Block-sparse dependence: a strongly correlated pair, a moderate triple,
/// a weak pair, the rest independent; V(0,0) = 1.
Eigen::MatrixXd fixtureDependence(int models);
/// Per-model ranges spread over [0.1, 0.4]; `offset` decorrelates H and F.
Eigen::VectorXd fixtureRanges(int models, double offset);
/// Reference true hyperparameters for M models (fixtures for V and ranges).
HyperParams paperTruth(int models);

// Building blocks shared with the getting-it-right test.

/// Hyperparameters drawn from the priors (phiHm | nu, phiH etc. follow the hierarchy).
HyperParams drawParamsFromPrior(const PriorConfig& priors, int models, double kappa,
                                ModelVariant variant, Rng& rng);

/// V'/V'(0,0) with V' ~ IW(scale, df).
Eigen::MatrixXd drawNormalizedInverseWishart(const Eigen::MatrixXd& scale, double df, Rng& rng);
/// V' ~ IW(scale, df) through the Bartlett decomposition of the Wishart inverse.
Eigen::MatrixXd drawInverseWishart(const Eigen::MatrixXd& scale, double df, Rng& rng);

/// Model means, expected and actual climate given consensus fields and params.
LatentState drawLatentGivenConsensus(const Eigen::VectorXd& muH, const Eigen::VectorXd& muF,
                                     const HyperParams& params, const CovarianceBundle& cov,
                                     Rng& rng);

/// Runs and observation sets given the latent state.
EnsembleDataset drawDataGivenLatent(const Grid& grid, const LatentState& state,
                                    const HyperParams& params, const CovarianceBundle& cov,
                                    const std::vector<int>& runsH, const std::vector<int>& runsF,
                                    int observations, Rng& rng);

}  // namespace climfuse
