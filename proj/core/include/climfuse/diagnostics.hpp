#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "climfuse/conditionals.hpp"
#include "climfuse/model.hpp"
#include "climfuse/sampler.hpp"
#include "climfuse/summarize.hpp"

namespace climfuse {

struct EffectiveSampleSize {
  double value = 0.0;
  bool degenerateVariance = false;  // constant series; value is the draw count
};

/// Geyer initial-positive-sequence estimate, capped at the draw count.
/// Throws TooFewDraws below 10 draws.
EffectiveSampleSize effectiveSampleSize(const std::vector<double>& draws);

/// One monitored function of (parameters, latent state) for the getting-it-right test.
struct GewekeMonitor {
  std::string name;
  std::function<double(const HyperParams&, const LatentState&)> value;
};

/// The default monitor list (25 statistics).
std::vector<GewekeMonitor> standardGewekeMonitors();

struct GewekeSetup {
  int gridSide = 3;
  std::vector<int> runsH{2, 2}, runsF{2, 2};
  int observations = 2;
  PriorConfig priors;
  double kappa = 1.0;
  ModelVariant variant = ModelVariant::Full;
  ChiScheme chiScheme = ChiScheme::FullConditional;
  Mutation mutation = Mutation::None;
  int rounds = 10000;
  int sweepsPerRound = 1;  // 0 makes the two simulators identical
  double mhStep = 0.6;     // fixed log-scale steps; no adaptation
  std::uint64_t seed = 1;

  int models() const { return static_cast<int>(runsH.size()); }

  /// 3x3 grid, M = 2, two runs per model, two observation sets, and proper
  /// informative priors so every monitored moment exists.
  static GewekeSetup standard();
};

struct GewekeStatistic {
  std::string name;
  double meanMarginal = 0, meanSuccessive = 0;
  double sdMarginal = 0, sdSuccessive = 0;
  double essSuccessive = 0;
  double z = 0;
  bool pass = true;  // |z| < 3
};

struct GewekeReport {
  std::vector<GewekeStatistic> statistics;
  int rounds = 0;
  double passFraction() const;
  double maxAbsZ() const;
  /// At least `fraction` of the monitors have |z| < 3 and none reaches `hardLimit`.
  bool passed(double fraction = 0.95, double hardLimit = 5.0) const;
};

/// Marginal-conditional simulator (independent forward draws) against the
/// successive-conditional simulator (sweep, then regenerate data from the
/// current state). z uses the effective sample size of the successive series.
GewekeReport gewekeTest(const GewekeSetup& setup,
                        const std::vector<GewekeMonitor>& monitors = standardGewekeMonitors());

/// One forward draw of parameters, latent state and data from the priors.
struct JointDraw {
  HyperParams params;
  LatentState state;
  EnsembleDataset data;
};
JointDraw drawJoint(const GewekeSetup& setup, const Grid& grid, Rng& rng);

/// Post-burn-in series of one stored scalar. Accepts a trace name for scalar
/// traces or an element reference such as "yF[3]", "phiHm[0]" or "V[0,1]"
/// (0-based). Throws UnknownParameter.
std::vector<double> exportTrace(const ChainOutput& chain, const std::string& parameter);

/// CSV with a draw column followed by one column per requested parameter.
void writeTraceCsv(std::ostream& out, const ChainOutput& chain,
                   const std::vector<std::string>& parameters);

}  // namespace climfuse
