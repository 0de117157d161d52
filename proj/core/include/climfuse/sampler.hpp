#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "climfuse/conditionals.hpp"
#include "climfuse/model.hpp"
#include "climfuse/random.hpp"

namespace climfuse {

/// Deliberate sampler faults used to check that the validation suites notice.
enum class Mutation { None, HalveTauWRate };

std::string toString(Mutation mutation);  // none | halve-tauw-rate
Mutation parseMutation(const std::string& text);

struct ChainConfig {
  int iterations = 5000;
  int burnIn = 2000;
  int thin = 1;
  std::uint64_t seed = 1;
  double mhInitialStep = 0.5;  // log-scale random-walk sd for every MH parameter
  double adaptTargetAcceptance = 0.44;
  int adaptWindow = 50;
  ModelVariant variant = ModelVariant::Full;
  double kappa = 1.0;
  ChiScheme chiScheme = ChiScheme::FullConditional;
  Mutation mutation = Mutation::None;

  void validate() const;  // throws std::invalid_argument
  int storedDraws() const { return (iterations - burnIn) / thin; }
};

class UnknownParameter : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Factorization failure inside a sweep, tagged with where it happened.
class SamplerAbort : public std::runtime_error {
 public:
  SamplerAbort(long iteration, std::string update, const std::string& detail);
  long iteration() const { return iteration_; }
  const std::string& update() const { return update_; }

 private:
  long iteration_;
  std::string update_;
};

/// Stored draws of one named parameter, draw-major: values[k * width() + j].
struct ParameterTrace {
  std::string name;
  std::vector<Eigen::Index> shape;  // {} scalar, {n} vector, {M, M} matrix (column-major)
  std::vector<double> values;

  Eigen::Index width() const;
};

struct ChainOutput {
  ChainConfig config;
  PriorConfig priors;
  std::vector<std::string> modelNames;
  std::vector<Site> sites;
  DistanceMetric metric = DistanceMetric::Euclidean;
  std::vector<ParameterTrace> traces;
  int draws = 0;
  std::map<std::string, double> acceptance;  // post-burn-in acceptance per MH parameter
  double wallSeconds = 0.0;

  bool has(const std::string& name) const;
  const ParameterTrace& trace(const std::string& name) const;  // throws UnknownParameter
  /// draws x width matrix of one parameter.
  Eigen::MatrixXd matrix(const std::string& name) const;
  Eigen::MatrixXd matrixDraw(const std::string& name, int k) const;  // M x M draw k
};

/// Names of the traces runChain stores, in storage order.
const std::vector<std::string>& storedParameterNames();

/// Scalar coordinates of HyperParams that the sampler updates one at a time.
enum class ScalarParam {
  TauW, PhiHa, PhiFa, PhiH, PhiF, TauH, TauF, PhiHm, PhiFm, Beta,
  GammaH, GammaF, GammaHm, GammaFm, NuH, NuF
};

double getScalar(const HyperParams& params, ScalarParam which, int m = 0);
void setScalar(HyperParams& params, ScalarParam which, int m, double value);
std::string scalarName(ScalarParam which, int m = 0);
bool isMetropolis(ScalarParam which);

/// Mutable chain state plus every update of one sweep.
class GibbsSampler {
 public:
  GibbsSampler(EnsembleDataset data, PriorConfig priors, ChainConfig config);
  GibbsSampler(EnsembleDataset data, PriorConfig priors, ChainConfig config, LatentState state,
               HyperParams params);

  /// Replace the data (same shapes), e.g. when the getting-it-right test regenerates it.
  void setData(EnsembleDataset data);
  void setState(LatentState state, HyperParams params);

  /// One iteration in the fixed order: Y block, chi block, xi block, conjugate
  /// scales, V, beta, range MH, shape MH.
  void sweep();

  void updateExpectedAndActual();
  void updateModelMeans();
  void updateConsensus();
  void updateConjugateScales();
  void updateV();
  void updateBeta();
  void updateRangesMH();
  void updateShapesMH();
  void updateScalar(ScalarParam which, int m = 0);

  /// One Robbins-Monro step of every MH step size from the current window.
  void adapt();
  void resetAcceptance();
  std::map<std::string, double> acceptanceRates() const;
  double stepSize(const std::string& name) const;
  void setStepSize(const std::string& name, double step);

  const LatentState& state() const { return state_; }
  const HyperParams& params() const { return params_; }
  const CovarianceBundle& covariances() const { return cov_; }
  const EnsembleDataset& data() const { return data_; }
  const PriorConfig& priors() const { return priors_; }
  const ChainConfig& config() const { return config_; }
  conditional::Context context() const;
  Rng& rng() { return rng_; }
  long iteration() const { return iteration_; }

 private:
  struct MhTrack {
    double logStep = 0.0;
    long accepted = 0, proposed = 0;
    long windowAccepted = 0, windowProposed = 0;
    int windows = 0;
  };

  void initTracks();
  MhTrack& track(const std::string& name);
  bool metropolis(const std::string& name, double logRatio);
  void drawGaussian(const conditional::Gaussian& g, Eigen::Ref<Eigen::VectorXd> out);
  void updateRange(ScalarParam which, int m);
  void updateShape(ScalarParam which);
  template <class F>
  void guarded(const char* update, F&& f);

  EnsembleDataset data_;
  PriorConfig priors_;
  ChainConfig config_;
  LatentState state_;
  HyperParams params_;
  CovarianceBundle cov_;
  Rng rng_;
  std::map<std::string, MhTrack> tracks_;
  long iteration_ = 0;
};

/// Starting values: model means from run means, consensus from the overall
/// run mean, expected/actual climate from the observation mean, precisions
/// from inverse empirical variances (variance floored at 1e-6), ranges at
/// half the grid diameter, V = I, beta = 1, nu = 10.
std::pair<LatentState, HyperParams> initializeState(const EnsembleDataset& data,
                                                    const ChainConfig& config,
                                                    const PriorConfig& priors = {});

/// Runs the chain: adapts MH steps every adaptWindow iterations during
/// burn-in only and stores every thin-th post-burn-in state.
ChainOutput runChain(const EnsembleDataset& data, const ChainConfig& config,
                     const PriorConfig& priors);

}  // namespace climfuse
