#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "climfuse/covariance.hpp"

namespace climfuse {

/// Which parts of the hierarchy are kept at inference time.
///
///  - Full: Whittle spatial noise everywhere and inter-model dependence V.
///  - NoModelDependence: V replaced by the identity.
///  - NoSpatialMeans: white-noise runs and non-spatial model means (V kept).
///  - Simplest: white noise everywhere and V = identity.
enum class ModelVariant { Full, NoModelDependence, NoSpatialMeans, Simplest };

std::string toString(ModelVariant variant);  // full | no-v | no-spatial | simplest
ModelVariant parseModelVariant(const std::string& text);
bool usesSpatialCorrelation(ModelVariant variant);
bool usesModelDependence(ModelVariant variant);

/// All model runs and observation sets on one grid.
struct EnsembleDataset {
  Grid grid;
  std::vector<std::string> modelNames;
  std::vector<std::vector<Eigen::VectorXd>> runsH;  // [model][run], each length n
  std::vector<std::vector<Eigen::VectorXd>> runsF;
  std::vector<Eigen::VectorXd> obs;                 // [N], each length n

  Eigen::Index sites() const { return grid.size(); }
  int models() const { return static_cast<int>(runsH.size()); }
  int observationSets() const { return static_cast<int>(obs.size()); }
  int totalRunsH() const;
  int totalRunsF() const;

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;
};

/// Latent fields; model means are stored column-per-model (n x M).
struct LatentState {
  Eigen::VectorXd muH, muF;
  Eigen::MatrixXd xH, xF;
  Eigen::VectorXd yH, yF;
  Eigen::VectorXd yHa, yFa;

  bool allFinite() const;
};

/// Every hyperparameter of the hierarchy. kappa is a fixed constant.
struct HyperParams {
  double beta = 0.0;
  double tauH = 1.0, tauF = 1.0;
  double gammaH = 1.0, gammaF = 1.0;
  Eigen::MatrixXd V;  // M x M, V(0,0) == 1
  Eigen::VectorXd phiHm, phiFm;
  Eigen::VectorXd gammaHm, gammaFm;
  double nuH = 1.0, nuF = 1.0;
  double phiH = 1.0, phiF = 1.0;
  double phiHa = 1.0, phiFa = 1.0;
  double tauW = 1.0;
  double kappa = 1.0;

  int models() const { return static_cast<int>(phiHm.size()); }
};

struct GammaPrior {
  double shape = 1e-3;
  double rate = 1e-3;
};

struct InverseGammaPrior {
  double shape = 1e-3;
  double scale = 1e-3;
};

/// Prior hyperconstants. Defaults are the vague choices used for the
/// synthetic and application studies.
struct PriorConfig {
  double gaussianMeanVariance = 1e6;  // mu_H(s), mu_F(s)
  double betaVariance = 1e6;
  GammaPrior tauH, tauF, tauW, nuH, nuF;
  InverseGammaPrior phiH, phiF;
  double rangeLower = 0.0;
  double rangeUpper = kMaxRange;
  Eigen::MatrixXd vTilde;  // empty means identity of size M
  int d = 1;

  Eigen::MatrixXd vTildeFor(int models) const;
  bool rangeInSupport(double range) const { return range > rangeLower && range <= rangeUpper; }
  void validate(int models) const;
};

/// Cached factorization of one spatial correlation matrix (or the identity).
struct SpatialFactor {
  bool identity = true;
  Eigen::Index n = 0;
  FactoredMatrix chol;
  Eigen::MatrixXd inverse;  // empty when identity
  double logDet = 0.0;

  static SpatialFactor identityOf(Eigen::Index n);
  static SpatialFactor whittle(const Grid& grid, double range);
  static SpatialFactor fromMatrix(const Eigen::MatrixXd& correlation);

  Eigen::MatrixXd applyInverse(const Eigen::MatrixXd& x) const;
  /// Dense inverse (identity materialized when needed).
  Eigen::MatrixXd denseInverse() const;
  double quad(const Eigen::VectorXd& x) const;
  /// trace(Sigma^{-1} D P D^T) for D n x M and P M x M.
  double kroneckerQuad(const Eigen::MatrixXd& D, const Eigen::MatrixXd& P) const;
  /// D^T Sigma^{-1} D
  Eigen::MatrixXd crossQuad(const Eigen::MatrixXd& D) const;
};

/// Sigma_H, Sigma_F, Sigma_Hm, Sigma_Fm and V^{-1} for a variant.
struct CovarianceBundle {
  SpatialFactor sigmaH, sigmaF;
  std::vector<SpatialFactor> sigmaHm, sigmaFm;
  Eigen::MatrixXd V;     // identity when the variant drops dependence
  Eigen::MatrixXd Vinv;
  double logDetV = 0.0;
};

CovarianceBundle buildVariantCovariances(const HyperParams& params, ModelVariant variant,
                                         const Grid& grid);

/// Refresh only the V-dependent members.
void setDependence(CovarianceBundle& bundle, const Eigen::MatrixXd& V, ModelVariant variant);

/// D = X_H - mu_H 1^T
Eigen::MatrixXd historicalDeviation(const LatentState& state);
/// E = X_F - mu_F 1^T - beta D
Eigen::MatrixXd futureDeviation(const LatentState& state, double beta);

/// Log normalized-inverse-Wishart prior density of V (up to a constant in V):
/// the law of V'/V'(0,0) for V' ~ IW(d Vtilde, M + d + 1).
double logDependencePrior(const Eigen::MatrixXd& V, const PriorConfig& priors);

/// True when every hyperparameter lies inside its prior support.
bool inSupport(const HyperParams& params, const PriorConfig& priors);

/// Log joint density of data, latent states and parameters.
///
/// All terms that depend on a sampled quantity are kept, including Gaussian
/// log-determinants, Gamma normalizers and the 2*pi terms, so differences are
/// exact log-posterior ratios. Dropped constants: the uniform range-prior
/// normalizer and the normalizing constant of the V prior. Returns -infinity
/// when a parameter is outside its prior support.
double logJointDensity(const EnsembleDataset& data, const LatentState& state,
                       const HyperParams& params, ModelVariant variant,
                       const PriorConfig& priors);

double logJointDensity(const EnsembleDataset& data, const LatentState& state,
                       const HyperParams& params, ModelVariant variant,
                       const PriorConfig& priors, const CovarianceBundle& covariances);

double logGammaDensity(double x, double shape, double rate);
double logInverseGammaDensity(double x, double shape, double scale);
double logNormalDensity(double x, double mean, double variance);

}  // namespace climfuse
