#pragma once

#include <Eigen/Core>

#include "climfuse/model.hpp"

namespace climfuse {

/// How each model-mean column is conditioned on the other models.
///
///  - FullConditional: x_m given every other column (exact Gibbs step).
///  - PaperSequential: x_m given columns 1..m-1 only, as the sequential
///    scheme is usually written; not invariant for m < M.
enum class ChiScheme { FullConditional, PaperSequential };

std::string toString(ChiScheme scheme);  // full-conditional | paper-sequential
ChiScheme parseChiScheme(const std::string& text);

namespace conditional {

/// N(Q^{-1} b, Q^{-1})
struct Gaussian {
  Eigen::MatrixXd precision;
  Eigen::VectorXd b;
  Eigen::VectorXd mean() const;
};

/// N(b / q, 1 / q) with a diagonal precision q.
struct DiagonalGaussian {
  Eigen::VectorXd precision;
  Eigen::VectorXd b;
  Eigen::VectorXd mean() const { return b.cwiseQuotient(precision); }
  Gaussian dense() const;
};

struct Gamma {
  double shape = 1.0;
  double rate = 1.0;
};

struct InverseGamma {
  double shape = 1.0;
  double scale = 1.0;
};

struct Normal {
  double precision = 1.0;
  double b = 0.0;
  double mean() const { return b / precision; }
  double variance() const { return 1.0 / precision; }
};

struct InverseWishart {
  Eigen::MatrixXd scale;
  double df = 0.0;
};

/// Everything a conditional needs besides the state itself.
struct Context {
  const EnsembleDataset& data;
  const PriorConfig& priors;
  ModelVariant variant;
  const CovarianceBundle& cov;
  ChiScheme scheme = ChiScheme::FullConditional;
};

// Y block
DiagonalGaussian yFa(const Context& c, const LatentState& s, const HyperParams& p);
DiagonalGaussian yHa(const Context& c, const LatentState& s, const HyperParams& p);
Gaussian yF(const Context& c, const LatentState& s, const HyperParams& p);
Gaussian yH(const Context& c, const LatentState& s, const HyperParams& p);
/// y_F and y_H with their actual-climate partner integrated out. Drawing one of
/// these and then the partner given it is an exact joint draw of the pair.
Gaussian yFCollapsed(const Context& c, const LatentState& s, const HyperParams& p);
Gaussian yHCollapsed(const Context& c, const LatentState& s, const HyperParams& p);

// chi block, one model column at a time
Gaussian xF(const Context& c, const LatentState& s, const HyperParams& p, int m);
Gaussian xH(const Context& c, const LatentState& s, const HyperParams& p, int m);

// xi block
Gaussian muF(const Context& c, const LatentState& s, const HyperParams& p);
Gaussian muH(const Context& c, const LatentState& s, const HyperParams& p);

// conjugate scales
Gamma tauW(const Context& c, const LatentState& s, const HyperParams& p);
Gamma phiHa(const Context& c, const LatentState& s, const HyperParams& p);
Gamma phiFa(const Context& c, const LatentState& s, const HyperParams& p);
InverseGamma phiH(const Context& c, const LatentState& s, const HyperParams& p);
InverseGamma phiF(const Context& c, const LatentState& s, const HyperParams& p);
Gamma tauH(const Context& c, const LatentState& s, const HyperParams& p);
Gamma tauF(const Context& c, const LatentState& s, const HyperParams& p);
Gamma phiHm(const Context& c, const LatentState& s, const HyperParams& p, int m);
Gamma phiFm(const Context& c, const LatentState& s, const HyperParams& p, int m);

Normal beta(const Context& c, const LatentState& s, const HyperParams& p);

/// V is updated jointly with tau_H and tau_F at fixed r = tau_F / tau_H through
/// U = V / tau_H, so V = U / U(0,0), tau_H = 1 / U(0,0), tau_F = r / U(0,0).
/// Proposal: U ~ IW(d Vtilde + D^T Sigma_H^{-1} D + r E^T Sigma_F^{-1} E, 2n + M + d + 1),
/// which carries the chi-block likelihood exactly.
InverseWishart V(const Context& c, const LatentState& s, const HyperParams& p);

/// log(target / proposal) at U for the joint move; differences give the
/// independence Metropolis-Hastings ratio.
double logScaledDependenceWeight(const Context& c, const LatentState& s, const HyperParams& p,
                                 const Eigen::MatrixXd& U);

/// tau_H D^T Sigma_H^{-1} D + tau_F E^T Sigma_F^{-1} E
Eigen::MatrixXd dependenceResidual(const Context& c, const LatentState& s, const HyperParams& p);

// Unnormalized log conditionals for the Metropolis-Hastings parameters,
// evaluated at a candidate value with everything else held fixed.
// Return -infinity outside the prior support.
double logRangeTargetH(const Context& c, const LatentState& s, const HyperParams& p,
                       const SpatialFactor& sigma, double range);
double logRangeTargetF(const Context& c, const LatentState& s, const HyperParams& p,
                       const SpatialFactor& sigma, double range);
double logRangeTargetHm(const Context& c, const LatentState& s, const HyperParams& p, int m,
                        const SpatialFactor& sigma, double range);
double logRangeTargetFm(const Context& c, const LatentState& s, const HyperParams& p, int m,
                        const SpatialFactor& sigma, double range);
double logShapeTargetH(const Context& c, const HyperParams& p, double nu);
double logShapeTargetF(const Context& c, const HyperParams& p, double nu);

}  // namespace conditional
}  // namespace climfuse
