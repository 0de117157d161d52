#include "climfuse/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace climfuse {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

bool positiveFinite(double v) { return std::isfinite(v) && v > 0.0; }

std::string modelLabel(int m) { return "model " + std::to_string(m + 1); }

}  // namespace

std::string toString(ModelVariant variant) {
  switch (variant) {
    case ModelVariant::Full: return "full";
    case ModelVariant::NoModelDependence: return "no-v";
    case ModelVariant::NoSpatialMeans: return "no-spatial";
    case ModelVariant::Simplest: return "simplest";
  }
  return "full";
}

ModelVariant parseModelVariant(const std::string& text) {
  if (text == "full") return ModelVariant::Full;
  if (text == "no-v") return ModelVariant::NoModelDependence;
  if (text == "no-spatial") return ModelVariant::NoSpatialMeans;
  if (text == "simplest") return ModelVariant::Simplest;
  throw std::invalid_argument("unknown model variant '" + text +
                              "' (expected full|no-v|no-spatial|simplest)");
}

bool usesSpatialCorrelation(ModelVariant variant) {
  return variant == ModelVariant::Full || variant == ModelVariant::NoModelDependence;
}

bool usesModelDependence(ModelVariant variant) {
  return variant == ModelVariant::Full || variant == ModelVariant::NoSpatialMeans;
}

int EnsembleDataset::totalRunsH() const {
  int total = 0;
  for (const auto& runs : runsH) total += static_cast<int>(runs.size());
  return total;
}

int EnsembleDataset::totalRunsF() const {
  int total = 0;
  for (const auto& runs : runsF) total += static_cast<int>(runs.size());
  return total;
}

void EnsembleDataset::validate() const {
  const auto n = sites();
  if (n < 1) throw std::invalid_argument("dataset grid has no sites");
  if (runsH.empty()) throw std::invalid_argument("dataset needs at least one model");
  if (runsF.size() != runsH.size())
    throw std::invalid_argument("historical and future model counts differ");
  if (!modelNames.empty() && modelNames.size() != runsH.size())
    throw std::invalid_argument("model name count does not match model count");
  if (obs.empty()) throw std::invalid_argument("dataset needs at least one observation set");
  auto checkField = [n](const Eigen::VectorXd& v, const std::string& what) {
    if (v.size() != n)
      throw std::invalid_argument(what + " has " + std::to_string(v.size()) + " values, grid has " +
                                  std::to_string(n));
    if (!v.allFinite()) throw std::invalid_argument(what + " contains non-finite values");
  };
  for (int m = 0; m < models(); ++m) {
    const auto& h = runsH[static_cast<std::size_t>(m)];
    const auto& f = runsF[static_cast<std::size_t>(m)];
    if (h.empty()) throw std::invalid_argument(modelLabel(m) + " has no historical runs");
    if (f.empty()) throw std::invalid_argument(modelLabel(m) + " has no future runs");
    for (std::size_t r = 0; r < h.size(); ++r)
      checkField(h[r], modelLabel(m) + " historical run " + std::to_string(r + 1));
    for (std::size_t r = 0; r < f.size(); ++r)
      checkField(f[r], modelLabel(m) + " future run " + std::to_string(r + 1));
  }
  for (std::size_t i = 0; i < obs.size(); ++i)
    checkField(obs[i], "observation set " + std::to_string(i + 1));
}

bool LatentState::allFinite() const {
  return muH.allFinite() && muF.allFinite() && xH.allFinite() && xF.allFinite() &&
         yH.allFinite() && yF.allFinite() && yHa.allFinite() && yFa.allFinite();
}

Eigen::MatrixXd PriorConfig::vTildeFor(int models) const {
  if (vTilde.size() == 0) return Eigen::MatrixXd::Identity(models, models);
  return vTilde;
}

void PriorConfig::validate(int models) const {
  auto requirePositive = [](double v, const char* what) {
    if (!positiveFinite(v)) throw std::invalid_argument(std::string("prior ") + what + " must be positive");
  };
  requirePositive(gaussianMeanVariance, "gaussian mean variance");
  requirePositive(betaVariance, "beta variance");
  for (const auto* g : {&tauH, &tauF, &tauW, &nuH, &nuF}) {
    requirePositive(g->shape, "gamma shape");
    requirePositive(g->rate, "gamma rate");
  }
  for (const auto* g : {&phiH, &phiF}) {
    requirePositive(g->shape, "inverse-gamma shape");
    requirePositive(g->scale, "inverse-gamma scale");
  }
  if (!(rangeLower >= 0.0) || !(rangeUpper > rangeLower) || rangeUpper > kMaxRange)
    throw std::invalid_argument("prior range support must satisfy 0 <= lower < upper <= 1e6");
  if (d < 1) throw std::invalid_argument("prior degrees-of-freedom control d must be >= 1");
  const Eigen::MatrixXd vt = vTildeFor(models);
  if (vt.rows() != models || vt.cols() != models)
    throw std::invalid_argument("prior V tilde must be M x M");
  if (!vt.isApprox(vt.transpose(), 1e-12)) throw std::invalid_argument("prior V tilde must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(vt);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("prior V tilde must be positive definite");
}

SpatialFactor SpatialFactor::identityOf(Eigen::Index n) {
  SpatialFactor f;
  f.identity = true;
  f.n = n;
  f.logDet = 0.0;
  return f;
}

SpatialFactor SpatialFactor::whittle(const Grid& grid, double range) {
  return fromMatrix(buildCorrelation(grid, CorrelationSpec{range}));
}

SpatialFactor SpatialFactor::fromMatrix(const Eigen::MatrixXd& correlation) {
  SpatialFactor f;
  f.identity = false;
  f.n = correlation.rows();
  f.chol = factor(correlation);
  f.inverse = f.chol.inverse();
  f.logDet = climfuse::logDet(f.chol);
  return f;
}

Eigen::MatrixXd SpatialFactor::applyInverse(const Eigen::MatrixXd& x) const {
  if (identity) return x;
  return inverse * x;
}

Eigen::MatrixXd SpatialFactor::denseInverse() const {
  if (identity) return Eigen::MatrixXd::Identity(n, n);
  return inverse;
}

double SpatialFactor::quad(const Eigen::VectorXd& x) const {
  if (identity) return x.squaredNorm();
  return quadForm(chol, x);
}

double SpatialFactor::kroneckerQuad(const Eigen::MatrixXd& D, const Eigen::MatrixXd& P) const {
  return applyInverse(D).cwiseProduct(D * P).sum();
}

Eigen::MatrixXd SpatialFactor::crossQuad(const Eigen::MatrixXd& D) const {
  if (identity) return D.transpose() * D;
  const Eigen::MatrixXd w = chol.solveLower(D);
  return w.transpose() * w;
}

void setDependence(CovarianceBundle& bundle, const Eigen::MatrixXd& V, ModelVariant variant) {
  const auto M = V.rows();
  if (!usesModelDependence(variant)) {
    bundle.V = Eigen::MatrixXd::Identity(M, M);
    bundle.Vinv = bundle.V;
    bundle.logDetV = 0.0;
    return;
  }
  const FactoredMatrix fv = factor(V);
  bundle.V = V;
  bundle.Vinv = fv.inverse();
  bundle.logDetV = logDet(fv);
}

CovarianceBundle buildVariantCovariances(const HyperParams& params, ModelVariant variant,
                                         const Grid& grid) {
  const int M = params.models();
  const auto n = grid.size();
  CovarianceBundle b;
  const bool spatial = usesSpatialCorrelation(variant);
  auto make = [&](double range) {
    return spatial ? SpatialFactor::whittle(grid, range) : SpatialFactor::identityOf(n);
  };
  b.sigmaH = make(params.gammaH);
  b.sigmaF = make(params.gammaF);
  b.sigmaHm.reserve(static_cast<std::size_t>(M));
  b.sigmaFm.reserve(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    b.sigmaHm.push_back(make(params.gammaHm[m]));
    b.sigmaFm.push_back(make(params.gammaFm[m]));
  }
  const Eigen::MatrixXd V = params.V.size() ? params.V : Eigen::MatrixXd::Identity(M, M);
  setDependence(b, V, variant);
  return b;
}

Eigen::MatrixXd historicalDeviation(const LatentState& state) {
  return state.xH.colwise() - state.muH;
}

Eigen::MatrixXd futureDeviation(const LatentState& state, double beta) {
  Eigen::MatrixXd e = state.xF.colwise() - state.muF;
  e -= beta * historicalDeviation(state);
  return e;
}

double logGammaDensity(double x, double shape, double rate) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double logInverseGammaDensity(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double logNormalDensity(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(variance)) - 0.5 * r * r / variance;
}

double logDependencePrior(const Eigen::MatrixXd& V, const PriorConfig& priors) {
  const auto M = static_cast<int>(V.rows());
  if (M <= 1) return 0.0;
  const FactoredMatrix fv = factor(V);
  const double nu0 = M + priors.d + 1.0;
  const double t = (static_cast<double>(priors.d) * priors.vTildeFor(M) * fv.inverse()).trace();
  return -0.5 * (nu0 + M + 1.0) * logDet(fv) - 0.5 * M * nu0 * std::log(t);
}

bool inSupport(const HyperParams& p, const PriorConfig& priors) {
  for (double v : {p.tauH, p.tauF, p.tauW, p.nuH, p.nuF, p.phiH, p.phiF, p.phiHa, p.phiFa, p.kappa})
    if (!positiveFinite(v)) return false;
  if (!std::isfinite(p.beta)) return false;
  if (!priors.rangeInSupport(p.gammaH) || !priors.rangeInSupport(p.gammaF)) return false;
  const int M = p.models();
  if (p.phiFm.size() != M || p.gammaHm.size() != M || p.gammaFm.size() != M) return false;
  for (int m = 0; m < M; ++m) {
    if (!positiveFinite(p.phiHm[m]) || !positiveFinite(p.phiFm[m])) return false;
    if (!priors.rangeInSupport(p.gammaHm[m]) || !priors.rangeInSupport(p.gammaFm[m])) return false;
  }
  if (p.V.size()) {
    if (p.V.rows() != M || p.V.cols() != M || !p.V.allFinite()) return false;
    if (std::abs(p.V(0, 0) - 1.0) > 1e-12) return false;
  }
  return true;
}

double logJointDensity(const EnsembleDataset& data, const LatentState& state,
                       const HyperParams& params, ModelVariant variant,
                       const PriorConfig& priors) {
  if (!inSupport(params, priors)) return -std::numeric_limits<double>::infinity();
  return logJointDensity(data, state, params, variant, priors,
                         buildVariantCovariances(params, variant, data.grid));
}

double logJointDensity(const EnsembleDataset& data, const LatentState& s,
                       const HyperParams& p, ModelVariant variant,
                       const PriorConfig& priors, const CovarianceBundle& cov) {
  if (!inSupport(p, priors)) return -std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(data.sites());
  const int M = data.models();
  const double kappa = p.kappa;
  double total = 0.0;

  // Pr(X | chi, lambda): runs around their model means
  for (int m = 0; m < M; ++m) {
    const auto& sh = cov.sigmaHm[static_cast<std::size_t>(m)];
    for (const auto& run : data.runsH[static_cast<std::size_t>(m)]) {
      total += 0.5 * n * (std::log(p.phiHm[m]) - kLog2Pi) - 0.5 * sh.logDet -
               0.5 * p.phiHm[m] * sh.quad(run - s.xH.col(m));
    }
    const auto& sf = cov.sigmaFm[static_cast<std::size_t>(m)];
    for (const auto& run : data.runsF[static_cast<std::size_t>(m)]) {
      total += 0.5 * n * (std::log(p.phiFm[m]) - kLog2Pi) - 0.5 * sf.logDet -
               0.5 * p.phiFm[m] * sf.quad(run - s.xF.col(m));
    }
  }

  // Pr(W | Y, theta)
  for (const auto& w : data.obs)
    total += 0.5 * n * (std::log(p.tauW) - kLog2Pi) - 0.5 * p.tauW * (s.yHa - w).squaredNorm();

  // Pr(chi | theta, xi): vec(D) ~ N(0, tau^{-1} V (x) Sigma)
  const Eigen::MatrixXd D = historicalDeviation(s);
  const Eigen::MatrixXd E = futureDeviation(s, p.beta);
  const double Mn = M * n;
  total += 0.5 * Mn * (std::log(p.tauH) - kLog2Pi) - 0.5 * n * cov.logDetV -
           0.5 * M * cov.sigmaH.logDet - 0.5 * p.tauH * cov.sigmaH.kroneckerQuad(D, cov.Vinv);
  total += 0.5 * Mn * (std::log(p.tauF) - kLog2Pi) - 0.5 * n * cov.logDetV -
           0.5 * M * cov.sigmaF.logDet - 0.5 * p.tauF * cov.sigmaF.kroneckerQuad(E, cov.Vinv);

  // Pr(Y | xi, theta): expected climate with kappa-scaled covariance, then actual climate
  const Eigen::VectorXd dy = s.yH - s.muH;
  const Eigen::VectorXd ey = s.yF - s.muF - p.beta * dy;
  total += 0.5 * n * (std::log(p.tauH / kappa) - kLog2Pi) - 0.5 * cov.sigmaH.logDet -
           0.5 * p.tauH / kappa * cov.sigmaH.quad(dy);
  total += 0.5 * n * (std::log(p.tauF / kappa) - kLog2Pi) - 0.5 * cov.sigmaF.logDet -
           0.5 * p.tauF / kappa * cov.sigmaF.quad(ey);
  total += 0.5 * n * (std::log(p.phiHa) - kLog2Pi) - 0.5 * p.phiHa * (s.yHa - s.yH).squaredNorm();
  total += 0.5 * n * (std::log(p.phiFa) - kLog2Pi) - 0.5 * p.phiFa * (s.yFa - s.yF).squaredNorm();

  // Pr(xi)
  const double sm = priors.gaussianMeanVariance;
  total += -n * (kLog2Pi + std::log(sm)) - 0.5 * (s.muH.squaredNorm() + s.muF.squaredNorm()) / sm;

  // Pr(lambda | theta)
  for (int m = 0; m < M; ++m) {
    total += logGammaDensity(p.phiHm[m], 0.5 * p.nuH, 0.5 * p.nuH / p.phiH);
    total += logGammaDensity(p.phiFm[m], 0.5 * p.nuF, 0.5 * p.nuF / p.phiF);
  }

  // Pr(theta)
  total += logNormalDensity(p.beta, 0.0, priors.betaVariance);
  total += logGammaDensity(p.tauW, priors.tauW.shape, priors.tauW.rate);
  total += logGammaDensity(p.phiHa, 0.5 * p.nuH / kappa, 0.5 * p.nuH / (kappa * p.phiH));
  total += logGammaDensity(p.phiFa, 0.5 * p.nuF / kappa, 0.5 * p.nuF / (kappa * p.phiF));
  total += logInverseGammaDensity(p.phiH, priors.phiH.shape, priors.phiH.scale);
  total += logInverseGammaDensity(p.phiF, priors.phiF.shape, priors.phiF.scale);
  total += logGammaDensity(p.nuH, priors.nuH.shape, priors.nuH.rate);
  total += logGammaDensity(p.nuF, priors.nuF.shape, priors.nuF.rate);
  total += logGammaDensity(p.tauH, priors.tauH.shape, priors.tauH.rate);
  total += logGammaDensity(p.tauF, priors.tauF.shape, priors.tauF.rate);
  if (usesModelDependence(variant)) total += logDependencePrior(cov.V, priors);
  return total;
}

}  // namespace climfuse
