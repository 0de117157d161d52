#include "climfuse/simulate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace climfuse {

namespace {

double frac(double x) { return x - std::floor(x); }

// L z for the Cholesky factor of a spatial correlation (identity passes through).
Eigen::MatrixXd correlate(const SpatialFactor& f, const Eigen::MatrixXd& z) {
  if (f.identity) return z;
  return f.chol.lower() * z;
}

}  // namespace

void SimulationDesign::validate() const {
  if (gridSide < 1) throw std::invalid_argument("design grid side must be >= 1");
  const int M = models();
  if (M < 1) throw std::invalid_argument("design needs at least one model");
  if (static_cast<int>(runsF.size()) != M) throw std::invalid_argument("design run-count lists differ in length");
  for (int m = 0; m < M; ++m)
    if (runsH[static_cast<std::size_t>(m)] < 1 || runsF[static_cast<std::size_t>(m)] < 1)
      throw std::invalid_argument("design run counts must be >= 1");
  if (observations < 1) throw std::invalid_argument("design needs at least one observation set");
  const auto n = static_cast<Eigen::Index>(gridSide) * gridSide;
  if (muH.size() != n || muF.size() != n) throw std::invalid_argument("design consensus fields do not match the grid");
  if (truth.models() != M || truth.V.rows() != M) throw std::invalid_argument("design truth has the wrong model count");
  if (!modelNames.empty() && static_cast<int>(modelNames.size()) != M)
    throw std::invalid_argument("design model names do not match the model count");
  PriorConfig support;
  if (!inSupport(truth, support)) throw std::invalid_argument("design truth violates parameter constraints");
}

const std::vector<std::pair<std::string, int>>& cmip5RunCounts() {
  static const std::vector<std::pair<std::string, int>> table = {
      {"ACCESS1-0", 1},     {"ACCESS1-3", 1},      {"BNU-ESM", 1},        {"CCSM4", 6},
      {"CESM1-BGC", 1},     {"CESM1-CAM5", 3},     {"CMCC-CM", 1},        {"CMCC-CMS", 1},
      {"CNRM-CM5", 1},      {"CSIRO-Mk3-6-0", 10}, {"CanESM2", 5},        {"EC-EARTH", 4},
      {"FGOALS-g2", 1},     {"FIO-ESM", 3},        {"GFDL-CM3", 1},       {"GFDL-ESM2G", 1},
      {"GFDL-ESM2M", 1},    {"GISS-E2-H", 5},      {"GISS-E2-H-CC", 1},   {"GISS-E2-R", 5},
      {"GISS-E2-R-CC", 1},  {"HadGEM2-AO", 1},     {"HadGEM2-CC", 1},     {"HadGEM2-ES", 4},
      {"IPSL-CM5A-LR", 4},  {"IPSL-CM5A-MR", 1},   {"IPSL-CM5B-LR", 1},   {"MIROC-ESM", 1},
      {"MIROC-ESM-CHEM", 1}, {"MIROC5", 3},        {"MPI-ESM-LR", 3},     {"MPI-ESM-MR", 1},
      {"MRI-CGCM3", 1},     {"NorESM1-M", 1},      {"NorESM1-ME", 1},     {"bcc-csm1-1", 1},
      {"bcc-csm1-1-m", 1},  {"inmcm4", 1},
  };
  return table;
}

Eigen::VectorXd fixtureConsensusH(const Grid& grid) {
  Eigen::VectorXd mu(grid.size());
  const double pi = std::numbers::pi;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const auto& s = grid.sites()[static_cast<std::size_t>(i)];
    mu[i] = 2.0 * std::sin(pi * s.x) * std::cos(pi * s.y) + s.x + s.y;
  }
  return mu;
}

Eigen::VectorXd fixtureConsensusF(const Grid& grid) {
  Eigen::VectorXd mu = fixtureConsensusH(grid);
  const double pi = std::numbers::pi;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const auto& s = grid.sites()[static_cast<std::size_t>(i)];
    mu[i] += 2.0 + 1.5 * s.x * s.y + 0.5 * std::cos(2.0 * pi * s.x);
  }
  return mu;
}

Eigen::MatrixXd fixtureDependence(int models) {
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(models, models);
  // Cluster pattern repeats every 10 models.
  auto link = [&](std::initializer_list<int> members, double rho) {
    for (int a : members)
      for (int b : members)
        if (a != b && a < models && b < models) corr(a, b) = rho;
  };
  for (int base = 0; base < models; base += 10) {
    link({base, base + 1}, 0.9);
    link({base + 2, base + 3, base + 4}, 0.6);
    link({base + 5, base + 6}, 0.3);
  }
  Eigen::VectorXd scale(models);
  for (int m = 0; m < models; ++m) scale[m] = m == 0 ? 1.0 : 0.7 + 0.6 * frac(0.6180339887 * m);
  const Eigen::VectorXd root = scale.array().sqrt();
  return corr.cwiseProduct(root * root.transpose());
}

Eigen::VectorXd fixtureRanges(int models, double offset) {
  Eigen::VectorXd r(models);
  for (int m = 0; m < models; ++m) r[m] = 0.1 + 0.3 * frac(offset + 0.6180339887 * (m + 1));
  return r;
}

HyperParams paperTruth(int models) {
  HyperParams p;
  p.gammaH = 0.5;
  p.gammaF = 0.5;
  p.tauH = 1.5;
  p.tauF = 2.0;
  p.tauW = 2.0;
  p.beta = 2.0;
  p.phiH = 10.0;
  p.phiF = 10.0;
  p.nuH = 100.0;
  p.nuF = 100.0;
  p.phiHa = 10.0;
  p.phiFa = 10.0;
  p.kappa = 1.0;
  p.V = fixtureDependence(models);
  p.gammaHm = fixtureRanges(models, 0.0);
  p.gammaFm = fixtureRanges(models, 0.37);
  p.phiHm = Eigen::VectorXd::Constant(models, p.phiH);
  p.phiFm = Eigen::VectorXd::Constant(models, p.phiF);
  return p;
}

namespace {

SimulationDesign designWith(const std::string& name, int side, std::vector<std::string> names,
                            std::vector<int> runs, int observations) {
  SimulationDesign d;
  d.name = name;
  d.gridSide = side;
  d.modelNames = std::move(names);
  d.runsH = runs;
  d.runsF = std::move(runs);
  d.observations = observations;
  d.truth = paperTruth(d.models());
  const Grid grid = d.grid();
  d.muH = fixtureConsensusH(grid);
  d.muF = fixtureConsensusF(grid);
  return d;
}

std::vector<std::string> genericNames(int models) {
  std::vector<std::string> names;
  for (int m = 0; m < models; ++m) names.push_back("model" + std::to_string(m + 1));
  return names;
}

}  // namespace

SimulationDesign paperDesign() {
  return designWith("paper", 20, genericNames(38), std::vector<int>(38, 10), 5);
}

SimulationDesign cmip5SizedDesign() {
  std::vector<std::string> names;
  std::vector<int> runs;
  for (const auto& [name, r] : cmip5RunCounts()) {
    names.push_back(name);
    runs.push_back(r);
  }
  return designWith("cmip5", 20, std::move(names), std::move(runs), 2);
}

SimulationDesign deskDesign() {
  return designWith("desk", 8, genericNames(6), std::vector<int>(6, 3), 3);
}

SimulationDesign cmip5DeskDesign() {
  std::vector<std::string> names;
  std::vector<int> runs;
  for (std::size_t m = 0; m < 10; ++m) {
    names.push_back(cmip5RunCounts()[m].first);
    runs.push_back(cmip5RunCounts()[m].second);
  }
  return designWith("cmip5-desk", 8, std::move(names), std::move(runs), 2);
}

Eigen::MatrixXd drawInverseWishart(const Eigen::MatrixXd& scale, double df, Rng& rng) {
  const auto M = scale.rows();
  if (df <= static_cast<double>(M - 1)) throw std::invalid_argument("inverse Wishart df must exceed M - 1");
  // V'^{-1} ~ W(scale^{-1}, df) = L A A^T L^T with L L^T = scale^{-1}
  const FactoredMatrix fs = factor(scale);
  const Eigen::MatrixXd L = factor(fs.inverse()).lower();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
  for (Eigen::Index i = 0; i < M; ++i) {
    A(i, i) = std::sqrt(rng.chiSquared(df - static_cast<double>(i)));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  const Eigen::MatrixXd LA = L * A;
  const FactoredMatrix fw(LA, 0.0);
  return fw.inverse();
}

Eigen::MatrixXd drawNormalizedInverseWishart(const Eigen::MatrixXd& scale, double df, Rng& rng) {
  Eigen::MatrixXd v = drawInverseWishart(scale, df, rng);
  v /= v(0, 0);
  v(0, 0) = 1.0;
  return v;
}

HyperParams drawParamsFromPrior(const PriorConfig& priors, int models, double kappa,
                                ModelVariant variant, Rng& rng) {
  priors.validate(models);
  HyperParams p;
  p.kappa = kappa;
  p.tauH = rng.gamma(priors.tauH.shape, priors.tauH.rate);
  p.tauF = rng.gamma(priors.tauF.shape, priors.tauF.rate);
  p.tauW = rng.gamma(priors.tauW.shape, priors.tauW.rate);
  p.nuH = rng.gamma(priors.nuH.shape, priors.nuH.rate);
  p.nuF = rng.gamma(priors.nuF.shape, priors.nuF.rate);
  p.phiH = 1.0 / rng.gamma(priors.phiH.shape, priors.phiH.scale);
  p.phiF = 1.0 / rng.gamma(priors.phiF.shape, priors.phiF.scale);
  p.phiHa = rng.gamma(0.5 * p.nuH / kappa, 0.5 * p.nuH / (kappa * p.phiH));
  p.phiFa = rng.gamma(0.5 * p.nuF / kappa, 0.5 * p.nuF / (kappa * p.phiF));
  p.phiHm.resize(models);
  p.phiFm.resize(models);
  for (int m = 0; m < models; ++m) {
    p.phiHm[m] = rng.gamma(0.5 * p.nuH, 0.5 * p.nuH / p.phiH);
    p.phiFm[m] = rng.gamma(0.5 * p.nuF, 0.5 * p.nuF / p.phiF);
  }
  auto range = [&] {
    const double upper = priors.rangeUpper;
    return priors.rangeLower + (upper - priors.rangeLower) * (1.0 - rng.uniform());
  };
  p.gammaH = range();
  p.gammaF = range();
  p.gammaHm.resize(models);
  p.gammaFm.resize(models);
  for (int m = 0; m < models; ++m) {
    p.gammaHm[m] = range();
    p.gammaFm[m] = range();
  }
  p.beta = std::sqrt(priors.betaVariance) * rng.normal();
  if (usesModelDependence(variant) && models > 1) {
    const Eigen::MatrixXd scale = static_cast<double>(priors.d) * priors.vTildeFor(models);
    p.V = drawNormalizedInverseWishart(scale, models + priors.d + 1.0, rng);
  } else {
    p.V = Eigen::MatrixXd::Identity(models, models);
  }
  return p;
}

LatentState drawLatentGivenConsensus(const Eigen::VectorXd& muH, const Eigen::VectorXd& muF,
                                     const HyperParams& p, const CovarianceBundle& cov, Rng& rng) {
  const auto n = muH.size();
  const int M = p.models();
  const Eigen::MatrixXd LV = factor(cov.V).lower();
  LatentState s;
  s.muH = muH;
  s.muF = muF;
  // vec(D) ~ N(0, tau^{-1} V (x) Sigma)  <=>  D = tau^{-1/2} L_Sigma Z L_V^T
  const Eigen::MatrixXd D =
      correlate(cov.sigmaH, rng.normalMatrix(n, M)) * LV.transpose() / std::sqrt(p.tauH);
  const Eigen::MatrixXd E =
      correlate(cov.sigmaF, rng.normalMatrix(n, M)) * LV.transpose() / std::sqrt(p.tauF);
  s.xH = D.colwise() + muH;
  s.xF = (E + p.beta * D).colwise() + muF;

  const Eigen::VectorXd dy =
      std::sqrt(p.kappa / p.tauH) * correlate(cov.sigmaH, rng.normalVector(n));
  const Eigen::VectorXd ey =
      std::sqrt(p.kappa / p.tauF) * correlate(cov.sigmaF, rng.normalVector(n));
  s.yH = muH + dy;
  s.yF = muF + ey + p.beta * dy;
  s.yHa = s.yH + rng.normalVector(n) / std::sqrt(p.phiHa);
  s.yFa = s.yF + rng.normalVector(n) / std::sqrt(p.phiFa);
  return s;
}

EnsembleDataset drawDataGivenLatent(const Grid& grid, const LatentState& s, const HyperParams& p,
                                    const CovarianceBundle& cov, const std::vector<int>& runsH,
                                    const std::vector<int>& runsF, int observations, Rng& rng) {
  const auto n = grid.size();
  const int M = p.models();
  EnsembleDataset data;
  data.grid = grid;
  data.runsH.resize(static_cast<std::size_t>(M));
  data.runsF.resize(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    const auto mi = static_cast<std::size_t>(m);
    for (int r = 0; r < runsH[mi]; ++r)
      data.runsH[mi].push_back(s.xH.col(m) + correlate(cov.sigmaHm[mi], rng.normalVector(n)) /
                                                 std::sqrt(p.phiHm[m]));
    for (int r = 0; r < runsF[mi]; ++r)
      data.runsF[mi].push_back(s.xF.col(m) + correlate(cov.sigmaFm[mi], rng.normalVector(n)) /
                                                 std::sqrt(p.phiFm[m]));
  }
  for (int i = 0; i < observations; ++i)
    data.obs.push_back(s.yHa + rng.normalVector(n) / std::sqrt(p.tauW));
  return data;
}

SyntheticSample generate(const SimulationDesign& design) { return generate(design, design.seed); }

SyntheticSample generate(const SimulationDesign& design, std::uint64_t seed) {
  design.validate();
  Rng rng(seed);
  const Grid grid = design.grid();
  HyperParams p = design.truth;
  const int M = design.models();
  if (design.drawModelScales) {
    for (int m = 0; m < M; ++m) {
      p.phiHm[m] = rng.gamma(0.5 * p.nuH, 0.5 * p.nuH / p.phiH);
      p.phiFm[m] = rng.gamma(0.5 * p.nuF, 0.5 * p.nuF / p.phiF);
    }
  }
  const CovarianceBundle cov = buildVariantCovariances(p, ModelVariant::Full, grid);
  SyntheticSample out;
  out.truth = drawLatentGivenConsensus(design.muH, design.muF, p, cov, rng);
  out.data = drawDataGivenLatent(grid, out.truth, p, cov, design.runsH, design.runsF,
                                 design.observations, rng);
  out.data.modelNames = design.modelNames.empty() ? std::vector<std::string>{} : design.modelNames;
  if (out.data.modelNames.empty())
    for (int m = 0; m < M; ++m) out.data.modelNames.push_back("model" + std::to_string(m + 1));
  out.params = std::move(p);
  return out;
}

}  // namespace climfuse
