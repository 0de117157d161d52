#include "climfuse/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "climfuse/simulate.hpp"

namespace climfuse {

namespace {

constexpr double kVarianceFloor = 1e-6;

double floored(double variance) { return 1.0 / std::max(variance, kVarianceFloor); }

std::string indexed(const std::string& base, int m) { return base + "[" + std::to_string(m) + "]"; }

}  // namespace

std::string toString(Mutation mutation) {
  return mutation == Mutation::HalveTauWRate ? "halve-tauw-rate" : "none";
}

Mutation parseMutation(const std::string& text) {
  if (text == "none") return Mutation::None;
  if (text == "halve-tauw-rate") return Mutation::HalveTauWRate;
  throw std::invalid_argument("unknown mutation '" + text + "' (expected none|halve-tauw-rate)");
}

void ChainConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (burnIn < 0 || burnIn >= iterations) throw std::invalid_argument("burn_in must satisfy 0 <= burn_in < iterations");
  if (thin < 1) throw std::invalid_argument("thin must be >= 1");
  if (!(mhInitialStep > 0.0)) throw std::invalid_argument("mh_initial_step must be positive");
  if (!(adaptTargetAcceptance > 0.0 && adaptTargetAcceptance < 1.0))
    throw std::invalid_argument("adapt_target must lie in (0, 1)");
  if (adaptWindow < 1) throw std::invalid_argument("adapt_window must be >= 1");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("kappa must be positive");
}

SamplerAbort::SamplerAbort(long iteration, std::string update, const std::string& detail)
    : std::runtime_error("factorization: iteration " + std::to_string(iteration) + ", update " +
                         update + ": " + detail),
      iteration_(iteration),
      update_(std::move(update)) {}

Eigen::Index ParameterTrace::width() const {
  Eigen::Index w = 1;
  for (auto d : shape) w *= d;
  return w;
}

bool ChainOutput::has(const std::string& name) const {
  return std::any_of(traces.begin(), traces.end(), [&](const auto& t) { return t.name == name; });
}

const ParameterTrace& ChainOutput::trace(const std::string& name) const {
  for (const auto& t : traces)
    if (t.name == name) return t;
  throw UnknownParameter("unknown parameter '" + name + "'");
}

Eigen::MatrixXd ChainOutput::matrix(const std::string& name) const {
  const auto& t = trace(name);
  const auto w = t.width();
  Eigen::MatrixXd out(draws, w);
  for (int k = 0; k < draws; ++k)
    for (Eigen::Index j = 0; j < w; ++j) out(k, j) = t.values[static_cast<std::size_t>(k * w + j)];
  return out;
}

Eigen::MatrixXd ChainOutput::matrixDraw(const std::string& name, int k) const {
  const auto& t = trace(name);
  if (t.shape.size() != 2) throw std::invalid_argument("parameter '" + name + "' is not a matrix");
  const auto w = t.width();
  return Eigen::Map<const Eigen::MatrixXd>(t.values.data() + static_cast<std::size_t>(k * w),
                                           t.shape[0], t.shape[1]);
}

const std::vector<std::string>& storedParameterNames() {
  static const std::vector<std::string> names = {
      "yH",   "yF",   "muH",   "muF",   "beta",  "V",     "tauH",  "tauF",    "gammaH",  "gammaF", "nuH",
      "nuF",  "tauW", "phiHa", "phiFa", "phiH",  "phiF",  "phiHm", "phiFm", "gammaHm", "gammaFm"};
  return names;
}

double getScalar(const HyperParams& p, ScalarParam which, int m) {
  switch (which) {
    case ScalarParam::TauW: return p.tauW;
    case ScalarParam::PhiHa: return p.phiHa;
    case ScalarParam::PhiFa: return p.phiFa;
    case ScalarParam::PhiH: return p.phiH;
    case ScalarParam::PhiF: return p.phiF;
    case ScalarParam::TauH: return p.tauH;
    case ScalarParam::TauF: return p.tauF;
    case ScalarParam::PhiHm: return p.phiHm[m];
    case ScalarParam::PhiFm: return p.phiFm[m];
    case ScalarParam::Beta: return p.beta;
    case ScalarParam::GammaH: return p.gammaH;
    case ScalarParam::GammaF: return p.gammaF;
    case ScalarParam::GammaHm: return p.gammaHm[m];
    case ScalarParam::GammaFm: return p.gammaFm[m];
    case ScalarParam::NuH: return p.nuH;
    case ScalarParam::NuF: return p.nuF;
  }
  return 0.0;
}

void setScalar(HyperParams& p, ScalarParam which, int m, double v) {
  switch (which) {
    case ScalarParam::TauW: p.tauW = v; break;
    case ScalarParam::PhiHa: p.phiHa = v; break;
    case ScalarParam::PhiFa: p.phiFa = v; break;
    case ScalarParam::PhiH: p.phiH = v; break;
    case ScalarParam::PhiF: p.phiF = v; break;
    case ScalarParam::TauH: p.tauH = v; break;
    case ScalarParam::TauF: p.tauF = v; break;
    case ScalarParam::PhiHm: p.phiHm[m] = v; break;
    case ScalarParam::PhiFm: p.phiFm[m] = v; break;
    case ScalarParam::Beta: p.beta = v; break;
    case ScalarParam::GammaH: p.gammaH = v; break;
    case ScalarParam::GammaF: p.gammaF = v; break;
    case ScalarParam::GammaHm: p.gammaHm[m] = v; break;
    case ScalarParam::GammaFm: p.gammaFm[m] = v; break;
    case ScalarParam::NuH: p.nuH = v; break;
    case ScalarParam::NuF: p.nuF = v; break;
  }
}

std::string scalarName(ScalarParam which, int m) {
  switch (which) {
    case ScalarParam::TauW: return "tauW";
    case ScalarParam::PhiHa: return "phiHa";
    case ScalarParam::PhiFa: return "phiFa";
    case ScalarParam::PhiH: return "phiH";
    case ScalarParam::PhiF: return "phiF";
    case ScalarParam::TauH: return "tauH";
    case ScalarParam::TauF: return "tauF";
    case ScalarParam::PhiHm: return indexed("phiHm", m);
    case ScalarParam::PhiFm: return indexed("phiFm", m);
    case ScalarParam::Beta: return "beta";
    case ScalarParam::GammaH: return "gammaH";
    case ScalarParam::GammaF: return "gammaF";
    case ScalarParam::GammaHm: return indexed("gammaHm", m);
    case ScalarParam::GammaFm: return indexed("gammaFm", m);
    case ScalarParam::NuH: return "nuH";
    case ScalarParam::NuF: return "nuF";
  }
  return "";
}

bool isMetropolis(ScalarParam which) {
  switch (which) {
    case ScalarParam::GammaH:
    case ScalarParam::GammaF:
    case ScalarParam::GammaHm:
    case ScalarParam::GammaFm:
    case ScalarParam::NuH:
    case ScalarParam::NuF: return true;
    default: return false;
  }
}

GibbsSampler::GibbsSampler(EnsembleDataset data, PriorConfig priors, ChainConfig config)
    : data_(std::move(data)), priors_(std::move(priors)), config_(config), rng_(config.seed) {
  config_.validate();
  data_.validate();
  priors_.validate(data_.models());
  auto [s, p] = initializeState(data_, config_, priors_);
  setState(std::move(s), std::move(p));
  initTracks();
}

GibbsSampler::GibbsSampler(EnsembleDataset data, PriorConfig priors, ChainConfig config,
                           LatentState state, HyperParams params)
    : data_(std::move(data)), priors_(std::move(priors)), config_(config), rng_(config.seed) {
  config_.validate();
  data_.validate();
  priors_.validate(data_.models());
  setState(std::move(state), std::move(params));
  initTracks();
}

void GibbsSampler::setData(EnsembleDataset data) {
  if (data.models() != data_.models() || data.sites() != data_.sites())
    throw std::invalid_argument("replacement data must keep the model and site counts");
  data_ = std::move(data);
}

void GibbsSampler::setState(LatentState state, HyperParams params) {
  state_ = std::move(state);
  params_ = std::move(params);
  const int M = params_.models();
  if (!usesModelDependence(config_.variant) || params_.V.size() == 0)
    params_.V = Eigen::MatrixXd::Identity(M, M);
  cov_ = buildVariantCovariances(params_, config_.variant, data_.grid);
}

void GibbsSampler::initTracks() {
  const double logStep = std::log(config_.mhInitialStep);
  std::vector<std::string> names = {"gammaH", "gammaF", "nuH", "nuF"};
  for (int m = 0; m < data_.models(); ++m) {
    names.push_back(indexed("gammaHm", m));
    names.push_back(indexed("gammaFm", m));
  }
  for (const auto& name : names) tracks_[name].logStep = logStep;
  tracks_["V"].logStep = 0.0;
}

GibbsSampler::MhTrack& GibbsSampler::track(const std::string& name) {
  auto it = tracks_.find(name);
  if (it == tracks_.end()) throw UnknownParameter("no Metropolis-Hastings parameter '" + name + "'");
  return it->second;
}

conditional::Context GibbsSampler::context() const {
  return conditional::Context{data_, priors_, config_.variant, cov_, config_.chiScheme};
}

template <class F>
void GibbsSampler::guarded(const char* update, F&& f) {
  try {
    f();
  } catch (const NotPositiveDefinite& e) {
    throw SamplerAbort(iteration_, update, e.what());
  }
}

void GibbsSampler::sweep() {
  ++iteration_;
  guarded("Y block", [&] { updateExpectedAndActual(); });
  guarded("chi block", [&] { updateModelMeans(); });
  guarded("xi block", [&] { updateConsensus(); });
  guarded("conjugate scales", [&] { updateConjugateScales(); });
  guarded("V", [&] { updateV(); });
  guarded("beta", [&] { updateBeta(); });
  guarded("ranges", [&] { updateRangesMH(); });
  guarded("shapes", [&] { updateShapesMH(); });
}

void GibbsSampler::drawGaussian(const conditional::Gaussian& g, Eigen::Ref<Eigen::VectorXd> out) {
  const FactoredMatrix f = factor(g.precision);
  out = sampleGaussianPrecision(g.b, f, rng_.normalVector(g.b.size()));
}

void GibbsSampler::updateExpectedAndActual() {
  const auto ctx = context();
  drawGaussian(conditional::yHCollapsed(ctx, state_, params_), state_.yH);
  {
    const auto g = conditional::yHa(ctx, state_, params_);
    state_.yHa = g.mean() + rng_.normalVector(g.b.size()).cwiseQuotient(g.precision.cwiseSqrt());
  }
  drawGaussian(conditional::yFCollapsed(ctx, state_, params_), state_.yF);
  {
    const auto g = conditional::yFa(ctx, state_, params_);
    state_.yFa = g.mean() + rng_.normalVector(g.b.size()).cwiseQuotient(g.precision.cwiseSqrt());
  }
}

void GibbsSampler::updateModelMeans() {
  const auto ctx = context();
  for (int m = 0; m < data_.models(); ++m) {
    drawGaussian(conditional::xF(ctx, state_, params_, m), state_.xF.col(m));
    drawGaussian(conditional::xH(ctx, state_, params_, m), state_.xH.col(m));
  }
}

void GibbsSampler::updateConsensus() {
  const auto ctx = context();
  drawGaussian(conditional::muF(ctx, state_, params_), state_.muF);
  drawGaussian(conditional::muH(ctx, state_, params_), state_.muH);
}

void GibbsSampler::updateConjugateScales() {
  for (auto which : {ScalarParam::TauW, ScalarParam::PhiHa, ScalarParam::PhiFa, ScalarParam::PhiH,
                     ScalarParam::PhiF, ScalarParam::TauH, ScalarParam::TauF})
    updateScalar(which);
  for (int m = 0; m < data_.models(); ++m) updateScalar(ScalarParam::PhiHm, m);
  for (int m = 0; m < data_.models(); ++m) updateScalar(ScalarParam::PhiFm, m);
}

void GibbsSampler::updateScalar(ScalarParam which, int m) {
  const auto ctx = context();
  auto gammaDraw = [&](const conditional::Gamma& g) { return rng_.gamma(g.shape, g.rate); };
  auto invGammaDraw = [&](const conditional::InverseGamma& g) {
    return 1.0 / rng_.gamma(g.shape, g.scale);
  };
  switch (which) {
    case ScalarParam::TauW: {
      auto g = conditional::tauW(ctx, state_, params_);
      if (config_.mutation == Mutation::HalveTauWRate) g.rate *= 0.5;
      params_.tauW = gammaDraw(g);
      break;
    }
    case ScalarParam::PhiHa: params_.phiHa = gammaDraw(conditional::phiHa(ctx, state_, params_)); break;
    case ScalarParam::PhiFa: params_.phiFa = gammaDraw(conditional::phiFa(ctx, state_, params_)); break;
    case ScalarParam::PhiH: params_.phiH = invGammaDraw(conditional::phiH(ctx, state_, params_)); break;
    case ScalarParam::PhiF: params_.phiF = invGammaDraw(conditional::phiF(ctx, state_, params_)); break;
    case ScalarParam::TauH: params_.tauH = gammaDraw(conditional::tauH(ctx, state_, params_)); break;
    case ScalarParam::TauF: params_.tauF = gammaDraw(conditional::tauF(ctx, state_, params_)); break;
    case ScalarParam::PhiHm:
      params_.phiHm[m] = gammaDraw(conditional::phiHm(ctx, state_, params_, m));
      break;
    case ScalarParam::PhiFm:
      params_.phiFm[m] = gammaDraw(conditional::phiFm(ctx, state_, params_, m));
      break;
    case ScalarParam::Beta: {
      const auto g = conditional::beta(ctx, state_, params_);
      params_.beta = g.mean() + std::sqrt(g.variance()) * rng_.normal();
      break;
    }
    case ScalarParam::GammaH:
    case ScalarParam::GammaF:
    case ScalarParam::GammaHm:
    case ScalarParam::GammaFm: updateRange(which, m); break;
    case ScalarParam::NuH:
    case ScalarParam::NuF: updateShape(which); break;
  }
}

void GibbsSampler::updateV() {
  const int M = data_.models();
  if (!usesModelDependence(config_.variant) || M < 2) return;
  const auto ctx = context();
  const auto iw = conditional::V(ctx, state_, params_);
  const Eigen::MatrixXd U = drawInverseWishart(iw.scale, iw.df, rng_);
  const Eigen::MatrixXd current = params_.V / params_.tauH;
  const double logRatio = conditional::logScaledDependenceWeight(ctx, state_, params_, U) -
                          conditional::logScaledDependenceWeight(ctx, state_, params_, current);
  if (metropolis("V", logRatio)) {
    const double r = params_.tauF / params_.tauH;
    params_.V = U / U(0, 0);
    params_.V(0, 0) = 1.0;
    params_.tauH = 1.0 / U(0, 0);
    params_.tauF = r / U(0, 0);
    setDependence(cov_, params_.V, config_.variant);
  }
}

void GibbsSampler::updateBeta() { updateScalar(ScalarParam::Beta); }

void GibbsSampler::updateRangesMH() {
  if (!usesSpatialCorrelation(config_.variant)) return;
  updateScalar(ScalarParam::GammaH);
  updateScalar(ScalarParam::GammaF);
  for (int m = 0; m < data_.models(); ++m) updateScalar(ScalarParam::GammaHm, m);
  for (int m = 0; m < data_.models(); ++m) updateScalar(ScalarParam::GammaFm, m);
}

void GibbsSampler::updateShapesMH() {
  updateScalar(ScalarParam::NuH);
  updateScalar(ScalarParam::NuF);
}

bool GibbsSampler::metropolis(const std::string& name, double logRatio) {
  auto& t = track(name);
  ++t.proposed;
  ++t.windowProposed;
  const bool accept = std::log(rng_.uniform()) < logRatio;
  if (accept) {
    ++t.accepted;
    ++t.windowAccepted;
  }
  return accept;
}

void GibbsSampler::updateRange(ScalarParam which, int m) {
  if (!usesSpatialCorrelation(config_.variant)) return;
  const std::string name = scalarName(which, m);
  const double step = std::exp(track(name).logStep);
  const double current = getScalar(params_, which, m);
  const double proposed = current * std::exp(step * rng_.normal());
  const auto ctx = context();
  const auto mi = static_cast<std::size_t>(m);

  auto target = [&](const SpatialFactor& sigma, double range) {
    switch (which) {
      case ScalarParam::GammaH: return conditional::logRangeTargetH(ctx, state_, params_, sigma, range);
      case ScalarParam::GammaF: return conditional::logRangeTargetF(ctx, state_, params_, sigma, range);
      case ScalarParam::GammaHm:
        return conditional::logRangeTargetHm(ctx, state_, params_, m, sigma, range);
      default: return conditional::logRangeTargetFm(ctx, state_, params_, m, sigma, range);
    }
  };
  SpatialFactor* slot = nullptr;
  switch (which) {
    case ScalarParam::GammaH: slot = &cov_.sigmaH; break;
    case ScalarParam::GammaF: slot = &cov_.sigmaF; break;
    case ScalarParam::GammaHm: slot = &cov_.sigmaHm[mi]; break;
    default: slot = &cov_.sigmaFm[mi]; break;
  }

  if (!priors_.rangeInSupport(proposed)) {
    metropolis(name, -std::numeric_limits<double>::infinity());
    return;
  }
  SpatialFactor candidate;
  try {
    candidate = SpatialFactor::whittle(data_.grid, proposed);
  } catch (const NotPositiveDefinite&) {
    metropolis(name, -std::numeric_limits<double>::infinity());
    return;
  }
  const double logRatio = target(candidate, proposed) - target(*slot, current) +
                          std::log(proposed) - std::log(current);
  if (metropolis(name, logRatio)) {
    setScalar(params_, which, m, proposed);
    *slot = std::move(candidate);
  }
}

void GibbsSampler::updateShape(ScalarParam which) {
  const std::string name = scalarName(which);
  const double step = std::exp(track(name).logStep);
  const double current = getScalar(params_, which);
  const double proposed = current * std::exp(step * rng_.normal());
  const auto ctx = context();
  auto target = [&](double nu) {
    return which == ScalarParam::NuH ? conditional::logShapeTargetH(ctx, params_, nu)
                                     : conditional::logShapeTargetF(ctx, params_, nu);
  };
  const double logRatio = target(proposed) - target(current) + std::log(proposed) - std::log(current);
  if (metropolis(name, logRatio)) setScalar(params_, which, 0, proposed);
}

void GibbsSampler::adapt() {
  for (auto& [name, t] : tracks_) {
    if (name == "V" || t.windowProposed == 0) continue;
    ++t.windows;
    const double rate = static_cast<double>(t.windowAccepted) / static_cast<double>(t.windowProposed);
    t.logStep += 2.0 * (rate - config_.adaptTargetAcceptance) / std::sqrt(static_cast<double>(t.windows));
    t.logStep = std::clamp(t.logStep, std::log(1e-4), std::log(10.0));
    t.windowAccepted = 0;
    t.windowProposed = 0;
  }
}

void GibbsSampler::resetAcceptance() {
  for (auto& [name, t] : tracks_) {
    t.accepted = t.proposed = 0;
    t.windowAccepted = t.windowProposed = 0;
  }
}

std::map<std::string, double> GibbsSampler::acceptanceRates() const {
  std::map<std::string, double> out;
  for (const auto& [name, t] : tracks_)
    if (t.proposed > 0) out[name] = static_cast<double>(t.accepted) / static_cast<double>(t.proposed);
  return out;
}

double GibbsSampler::stepSize(const std::string& name) const {
  auto it = tracks_.find(name);
  if (it == tracks_.end()) throw UnknownParameter("no Metropolis-Hastings parameter '" + name + "'");
  return std::exp(it->second.logStep);
}

void GibbsSampler::setStepSize(const std::string& name, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("step size must be positive");
  track(name).logStep = std::log(step);
}

std::pair<LatentState, HyperParams> initializeState(const EnsembleDataset& data,
                                                    const ChainConfig& config,
                                                    const PriorConfig& priors) {
  data.validate();
  const auto n = data.sites();
  const int M = data.models();
  LatentState s;
  HyperParams p;

  s.xH.resize(n, M);
  s.xF.resize(n, M);
  s.muH = Eigen::VectorXd::Zero(n);
  s.muF = Eigen::VectorXd::Zero(n);
  for (int m = 0; m < M; ++m) {
    const auto& h = data.runsH[static_cast<std::size_t>(m)];
    const auto& f = data.runsF[static_cast<std::size_t>(m)];
    Eigen::VectorXd sumH = Eigen::VectorXd::Zero(n), sumF = Eigen::VectorXd::Zero(n);
    for (const auto& r : h) sumH += r;
    for (const auto& r : f) sumF += r;
    s.muH += sumH;
    s.muF += sumF;
    s.xH.col(m) = sumH / static_cast<double>(h.size());
    s.xF.col(m) = sumF / static_cast<double>(f.size());
  }
  s.muH /= static_cast<double>(data.totalRunsH());
  s.muF /= static_cast<double>(data.totalRunsF());

  Eigen::VectorXd obsMean = Eigen::VectorXd::Zero(n);
  for (const auto& w : data.obs) obsMean += w;
  obsMean /= static_cast<double>(data.observationSets());
  s.yHa = obsMean;
  s.yH = obsMean;
  s.yF = s.muF + (s.yH - s.muH);
  s.yFa = s.yF;

  // pooled within-model precision from models with at least two runs
  auto within = [&](const std::vector<std::vector<Eigen::VectorXd>>& runs, const Eigen::MatrixXd& x,
                    const Eigen::VectorXd& center, int totalRuns, Eigen::VectorXd& perModel) {
    perModel.resize(M);
    double ss = 0.0, dof = 0.0;
    for (int m = 0; m < M; ++m) {
      const auto& rs = runs[static_cast<std::size_t>(m)];
      double ssm = 0.0;
      for (const auto& r : rs) ssm += (r - x.col(m)).squaredNorm();
      const double dofm = static_cast<double>(rs.size() - 1) * static_cast<double>(n);
      perModel[m] = dofm > 0 ? floored(ssm / dofm) : -1.0;
      ss += ssm;
      dof += dofm;
    }
    double pooled;
    if (dof > 0) {
      pooled = floored(ss / dof);
    } else {
      double ms = 0.0;
      for (int m = 0; m < M; ++m)
        for (const auto& r : runs[static_cast<std::size_t>(m)]) ms += (r - center).squaredNorm();
      pooled = floored(ms / (static_cast<double>(totalRuns) * static_cast<double>(n)));
    }
    for (int m = 0; m < M; ++m)
      if (perModel[m] < 0) perModel[m] = pooled;
    return pooled;
  };
  p.phiH = within(data.runsH, s.xH, s.muH, data.totalRunsH(), p.phiHm);
  p.phiF = within(data.runsF, s.xF, s.muF, data.totalRunsF(), p.phiFm);

  p.beta = 1.0;
  p.kappa = config.kappa;
  p.nuH = 10.0;
  p.nuF = 10.0;
  p.V = Eigen::MatrixXd::Identity(M, M);
  const double cells = static_cast<double>(n) * M;
  const Eigen::MatrixXd D = historicalDeviation(s);
  const Eigen::MatrixXd E = futureDeviation(s, p.beta);
  p.tauH = floored(D.squaredNorm() / cells);
  p.tauF = floored(E.squaredNorm() / cells);

  const int N = data.observationSets();
  double obsSS = 0.0;
  if (N >= 2) {
    for (const auto& w : data.obs) obsSS += (w - obsMean).squaredNorm();
    p.tauW = floored(obsSS / (static_cast<double>(N - 1) * static_cast<double>(n)));
  } else {
    p.tauW = floored((obsMean - s.muH).squaredNorm() / static_cast<double>(n));
  }
  p.phiHa = floored((obsMean - s.muH).squaredNorm() / static_cast<double>(n));
  p.phiFa = p.phiHa;

  double range = 0.5 * data.grid.diameter();
  if (!priors.rangeInSupport(range))
    range = priors.rangeLower > 0.0 ? std::min(priors.rangeUpper, 2.0 * priors.rangeLower)
                                    : std::min(priors.rangeUpper, 1.0);
  if (!priors.rangeInSupport(range)) range = 0.5 * (priors.rangeLower + priors.rangeUpper);
  p.gammaH = p.gammaF = range;
  p.gammaHm = Eigen::VectorXd::Constant(M, range);
  p.gammaFm = Eigen::VectorXd::Constant(M, range);
  return {std::move(s), std::move(p)};
}

namespace {

class Recorder {
 public:
  Recorder(ChainOutput& out, Eigen::Index n, Eigen::Index M, int draws) : out_(out) {
    const std::vector<Eigen::Index> scalar, field{n}, perModel{M}, matrix{M, M};
    for (const auto& name : storedParameterNames()) {
      ParameterTrace t;
      t.name = name;
      if (name == "yH" || name == "yF" || name == "muH" || name == "muF")
        t.shape = field;
      else if (name == "V")
        t.shape = matrix;
      else if (name == "phiHm" || name == "phiFm" || name == "gammaHm" || name == "gammaFm")
        t.shape = perModel;
      else
        t.shape = scalar;
      t.values.reserve(static_cast<std::size_t>(draws * t.width()));
      out_.traces.push_back(std::move(t));
    }
  }

  void record(const LatentState& s, const HyperParams& p) {
    auto it = out_.traces.begin();
    auto put = [&](const double* data, Eigen::Index size) {
      it->values.insert(it->values.end(), data, data + size);
      ++it;
    };
    auto putScalar = [&](double v) { put(&v, 1); };
    put(s.yH.data(), s.yH.size());
    put(s.yF.data(), s.yF.size());
    put(s.muH.data(), s.muH.size());
    put(s.muF.data(), s.muF.size());
    putScalar(p.beta);
    put(p.V.data(), p.V.size());
    for (double v : {p.tauH, p.tauF, p.gammaH, p.gammaF, p.nuH, p.nuF, p.tauW, p.phiHa, p.phiFa,
                     p.phiH, p.phiF})
      putScalar(v);
    put(p.phiHm.data(), p.phiHm.size());
    put(p.phiFm.data(), p.phiFm.size());
    put(p.gammaHm.data(), p.gammaHm.size());
    put(p.gammaFm.data(), p.gammaFm.size());
    ++out_.draws;
  }

 private:
  ChainOutput& out_;
};

}  // namespace

ChainOutput runChain(const EnsembleDataset& data, const ChainConfig& config,
                     const PriorConfig& priors) {
  const auto start = std::chrono::steady_clock::now();
  GibbsSampler sampler(data, priors, config);
  ChainOutput out;
  out.config = config;
  out.priors = priors;
  out.modelNames = data.modelNames;
  if (out.modelNames.empty())
    for (int m = 0; m < data.models(); ++m) out.modelNames.push_back("model" + std::to_string(m + 1));
  out.sites = data.grid.sites();
  out.metric = data.grid.metric();
  Recorder recorder(out, data.sites(), data.models(), config.storedDraws());

  for (int t = 0; t < config.iterations; ++t) {
    sampler.sweep();
    const int done = t + 1;
    if (done <= config.burnIn) {
      if (done % config.adaptWindow == 0) sampler.adapt();
      if (done == config.burnIn) sampler.resetAcceptance();
      continue;
    }
    if ((t - config.burnIn + 1) % config.thin == 0) recorder.record(sampler.state(), sampler.params());
  }
  out.acceptance = sampler.acceptanceRates();
  out.wallSeconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace climfuse
