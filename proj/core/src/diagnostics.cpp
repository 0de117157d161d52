#include "climfuse/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <regex>

#include "climfuse/simulate.hpp"

namespace climfuse {

EffectiveSampleSize effectiveSampleSize(const std::vector<double>& draws) {
  const std::size_t N = draws.size();
  if (N < 10) throw TooFewDraws("effective sample size needs at least 10 draws");
  double mean = 0.0;
  for (double v : draws) mean += v;
  mean /= static_cast<double>(N);
  std::vector<double> c(N);
  for (std::size_t t = 0; t < N; ++t) c[t] = draws[t] - mean;

  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < N; ++t) s += c[t] * c[t + lag];
    return s / static_cast<double>(N);
  };
  const double gamma0 = autocov(0);
  const double scale = std::max(std::abs(mean), 1.0);
  if (!(gamma0 > 1e-24 * scale * scale)) return {static_cast<double>(N), true};

  // sum of adjacent pairs while positive, kept monotone (initial monotone sequence)
  double tau = -gamma0;
  double previousPair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < N; ++k) {
    double pair = autocov(2 * k) + autocov(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, previousPair);
    previousPair = pair;
    tau += 2.0 * pair;
  }
  const double ess = static_cast<double>(N) * gamma0 / tau;
  return {std::min(ess, static_cast<double>(N)), false};
}

std::vector<GewekeMonitor> standardGewekeMonitors() {
  using P = const HyperParams&;
  using S = const LatentState&;
  return {
      {"beta", [](P p, S) { return p.beta; }},
      {"beta^2", [](P p, S) { return p.beta * p.beta; }},
      {"tauW", [](P p, S) { return p.tauW; }},
      {"tauH", [](P p, S) { return p.tauH; }},
      {"tauF", [](P p, S) { return p.tauF; }},
      {"phiH", [](P p, S) { return p.phiH; }},
      {"phiF", [](P p, S) { return p.phiF; }},
      {"phiHa", [](P p, S) { return p.phiHa; }},
      {"phiFa", [](P p, S) { return p.phiFa; }},
      {"phiHm[0]", [](P p, S) { return p.phiHm[0]; }},
      {"phiFm[last]", [](P p, S) { return p.phiFm[p.phiFm.size() - 1]; }},
      {"nuH", [](P p, S) { return p.nuH; }},
      {"nuF", [](P p, S) { return p.nuF; }},
      {"gammaH", [](P p, S) { return p.gammaH; }},
      {"gammaF", [](P p, S) { return p.gammaF; }},
      {"gammaHm[0]", [](P p, S) { return p.gammaHm[0]; }},
      {"gammaFm[last]", [](P p, S) { return p.gammaFm[p.gammaFm.size() - 1]; }},
      {"V[0,last]", [](P p, S) { return p.V(0, p.V.cols() - 1); }},
      {"V[last,last]", [](P p, S) { return p.V(p.V.rows() - 1, p.V.cols() - 1); }},
      {"muH[0]", [](P, S s) { return s.muH[0]; }},
      {"xH[0,last]", [](P, S s) { return s.xH(0, s.xH.cols() - 1); }},
      {"xF[last,0]", [](P, S s) { return s.xF(s.xF.rows() - 1, 0); }},
      {"yH[0]", [](P, S s) { return s.yH[0]; }},
      {"yF[0]", [](P, S s) { return s.yF[0]; }},
      {"yHa[last]", [](P, S s) { return s.yHa[s.yHa.size() - 1]; }},
  };
}

GewekeSetup GewekeSetup::standard() {
  GewekeSetup g;
  PriorConfig& pr = g.priors;
  pr.gaussianMeanVariance = 1.0;
  pr.betaVariance = 1.0;
  pr.tauH = {20.0, 10.0};
  pr.tauF = {20.0, 10.0};
  pr.tauW = {20.0, 10.0};
  pr.nuH = {40.0, 2.0};
  pr.nuF = {40.0, 2.0};
  pr.phiH = {20.0, 19.0};
  pr.phiF = {20.0, 19.0};
  pr.rangeLower = 0.2;
  pr.rangeUpper = 1.0;
  pr.d = 10;
  return g;
}

double GewekeReport::passFraction() const {
  if (statistics.empty()) return 0.0;
  const auto passing = std::count_if(statistics.begin(), statistics.end(),
                                     [](const auto& s) { return s.pass; });
  return static_cast<double>(passing) / static_cast<double>(statistics.size());
}

double GewekeReport::maxAbsZ() const {
  double z = 0.0;
  for (const auto& s : statistics) z = std::max(z, std::abs(s.z));
  return z;
}

bool GewekeReport::passed(double fraction, double hardLimit) const {
  return passFraction() >= fraction && maxAbsZ() < hardLimit;
}

JointDraw drawJoint(const GewekeSetup& setup, const Grid& grid, Rng& rng) {
  const int M = setup.models();
  JointDraw j;
  j.params = drawParamsFromPrior(setup.priors, M, setup.kappa, setup.variant, rng);
  const CovarianceBundle cov = buildVariantCovariances(j.params, setup.variant, grid);
  const double sd = std::sqrt(setup.priors.gaussianMeanVariance);
  const Eigen::VectorXd muH = sd * rng.normalVector(grid.size());
  const Eigen::VectorXd muF = sd * rng.normalVector(grid.size());
  j.state = drawLatentGivenConsensus(muH, muF, j.params, cov, rng);
  j.data = drawDataGivenLatent(grid, j.state, j.params, cov, setup.runsH, setup.runsF,
                               setup.observations, rng);
  return j;
}

namespace {

struct Moments {
  double mean = 0, sd = 0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m.mean) * (x - m.mean);
  m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return m;
}

}  // namespace

GewekeReport gewekeTest(const GewekeSetup& setup, const std::vector<GewekeMonitor>& monitors) {
  if (setup.rounds < 10) throw std::invalid_argument("getting-it-right test needs at least 10 rounds");
  if (setup.sweepsPerRound < 0) throw std::invalid_argument("sweeps per round must be >= 0");
  if (static_cast<int>(setup.runsF.size()) != setup.models())
    throw std::invalid_argument("run-count lists differ in length");
  const Grid grid = Grid::regular(setup.gridSide);
  const std::size_t K = monitors.size();
  const auto rounds = static_cast<std::size_t>(setup.rounds);
  std::vector<std::vector<double>> marginal(K, std::vector<double>(rounds));
  std::vector<std::vector<double>> successive(K, std::vector<double>(rounds));

  auto record = [&](std::vector<std::vector<double>>& into, std::size_t r, const HyperParams& p,
                    const LatentState& s) {
    for (std::size_t k = 0; k < K; ++k) into[k][r] = monitors[k].value(p, s);
  };

  {
    Rng rng(deriveSeed(setup.seed, 1));
    for (std::size_t r = 0; r < rounds; ++r) {
      const JointDraw j = drawJoint(setup, grid, rng);
      record(marginal, r, j.params, j.state);
    }
  }

  if (setup.sweepsPerRound == 0) {
    Rng rng(deriveSeed(setup.seed, 1));
    for (std::size_t r = 0; r < rounds; ++r) {
      const JointDraw j = drawJoint(setup, grid, rng);
      record(successive, r, j.params, j.state);
    }
  } else {
    Rng rng(deriveSeed(setup.seed, 2));
    JointDraw start = drawJoint(setup, grid, rng);
    ChainConfig config;
    config.iterations = 1;
    config.burnIn = 0;
    config.seed = deriveSeed(setup.seed, 3);
    config.variant = setup.variant;
    config.kappa = setup.kappa;
    config.chiScheme = setup.chiScheme;
    config.mutation = setup.mutation;
    config.mhInitialStep = setup.mhStep;
    GibbsSampler sampler(std::move(start.data), setup.priors, config, std::move(start.state),
                         std::move(start.params));
    for (std::size_t r = 0; r < rounds; ++r) {
      for (int s = 0; s < setup.sweepsPerRound; ++s) sampler.sweep();
      sampler.setData(drawDataGivenLatent(grid, sampler.state(), sampler.params(),
                                          sampler.covariances(), setup.runsH, setup.runsF,
                                          setup.observations, rng));
      record(successive, r, sampler.params(), sampler.state());
    }
  }

  GewekeReport report;
  report.rounds = setup.rounds;
  for (std::size_t k = 0; k < K; ++k) {
    GewekeStatistic st;
    st.name = monitors[k].name;
    const Moments a = moments(marginal[k]);
    const Moments b = moments(successive[k]);
    st.meanMarginal = a.mean;
    st.meanSuccessive = b.mean;
    st.sdMarginal = a.sd;
    st.sdSuccessive = b.sd;
    st.essSuccessive = effectiveSampleSize(successive[k]).value;
    const double se = std::sqrt(a.sd * a.sd / static_cast<double>(rounds) +
                                b.sd * b.sd / st.essSuccessive);
    const double diff = a.mean - b.mean;
    st.z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
    st.pass = std::abs(st.z) < 3.0;
    report.statistics.push_back(std::move(st));
  }
  return report;
}

std::vector<double> exportTrace(const ChainOutput& chain, const std::string& parameter) {
  static const std::regex element(R"(^([A-Za-z]+)\[(\d+)(?:,(\d+))?\]$)");
  std::smatch match;
  std::string base = parameter;
  Eigen::Index offset = 0;
  if (std::regex_match(parameter, match, element)) {
    base = match[1];
    if (!chain.has(base)) throw UnknownParameter("unknown parameter '" + parameter + "'");
    const auto& t = chain.trace(base);
    const auto i = static_cast<Eigen::Index>(std::stoll(match[2]));
    if (match[3].matched) {
      const auto j = static_cast<Eigen::Index>(std::stoll(match[3]));
      if (t.shape.size() != 2 || i >= t.shape[0] || j >= t.shape[1])
        throw UnknownParameter("index out of range in '" + parameter + "'");
      offset = i + j * t.shape[0];
    } else {
      if (t.shape.size() != 1 || i >= t.shape[0])
        throw UnknownParameter("index out of range in '" + parameter + "'");
      offset = i;
    }
  } else {
    if (!chain.has(base)) throw UnknownParameter("unknown parameter '" + parameter + "'");
    if (!chain.trace(base).shape.empty())
      throw UnknownParameter("parameter '" + parameter + "' is not scalar; name an element");
  }
  const auto& t = chain.trace(base);
  const auto w = t.width();
  std::vector<double> series(static_cast<std::size_t>(chain.draws));
  for (int k = 0; k < chain.draws; ++k)
    series[static_cast<std::size_t>(k)] = t.values[static_cast<std::size_t>(k * w + offset)];
  return series;
}

void writeTraceCsv(std::ostream& out, const ChainOutput& chain,
                   const std::vector<std::string>& parameters) {
  std::vector<std::vector<double>> columns;
  for (const auto& p : parameters) columns.push_back(exportTrace(chain, p));
  out << "draw";
  for (const auto& p : parameters) out << ",\"" << p << "\"";
  out << '\n';
  out.precision(17);
  for (int k = 0; k < chain.draws; ++k) {
    out << k;
    for (const auto& c : columns) out << ',' << c[static_cast<std::size_t>(k)];
    out << '\n';
  }
}

}  // namespace climfuse
