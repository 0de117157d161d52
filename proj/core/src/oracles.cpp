#include "climfuse/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "climfuse/conditionals.hpp"
#include "climfuse/simulate.hpp"

namespace climfuse {

bool OracleReport::passed() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

void OracleReport::append(const OracleReport& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

OracleInstance oracleInstance(std::uint64_t seed, ModelVariant variant) {
  SimulationDesign design;
  design.name = "oracle";
  design.gridSide = 2;
  design.runsH = {2, 1, 2};
  design.runsF = {1, 2, 2};
  design.observations = 2;
  design.truth = paperTruth(3);
  design.truth.nuH = design.truth.nuF = 20.0;
  design.truth.phiH = design.truth.phiF = 4.0;
  const Grid grid = design.grid();
  design.muH = fixtureConsensusH(grid);
  design.muF = fixtureConsensusF(grid);
  design.seed = seed;
  SyntheticSample sample = generate(design);
  OracleInstance inst;
  inst.data = std::move(sample.data);
  inst.state = std::move(sample.truth);
  inst.params = std::move(sample.params);
  inst.variant = variant;
  if (!usesModelDependence(variant)) inst.params.V = Eigen::MatrixXd::Identity(3, 3);
  return inst;
}

double GridDensity::transform(double x) const { return logScale ? std::log(x) : x; }

double GridDensity::cdfAt(double u) const {
  if (u <= support.front()) return 0.0;
  if (u >= support.back()) return 1.0;
  const auto it = std::upper_bound(support.begin(), support.end(), u);
  const auto i = static_cast<std::size_t>(it - support.begin());
  const double t = (u - support[i - 1]) / (support[i] - support[i - 1]);
  return cdf[i - 1] + t * (cdf[i] - cdf[i - 1]);
}

double GridDensity::inverseCdf(double p) const {
  if (p <= 0.0) return support.front();
  if (p >= 1.0) return support.back();
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), p);
  const auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - cdf.begin(), 1));
  const double span = cdf[i] - cdf[i - 1];
  const double t = span > 0.0 ? (p - cdf[i - 1]) / span : 0.0;
  return support[i - 1] + t * (support[i] - support[i - 1]);
}

namespace {

bool rangeParam(ScalarParam which) {
  return which == ScalarParam::GammaH || which == ScalarParam::GammaF ||
         which == ScalarParam::GammaHm || which == ScalarParam::GammaFm;
}

}  // namespace

GridDensity gridConditional(const OracleInstance& inst, ScalarParam which, int m,
                            const std::vector<double>& hint, int points) {
  GridDensity g;
  g.logScale = which != ScalarParam::Beta;
  const CovarianceBundle fixedCov = buildVariantCovariances(inst.params, inst.variant, inst.data.grid);
  HyperParams p = inst.params;
  auto logDensity = [&](double u) {
    const double x = g.logScale ? std::exp(u) : u;
    setScalar(p, which, m, x);
    double value;
    if (rangeParam(which)) {
      if (!inst.priors.rangeInSupport(x)) return -std::numeric_limits<double>::infinity();
      try {
        value = logJointDensity(inst.data, inst.state, p, inst.variant, inst.priors);
      } catch (const NotPositiveDefinite&) {
        return -std::numeric_limits<double>::infinity();
      }
    } else {
      value = logJointDensity(inst.data, inst.state, p, inst.variant, inst.priors, fixedCov);
    }
    return value + (g.logScale ? u : 0.0);
  };

  std::vector<double> u;
  for (double h : hint) u.push_back(g.transform(h));
  std::sort(u.begin(), u.end());
  const double center = u[u.size() / 2];
  double spread = (u[u.size() * 9 / 10] - u[u.size() / 10]) / 2.56;
  spread = std::max(spread, 1e-3);

  double peak = logDensity(center);
  auto walk = [&](double direction) {
    double x = center;
    double step = 0.25 * spread;
    for (int i = 0; i < 4000; ++i) {
      const double next = x + direction * step;
      const double f = logDensity(next);
      x = next;
      if (!std::isfinite(f)) break;
      peak = std::max(peak, f);
      if (f < peak - 40.0) break;
      step *= 1.05;
    }
    return x;
  };
  const double lo = walk(-1.0);
  const double hi = walk(1.0);

  g.support.resize(static_cast<std::size_t>(points));
  std::vector<double> logf(static_cast<std::size_t>(points));
  double fmax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1.0);
    g.support[static_cast<std::size_t>(i)] = x;
    logf[static_cast<std::size_t>(i)] = logDensity(x);
    fmax = std::max(fmax, logf[static_cast<std::size_t>(i)]);
  }
  g.cdf.assign(static_cast<std::size_t>(points), 0.0);
  for (int i = 1; i < points; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double a = std::exp(logf[k - 1] - fmax);
    const double b = std::exp(logf[k] - fmax);
    g.cdf[k] = g.cdf[k - 1] + 0.5 * (a + b) * (g.support[k] - g.support[k - 1]);
  }
  const double total = g.cdf.back();
  for (double& c : g.cdf) c /= total;
  return g;
}

double ksDistance(const GridDensity& grid, std::vector<double> draws) {
  for (double& d : draws) d = grid.transform(d);
  std::sort(draws.begin(), draws.end());
  const double N = static_cast<double>(draws.size());
  double D = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double F = grid.cdfAt(draws[i]);
    D = std::max({D, std::abs(F - static_cast<double>(i + 1) / N), std::abs(F - static_cast<double>(i) / N)});
  }
  return D;
}

double tvDistance(const GridDensity& grid, const std::vector<double>& draws, int bins) {
  std::vector<double> edges;
  for (int b = 1; b < bins; ++b) edges.push_back(grid.inverseCdf(static_cast<double>(b) / bins));
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double d : draws) {
    const double u = grid.transform(d);
    const auto b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), u) - edges.begin());
    counts[b] += 1.0;
  }
  double tv = 0.0;
  for (double c : counts) tv += std::abs(c / static_cast<double>(draws.size()) - 1.0 / bins);
  return 0.5 * tv;
}

std::vector<double> conditionalDraws(const OracleInstance& inst, ScalarParam which, int m,
                                     int draws, std::uint64_t seed, int burnIn) {
  ChainConfig cfg;
  cfg.iterations = 1;
  cfg.burnIn = 0;
  cfg.seed = seed;
  cfg.variant = inst.variant;
  cfg.mhInitialStep = 1.0;
  GibbsSampler sampler(inst.data, inst.priors, cfg, inst.state, inst.params);
  if (isMetropolis(which)) {
    for (int t = 1; t <= burnIn; ++t) {
      sampler.updateScalar(which, m);
      if (t % cfg.adaptWindow == 0) sampler.adapt();
    }
    sampler.resetAcceptance();
  }
  std::vector<double> out(static_cast<std::size_t>(draws));
  for (int k = 0; k < draws; ++k) {
    sampler.updateScalar(which, m);
    out[static_cast<std::size_t>(k)] = getScalar(sampler.params(), which, m);
  }
  return out;
}

OracleCheck scalarConditionalCheck(const OracleInstance& inst, ScalarParam which, int m, int draws,
                                   std::uint64_t seed) {
  const std::vector<double> sample = conditionalDraws(inst, which, m, draws, seed);
  const GridDensity grid = gridConditional(inst, which, m, sample);
  OracleCheck c;
  c.name = "conditional " + scalarName(which, m);
  if (isMetropolis(which)) {
    c.metric = "tv";
    c.threshold = 0.05;
    c.value = tvDistance(grid, sample);
  } else {
    c.metric = "ks";
    c.threshold = 0.02;
    c.value = ksDistance(grid, sample);
  }
  c.pass = c.value < c.threshold;
  return c;
}

OracleReport scalarConditionalBattery(std::uint64_t seed, int conjugateDraws, int mhDraws) {
  const OracleInstance inst = oracleInstance(seed);
  const int last = inst.data.models() - 1;
  const std::vector<std::pair<ScalarParam, int>> targets = {
      {ScalarParam::TauW, 0},    {ScalarParam::PhiHa, 0},   {ScalarParam::PhiFa, 0},
      {ScalarParam::PhiH, 0},    {ScalarParam::PhiF, 0},    {ScalarParam::TauH, 0},
      {ScalarParam::TauF, 0},    {ScalarParam::PhiHm, 0},   {ScalarParam::PhiHm, last},
      {ScalarParam::PhiFm, 0},   {ScalarParam::PhiFm, last}, {ScalarParam::Beta, 0},
      {ScalarParam::GammaH, 0},  {ScalarParam::GammaF, 0},  {ScalarParam::GammaHm, 0},
      {ScalarParam::GammaFm, last}, {ScalarParam::NuH, 0},  {ScalarParam::NuF, 0},
  };
  OracleReport report;
  std::uint64_t stream = 100;
  for (const auto& [which, m] : targets) {
    const int draws = isMetropolis(which) ? mhDraws : conjugateDraws;
    report.checks.push_back(scalarConditionalCheck(inst, which, m, draws, deriveSeed(seed, stream++)));
  }
  return report;
}

namespace {

struct Block {
  std::string name;
  std::function<Eigen::VectorXd(const LatentState&, const HyperParams&)> get;
  std::function<void(LatentState&, HyperParams&, const Eigen::VectorXd&)> set;
  std::function<conditional::Gaussian(const conditional::Context&, const LatentState&,
                                      const HyperParams&)>
      conditional;
};

std::vector<Block> gaussianBlocks(int models) {
  using S = LatentState;
  using P = HyperParams;
  using V = Eigen::VectorXd;
  using C = conditional::Context;
  std::vector<Block> blocks = {
      {"yHa", [](const S& s, const P&) { return s.yHa; }, [](S& s, P&, const V& x) { s.yHa = x; },
       [](const C& c, const S& s, const P& p) { return conditional::yHa(c, s, p).dense(); }},
      {"yFa", [](const S& s, const P&) { return s.yFa; }, [](S& s, P&, const V& x) { s.yFa = x; },
       [](const C& c, const S& s, const P& p) { return conditional::yFa(c, s, p).dense(); }},
      {"yH", [](const S& s, const P&) { return s.yH; }, [](S& s, P&, const V& x) { s.yH = x; },
       [](const C& c, const S& s, const P& p) { return conditional::yH(c, s, p); }},
      {"yF", [](const S& s, const P&) { return s.yF; }, [](S& s, P&, const V& x) { s.yF = x; },
       [](const C& c, const S& s, const P& p) { return conditional::yF(c, s, p); }},
      {"muH", [](const S& s, const P&) { return s.muH; }, [](S& s, P&, const V& x) { s.muH = x; },
       [](const C& c, const S& s, const P& p) { return conditional::muH(c, s, p); }},
      {"muF", [](const S& s, const P&) { return s.muF; }, [](S& s, P&, const V& x) { s.muF = x; },
       [](const C& c, const S& s, const P& p) { return conditional::muF(c, s, p); }},
      {"beta", [](const S&, const P& p) { return V::Constant(1, p.beta); },
       [](S&, P& p, const V& x) { p.beta = x[0]; },
       [](const C& c, const S& s, const P& p) {
         const auto nb = conditional::beta(c, s, p);
         return conditional::Gaussian{Eigen::MatrixXd::Constant(1, 1, nb.precision), V::Constant(1, nb.b)};
       }},
  };
  for (int m = 0; m < models; ++m) {
    blocks.push_back({"xH[" + std::to_string(m) + "]",
                      [m](const S& s, const P&) { return V(s.xH.col(m)); },
                      [m](S& s, P&, const V& x) { s.xH.col(m) = x; },
                      [m](const C& c, const S& s, const P& p) { return conditional::xH(c, s, p, m); }});
    blocks.push_back({"xF[" + std::to_string(m) + "]",
                      [m](const S& s, const P&) { return V(s.xF.col(m)); },
                      [m](S& s, P&, const V& x) { s.xF.col(m) = x; },
                      [m](const C& c, const S& s, const P& p) { return conditional::xF(c, s, p, m); }});
  }
  return blocks;
}

double relativeError(const Eigen::MatrixXd& numeric, const Eigen::MatrixXd& analytic) {
  const double scale = std::max(analytic.cwiseAbs().maxCoeff(), 1.0);
  return (numeric - analytic).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

OracleReport gaussianBlockChecks(std::uint64_t seed, int points, ModelVariant variant) {
  const OracleInstance inst = oracleInstance(seed, variant);
  const auto blocks = gaussianBlocks(inst.data.models());
  Rng rng(deriveSeed(seed, 77));
  std::vector<double> gradErr(blocks.size(), 0.0), hessErr(blocks.size(), 0.0);
  constexpr double h = 0.05;

  for (int point = 0; point < points; ++point) {
    LatentState s = inst.state;
    HyperParams p = inst.params;
    auto jitter = [&](Eigen::Ref<Eigen::MatrixXd> x) {
      x += 0.5 * rng.normalMatrix(x.rows(), x.cols());
    };
    for (auto* v : {&s.muH, &s.muF, &s.yH, &s.yF, &s.yHa, &s.yFa}) jitter(*v);
    jitter(s.xH);
    jitter(s.xF);
    p.beta += 0.5 * rng.normal();
    const CovarianceBundle cov = buildVariantCovariances(p, variant, inst.data.grid);
    const conditional::Context ctx{inst.data, inst.priors, variant, cov, ChiScheme::FullConditional};

    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
      const Block& b = blocks[bi];
      const conditional::Gaussian g = b.conditional(ctx, s, p);
      const Eigen::VectorXd x0 = b.get(s, p);
      const auto n = x0.size();
      auto f = [&](const Eigen::VectorXd& x) {
        LatentState st = s;
        HyperParams pt = p;
        b.set(st, pt, x);
        return logJointDensity(inst.data, st, pt, variant, inst.priors, cov);
      };
      auto shifted = [&](Eigen::Index i, double di, Eigen::Index j, double dj) {
        Eigen::VectorXd x = x0;
        x[i] += di;
        x[j] += dj;
        return f(x);
      };
      const double f0 = f(x0);
      Eigen::VectorXd grad(n);
      Eigen::MatrixXd hess(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double fp = shifted(i, h, i, 0.0);
        const double fm = shifted(i, -h, i, 0.0);
        grad[i] = (fp - fm) / (2.0 * h);
        hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
        for (Eigen::Index j = 0; j < i; ++j) {
          const double v = (shifted(i, h, j, h) - shifted(i, h, j, -h) - shifted(i, -h, j, h) +
                            shifted(i, -h, j, -h)) /
                           (4.0 * h * h);
          hess(i, j) = hess(j, i) = v;
        }
      }
      const Eigen::VectorXd analyticGrad = g.b - g.precision * x0;
      gradErr[bi] = std::max(gradErr[bi], relativeError(grad, analyticGrad));
      hessErr[bi] = std::max(hessErr[bi], relativeError(hess, -g.precision));
    }
  }

  OracleReport report;
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const std::string tag = " " + blocks[bi].name + " (" + toString(variant) + ")";
    report.checks.push_back({"block mean" + tag, "gradient", gradErr[bi], 1e-6, gradErr[bi] < 1e-6});
    report.checks.push_back({"block precision" + tag, "hessian", hessErr[bi], 1e-6, hessErr[bi] < 1e-6});
  }
  return report;
}

OracleReport runOracleSuite(std::uint64_t seed) {
  OracleReport report = gaussianBlockChecks(seed, 3, ModelVariant::Full);
  report.append(gaussianBlockChecks(seed, 3, ModelVariant::Simplest));
  report.append(scalarConditionalBattery(seed));
  return report;
}

}  // namespace climfuse
