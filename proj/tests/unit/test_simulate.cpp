#include <doctest.h>

#include <cmath>
#include <numeric>

#include "climfuse/diagnostics.hpp"
#include "climfuse/simulate.hpp"
#include "support.hpp"

using namespace climfuse;

namespace {

SimulationDesign tiny(int side, int models, int runs, int observations) {
  SimulationDesign d;
  d.gridSide = side;
  d.runsH.assign(static_cast<std::size_t>(models), runs);
  d.runsF.assign(static_cast<std::size_t>(models), runs);
  for (int m = 0; m < models; ++m) d.modelNames.push_back("m" + std::to_string(m));
  d.observations = observations;
  d.truth = paperTruth(models);
  const Grid g = d.grid();
  d.muH = fixtureConsensusH(g);
  d.muF = fixtureConsensusF(g);
  return d;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("paper design") {
  const SimulationDesign d = paperDesign();
  CHECK(d.grid().size() == 400);
  CHECK(d.models() == 38);
  CHECK(d.truth.beta == 2.0);
  CHECK(d.observations == 5);
  CHECK(d.truth.gammaH == 0.5);
  CHECK(d.truth.gammaF == 0.5);
  CHECK(d.truth.tauH == 1.5);
  CHECK(d.truth.tauF == 2.0);
  CHECK(d.truth.tauW == 2.0);
  CHECK(d.truth.phiH == 10.0);
  CHECK(d.truth.phiF == 10.0);
  CHECK(d.truth.nuH == 100.0);
  CHECK(d.truth.nuF == 100.0);
  CHECK(d.truth.phiHa == 10.0);
  CHECK(d.truth.phiFa == 10.0);
  CHECK(d.truth.kappa == 1.0);
  for (int r : d.runsH) CHECK(r == 10);
  for (int r : d.runsF) CHECK(r == 10);
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("CMIP5-sized design") {
  const auto& counts = cmip5RunCounts();
  REQUIRE(counts.size() == 38);
  CHECK(counts[0].first == "ACCESS1-0");
  CHECK(counts[0].second == 1);
  CHECK(counts[9].first == "CSIRO-Mk3-6-0");
  CHECK(counts[9].second == 10);
  int total = 0;
  for (const auto& [name, runs] : counts) {
    total += runs;
    if (name == "CCSM4") CHECK(runs == 6);
  }
  CHECK(total == 81);

  const SimulationDesign d = cmip5SizedDesign();
  CHECK(d.models() == 38);
  CHECK(d.observations == 2);
  CHECK(std::accumulate(d.runsH.begin(), d.runsH.end(), 0) == 81);
  CHECK(d.grid().size() == 400);

  const SimulationDesign desk = cmip5DeskDesign();
  CHECK(desk.models() == 10);
  CHECK(desk.observations == 2);
  CHECK(std::count(desk.runsH.begin(), desk.runsH.end(), 1) == 7);
  CHECK(desk.gridSide == 8);
}

TEST_CASE("desk design") {
  const SimulationDesign d = deskDesign();
  CHECK(d.gridSide == 8);
  CHECK(d.models() == 6);
  CHECK(d.observations == 3);
  for (int r : d.runsH) CHECK(r == 3);
  const SyntheticSample s = generate(d);
  CHECK(s.data.sites() == 64);
  CHECK(s.data.totalRunsH() == 18);
  CHECK(s.truth.allFinite());
  CHECK_NOTHROW(s.data.validate());
}

TEST_CASE("fixtures") {
  for (int M : {1, 2, 6, 10, 38}) {
    const Eigen::MatrixXd V = fixtureDependence(M);
    CHECK(V(0, 0) == 1.0);
    CHECK((V - V.transpose()).norm() == 0.0);
    CHECK_NOTHROW(factor(V));
    const Eigen::VectorXd r = fixtureRanges(M, 0.0);
    CHECK(r.minCoeff() >= 0.1);
    CHECK(r.maxCoeff() <= 0.4);
  }
  const Grid g = Grid::regular(5);
  CHECK(fixtureConsensusH(g).size() == 25);
  CHECK(fixtureConsensusH(g) == fixtureConsensusH(g));
}

TEST_CASE("generation is deterministic given the seed") {
  const SimulationDesign d = tiny(3, 2, 2, 2);
  const SyntheticSample a = generate(d, 11), b = generate(d, 11), c = generate(d, 12);
  CHECK(a.truth.yF == b.truth.yF);
  CHECK(a.data.runsH[1][1] == b.data.runsH[1][1]);
  CHECK(a.data.obs[0] == b.data.obs[0]);
  CHECK(a.params.phiHm == b.params.phiHm);
  CHECK(a.truth.yF != c.truth.yF);
}

TEST_CASE("vanishing observation noise reproduces the actual climate") {
  SimulationDesign d = tiny(3, 2, 1, 3);
  d.truth.tauW = 1e12;
  const SyntheticSample s = generate(d, 4);
  for (const auto& w : s.data.obs) CHECK((w - s.truth.yHa).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("beta = 0 decouples future and historical expected climate") {
  SimulationDesign d = tiny(2, 1, 1, 1);
  d.truth.beta = 0.0;
  std::vector<double> a, b;
  for (int r = 0; r < 200; ++r) {
    const SyntheticSample s = generate(d, 1000u + static_cast<unsigned>(r));
    a.push_back(s.truth.yF(0) - s.truth.muF(0));
    b.push_back(s.truth.yH(0) - s.truth.muH(0));
  }
  const double rho = correlation(a, b);
  CHECK(rho > -0.15);
  CHECK(rho < 0.15);
}

TEST_CASE("model-mean covariance follows the Whittle kernel") {
  SimulationDesign d = tiny(3, 1, 1, 1);
  d.truth.gammaH = 0.5;
  d.truth.tauH = 1.5;
  REQUIRE(d.grid().distance(0, 1) == doctest::Approx(0.5));
  const int reps = 10000;
  std::vector<double> a(reps), b(reps);
  for (int r = 0; r < reps; ++r) {
    const SyntheticSample s = generate(d, 50000u + static_cast<unsigned>(r));
    a[static_cast<std::size_t>(r)] = s.truth.xH(0, 0) - s.truth.muH(0);
    b[static_cast<std::size_t>(r)] = s.truth.xH(1, 0) - s.truth.muH(1);
  }
  double cov = 0, va = 0, vb = 0;
  for (int r = 0; r < reps; ++r) {
    cov += a[r] * b[r];
    va += a[r] * a[r];
    vb += b[r] * b[r];
  }
  cov /= reps;
  va /= reps;
  vb /= reps;
  const double expected = besselK1(1.0) / 1.5;
  CHECK(std::abs(expected - 0.4013) < 1e-4);
  const double se = std::sqrt((va * vb + cov * cov) / reps);
  CHECK(std::abs(cov - expected) < 4 * se);
}

TEST_CASE("multi-model mean scatter around the consensus matches the model variance") {
  SimulationDesign d = tiny(4, 4, 2, 1);
  d.drawModelScales = false;
  const SyntheticSample first = generate(d, 1);
  const HyperParams& p = first.params;
  const int M = d.models();
  const double R = 2.0;
  const double between = p.V.sum() / (p.tauH * M * M);
  double within = 0.0;
  for (int m = 0; m < M; ++m) within += 1.0 / (p.phiHm[m] * M * M * R);
  const double expected = between + within;

  double sum = 0.0;
  long count = 0;
  for (int r = 0; r < 400; ++r) {
    const SyntheticSample s = generate(d, 7000u + static_cast<unsigned>(r));
    Eigen::VectorXd mmm = Eigen::VectorXd::Zero(s.data.sites());
    for (const auto& model : s.data.runsH)
      for (const auto& run : model) mmm += run;
    mmm /= s.data.totalRunsH();
    sum += (mmm - d.muH).squaredNorm();
    count += s.data.sites();
  }
  CHECK(sum / count == doctest::Approx(expected).epsilon(0.15));
}

TEST_CASE("inverse-Wishart draws") {
  Rng rng(8);
  Eigen::Matrix3d scale;
  scale << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 1.5;
  const double df = 12.0;
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(3, 3);
  const int draws = 40000;
  for (int k = 0; k < draws; ++k) mean += drawInverseWishart(scale, df, rng);
  mean /= draws;
  const Eigen::MatrixXd expected = scale / (df - 3 - 1);
  CHECK((mean - expected).cwiseAbs().maxCoeff() < 0.01);

  for (int k = 0; k < 100; ++k) {
    const Eigen::MatrixXd V = drawNormalizedInverseWishart(scale, df, rng);
    CHECK(V(0, 0) == 1.0);
    CHECK(std::abs(V(0, 1)) < std::sqrt(V(1, 1)));
  }
}

TEST_CASE("prior draws respect the hierarchy support") {
  Rng rng(2);
  const PriorConfig pr = GewekeSetup::standard().priors;
  for (int k = 0; k < 50; ++k) {
    const HyperParams p = drawParamsFromPrior(pr, 3, 1.0, ModelVariant::Full, rng);
    CHECK(p.models() == 3);
    CHECK(p.V(0, 0) == 1.0);
    CHECK(inSupport(p, pr));
  }
}

}
