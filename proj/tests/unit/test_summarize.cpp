#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "climfuse/summarize.hpp"
#include "support.hpp"

using namespace climfuse;

namespace {

ChainOutput constantChain(double c, int draws = 20) {
  return testing::fixtureChain(draws, 2, 2, [c](const std::string& name, int, Eigen::Index j) {
    return name == "V" ? testing::identityV(j, 2) : c;
  });
}

// yF and yH draw k at site j are yF[k][j]
ChainOutput fieldChain(const std::vector<std::vector<double>>& yF, int side) {
  const int draws = static_cast<int>(yF.size());
  return testing::fixtureChain(draws, side, 2, [&](const std::string& name, int k, Eigen::Index j) {
    if (name == "V") return testing::identityV(j, 2);
    if (name == "yF" || name == "yH") return yF[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
    return 1.0;
  });
}

}  // namespace

TEST_SUITE("summarize") {

TEST_CASE("quantile convention") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(quantile(v, 0.05) == doctest::Approx(5.95).epsilon(1e-14));
  CHECK(quantile(v, 0.5) == doctest::Approx(50.5));
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 100.0);
  std::vector<double> shuffled = v;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937(3));
  CHECK(quantile(shuffled, 0.95) == quantile(v, 0.95));

  std::vector<double> g(v.size());
  std::transform(v.begin(), v.end(), g.begin(), [](double x) { return 2 * x + 1; });
  for (double p : {0.05, 0.5, 0.95, 0.99}) CHECK(quantile(g, p) == doctest::Approx(2 * quantile(v, p) + 1));
  CHECK_THROWS_AS(quantile({}, 0.5), TooFewDraws);
  CHECK_THROWS_AS(quantile(v, 1.5), std::invalid_argument);
}

TEST_CASE("constant chain summary") {
  const PosteriorSummary s = summarize(constantChain(3.25));
  for (const FieldSummary* f : {&s.yH, &s.yF}) {
    CHECK((f->mean.array() == 3.25).all());
    CHECK((f->sd.array() == 0.0).all());
    CHECK((f->q05.array() == 3.25).all());
    CHECK((f->q50.array() == 3.25).all());
    CHECK((f->q95.array() == 3.25).all());
    CHECK((f->q99.array() == 3.25).all());
  }
  CHECK(s.beta.mean == 3.25);
  CHECK(s.beta.sd == 0.0);
  CHECK(s.correlation.isIdentity());
  CHECK(s.regionMeanDraws.size() == 20);
  CHECK_THROWS_AS(summarize(constantChain(1.0, 1)), TooFewDraws);
}

TEST_CASE("quantile ordering and moments") {
  std::mt19937_64 eng(5);
  std::normal_distribution<double> z;
  std::vector<std::vector<double>> draws(500, std::vector<double>(9));
  for (auto& d : draws)
    for (std::size_t j = 0; j < 9; ++j) d[j] = static_cast<double>(j) + (1.0 + j) * z(eng);
  const PosteriorSummary s = summarize(fieldChain(draws, 3));
  for (int j = 0; j < 9; ++j) {
    CHECK(s.yF.q05(j) <= s.yF.q50(j));
    CHECK(s.yF.q50(j) <= s.yF.q95(j));
    CHECK(s.yF.q95(j) <= s.yF.q99(j));
    CHECK(std::abs(s.yF.mean(j) - j) < 4 * (1.0 + j) / std::sqrt(500.0));
    CHECK(s.yF.sd(j) == doctest::Approx(1.0 + j).epsilon(0.1));
  }
}

TEST_CASE("multi-model mean weights runs") {
  EnsembleDataset d;
  d.grid = Grid({{0.0, 0.0}});
  d.modelNames = {"a", "b"};
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 2.0), b = Eigen::VectorXd::Constant(1, 6.0);
  d.runsH = {{a}, {b}};
  d.runsF = {{a}, {b}};
  d.obs = {a};
  CHECK(multiModelMean(d).historical(0) == 4.0);
  CHECK(multiModelMean(d).future(0) == 4.0);

  d.runsH = {{a, a, a}, {b}};
  CHECK(multiModelMean(d).historical(0) == doctest::Approx(2.0 + (6.0 - 2.0) / 4.0));
}

TEST_CASE("quantile of a reference value") {
  std::vector<std::vector<double>> draws;
  for (int k = 0; k < 101; ++k) draws.push_back(std::vector<double>(4, 0.1 * k));
  const ChainOutput chain = fieldChain(draws, 2);
  const PosteriorSummary s = summarize(chain);
  const double tol = 1.0 / chain.draws;
  CHECK((quantileOfValue(chain, "yF", s.yF.q50).array() - 0.5).abs().maxCoeff() <= tol);
  CHECK((quantileOfValue(chain, "yF", s.yF.q05).array() - 0.05).abs().maxCoeff() <= tol);
  CHECK((quantileOfValue(chain, "yF", s.yF.q95).array() - 0.95).abs().maxCoeff() <= tol);
  CHECK((quantileOfValue(chain, "yF", Eigen::VectorXd::Constant(4, -1.0)).array() == 0.0).all());
  CHECK((quantileOfValue(chain, "yF", Eigen::VectorXd::Constant(4, 50.0)).array() == 1.0).all());
  CHECK_THROWS_AS(quantileOfValue(chain, "yF", Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("reference = truth on calibrated posteriors gives uniform probabilities") {
  std::mt19937_64 eng(17);
  std::normal_distribution<double> z;
  std::vector<double> probs;
  const int reps = 300;
  for (int r = 0; r < reps; ++r) {
    // truth ~ N(0,1), y = truth + N(0,1): posterior N(y/2, 1/2)
    const double truth = z(eng);
    const double y = truth + z(eng);
    std::vector<std::vector<double>> draws;
    for (int k = 0; k < 400; ++k) draws.push_back({y / 2 + std::sqrt(0.5) * z(eng)});
    probs.push_back(quantileOfValue(fieldChain(draws, 1), "yF", Eigen::VectorXd::Constant(1, truth))(0));
  }
  std::sort(probs.begin(), probs.end());
  double ks = 0.0;
  for (int i = 0; i < reps; ++i)
    ks = std::max({ks, std::abs(probs[i] - static_cast<double>(i) / reps), std::abs(probs[i] - (i + 1.0) / reps)});
  CHECK(ks < 1.628 / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("region-mean interval") {
  const RegionInterval c = regionMeanCI(constantChain(7.0));
  CHECK(c.mean == 7.0);
  CHECK(c.lower == 7.0);
  CHECK(c.upper == 7.0);

  std::mt19937_64 eng(2);
  std::normal_distribution<double> z;
  std::vector<std::vector<double>> draws(300, std::vector<double>(9));
  for (auto& d : draws)
    for (auto& v : d) v = 280.0 + z(eng);
  const RegionInterval r = regionMeanCI(fieldChain(draws, 3), 0.9);
  CHECK(r.lower < r.mean);
  CHECK(r.mean < r.upper);
  CHECK(r.upper - r.lower > 0.0);
  CHECK(r.level == 0.9);

  std::vector<std::vector<double>> permuted = draws;
  for (auto& d : permuted) std::reverse(d.begin(), d.end());
  const RegionInterval p = regionMeanCI(fieldChain(permuted, 3), 0.9);
  CHECK(p.mean == doctest::Approx(r.mean).epsilon(1e-14));
  CHECK(p.lower == doctest::Approx(r.lower).epsilon(1e-14));
  CHECK(p.upper == doctest::Approx(r.upper).epsilon(1e-14));

  std::vector<double> region;
  for (const auto& d : draws) region.push_back(std::accumulate(d.begin(), d.end(), 0.0) / 9.0);
  CHECK(r.lower == doctest::Approx(quantile(region, 0.05)).epsilon(1e-14));
  CHECK(r.upper == doctest::Approx(quantile(region, 0.95)).epsilon(1e-14));
  CHECK_THROWS_AS(regionMeanCI(fieldChain(draws, 3), 1.0), std::invalid_argument);
}

TEST_CASE("correlation from V") {
  const CorrelationReport id = correlationFromV(constantChain(0.0));
  CHECK(id.correlation.isIdentity());
  CHECK(id.pairs.empty());

  const Eigen::Matrix2d target = (Eigen::Matrix2d() << 1.0, 0.5, 0.5, 4.0).finished();
  const ChainOutput chain = testing::fixtureChain(2, 2, 2, [&](const std::string& name, int k, Eigen::Index j) {
    if (name != "V") return 0.0;
    // two draws whose mean is `target`
    const double sign = k == 0 ? 1.0 : -1.0;
    const double off = (j == 1 || j == 2) ? 0.1 * sign : 0.0;
    return target(j % 2, j / 2) + off;
  });
  const CorrelationReport r = correlationFromV(chain, 0.2);
  CHECK(r.correlation(0, 1) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(r.correlation(1, 0) == r.correlation(0, 1));
  CHECK(r.correlation.diagonal().isOnes());
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.pairs[0].firstName == "model1");
  CHECK(r.pairs[0].secondName == "model2");
  CHECK(correlationFromV(chain, 0.7).pairs.empty());

  const CorrelationReport perDraw = correlationFromV(chain, 0.7, CorrelationSource::MeanOfDrawCorrelations);
  const double c0 = 0.6 / 2.0, c1 = 0.4 / 2.0;
  CHECK(perDraw.correlation(0, 1) == doctest::Approx((c0 + c1) / 2).epsilon(1e-14));
}

TEST_CASE("pairs are listed strongest first") {
  const int M = 4;
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(M, M);
  V(0, 1) = V(1, 0) = 0.8;
  V(2, 3) = V(3, 2) = 0.95;
  V(0, 2) = V(2, 0) = 0.75;
  const ChainOutput chain = testing::fixtureChain(3, 2, M, [&](const std::string& name, int, Eigen::Index j) {
    return name == "V" ? V(j % M, j / M) : 0.0;
  });
  const CorrelationReport r = correlationFromV(chain, 0.7);
  REQUIRE(r.pairs.size() == 3);
  CHECK(r.pairs[0].first == 2);
  CHECK(r.pairs[0].second == 3);
  CHECK(r.pairs[1].correlation == doctest::Approx(0.8));
  CHECK(r.pairs[2].correlation == doctest::Approx(0.75));
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = 0; j < M; ++j) {
      CHECK(r.correlation(i, j) <= 1.0);
      CHECK(r.correlation(i, j) >= -1.0);
    }
}

TEST_CASE("coverage score") {
  std::mt19937_64 eng(4);
  std::normal_distribution<double> z;
  std::vector<ChainOutput> chains;
  std::vector<CoverageCase> cases;
  for (int r = 0; r < 5; ++r) {
    std::vector<std::vector<double>> draws(200, std::vector<double>(4));
    for (auto& d : draws)
      for (auto& v : d) v = r + z(eng);
    chains.push_back(fieldChain(draws, 2));
  }
  for (const auto& c : chains) cases.push_back({&c, summarize(c).yF.q50});
  const CoverageReport rep = coverageScore(cases);
  CHECK(rep.replicates == 5);
  CHECK((rep.counts.array() == 5).all());
  CHECK(rep.rate == 1.0);

  std::vector<CoverageCase> outside = cases;
  for (auto& c : outside) c.truth.array() += 100.0;
  CHECK(coverageScore(outside).rate == 0.0);

  CHECK_THROWS_AS(coverageScore({cases[0]}), std::invalid_argument);

  CoverageAccumulator acc;
  acc.addInterval(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), Eigen::Vector2d(0.5, 2.0));
  acc.addInterval(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), Eigen::Vector2d(1.0, 0.0));
  const CoverageReport a = acc.report();
  CHECK(a.counts(0) == 2);
  CHECK(a.counts(1) == 1);
  CHECK(a.rate == 0.75);
}

}
