#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "climfuse/diagnostics.hpp"
#include "support.hpp"

using namespace climfuse;

TEST_SUITE("diagnostics") {

TEST_CASE("effective sample size") {
  std::mt19937_64 eng(1);
  std::normal_distribution<double> z;
  std::vector<double> iid(10000);
  for (auto& v : iid) v = z(eng);
  const EffectiveSampleSize a = effectiveSampleSize(iid);
  CHECK(a.value >= 8000);
  CHECK(a.value <= 10000);
  CHECK(!a.degenerateVariance);

  const double rho = 0.9;
  std::vector<double> ar(10000);
  ar[0] = z(eng) / std::sqrt(1 - rho * rho);
  for (std::size_t t = 1; t < ar.size(); ++t) ar[t] = rho * ar[t - 1] + z(eng);
  const double expected = 10000 * (1 - rho) / (1 + rho);
  CHECK(std::abs(expected - 526.3) < 0.1);
  const EffectiveSampleSize b = effectiveSampleSize(ar);
  CHECK(b.value > 0.6 * expected);
  CHECK(b.value < 1.4 * expected);

  const EffectiveSampleSize c = effectiveSampleSize(std::vector<double>(50, 2.0));
  CHECK(c.degenerateVariance);
  CHECK(c.value == 50.0);

  std::vector<double> alternating(1000);
  for (std::size_t t = 0; t < alternating.size(); ++t) alternating[t] = t % 2 ? 1.0 : -1.0;
  CHECK(effectiveSampleSize(alternating).value <= 1000.0);

  CHECK_THROWS_AS(effectiveSampleSize(std::vector<double>(9, 1.0)), TooFewDraws);
}

TEST_CASE("standard monitors") {
  const auto monitors = standardGewekeMonitors();
  CHECK(monitors.size() >= 12);
  bool beta = false, tauW = false, v01 = false, yF0 = false;
  for (const auto& m : monitors) {
    beta |= m.name == "beta";
    tauW |= m.name == "tauW";
    v01 |= m.name.rfind("V[0,", 0) == 0;
    yF0 |= m.name == "yF[0]";
  }
  CHECK(beta);
  CHECK(tauW);
  CHECK(v01);
  CHECK(yF0);
}

TEST_CASE("getting-it-right with zero sweeps compares identical simulators") {
  GewekeSetup g = GewekeSetup::standard();
  g.rounds = 300;
  g.sweepsPerRound = 0;
  const GewekeReport r = gewekeTest(g);
  CHECK(r.rounds == 300);
  for (const auto& s : r.statistics) {
    CAPTURE(s.name);
    CHECK(std::abs(s.z) < 1e-6);
    CHECK(std::isfinite(s.z));
  }
}

TEST_CASE("getting-it-right passes on the correct sampler") {
  GewekeSetup g = GewekeSetup::standard();
  g.rounds = 10000;
  g.seed = 2;
  const GewekeReport r = gewekeTest(g);
  for (const auto& s : r.statistics) {
    CAPTURE(s.name);
    CAPTURE(s.z);
    CHECK(std::abs(s.z) < 5.0);
  }
  CHECK(r.passFraction() >= 0.95);
  CHECK(r.passed());
}

TEST_CASE("getting-it-right catches the seeded mutation") {
  GewekeSetup g = GewekeSetup::standard();
  g.rounds = 10000;
  g.mutation = Mutation::HalveTauWRate;
  const GewekeReport r = gewekeTest(g);
  CHECK(r.maxAbsZ() > 5.0);
  CHECK(!r.passed());
}

TEST_CASE("getting-it-right rejects bad setups") {
  GewekeSetup g = GewekeSetup::standard();
  g.rounds = 5;
  CHECK_THROWS_AS(gewekeTest(g), std::invalid_argument);
  g = GewekeSetup::standard();
  g.runsF = {1};
  CHECK_THROWS_AS(gewekeTest(g), std::invalid_argument);
}

TEST_CASE("trace export") {
  const ChainOutput chain = testing::fixtureChain(12, 2, 3, [](const std::string& name, int k, Eigen::Index j) {
    if (name == "V") return j == 3 ? 0.5 : testing::identityV(j, 3);
    if (name == "yF") return 10.0 * k + static_cast<double>(j);
    if (name == "phiHm") return 100.0 + static_cast<double>(j);
    return 4.0;
  });
  const auto beta = exportTrace(chain, "beta");
  CHECK(beta.size() == 12);
  for (double v : beta) CHECK(v == 4.0);
  const auto y3 = exportTrace(chain, "yF[3]");
  REQUIRE(y3.size() == 12);
  CHECK(y3[5] == 53.0);
  CHECK(exportTrace(chain, "phiHm[2]")[0] == 102.0);
  CHECK(exportTrace(chain, "V[0,1]")[7] == 0.5);
  CHECK(exportTrace(chain, "V[1,1]")[7] == 1.0);

  CHECK_THROWS_AS(exportTrace(chain, "nope"), UnknownParameter);
  CHECK_THROWS_AS(exportTrace(chain, "yF"), UnknownParameter);
  CHECK_THROWS_AS(exportTrace(chain, "yF[4]"), UnknownParameter);
  CHECK_THROWS_AS(exportTrace(chain, "V[0,3]"), UnknownParameter);

  std::ostringstream csv;
  writeTraceCsv(csv, chain, {"beta", "yF[1]"});
  std::istringstream lines(csv.str());
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  CHECK(header == "draw,\"beta\",\"yF[1]\"");
  CHECK(first == "0,4,1");
  int rows = 1;
  std::string line;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 12);
}

}
