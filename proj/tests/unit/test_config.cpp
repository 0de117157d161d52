#include <doctest.h>

#include <fstream>
#include <sstream>

#include "climfuse/config.hpp"
#include "support.hpp"

using namespace climfuse;

namespace {

template <class F>
std::string configError(F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

FitSettings fit(const std::string& text) {
  std::istringstream in(text);
  return parseFitConfig(in, "test");
}

SimulationDesign design(const std::string& text) {
  std::istringstream in(text);
  return parseDesignConfig(in, "test");
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("key value parsing") {
  std::istringstream in("# header\n\n  a = 1  # trailing\nb=two words\r\n");
  const auto kv = parseKeyValues(in, "src");
  CHECK(kv.size() == 2);
  CHECK(kv.at("a") == "1");
  CHECK(kv.at("b") == "two words");

  std::istringstream dup("a = 1\na = 2\n");
  const std::string e1 = configError([&] { parseKeyValues(dup, "src"); });
  CHECK(e1.rfind("config:", 0) == 0);
  CHECK(e1.find("src:2") != std::string::npos);
  CHECK(e1.find("duplicate") != std::string::npos);

  std::istringstream noEq("a 1\n");
  CHECK(configError([&] { parseKeyValues(noEq, "src"); }).find("src:1") != std::string::npos);
  std::istringstream noValue("a =\n");
  CHECK(configError([&] { parseKeyValues(noValue, "src"); }).rfind("config:", 0) == 0);
}

TEST_CASE("fit settings") {
  const FitSettings s = fit(
      "iterations = 300\nburn_in = 100\nthin = 4\nseed = 18446744073709551615\n"
      "mh_initial_step = 0.25\nadapt_target = 0.3\nadapt_window = 20\nkappa = 2\n"
      "chi_scheme = paper-sequential\nvariant = simplest\nmetric = haversine-km\n"
      "mean_variance = 4\nbeta_variance = 9\ntau_w_shape = 3\ntau_w_rate = 5\n"
      "phi_f_shape = 7\nphi_f_scale = 11\nrange_lower = 0.1\nrange_upper = 2\nd = 6\n");
  CHECK(s.chain.iterations == 300);
  CHECK(s.chain.burnIn == 100);
  CHECK(s.chain.thin == 4);
  CHECK(s.chain.seed == 18446744073709551615ULL);
  CHECK(s.chain.mhInitialStep == 0.25);
  CHECK(s.chain.adaptTargetAcceptance == 0.3);
  CHECK(s.chain.adaptWindow == 20);
  CHECK(s.chain.kappa == 2.0);
  CHECK(s.chain.chiScheme == ChiScheme::PaperSequential);
  CHECK(s.chain.variant == ModelVariant::Simplest);
  REQUIRE(s.metric.has_value());
  CHECK(*s.metric == DistanceMetric::HaversineKm);
  CHECK(s.priors.gaussianMeanVariance == 4.0);
  CHECK(s.priors.betaVariance == 9.0);
  CHECK(s.priors.tauW.shape == 3.0);
  CHECK(s.priors.tauW.rate == 5.0);
  CHECK(s.priors.phiF.shape == 7.0);
  CHECK(s.priors.phiF.scale == 11.0);
  CHECK(s.priors.rangeLower == 0.1);
  CHECK(s.priors.rangeUpper == 2.0);
  CHECK(s.priors.d == 6);

  const FitSettings defaults = fit("");
  CHECK(defaults.chain.iterations == ChainConfig{}.iterations);
  CHECK(!defaults.metric.has_value());
}

TEST_CASE("fit settings errors") {
  for (const char* text : {"iterations = many\n", "unknown_key = 1\n", "variant = everything\n",
                           "iterations = 10\nburn_in = 10\n", "thin = 1.5\n", "seed = -1\n",
                           "iterations = 99999999999\n"}) {
    CAPTURE(text);
    CHECK(configError([&] { fit(text); }).rfind("config:", 0) == 0);
  }
  CHECK(configError([&] { fit("bogus = 1\n"); }).find("bogus") != std::string::npos);
  CHECK(configError([&] { loadFitConfig(testing::scratchDir("cfg") / "none.cfg"); }).rfind("config:", 0) == 0);
}

TEST_CASE("fit settings from a file") {
  const auto path = testing::scratchDir("cfg_file") / "fit.cfg";
  std::ofstream(path) << "iterations = 40\nburn_in = 10\n";
  CHECK(loadFitConfig(path).chain.storedDraws() == 30);
}

TEST_CASE("named designs") {
  const SimulationDesign paper = namedDesign("paper");
  CHECK(paper.models() == 38);
  CHECK(paper.gridSide == 20);
  CHECK(paper.observations == 5);
  const SimulationDesign cmip5 = namedDesign("cmip5");
  int total = 0;
  for (int r : cmip5.runsH) total += r;
  CHECK(total == 81);
  CHECK(cmip5.observations == 2);
  CHECK(namedDesign("desk").gridSide == 8);
  CHECK(namedDesign("cmip5-desk").models() == 10);
  CHECK(configError([] { namedDesign("huge"); }).find("huge") != std::string::npos);
}

TEST_CASE("custom designs") {
  const SimulationDesign d = design(
      "base = desk\nmodels = 3\ngrid_side = 4\nruns_h = 1, 2, 3\nobservations = 2\nseed = 9\n"
      "truth_beta = 0.5\ntruth_phi_h = 40\ndraw_model_scales = no\nname = mine\n");
  CHECK(d.name == "mine");
  CHECK(d.models() == 3);
  CHECK(d.gridSide == 4);
  CHECK(d.runsH == std::vector<int>{1, 2, 3});
  CHECK(d.runsF == d.runsH);
  CHECK(d.observations == 2);
  CHECK(d.seed == 9);
  CHECK(d.truth.beta == 0.5);
  CHECK(d.truth.phiH == 40.0);
  CHECK((d.truth.phiHm.array() == 40.0).all());
  CHECK(!d.drawModelScales);
  CHECK(d.muH.size() == 16);
  CHECK(d.modelNames.size() == 3);
  CHECK(d.truth.V.rows() == 3);

  const SimulationDesign one = design("models = 2\nruns_h = 4\nruns_f = 1\n");
  CHECK(one.runsH == std::vector<int>{4, 4});
  CHECK(one.runsF == std::vector<int>{1, 1});

  for (const char* text : {"models = 0\n", "base = moon\n", "runs_h = 1, 2\n", "truth_gamma_x = 1\n",
                           "grid_side = 0\n", "draw_model_scales = maybe\n"}) {
    CAPTURE(text);
    CHECK(configError([&] { design(text); }).rfind("config:", 0) == 0);
  }
}

}
