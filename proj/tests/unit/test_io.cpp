#include <doctest.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "climfuse/io.hpp"
#include "climfuse/sampler.hpp"
#include "support.hpp"

using namespace climfuse;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

template <class F>
std::string errorOf(F&& f) {
  try {
    f();
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

SimulationDesign tinyDesign() {
  SimulationDesign d;
  d.name = "tiny";
  d.gridSide = 3;
  d.runsH = {2, 1};
  d.runsF = {1, 2};
  d.modelNames = {"alpha", "beta/2"};
  d.observations = 2;
  d.truth = paperTruth(2);
  const Grid g = d.grid();
  d.muH = fixtureConsensusH(g);
  d.muF = fixtureConsensusF(g);
  return d;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("grid and field CSV round trip") {
  const auto dir = testing::scratchDir("fields");
  const Grid g({{0.1, 0.2}, {1.0 / 3.0, -4.5}, {7.0, 1e-9}});
  writeGridCsv(dir / "grid.csv", g);
  const Grid back = readGridCsv(dir / "grid.csv");
  CHECK(back.sites() == g.sites());
  CHECK(slurp(dir / "grid.csv").rfind("x,y\n", 0) == 0);

  const Eigen::Vector3d v(std::acos(-1.0), -1e-300, 12345.678901234567);
  writeFieldCsv(dir / "f.csv", g, v);
  CHECK(readFieldCsv(dir / "f.csv", g) == v);
  CHECK(slurp(dir / "f.csv").rfind("x,y,value\n", 0) == 0);

  const Grid other({{0.1, 0.2}, {0.5, -4.5}, {7.0, 1e-9}});
  CHECK(errorOf([&] { readFieldCsv(dir / "f.csv", other); }).rfind("dimension:", 0) == 0);
  const Grid shorter({{0.1, 0.2}, {1.0 / 3.0, -4.5}});
  CHECK(errorOf([&] { readFieldCsv(dir / "f.csv", shorter); }).rfind("dimension:", 0) == 0);

  spit(dir / "bad.csv", "x,y,value\n0.1,0.2,abc\n");
  CHECK(errorOf([&] { readFieldCsv(dir / "bad.csv", g); }).rfind("field:", 0) == 0);
  spit(dir / "header.csv", "a,b,c\n0.1,0.2,1\n");
  CHECK(errorOf([&] { readFieldCsv(dir / "header.csv", g); }).rfind("field:", 0) == 0);
}

TEST_CASE("simulation tree loads back exactly") {
  const auto dir = testing::scratchDir("simulation");
  const SimulationDesign d = tinyDesign();
  const SyntheticSample s = generate(d, 5);
  writeSimulation(dir, d, s);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "truth" / "truth.json"));

  const Manifest m = readManifest(dir / "manifest.json");
  CHECK(m.models.size() == 2);
  CHECK(m.historicalRuns() == 3);
  CHECK(m.futureRuns() == 3);
  CHECK(m.observations.size() == 2);
  CHECK(m.truth.has_value());
  CHECK(m.models[1].name == "beta/2");

  const EnsembleDataset data = loadDataset(dir / "manifest.json");
  CHECK(data.modelNames == s.data.modelNames);
  CHECK(data.grid.sites() == s.data.grid.sites());
  for (int k = 0; k < 2; ++k) {
    REQUIRE(data.runsH[k].size() == s.data.runsH[k].size());
    for (std::size_t r = 0; r < data.runsH[k].size(); ++r) CHECK(data.runsH[k][r] == s.data.runsH[k][r]);
    for (std::size_t r = 0; r < data.runsF[k].size(); ++r) CHECK(data.runsF[k][r] == s.data.runsF[k][r]);
  }
  CHECK(data.obs[1] == s.data.obs[1]);

  const TruthRecord t = loadTruth(dir / "manifest.json", data.grid);
  CHECK(t.state.yF == s.truth.yF);
  CHECK(t.state.xH == s.truth.xH);
  CHECK(t.params.beta == s.params.beta);
  CHECK(t.params.V == s.params.V);
  CHECK(t.params.phiHm == s.params.phiHm);

  const auto again = testing::scratchDir("simulation_again");
  writeSimulation(again, d, generate(d, 5));
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), dir);
    CHECK(slurp(entry.path()) == slurp(again / rel));
  }
}

TEST_CASE("manifest errors") {
  const auto dir = testing::scratchDir("manifest_errors");
  const SimulationDesign d = tinyDesign();
  writeSimulation(dir, d, generate(d, 6));

  CHECK(errorOf([&] { loadDataset(dir / "missing.json"); }).rfind("manifest:", 0) == 0);

  fs::remove(dir / "obs" / "obs_1.csv");
  CHECK(errorOf([&] { loadDataset(dir / "manifest.json"); }).rfind("manifest:", 0) == 0);

  spit(dir / "broken.json", "{ not json");
  CHECK(errorOf([&] { readManifest(dir / "broken.json"); }).rfind("manifest:", 0) == 0);

  Manifest m = readManifest(dir / "manifest.json");
  m.observations = {"obs/obs_0.csv"};
  m.models[0].historical[0] = m.grid;
  writeManifest(dir / "mismatch.json", m);
  CHECK(errorOf([&] { loadDataset(dir / "mismatch.json"); }).rfind("field:", 0) == 0);

  const Grid small = Grid::regular(2);
  writeFieldCsv(dir / "small.csv", small, Eigen::VectorXd::Zero(4));
  m = readManifest(dir / "manifest.json");
  m.observations = {"small.csv"};
  writeManifest(dir / "short.json", m);
  CHECK(errorOf([&] { loadDataset(dir / "short.json"); }).rfind("dimension:", 0) == 0);

  m = readManifest(dir / "manifest.json");
  m.models.clear();
  writeManifest(dir / "empty.json", m);
  CHECK(errorOf([&] { loadDataset(dir / "empty.json"); }).rfind("manifest:", 0) == 0);
}

TEST_CASE("chain container") {
  const auto dir = testing::scratchDir("chain");
  ChainOutput chain = testing::fixtureChain(7, 2, 3, [](const std::string& name, int k, Eigen::Index j) {
    if (name == "V") return testing::identityV(j, 3);
    return std::sin(1.0 + k * 0.37 + static_cast<double>(j)) * 1e3 + 1e-12 * k;
  });
  chain.config.variant = ModelVariant::Simplest;
  chain.config.seed = 0xDEADBEEFCAFEULL;
  chain.acceptance = {{"V", 0.5}, {"gammaH", 0.25}};
  chain.priors.d = 3;
  chain.wallSeconds = 12.5;

  writeChain(dir / "a.chain", chain);
  const ChainOutput back = readChain(dir / "a.chain");
  CHECK(back.draws == 7);
  CHECK(back.config.variant == ModelVariant::Simplest);
  CHECK(back.config.seed == 0xDEADBEEFCAFEULL);
  CHECK(back.priors.d == 3);
  CHECK(back.modelNames == chain.modelNames);
  CHECK(back.sites == chain.sites);
  CHECK(back.acceptance == chain.acceptance);
  REQUIRE(back.traces.size() == chain.traces.size());
  for (std::size_t i = 0; i < chain.traces.size(); ++i) {
    CHECK(back.traces[i].name == chain.traces[i].name);
    CHECK(back.traces[i].shape == chain.traces[i].shape);
    CHECK(back.traces[i].values == chain.traces[i].values);
  }

  const std::string bytes = slurp(dir / "a.chain");
  CHECK(bytes.substr(0, 8) == "CFCHAIN1");
  std::uint64_t headerLength = 0;
  for (int b = 7; b >= 0; --b) headerLength = (headerLength << 8) | static_cast<unsigned char>(bytes[8 + b]);
  const auto header = nlohmann::json::parse(bytes.substr(16, headerLength));
  CHECK(header["variant"] == "simplest");
  CHECK(header["draws"] == 7);
  CHECK(header["seed"] == 0xDEADBEEFCAFEULL);
  std::size_t values = 0;
  for (const auto& t : chain.traces) values += t.values.size();
  CHECK(bytes.size() == 16 + headerLength + 8 * values);

  chain.wallSeconds = 99.0;
  writeChain(dir / "b.chain", chain);
  CHECK(slurp(dir / "b.chain") == bytes);

  spit(dir / "junk.chain", "NOTACHAINFILE");
  CHECK(errorOf([&] { readChain(dir / "junk.chain"); }).rfind("chain:", 0) == 0);
  CHECK(errorOf([&] { readChain(dir / "absent.chain"); }).rfind("chain:", 0) == 0);
  spit(dir / "short.chain", bytes.substr(0, bytes.size() - 8));
  CHECK(errorOf([&] { readChain(dir / "short.chain"); }).rfind("chain:", 0) == 0);
}

}
