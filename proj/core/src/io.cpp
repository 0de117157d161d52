#include "climfuse/io.hpp"

#include <bit>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace climfuse {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'C', 'F', 'C', 'H', 'A', 'I', 'N', '1'};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream openOut(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<std::string> splitCsv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = 0;
    while (start < cell.size() && cell[start] == ' ') ++start;
    cells.push_back(cell.substr(start));
  }
  return cells;
}

double toDouble(const std::string& text, const fs::path& path, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size())
    throw InputError("field: " + path.string() + ":" + std::to_string(line) + ": not a number '" +
                     text + "'");
  return v;
}

std::vector<std::vector<double>> readTable(const fs::path& path, const std::vector<std::string>& header,
                                           const char* missingPrefix) {
  std::ifstream in(path);
  if (!in) throw InputError(std::string(missingPrefix) + " cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || splitCsv(line) != header) {
    std::string expected;
    for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
    throw InputError("field: " + path.string() + ": expected header '" + expected + "'");
  }
  std::vector<std::vector<double>> rows;
  std::size_t lineNo = 1;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty() || line == "\r") continue;
    const auto cells = splitCsv(line);
    if (cells.size() != header.size())
      throw InputError("field: " + path.string() + ":" + std::to_string(lineNo) + ": expected " +
                       std::to_string(header.size()) + " columns");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(toDouble(c, path, lineNo));
    rows.push_back(std::move(row));
  }
  return rows;
}

bool sameCoordinate(double a, double b) { return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(a)); }

std::string safeName(const std::string& name) {
  std::string s = name;
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return s;
}

json vectorJson(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vectorFrom(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json matrixJson(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(r);
  }
  return rows;
}

Eigen::MatrixXd matrixFrom(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw InputError("chain: ragged matrix");
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

json paramsJson(const HyperParams& p) {
  return {{"beta", p.beta},     {"tau_h", p.tauH},   {"tau_f", p.tauF},    {"gamma_h", p.gammaH},
          {"gamma_f", p.gammaF}, {"nu_h", p.nuH},    {"nu_f", p.nuF},      {"phi_h", p.phiH},
          {"phi_f", p.phiF},    {"phi_ha", p.phiHa}, {"phi_fa", p.phiFa},  {"tau_w", p.tauW},
          {"kappa", p.kappa},   {"V", matrixJson(p.V)},
          {"phi_hm", vectorJson(p.phiHm)}, {"phi_fm", vectorJson(p.phiFm)},
          {"gamma_hm", vectorJson(p.gammaHm)}, {"gamma_fm", vectorJson(p.gammaFm)}};
}

HyperParams paramsFrom(const json& j) {
  HyperParams p;
  p.beta = j.at("beta");
  p.tauH = j.at("tau_h");
  p.tauF = j.at("tau_f");
  p.gammaH = j.at("gamma_h");
  p.gammaF = j.at("gamma_f");
  p.nuH = j.at("nu_h");
  p.nuF = j.at("nu_f");
  p.phiH = j.at("phi_h");
  p.phiF = j.at("phi_f");
  p.phiHa = j.at("phi_ha");
  p.phiFa = j.at("phi_fa");
  p.tauW = j.at("tau_w");
  p.kappa = j.at("kappa");
  p.V = matrixFrom(j.at("V"));
  p.phiHm = vectorFrom(j.at("phi_hm"));
  p.phiFm = vectorFrom(j.at("phi_fm"));
  p.gammaHm = vectorFrom(j.at("gamma_hm"));
  p.gammaFm = vectorFrom(j.at("gamma_fm"));
  return p;
}

json priorsJson(const PriorConfig& p) {
  json j = {{"mean_variance", p.gaussianMeanVariance},
            {"beta_variance", p.betaVariance},
            {"tau_h_shape", p.tauH.shape}, {"tau_h_rate", p.tauH.rate},
            {"tau_f_shape", p.tauF.shape}, {"tau_f_rate", p.tauF.rate},
            {"tau_w_shape", p.tauW.shape}, {"tau_w_rate", p.tauW.rate},
            {"nu_h_shape", p.nuH.shape},   {"nu_h_rate", p.nuH.rate},
            {"nu_f_shape", p.nuF.shape},   {"nu_f_rate", p.nuF.rate},
            {"phi_h_shape", p.phiH.shape}, {"phi_h_scale", p.phiH.scale},
            {"phi_f_shape", p.phiF.shape}, {"phi_f_scale", p.phiF.scale},
            {"range_lower", p.rangeLower}, {"range_upper", p.rangeUpper},
            {"d", p.d}};
  j["v_tilde"] = p.vTilde.size() == 0 ? json(nullptr) : matrixJson(p.vTilde);
  return j;
}

PriorConfig priorsFrom(const json& j) {
  PriorConfig p;
  p.gaussianMeanVariance = j.at("mean_variance");
  p.betaVariance = j.at("beta_variance");
  p.tauH = {j.at("tau_h_shape"), j.at("tau_h_rate")};
  p.tauF = {j.at("tau_f_shape"), j.at("tau_f_rate")};
  p.tauW = {j.at("tau_w_shape"), j.at("tau_w_rate")};
  p.nuH = {j.at("nu_h_shape"), j.at("nu_h_rate")};
  p.nuF = {j.at("nu_f_shape"), j.at("nu_f_rate")};
  p.phiH = {j.at("phi_h_shape"), j.at("phi_h_scale")};
  p.phiF = {j.at("phi_f_shape"), j.at("phi_f_scale")};
  p.rangeLower = j.at("range_lower");
  p.rangeUpper = j.at("range_upper");
  p.d = j.at("d");
  if (!j.at("v_tilde").is_null()) p.vTilde = matrixFrom(j.at("v_tilde"));
  return p;
}

json configJson(const ChainConfig& c) {
  return {{"iterations", c.iterations},     {"burn_in", c.burnIn},
          {"thin", c.thin},                 {"seed", c.seed},
          {"mh_initial_step", c.mhInitialStep}, {"adapt_target", c.adaptTargetAcceptance},
          {"adapt_window", c.adaptWindow},  {"variant", toString(c.variant)},
          {"kappa", c.kappa},               {"chi_scheme", toString(c.chiScheme)},
          {"mutation", toString(c.mutation)}};
}

ChainConfig configFrom(const json& j) {
  ChainConfig c;
  c.iterations = j.at("iterations");
  c.burnIn = j.at("burn_in");
  c.thin = j.at("thin");
  c.seed = j.at("seed");
  c.mhInitialStep = j.at("mh_initial_step");
  c.adaptTargetAcceptance = j.at("adapt_target");
  c.adaptWindow = j.at("adapt_window");
  c.variant = parseModelVariant(j.at("variant"));
  c.kappa = j.at("kappa");
  c.chiScheme = parseChiScheme(j.at("chi_scheme"));
  c.mutation = parseMutation(j.at("mutation"));
  return c;
}

template <class T>
void writeLE(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
bool readLE(std::istream& in, T& value) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) return false;
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  std::memcpy(&value, bytes, sizeof(T));
  return true;
}

}  // namespace

void writeGridCsv(const fs::path& path, const Grid& grid) {
  auto out = openOut(path);
  out << "x,y\n";
  for (const auto& s : grid.sites()) out << fmt(s.x) << ',' << fmt(s.y) << '\n';
}

Grid readGridCsv(const fs::path& path, DistanceMetric metric) {
  const auto rows = readTable(path, {"x", "y"}, "manifest:");
  if (rows.empty()) throw InputError("dimension: grid file " + path.string() + " has no sites");
  std::vector<Site> sites;
  for (const auto& r : rows) sites.push_back({r[0], r[1]});
  return Grid(std::move(sites), metric);
}

void writeFieldCsv(const fs::path& path, const Grid& grid, const Eigen::VectorXd& values) {
  if (values.size() != grid.size()) throw std::invalid_argument("field length does not match grid");
  auto out = openOut(path);
  out << "x,y,value\n";
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const Site& s = grid.sites()[static_cast<std::size_t>(i)];
    out << fmt(s.x) << ',' << fmt(s.y) << ',' << fmt(values[i]) << '\n';
  }
}

Eigen::VectorXd readFieldCsv(const fs::path& path, const Grid& grid) {
  const auto rows = readTable(path, {"x", "y", "value"}, "manifest:");
  if (static_cast<Eigen::Index>(rows.size()) != grid.size())
    throw InputError("dimension: " + path.string() + " has " + std::to_string(rows.size()) +
                     " sites, grid has " + std::to_string(grid.size()));
  Eigen::VectorXd v(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    const Site& s = grid.sites()[static_cast<std::size_t>(i)];
    if (!sameCoordinate(r[0], s.x) || !sameCoordinate(r[1], s.y))
      throw InputError("dimension: " + path.string() + " row " + std::to_string(i + 1) +
                       " is not at grid site " + std::to_string(i + 1));
    v[i] = r[2];
  }
  return v;
}

std::size_t Manifest::historicalRuns() const {
  std::size_t k = 0;
  for (const auto& m : models) k += m.historical.size();
  return k;
}

std::size_t Manifest::futureRuns() const {
  std::size_t k = 0;
  for (const auto& m : models) k += m.future.size();
  return k;
}

Manifest readManifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("manifest: cannot read " + path.string());
  Manifest m;
  try {
    const json j = json::parse(in);
    m.grid = j.at("grid").get<std::string>();
    if (j.contains("metric")) m.metric = parseDistanceMetric(j.at("metric").get<std::string>());
    for (const auto& e : j.at("models")) {
      ManifestModel mm;
      mm.name = e.at("name").get<std::string>();
      mm.historical = e.at("historical").get<std::vector<std::string>>();
      mm.future = e.at("future").get<std::vector<std::string>>();
      m.models.push_back(std::move(mm));
    }
    m.observations = j.at("observations").get<std::vector<std::string>>();
    if (j.contains("truth") && !j.at("truth").is_null()) m.truth = j.at("truth").get<std::string>();
  } catch (const json::exception& e) {
    throw InputError("manifest: " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError("manifest: " + path.string() + ": " + e.what());
  }
  return m;
}

void writeManifest(const fs::path& path, const Manifest& manifest) {
  json j;
  j["grid"] = manifest.grid;
  j["metric"] = toString(manifest.metric);
  j["models"] = json::array();
  for (const auto& m : manifest.models)
    j["models"].push_back({{"name", m.name}, {"historical", m.historical}, {"future", m.future}});
  j["observations"] = manifest.observations;
  j["truth"] = manifest.truth ? json(*manifest.truth) : json(nullptr);
  auto out = openOut(path);
  out << j.dump(2) << '\n';
}

EnsembleDataset loadDataset(const fs::path& manifestPath) {
  const Manifest m = readManifest(manifestPath);
  const fs::path base = manifestPath.parent_path();
  auto resolve = [&](const std::string& rel) {
    const fs::path p = base / rel;
    if (!fs::exists(p)) throw InputError("manifest: referenced file not found: " + p.string());
    return p;
  };
  if (m.models.empty()) throw InputError("manifest: no models listed");
  if (m.observations.empty()) throw InputError("manifest: no observation files listed");
  EnsembleDataset data;
  data.grid = readGridCsv(resolve(m.grid), m.metric);
  for (const auto& mm : m.models) {
    if (mm.historical.empty() || mm.future.empty())
      throw InputError("manifest: model '" + mm.name + "' needs at least one run per period");
    data.modelNames.push_back(mm.name);
    auto& h = data.runsH.emplace_back();
    for (const auto& f : mm.historical) h.push_back(readFieldCsv(resolve(f), data.grid));
    auto& fu = data.runsF.emplace_back();
    for (const auto& f : mm.future) fu.push_back(readFieldCsv(resolve(f), data.grid));
  }
  for (const auto& f : m.observations) data.obs.push_back(readFieldCsv(resolve(f), data.grid));
  try {
    data.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("dimension: ") + e.what());
  }
  return data;
}

TruthRecord loadTruth(const fs::path& manifestPath, const Grid& grid) {
  const Manifest m = readManifest(manifestPath);
  if (!m.truth) throw InputError("manifest: no truth file listed");
  const fs::path path = manifestPath.parent_path() / *m.truth;
  std::ifstream in(path);
  if (!in) throw InputError("manifest: cannot read truth file " + path.string());
  TruthRecord t;
  try {
    const json j = json::parse(in);
    t.params = paramsFrom(j.at("params"));
    const fs::path dir = path.parent_path();
    const json& f = j.at("fields");
    auto field = [&](const char* key) { return readFieldCsv(dir / f.at(key).get<std::string>(), grid); };
    t.state.muH = field("muH");
    t.state.muF = field("muF");
    t.state.yH = field("yH");
    t.state.yF = field("yF");
    t.state.yHa = field("yHa");
    t.state.yFa = field("yFa");
    const auto xH = f.at("xH").get<std::vector<std::string>>();
    const auto xF = f.at("xF").get<std::vector<std::string>>();
    t.state.xH.resize(grid.size(), static_cast<Eigen::Index>(xH.size()));
    t.state.xF.resize(grid.size(), static_cast<Eigen::Index>(xF.size()));
    for (std::size_t k = 0; k < xH.size(); ++k)
      t.state.xH.col(static_cast<Eigen::Index>(k)) = readFieldCsv(dir / xH[k], grid);
    for (std::size_t k = 0; k < xF.size(); ++k)
      t.state.xF.col(static_cast<Eigen::Index>(k)) = readFieldCsv(dir / xF[k], grid);
  } catch (const json::exception& e) {
    throw InputError("manifest: " + path.string() + ": " + e.what());
  }
  return t;
}

void writeSimulation(const fs::path& dir, const SimulationDesign& design,
                     const SyntheticSample& sample) {
  const EnsembleDataset& data = sample.data;
  const Grid& grid = data.grid;
  fs::create_directories(dir);
  writeGridCsv(dir / "grid.csv", grid);

  Manifest m;
  m.grid = "grid.csv";
  m.metric = grid.metric();
  for (int k = 0; k < data.models(); ++k) {
    ManifestModel mm;
    mm.name = data.modelNames[static_cast<std::size_t>(k)];
    const std::string stem = "runs/" + std::to_string(k) + "_" + safeName(mm.name);
    for (std::size_t r = 0; r < data.runsH[static_cast<std::size_t>(k)].size(); ++r) {
      mm.historical.push_back(stem + "_h" + std::to_string(r) + ".csv");
      writeFieldCsv(dir / mm.historical.back(), grid, data.runsH[static_cast<std::size_t>(k)][r]);
    }
    for (std::size_t r = 0; r < data.runsF[static_cast<std::size_t>(k)].size(); ++r) {
      mm.future.push_back(stem + "_f" + std::to_string(r) + ".csv");
      writeFieldCsv(dir / mm.future.back(), grid, data.runsF[static_cast<std::size_t>(k)][r]);
    }
    m.models.push_back(std::move(mm));
  }
  for (std::size_t i = 0; i < data.obs.size(); ++i) {
    m.observations.push_back("obs/obs_" + std::to_string(i) + ".csv");
    writeFieldCsv(dir / m.observations.back(), grid, data.obs[i]);
  }

  const LatentState& s = sample.truth;
  json fields;
  const std::pair<const char*, const Eigen::VectorXd*> named[] = {
      {"muH", &s.muH}, {"muF", &s.muF}, {"yH", &s.yH}, {"yF", &s.yF}, {"yHa", &s.yHa}, {"yFa", &s.yFa}};
  for (const auto& [key, v] : named) {
    fields[key] = std::string(key) + ".csv";
    writeFieldCsv(dir / "truth" / (std::string(key) + ".csv"), grid, *v);
  }
  fields["xH"] = json::array();
  fields["xF"] = json::array();
  for (Eigen::Index k = 0; k < s.xH.cols(); ++k) {
    const std::string h = "xH_" + std::to_string(k) + ".csv";
    const std::string f = "xF_" + std::to_string(k) + ".csv";
    writeFieldCsv(dir / "truth" / h, grid, s.xH.col(k));
    writeFieldCsv(dir / "truth" / f, grid, s.xF.col(k));
    fields["xH"].push_back(h);
    fields["xF"].push_back(f);
  }
  json truth = {{"design", design.name}, {"seed", design.seed}, {"params", paramsJson(sample.params)},
                {"fields", fields}};
  {
    auto out = openOut(dir / "truth" / "truth.json");
    out << truth.dump(2) << '\n';
  }
  m.truth = "truth/truth.json";
  writeManifest(dir / "manifest.json", m);
}

std::string chainHeaderJson(const ChainOutput& chain) {
  json j;
  j["format"] = "climfuse-chain";
  j["version"] = 1;
  j["seed"] = chain.config.seed;
  j["variant"] = toString(chain.config.variant);
  j["config"] = configJson(chain.config);
  j["priors"] = priorsJson(chain.priors);
  j["models"] = chain.modelNames;
  j["metric"] = toString(chain.metric);
  json sites = json::array();
  for (const auto& s : chain.sites) sites.push_back({s.x, s.y});
  j["sites"] = sites;
  j["draws"] = chain.draws;
  json params = json::array();
  for (const auto& t : chain.traces) params.push_back({{"name", t.name}, {"shape", t.shape}});
  j["parameters"] = params;
  j["acceptance"] = chain.acceptance;
  return j.dump();
}

void writeChain(const fs::path& path, const ChainOutput& chain) {
  for (const auto& t : chain.traces)
    if (t.values.size() != static_cast<std::size_t>(chain.draws * t.width()))
      throw std::invalid_argument("trace '" + t.name + "' length does not match draw count");
  const std::string header = chainHeaderJson(chain);
  auto out = openOut(path, std::ios::out | std::ios::binary);
  out.write(kMagic, sizeof kMagic);
  writeLE<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (int k = 0; k < chain.draws; ++k)
    for (const auto& t : chain.traces) {
      const auto w = static_cast<std::size_t>(t.width());
      for (std::size_t j = 0; j < w; ++j) writeLE<double>(out, t.values[static_cast<std::size_t>(k) * w + j]);
    }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

ChainOutput readChain(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("chain: cannot read " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw InputError("chain: " + path.string() + " is not a chain file");
  std::uint64_t length = 0;
  if (!readLE(in, length) || length > (1ull << 32)) throw InputError("chain: truncated header");
  std::string header(length, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(length))) throw InputError("chain: truncated header");

  ChainOutput c;
  try {
    const json j = json::parse(header);
    c.config = configFrom(j.at("config"));
    c.priors = priorsFrom(j.at("priors"));
    c.modelNames = j.at("models").get<std::vector<std::string>>();
    c.metric = parseDistanceMetric(j.at("metric").get<std::string>());
    for (const auto& s : j.at("sites")) c.sites.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
    c.draws = j.at("draws");
    for (const auto& p : j.at("parameters")) {
      ParameterTrace t;
      t.name = p.at("name").get<std::string>();
      t.shape = p.at("shape").get<std::vector<Eigen::Index>>();
      c.traces.push_back(std::move(t));
    }
    c.acceptance = j.at("acceptance").get<std::map<std::string, double>>();
  } catch (const json::exception& e) {
    throw InputError(std::string("chain: bad header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("chain: bad header: ") + e.what());
  }
  if (c.draws < 0) throw InputError("chain: negative draw count");
  for (auto& t : c.traces) t.values.resize(static_cast<std::size_t>(c.draws * t.width()));
  for (int k = 0; k < c.draws; ++k)
    for (auto& t : c.traces) {
      const auto w = static_cast<std::size_t>(t.width());
      for (std::size_t j = 0; j < w; ++j)
        if (!readLE(in, t.values[static_cast<std::size_t>(k) * w + j]))
          throw InputError("chain: truncated draw block at draw " + std::to_string(k));
    }
  return c;
}

}  // namespace climfuse
