#include "climfuse/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace climfuse {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double asDouble(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long asInteger(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  return out;
}

int asInt(const std::string& key, const std::string& v) {
  const long long x = asInteger(key, v);
  if (x < INT32_MIN || x > INT32_MAX) throw ConfigError("'" + key + "' is out of range");
  return static_cast<int>(x);
}

std::uint64_t asSeed(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("'" + key + "' expects an unsigned integer, got '" + v + "'");
  return out;
}

bool asBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

template <class F>
auto wrapped(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("'" + key + "': " + e.what());
  }
}

using Handlers = std::map<std::string, std::function<void(const std::string&)>>;

void apply(const std::map<std::string, std::string>& kv, const Handlers& handlers,
           const std::string& source) {
  for (const auto& [key, value] : kv) {
    const auto it = handlers.find(key);
    if (it == handlers.end()) throw ConfigError(source + ": unknown key '" + key + "'");
    it->second(value);
  }
}

void addPriorHandlers(Handlers& h, PriorConfig& p) {
  h["mean_variance"] = [&p](const std::string& v) { p.gaussianMeanVariance = asDouble("mean_variance", v); };
  h["beta_variance"] = [&p](const std::string& v) { p.betaVariance = asDouble("beta_variance", v); };
  const std::pair<const char*, GammaPrior*> gammas[] = {
      {"tau_h", &p.tauH}, {"tau_f", &p.tauF}, {"tau_w", &p.tauW}, {"nu_h", &p.nuH}, {"nu_f", &p.nuF}};
  for (const auto& [stem, prior] : gammas) {
    const std::string shape = std::string(stem) + "_shape";
    const std::string rate = std::string(stem) + "_rate";
    h[shape] = [prior, shape](const std::string& v) { prior->shape = asDouble(shape, v); };
    h[rate] = [prior, rate](const std::string& v) { prior->rate = asDouble(rate, v); };
  }
  const std::pair<const char*, InverseGammaPrior*> inverse[] = {{"phi_h", &p.phiH}, {"phi_f", &p.phiF}};
  for (const auto& [stem, prior] : inverse) {
    const std::string shape = std::string(stem) + "_shape";
    const std::string scale = std::string(stem) + "_scale";
    h[shape] = [prior, shape](const std::string& v) { prior->shape = asDouble(shape, v); };
    h[scale] = [prior, scale](const std::string& v) { prior->scale = asDouble(scale, v); };
  }
  h["range_lower"] = [&p](const std::string& v) { p.rangeLower = asDouble("range_lower", v); };
  h["range_upper"] = [&p](const std::string& v) { p.rangeUpper = asDouble("range_upper", v); };
  h["d"] = [&p](const std::string& v) { p.d = asInt("d", v); };
}

std::vector<int> runList(const std::string& key, const std::string& v, int models) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(asInt(key, trim(cell)));
  if (out.size() == 1 && models > 1) out.assign(static_cast<std::size_t>(models), out[0]);
  return out;
}

}  // namespace

std::map<std::string, std::string> parseKeyValues(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineNo);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(where + ": expected 'key = value'");
    if (!kv.emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  return kv;
}

FitSettings parseFitConfig(std::istream& in, const std::string& source) {
  const auto kv = parseKeyValues(in, source);
  FitSettings s;
  ChainConfig& c = s.chain;
  Handlers h;
  h["iterations"] = [&c](const std::string& v) { c.iterations = asInt("iterations", v); };
  h["burn_in"] = [&c](const std::string& v) { c.burnIn = asInt("burn_in", v); };
  h["thin"] = [&c](const std::string& v) { c.thin = asInt("thin", v); };
  h["seed"] = [&c](const std::string& v) { c.seed = asSeed("seed", v); };
  h["mh_initial_step"] = [&c](const std::string& v) { c.mhInitialStep = asDouble("mh_initial_step", v); };
  h["adapt_target"] = [&c](const std::string& v) { c.adaptTargetAcceptance = asDouble("adapt_target", v); };
  h["adapt_window"] = [&c](const std::string& v) { c.adaptWindow = asInt("adapt_window", v); };
  h["kappa"] = [&c](const std::string& v) { c.kappa = asDouble("kappa", v); };
  h["chi_scheme"] = [&c](const std::string& v) {
    c.chiScheme = wrapped("chi_scheme", [&] { return parseChiScheme(v); });
  };
  h["variant"] = [&c](const std::string& v) {
    c.variant = wrapped("variant", [&] { return parseModelVariant(v); });
  };
  h["metric"] = [&s](const std::string& v) {
    s.metric = wrapped("metric", [&] { return parseDistanceMetric(v); });
  };
  addPriorHandlers(h, s.priors);
  apply(kv, h, source);
  wrapped("chain", [&] {
    c.validate();
    return 0;
  });
  return s;
}

FitSettings loadFitConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return parseFitConfig(in, path.string());
}

SimulationDesign namedDesign(const std::string& name) {
  if (name == "paper") return paperDesign();
  if (name == "cmip5") return cmip5SizedDesign();
  if (name == "desk") return deskDesign();
  if (name == "cmip5-desk") return cmip5DeskDesign();
  throw ConfigError("unknown design '" + name + "' (paper, cmip5, desk, cmip5-desk)");
}

SimulationDesign parseDesignConfig(std::istream& in, const std::string& source) {
  auto kv = parseKeyValues(in, source);
  SimulationDesign d = deskDesign();
  if (const auto it = kv.find("base"); it != kv.end()) {
    d = namedDesign(it->second);
    kv.erase(it);
  }
  d.name = "custom";
  const int baseModels = d.models();
  int models = baseModels;
  if (const auto it = kv.find("models"); it != kv.end()) {
    models = asInt("models", it->second);
    if (models < 1) throw ConfigError("'models' must be >= 1");
    kv.erase(it);
  }
  if (models != baseModels) {
    const HyperParams old = d.truth;
    d.truth = paperTruth(models);
    d.truth.phiHm = Eigen::VectorXd::Constant(models, old.phiH);
    d.truth.phiFm = Eigen::VectorXd::Constant(models, old.phiF);
    const int r = d.runsH.empty() ? 1 : d.runsH.front();
    d.runsH.assign(static_cast<std::size_t>(models), r);
    d.runsF.assign(static_cast<std::size_t>(models), r);
    d.modelNames.clear();
    for (int m = 0; m < models; ++m) d.modelNames.push_back("model" + std::to_string(m + 1));
  }

  HyperParams& t = d.truth;
  Handlers h;
  h["name"] = [&d](const std::string& v) { d.name = v; };
  h["grid_side"] = [&d](const std::string& v) { d.gridSide = asInt("grid_side", v); };
  h["runs_h"] = [&d, models](const std::string& v) { d.runsH = runList("runs_h", v, models); };
  h["runs_f"] = [&d, models](const std::string& v) { d.runsF = runList("runs_f", v, models); };
  h["observations"] = [&d](const std::string& v) { d.observations = asInt("observations", v); };
  h["seed"] = [&d](const std::string& v) { d.seed = asSeed("seed", v); };
  h["draw_model_scales"] = [&d](const std::string& v) { d.drawModelScales = asBool("draw_model_scales", v); };
  const std::pair<const char*, double*> scalars[] = {
      {"truth_beta", &t.beta},     {"truth_tau_h", &t.tauH},     {"truth_tau_f", &t.tauF},
      {"truth_tau_w", &t.tauW},    {"truth_gamma_h", &t.gammaH}, {"truth_gamma_f", &t.gammaF},
      {"truth_nu_h", &t.nuH},      {"truth_nu_f", &t.nuF},       {"truth_phi_h", &t.phiH},
      {"truth_phi_f", &t.phiF},    {"truth_phi_ha", &t.phiHa},   {"truth_phi_fa", &t.phiFa},
      {"truth_kappa", &t.kappa}};
  for (const auto& [key, target] : scalars) {
    const std::string k = key;
    h[k] = [target, k](const std::string& v) { *target = asDouble(k, v); };
  }
  apply(kv, h, source);
  if (!kv.contains("runs_f") && kv.contains("runs_h")) d.runsF = d.runsH;
  if (kv.contains("truth_phi_h")) t.phiHm.setConstant(t.phiH);
  if (kv.contains("truth_phi_f")) t.phiFm.setConstant(t.phiF);

  wrapped("design", [&] {
    const Grid grid = d.grid();
    d.muH = fixtureConsensusH(grid);
    d.muF = fixtureConsensusF(grid);
    d.validate();
    return 0;
  });
  return d;
}

SimulationDesign loadDesignConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return parseDesignConfig(in, path.string());
}

}  // namespace climfuse
