#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "climfuse/config.hpp"
#include "climfuse/diagnostics.hpp"
#include "climfuse/io.hpp"
#include "climfuse/oracles.hpp"
#include "climfuse/sampler.hpp"
#include "climfuse/simulate.hpp"
#include "climfuse/summarize.hpp"

namespace climfuse::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream create(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw fs::filesystem_error("cannot write", path, std::make_error_code(std::errc::io_error));
  return out;
}

struct SimulateArgs {
  std::string design;
  std::uint64_t seed = 1;
  std::string out;
};

int simulate(const SimulateArgs& a, std::ostream& out) {
  SimulationDesign design = fs::is_regular_file(a.design) ? loadDesignConfig(a.design) : namedDesign(a.design);
  design.seed = a.seed;
  const SyntheticSample sample = generate(design);
  writeSimulation(a.out, design, sample);
  out << "wrote " << a.out << ": design " << design.name << ", " << sample.data.models() << " models, "
      << sample.data.totalRunsH() << " historical runs, " << sample.data.totalRunsF() << " future runs, "
      << sample.data.observationSets() << " observation sets, " << sample.data.sites() << " sites\n";
  return kSuccess;
}

struct FitArgs {
  std::string manifest, config, variant, out;
  std::optional<std::uint64_t> seed;
  int chains = 1;
};

fs::path chainPath(const fs::path& out, int chain, int chains) {
  if (chains == 1) return out;
  fs::path p = out;
  p.replace_filename(out.stem().string() + ".c" + std::to_string(chain) + out.extension().string());
  return p;
}

int fit(const FitArgs& a, std::ostream& out) {
  EnsembleDataset data = loadDataset(a.manifest);
  FitSettings s = a.config.empty() ? FitSettings{} : loadFitConfig(a.config);
  if (!a.variant.empty()) s.chain.variant = parseModelVariant(a.variant);
  if (a.seed) s.chain.seed = *a.seed;
  if (s.metric) data.grid = Grid(data.grid.sites(), *s.metric);
  try {
    s.priors.validate(data.models());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  std::vector<ChainOutput> results(static_cast<std::size_t>(a.chains));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(a.chains));
  auto work = [&](int c) {
    try {
      ChainConfig cfg = s.chain;
      cfg.seed = s.chain.seed + static_cast<std::uint64_t>(c);
      results[static_cast<std::size_t>(c)] = runChain(data, cfg, s.priors);
      writeChain(chainPath(a.out, c, a.chains), results[static_cast<std::size_t>(c)]);
    } catch (...) {
      failures[static_cast<std::size_t>(c)] = std::current_exception();
    }
  };
  if (a.chains == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int c = 0; c < a.chains; ++c) threads.emplace_back(work, c);
    for (auto& t : threads) t.join();
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  for (int c = 0; c < a.chains; ++c) {
    const ChainOutput& r = results[static_cast<std::size_t>(c)];
    out << "chain " << chainPath(a.out, c, a.chains).string() << ": variant " << toString(r.config.variant)
        << ", seed " << r.config.seed << ", " << r.config.iterations << " iterations (" << r.config.burnIn
        << " burn-in, thin " << r.config.thin << "), " << r.draws << " stored draws\n";
    out << "  parameter        acceptance\n";
    for (const auto& [name, rate] : r.acceptance) {
      char line[64];
      std::snprintf(line, sizeof line, "  %-16s %.3f\n", name.c_str(), rate);
      out << line;
    }
    char wall[64];
    std::snprintf(wall, sizeof wall, "  wall time %.2f s\n", r.wallSeconds);
    out << wall;
  }
  return kSuccess;
}

struct SummarizeArgs {
  std::string chain, mmmFrom, out, trace;
  bool regionCi = false, vCorr = false;
  double level = 0.9, threshold = 0.7;
};

void writeFieldSummary(const fs::path& path, const ChainOutput& chain, const FieldSummary& f) {
  auto o = create(path);
  o << "x,y,mean,sd,q05,q50,q95,q99\n";
  for (std::size_t i = 0; i < chain.sites.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    o << num(chain.sites[i].x) << ',' << num(chain.sites[i].y) << ',' << num(f.mean[k]) << ','
      << num(f.sd[k]) << ',' << num(f.q05[k]) << ',' << num(f.q50[k]) << ',' << num(f.q95[k]) << ','
      << num(f.q99[k]) << '\n';
  }
}

void writeScalarSummary(const fs::path& path, const ChainOutput& chain) {
  auto o = create(path);
  o << "name,mean,sd,q05,q50,q95,q99\n";
  auto row = [&](const std::string& name, const std::vector<double>& series) {
    const ScalarSummary s = summarizeSeries(series);
    o << name << ',' << num(s.mean) << ',' << num(s.sd) << ',' << num(s.q05) << ',' << num(s.q50) << ','
      << num(s.q95) << ',' << num(s.q99) << '\n';
  };
  for (const auto& t : chain.traces) {
    if (t.shape.empty()) {
      row(t.name, exportTrace(chain, t.name));
    } else if (t.shape.size() == 1 && t.name != "yH" && t.name != "yF") {
      for (Eigen::Index i = 0; i < t.shape[0]; ++i) {
        const std::string name = t.name + "[" + std::to_string(i) + "]";
        row(name, exportTrace(chain, name));
      }
    }
  }
}

int summarizeCmd(const SummarizeArgs& a, std::ostream& out) {
  const ChainOutput chain = readChain(a.chain);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  const PosteriorSummary post = summarize(chain);
  writeFieldSummary(dir / "summary_yH.csv", chain, post.yH);
  writeFieldSummary(dir / "summary_yF.csv", chain, post.yF);
  writeScalarSummary(dir / "summary_scalars.csv", chain);
  out << "beta posterior mean " << num(post.beta.mean) << " (90% interval " << num(post.beta.q05) << " to "
      << num(post.beta.q95) << ")\n";

  std::optional<MultiModelMean> mmm;
  if (!a.mmmFrom.empty()) {
    const EnsembleDataset data = loadDataset(a.mmmFrom);
    if (data.sites() != static_cast<Eigen::Index>(chain.sites.size()))
      throw InputError("dimension: manifest has " + std::to_string(data.sites()) + " sites, chain has " +
                       std::to_string(chain.sites.size()));
    mmm = multiModelMean(data);
    const Eigen::VectorXd qH = quantileOfValue(chain, "yH", mmm->historical);
    const Eigen::VectorXd qF = quantileOfValue(chain, "yF", mmm->future);
    auto o = create(dir / "mmm_quantiles.csv");
    o << "x,y,mmm_h,quantile_h,mmm_f,quantile_f\n";
    for (std::size_t i = 0; i < chain.sites.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      o << num(chain.sites[i].x) << ',' << num(chain.sites[i].y) << ',' << num(mmm->historical[k]) << ','
        << num(qH[k]) << ',' << num(mmm->future[k]) << ',' << num(qF[k]) << '\n';
    }
    out << "multi-model mean quantile map written to " << (dir / "mmm_quantiles.csv").string() << '\n';
  }

  if (a.regionCi) {
    const RegionInterval ri = regionMeanCI(chain, a.level, "yF");
    auto o = create(dir / "region_ci.csv");
    o << "field,level,mean,lower,upper" << (mmm ? ",mmm_mean,difference" : "") << '\n';
    o << "yF," << num(ri.level) << ',' << num(ri.mean) << ',' << num(ri.lower) << ',' << num(ri.upper);
    out << "region mean yF " << num(ri.mean) << ", " << num(100.0 * ri.level) << "% CI [" << num(ri.lower)
        << ", " << num(ri.upper) << "]";
    if (mmm) {
      const double m = mmm->future.mean();
      o << ',' << num(m) << ',' << num(ri.mean - m);
      out << ", difference vs multi-model mean " << num(ri.mean - m);
    }
    o << '\n';
    out << '\n';
  }

  if (a.vCorr) {
    const CorrelationReport rep = correlationFromV(chain, a.threshold);
    const auto M = rep.correlation.rows();
    auto name = [&](Eigen::Index i) {
      return static_cast<Eigen::Index>(chain.modelNames.size()) == M
                 ? chain.modelNames[static_cast<std::size_t>(i)]
                 : "model" + std::to_string(i);
    };
    {
      auto o = create(dir / "correlation.csv");
      o << "model";
      for (Eigen::Index j = 0; j < M; ++j) o << ',' << name(j);
      o << '\n';
      for (Eigen::Index i = 0; i < M; ++i) {
        o << name(i);
        for (Eigen::Index j = 0; j < M; ++j) o << ',' << num(rep.correlation(i, j));
        o << '\n';
      }
    }
    auto o = create(dir / "high_pairs.csv");
    o << "first,second,correlation\n";
    out << rep.pairs.size() << " model pairs with correlation above " << num(a.threshold) << '\n';
    for (const auto& p : rep.pairs) {
      o << name(p.first) << ',' << name(p.second) << ',' << num(p.correlation) << '\n';
      out << "  " << name(p.first) << " - " << name(p.second) << "  " << num(p.correlation) << '\n';
    }
  }

  if (!a.trace.empty()) {
    std::vector<std::string> names;
    std::string cur;
    int depth = 0;
    for (char ch : a.trace) {
      if (ch == '[') ++depth;
      if (ch == ']') --depth;
      if (ch == ';' || (ch == ' ' && depth == 0)) {
        if (!cur.empty()) names.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (!cur.empty()) names.push_back(cur);
    auto o = create(dir / "trace.csv");
    writeTraceCsv(o, chain, names);
  }
  out << "summaries written to " << dir.string() << '\n';
  return kSuccess;
}

struct ValidateArgs {
  std::string suite, mutation = "none", report = "validate_report.json";
  std::uint64_t seed = 1;
  int rounds = 10000;
};

int validate(const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  json report;
  report["suite"] = a.suite;
  report["seed"] = a.seed;
  std::vector<std::string> failing;
  bool passed = false;
  if (a.suite == "geweke") {
    GewekeSetup setup = GewekeSetup::standard();
    setup.seed = a.seed;
    setup.rounds = a.rounds;
    setup.mutation = parseMutation(a.mutation);
    const GewekeReport r = gewekeTest(setup);
    passed = r.passed();
    report["rounds"] = r.rounds;
    report["mutation"] = a.mutation;
    report["pass_fraction"] = r.passFraction();
    report["max_abs_z"] = r.maxAbsZ();
    json stats = json::array();
    for (const auto& s : r.statistics) {
      stats.push_back({{"name", s.name}, {"z", s.z}, {"mean_marginal", s.meanMarginal},
                       {"mean_successive", s.meanSuccessive}, {"ess_successive", s.essSuccessive},
                       {"pass", s.pass}});
      if (!s.pass || std::abs(s.z) >= 5.0) failing.push_back(s.name + " (z = " + num(s.z) + ")");
      char line[96];
      std::snprintf(line, sizeof line, "%-14s z = %8.3f\n", s.name.c_str(), s.z);
      out << line;
    }
    report["statistics"] = stats;
  } else {
    if (a.mutation != "none") throw CLI::ValidationError("--mutation", "only the geweke suite takes a mutation");
    const OracleReport r = runOracleSuite(a.seed);
    passed = r.passed();
    json checks = json::array();
    for (const auto& c : r.checks) {
      checks.push_back({{"name", c.name}, {"metric", c.metric}, {"value", c.value},
                        {"threshold", c.threshold}, {"pass", c.pass}});
      if (!c.pass) failing.push_back(c.name);
      out << (c.pass ? "pass " : "FAIL ") << c.name << "  " << c.metric << " " << num(c.value) << '\n';
    }
    report["checks"] = checks;
  }
  report["passed"] = passed;
  auto o = create(a.report);
  o << report.dump(2) << '\n';
  out << "report written to " << a.report << '\n';
  if (passed) {
    out << a.suite << ": all checks passed\n";
    return kSuccess;
  }
  err << a.suite << ": failing checks:";
  for (const auto& f : failing) err << "\n  " << f;
  err << '\n';
  return kCheckFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian multi-model climate ensemble sampler", "climfuse"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "climfuse 0.1.0");

  SimulateArgs sim;
  auto* simCmd = app.add_subcommand("simulate", "Generate a synthetic dataset");
  simCmd->add_option("--design", sim.design, "paper | cmip5 | desk | cmip5-desk | path to a design config")
      ->required();
  simCmd->add_option("--seed", sim.seed, "Generator seed");
  simCmd->add_option("--out", sim.out, "Output directory")->required();

  FitArgs fitArgs;
  auto* fitCmd = app.add_subcommand("fit", "Run the sampler on a manifest");
  fitCmd->add_option("--manifest", fitArgs.manifest, "Dataset manifest (JSON)")->required();
  fitCmd->add_option("--config", fitArgs.config, "key = value chain and prior settings");
  fitCmd->add_option("--variant", fitArgs.variant, "Model variant")
      ->check(CLI::IsMember({"full", "no-v", "no-spatial", "simplest"}));
  fitCmd->add_option("--seed", fitArgs.seed, "Overrides the config seed");
  fitCmd->add_option("--chains", fitArgs.chains, "Independent chains run in parallel")
      ->check(CLI::Range(1, 256));
  fitCmd->add_option("--out", fitArgs.out, "Chain file")->required();

  SummarizeArgs sum;
  auto* sumCmd = app.add_subcommand("summarize", "Posterior summaries from a chain file");
  sumCmd->add_option("--chain", sum.chain, "Chain file")->required();
  sumCmd->add_option("--mmm-from", sum.mmmFrom, "Manifest for the multi-model mean quantile map");
  sumCmd->add_flag("--region-ci", sum.regionCi, "Region-mean credible interval of yF");
  sumCmd->add_option("--level", sum.level, "Credible level")->check(CLI::Range(0.0, 1.0));
  sumCmd->add_flag("--v-corr", sum.vCorr, "Inter-model correlations from V");
  sumCmd->add_option("--threshold", sum.threshold, "High-correlation threshold");
  sumCmd->add_option("--trace", sum.trace, "Parameters to export as a trace CSV, e.g. \"beta yF[0] V[0,1]\"");
  sumCmd->add_option("--out", sum.out, "Output directory")->required();

  ValidateArgs val;
  auto* valCmd = app.add_subcommand("validate", "Run a validation suite");
  valCmd->add_option("--suite", val.suite, "geweke | oracles")
      ->required()
      ->check(CLI::IsMember({"geweke", "oracles"}));
  valCmd->add_option("--seed", val.seed, "Suite seed");
  valCmd->add_option("--mutation", val.mutation, "Seeded sampler fault")
      ->check(CLI::IsMember({"none", "halve-tauw-rate"}));
  valCmd->add_option("--rounds", val.rounds, "Getting-it-right rounds")->check(CLI::Range(10, 100000000));
  valCmd->add_option("--report", val.report, "Report file (JSON)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (*simCmd) return simulate(sim, out);
    if (*fitCmd) return fit(fitArgs, out);
    if (*sumCmd) return summarizeCmd(sum, out);
    if (*valCmd) return validate(val, out, err);
  } catch (const InputError& e) {
    err << e.what() << '\n';
    return kUsageError;
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return kUsageError;
  } catch (const CLI::ValidationError& e) {
    err << "usage: " << e.what() << '\n';
    return kUsageError;
  } catch (const UnknownParameter& e) {
    err << "chain: " << e.what() << '\n';
    return kUsageError;
  } catch (const TooFewDraws& e) {
    err << "chain: " << e.what() << '\n';
    return kUsageError;
  } catch (const SamplerAbort& e) {
    err << e.what() << '\n';
    return kCheckFailure;
  } catch (const fs::filesystem_error& e) {
    err << "output: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    err << "input: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kCheckFailure;
  }
  return kUsageError;
}

}  // namespace climfuse::cli
