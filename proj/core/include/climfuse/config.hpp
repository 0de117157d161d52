#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "climfuse/model.hpp"
#include "climfuse/sampler.hpp"
#include "climfuse/simulate.hpp"

namespace climfuse {

/// Config parse failure; what() starts with "config:".
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& detail) : std::runtime_error("config: " + detail) {}
};

/// `key = value` lines; `#` starts a comment. Duplicate keys are errors.
std::map<std::string, std::string> parseKeyValues(std::istream& in, const std::string& source);

/// Chain and prior settings for `fit`.
///
/// Keys: iterations burn_in thin seed mh_initial_step adapt_target adapt_window
/// kappa chi_scheme variant metric, and the priors mean_variance beta_variance
/// {tau_h,tau_f,tau_w,nu_h,nu_f}_{shape,rate} {phi_h,phi_f}_{shape,scale}
/// range_lower range_upper d. Anything else is an error.
struct FitSettings {
  ChainConfig chain;
  PriorConfig priors;
  std::optional<DistanceMetric> metric;
};

FitSettings parseFitConfig(std::istream& in, const std::string& source = "<input>");
FitSettings loadFitConfig(const std::filesystem::path& path);

/// A custom simulation design. `base = paper | cmip5 | desk | cmip5-desk`
/// picks the starting point (default desk); then grid_side, models, runs_h,
/// runs_f (one count or a comma list), observations, seed, draw_model_scales
/// and truth_<param> (beta tau_h tau_f tau_w gamma_h gamma_f nu_h nu_f phi_h
/// phi_f phi_ha phi_fa kappa) override it.
SimulationDesign parseDesignConfig(std::istream& in, const std::string& source = "<input>");
SimulationDesign loadDesignConfig(const std::filesystem::path& path);

SimulationDesign namedDesign(const std::string& name);  // throws ConfigError

}  // namespace climfuse
