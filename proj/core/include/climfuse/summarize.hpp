#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "climfuse/model.hpp"
#include "climfuse/sampler.hpp"

namespace climfuse {

class TooFewDraws : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quantile of a sample by linear interpolation between order statistics
/// (h = (N - 1) p, the "type 7" rule). `sorted` must be ascending.
double quantileSorted(const std::vector<double>& sorted, double p);
double quantile(std::vector<double> values, double p);

struct ScalarSummary {
  double mean = 0, sd = 0, q05 = 0, q50 = 0, q95 = 0, q99 = 0;
};

struct FieldSummary {
  Eigen::VectorXd mean, sd, q05, q50, q95, q99;
};

ScalarSummary summarizeSeries(const std::vector<double>& draws);
/// Per-column summary of a draws x width matrix.
FieldSummary summarizeColumns(const Eigen::MatrixXd& draws);

struct PosteriorSummary {
  FieldSummary yH, yF;
  Eigen::MatrixXd meanV;
  Eigen::MatrixXd correlation;  // from the posterior-mean V
  ScalarSummary beta;
  std::vector<double> regionMeanDraws;  // spatial mean of yF per draw
};

/// Throws TooFewDraws with fewer than two stored draws.
PosteriorSummary summarize(const ChainOutput& chain);

struct MultiModelMean {
  Eigen::VectorXd historical, future;
};

/// Unweighted mean over every run of every model (runs, not models, are weighted equally).
MultiModelMean multiModelMean(const EnsembleDataset& data);

/// Per site: fraction of stored draws of `field` at or below the reference,
/// ties counted as one half.
Eigen::VectorXd quantileOfValue(const ChainOutput& chain, const std::string& field,
                                const Eigen::VectorXd& reference);

struct RegionInterval {
  double mean = 0, lower = 0, upper = 0;
  double level = 0.9;
};

/// Spatial mean of `field` per draw, then its mean and central `level` interval.
RegionInterval regionMeanCI(const ChainOutput& chain, double level = 0.90,
                            const std::string& field = "yF");

struct CorrelatedPair {
  int first = 0, second = 0;
  std::string firstName, secondName;
  double correlation = 0;
};

enum class CorrelationSource { PosteriorMeanV, MeanOfDrawCorrelations };

struct CorrelationReport {
  Eigen::MatrixXd correlation;
  std::vector<CorrelatedPair> pairs;  // above threshold, strongest first
};

/// D^{-1/2} V D^{-1/2} of the posterior-mean V (default) or the mean of the
/// per-draw correlation matrices.
CorrelationReport correlationFromV(const ChainOutput& chain, double threshold = 0.7,
                                   CorrelationSource source = CorrelationSource::PosteriorMeanV);

struct CoverageReport {
  Eigen::VectorXi counts;  // per site, replicates whose truth fell inside the interval
  int replicates = 0;
  double rate = 0.0;       // aggregate fraction over sites and replicates
};

/// Builds a coverage score one replicate at a time so chains need not be kept.
class CoverageAccumulator {
 public:
  explicit CoverageAccumulator(double level = 0.90, std::string field = "yF");
  void add(const ChainOutput& chain, const Eigen::VectorXd& truth);
  void addInterval(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                   const Eigen::VectorXd& truth);
  CoverageReport report() const;

 private:
  double level_;
  std::string field_;
  Eigen::VectorXi counts_;
  int replicates_ = 0;
};

struct CoverageCase {
  const ChainOutput* chain = nullptr;
  Eigen::VectorXd truth;
};

/// Requires at least two replicates.
CoverageReport coverageScore(const std::vector<CoverageCase>& replicates, double level = 0.90,
                             const std::string& field = "yF");

}  // namespace climfuse
