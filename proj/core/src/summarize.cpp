#include "climfuse/summarize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace climfuse {

double quantileSorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw TooFewDraws("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile probability outside [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  return quantileSorted(values, p);
}

ScalarSummary summarizeSeries(const std::vector<double>& draws) {
  if (draws.size() < 2) throw TooFewDraws("summary needs at least two draws");
  ScalarSummary s;
  const double n = static_cast<double>(draws.size());
  s.mean = std::accumulate(draws.begin(), draws.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : draws) ss += (v - s.mean) * (v - s.mean);
  s.sd = std::sqrt(ss / (n - 1.0));
  std::vector<double> sorted = draws;
  std::sort(sorted.begin(), sorted.end());
  s.q05 = quantileSorted(sorted, 0.05);
  s.q50 = quantileSorted(sorted, 0.50);
  s.q95 = quantileSorted(sorted, 0.95);
  s.q99 = quantileSorted(sorted, 0.99);
  return s;
}

FieldSummary summarizeColumns(const Eigen::MatrixXd& draws) {
  if (draws.rows() < 2) throw TooFewDraws("summary needs at least two draws");
  const auto w = draws.cols();
  FieldSummary f;
  f.mean.resize(w);
  f.sd.resize(w);
  f.q05.resize(w);
  f.q50.resize(w);
  f.q95.resize(w);
  f.q99.resize(w);
  std::vector<double> column(static_cast<std::size_t>(draws.rows()));
  for (Eigen::Index j = 0; j < w; ++j) {
    for (Eigen::Index k = 0; k < draws.rows(); ++k) column[static_cast<std::size_t>(k)] = draws(k, j);
    const ScalarSummary s = summarizeSeries(column);
    f.mean[j] = s.mean;
    f.sd[j] = s.sd;
    f.q05[j] = s.q05;
    f.q50[j] = s.q50;
    f.q95[j] = s.q95;
    f.q99[j] = s.q99;
  }
  return f;
}

namespace {

Eigen::MatrixXd toCorrelation(const Eigen::MatrixXd& v) {
  const Eigen::VectorXd inv = v.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd c = inv.asDiagonal() * v * inv.asDiagonal();
  c = 0.5 * (c + c.transpose());
  c.diagonal().setOnes();
  return c.cwiseMax(-1.0).cwiseMin(1.0);
}

Eigen::MatrixXd meanMatrix(const ChainOutput& chain, const std::string& name) {
  const Eigen::MatrixXd draws = chain.matrix(name);
  const auto& shape = chain.trace(name).shape;
  const Eigen::VectorXd mean = draws.colwise().mean().transpose();
  return Eigen::Map<const Eigen::MatrixXd>(mean.data(), shape[0], shape[1]);
}

}  // namespace

PosteriorSummary summarize(const ChainOutput& chain) {
  if (chain.draws < 2) throw TooFewDraws("summary needs at least two stored draws");
  PosteriorSummary out;
  out.yH = summarizeColumns(chain.matrix("yH"));
  const Eigen::MatrixXd yF = chain.matrix("yF");
  out.yF = summarizeColumns(yF);
  out.meanV = meanMatrix(chain, "V");
  out.correlation = toCorrelation(out.meanV);
  const Eigen::MatrixXd beta = chain.matrix("beta");
  out.beta = summarizeSeries(std::vector<double>(beta.data(), beta.data() + beta.size()));
  const Eigen::VectorXd region = yF.rowwise().mean();
  out.regionMeanDraws.assign(region.data(), region.data() + region.size());
  return out;
}

MultiModelMean multiModelMean(const EnsembleDataset& data) {
  data.validate();
  const auto n = data.sites();
  MultiModelMean mmm{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (const auto& runs : data.runsH)
    for (const auto& r : runs) mmm.historical += r;
  for (const auto& runs : data.runsF)
    for (const auto& r : runs) mmm.future += r;
  mmm.historical /= static_cast<double>(data.totalRunsH());
  mmm.future /= static_cast<double>(data.totalRunsF());
  return mmm;
}

Eigen::VectorXd quantileOfValue(const ChainOutput& chain, const std::string& field,
                                const Eigen::VectorXd& reference) {
  const Eigen::MatrixXd draws = chain.matrix(field);
  if (reference.size() != draws.cols())
    throw std::invalid_argument("reference length does not match field '" + field + "'");
  if (draws.rows() < 1) throw TooFewDraws("no stored draws");
  Eigen::VectorXd prob(draws.cols());
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    double below = 0.0, ties = 0.0;
    for (Eigen::Index k = 0; k < draws.rows(); ++k) {
      if (draws(k, j) < reference[j]) below += 1.0;
      else if (draws(k, j) == reference[j]) ties += 1.0;
    }
    prob[j] = (below + 0.5 * ties) / static_cast<double>(draws.rows());
  }
  return prob;
}

RegionInterval regionMeanCI(const ChainOutput& chain, double level, const std::string& field) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("credible level must lie in (0, 1)");
  const Eigen::MatrixXd draws = chain.matrix(field);
  if (draws.rows() < 2) throw TooFewDraws("region interval needs at least two draws");
  const Eigen::VectorXd region = draws.rowwise().mean();
  std::vector<double> sorted(region.data(), region.data() + region.size());
  std::sort(sorted.begin(), sorted.end());
  RegionInterval ri;
  ri.level = level;
  ri.mean = region.mean();
  ri.lower = quantileSorted(sorted, 0.5 * (1.0 - level));
  ri.upper = quantileSorted(sorted, 0.5 * (1.0 + level));
  return ri;
}

CorrelationReport correlationFromV(const ChainOutput& chain, double threshold,
                                   CorrelationSource source) {
  if (chain.draws < 1) throw TooFewDraws("no stored V draws");
  CorrelationReport rep;
  if (source == CorrelationSource::PosteriorMeanV) {
    rep.correlation = toCorrelation(meanMatrix(chain, "V"));
  } else {
    const auto& shape = chain.trace("V").shape;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(shape[0], shape[1]);
    for (int k = 0; k < chain.draws; ++k) sum += toCorrelation(chain.matrixDraw("V", k));
    rep.correlation = sum / static_cast<double>(chain.draws);
  }
  const auto M = rep.correlation.rows();
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = i + 1; j < M; ++j)
      if (rep.correlation(i, j) > threshold) {
        CorrelatedPair p;
        p.first = static_cast<int>(i);
        p.second = static_cast<int>(j);
        if (static_cast<Eigen::Index>(chain.modelNames.size()) == M) {
          p.firstName = chain.modelNames[static_cast<std::size_t>(i)];
          p.secondName = chain.modelNames[static_cast<std::size_t>(j)];
        }
        p.correlation = rep.correlation(i, j);
        rep.pairs.push_back(std::move(p));
      }
  std::stable_sort(rep.pairs.begin(), rep.pairs.end(),
                   [](const auto& a, const auto& b) { return a.correlation > b.correlation; });
  return rep;
}

CoverageAccumulator::CoverageAccumulator(double level, std::string field)
    : level_(level), field_(std::move(field)) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("credible level must lie in (0, 1)");
}

void CoverageAccumulator::add(const ChainOutput& chain, const Eigen::VectorXd& truth) {
  const Eigen::MatrixXd draws = chain.matrix(field_);
  if (draws.rows() < 2) throw TooFewDraws("coverage needs at least two draws");
  Eigen::VectorXd lower(draws.cols()), upper(draws.cols());
  std::vector<double> column(static_cast<std::size_t>(draws.rows()));
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    for (Eigen::Index k = 0; k < draws.rows(); ++k) column[static_cast<std::size_t>(k)] = draws(k, j);
    std::sort(column.begin(), column.end());
    lower[j] = quantileSorted(column, 0.5 * (1.0 - level_));
    upper[j] = quantileSorted(column, 0.5 * (1.0 + level_));
  }
  addInterval(lower, upper, truth);
}

void CoverageAccumulator::addInterval(const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                      const Eigen::VectorXd& truth) {
  if (lower.size() != truth.size() || upper.size() != truth.size())
    throw std::invalid_argument("coverage interval and truth lengths differ");
  if (counts_.size() == 0) counts_ = Eigen::VectorXi::Zero(truth.size());
  if (counts_.size() != truth.size()) throw std::invalid_argument("replicates disagree on site count");
  for (Eigen::Index j = 0; j < truth.size(); ++j)
    if (truth[j] >= lower[j] && truth[j] <= upper[j]) ++counts_[j];
  ++replicates_;
}

CoverageReport CoverageAccumulator::report() const {
  CoverageReport r;
  r.counts = counts_;
  r.replicates = replicates_;
  if (replicates_ > 0 && counts_.size() > 0)
    r.rate = static_cast<double>(counts_.sum()) /
             (static_cast<double>(replicates_) * static_cast<double>(counts_.size()));
  return r;
}

CoverageReport coverageScore(const std::vector<CoverageCase>& replicates, double level,
                             const std::string& field) {
  if (replicates.size() < 2) throw std::invalid_argument("coverage needs at least two replicates");
  CoverageAccumulator acc(level, field);
  for (const auto& c : replicates) acc.add(*c.chain, c.truth);
  return acc.report();
}

}  // namespace climfuse
