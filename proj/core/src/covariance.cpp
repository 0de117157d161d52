#include "climfuse/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace climfuse {

namespace {

constexpr double kEarthRadiusKm = 6371.0088;

double haversineKm(const Site& a, const Site& b) {
  const double deg = std::numbers::pi / 180.0;
  const double lat1 = a.y * deg;
  const double lat2 = b.y * deg;
  const double dlat = lat2 - lat1;
  const double dlon = (b.x - a.x) * deg;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

double siteDistance(const Site& a, const Site& b, DistanceMetric metric) {
  if (metric == DistanceMetric::HaversineKm) return haversineKm(a, b);
  return std::hypot(a.x - b.x, a.y - b.y);
}

// K1 for 0 < x <= 2 from the power series with the logarithmic term:
// K1(x) = 1/x + ln(x/2) I1(x) - (x/4) sum_k [psi(k+1) + psi(k+2)] (x^2/4)^k / (k!(k+1)!)
double besselK1Series(double x) {
  const double q = 0.25 * x * x;
  const double eulerGamma = std::numbers::egamma;
  double term = 1.0;  // (x^2/4)^k / (k!(k+1)!)
  double psiK1 = -eulerGamma;        // psi(k+1)
  double psiK2 = 1.0 - eulerGamma;   // psi(k+2)
  double i1Sum = 0.0;
  double psiSum = 0.0;
  for (int k = 0; k < 60; ++k) {
    i1Sum += term;
    psiSum += (psiK1 + psiK2) * term;
    const double next = term * q / ((k + 1.0) * (k + 2.0));
    psiK1 += 1.0 / (k + 1.0);
    psiK2 += 1.0 / (k + 2.0);
    term = next;
    if (term < 1e-18 * i1Sum) break;
  }
  const double i1 = 0.5 * x * i1Sum;
  return 1.0 / x + std::log(0.5 * x) * i1 - 0.25 * x * psiSum;
}

// e^x K1(x) for x > 2 from K1(x) = int_0^inf exp(-x cosh t) cosh t dt.
// The trapezoidal rule converges geometrically (error ~ exp(-pi^2/h)) for this
// entire integrand; h = 1/8 is far below double precision.
double besselK1ScaledQuadrature(double x) {
  constexpr double h = 0.125;
  double sum = 0.5;  // t = 0: exp(0) * cosh(0) with the half weight
  for (int k = 1; k < 400; ++k) {
    const double t = k * h;
    const double c = std::cosh(t);
    const double term = std::exp(-x * (c - 1.0)) * c;
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return h * sum;
}

}  // namespace

std::string toString(DistanceMetric metric) {
  return metric == DistanceMetric::HaversineKm ? "haversine-km" : "euclidean";
}

DistanceMetric parseDistanceMetric(const std::string& text) {
  if (text == "euclidean") return DistanceMetric::Euclidean;
  if (text == "haversine-km") return DistanceMetric::HaversineKm;
  throw std::invalid_argument("unknown distance metric '" + text + "'");
}

Grid::Grid(std::vector<Site> sites, DistanceMetric metric)
    : sites_(std::move(sites)), metric_(metric) {
  const auto n = size();
  if (n == 0) throw std::invalid_argument("grid must contain at least one site");
  dist_.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist_(i, i) = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d = siteDistance(sites_[static_cast<std::size_t>(i)],
                                    sites_[static_cast<std::size_t>(j)], metric_);
      dist_(i, j) = d;
      dist_(j, i) = d;
    }
  }
  diameter_ = dist_.maxCoeff();

  std::vector<double> values(dist_.data(), dist_.data() + dist_.size());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  distinct_ = std::move(values);
  pairIndex_.resize(static_cast<std::size_t>(n * n));
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto it = std::lower_bound(distinct_.begin(), distinct_.end(), dist_(i, j));
      pairIndex_[static_cast<std::size_t>(i * n + j)] =
          static_cast<std::size_t>(it - distinct_.begin());
    }
}

Grid Grid::regular(int side, double lo, double hi) {
  if (side < 1) throw std::invalid_argument("grid side must be >= 1");
  std::vector<Site> sites;
  sites.reserve(static_cast<std::size_t>(side * side));
  const double step = side > 1 ? (hi - lo) / (side - 1) : 0.0;
  for (int iy = 0; iy < side; ++iy)
    for (int ix = 0; ix < side; ++ix) sites.push_back({lo + ix * step, lo + iy * step});
  return Grid(std::move(sites));
}

Grid Grid::permuted(const std::vector<int>& perm) const {
  std::vector<Site> sites;
  sites.reserve(perm.size());
  for (int p : perm) sites.push_back(sites_.at(static_cast<std::size_t>(p)));
  return Grid(std::move(sites), metric_);
}

double besselK1(double x) {
  if (!(x > 0.0)) throw DomainError("besselK1: argument must be positive");
  if (x <= 2.0) return besselK1Series(x);
  if (x > 705.0) return 0.0;
  return std::exp(-x) * besselK1ScaledQuadrature(x);
}

double whittleCorrelation(double distance, double range) {
  if (!(range > 0.0)) throw DomainError("whittleCorrelation: range must be positive");
  if (distance < 0.0) throw DomainError("whittleCorrelation: distance must be nonnegative");
  if (distance == 0.0) return 1.0;
  const double u = distance / range;
  // (u K1(u) -> 1 as u -> 0; below 1e-300 the product is 1 to double precision)
  if (u < 1e-300) return 1.0;
  return std::min(1.0, u * besselK1(u));
}

Eigen::MatrixXd buildCorrelation(const Grid& grid, const CorrelationSpec& spec) {
  if (!(spec.range > 0.0) || spec.range > kMaxRange)
    throw DomainError("buildCorrelation: range outside (0, 1e6]");
  const auto& distinct = grid.distinctDistances();
  std::vector<double> values(distinct.size());
  for (std::size_t k = 0; k < distinct.size(); ++k)
    values[k] = whittleCorrelation(distinct[k], spec.range);
  const auto n = grid.size();
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) c(i, j) = values[grid.distinctIndex(i, j)];
  return c;
}

Eigen::MatrixXd FactoredMatrix::solveLower(const Eigen::MatrixXd& b) const {
  return lower_.triangularView<Eigen::Lower>().solve(b);
}

Eigen::MatrixXd FactoredMatrix::solveUpper(const Eigen::MatrixXd& b) const {
  return lower_.transpose().triangularView<Eigen::Upper>().solve(b);
}

Eigen::MatrixXd FactoredMatrix::solve(const Eigen::MatrixXd& b) const {
  return solveUpper(solveLower(b));
}

Eigen::MatrixXd FactoredMatrix::inverse() const {
  const auto n = size();
  Eigen::MatrixXd linv = solveLower(Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd inv = linv.transpose() * linv;
  return 0.5 * (inv + inv.transpose());
}

Eigen::MatrixXd FactoredMatrix::reconstruct() const { return lower_ * lower_.transpose(); }

FactoredMatrix factor(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("factor: matrix must be square");
  if (!matrix.allFinite()) throw NotPositiveDefinite("factor: matrix has non-finite entries");
  const auto n = matrix.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(matrix);
  if (llt.info() == Eigen::Success) return FactoredMatrix(llt.matrixL(), 0.0);

  const double meanDiag = n > 0 ? matrix.diagonal().mean() : 0.0;
  if (!(meanDiag > 0.0)) throw NotPositiveDefinite("factor: nonpositive mean diagonal");
  for (double scale = 1e-10; scale <= 1e-4 * (1.0 + 1e-9); scale *= 10.0) {
    const double jitter = scale * meanDiag;
    Eigen::MatrixXd shifted = matrix;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return FactoredMatrix(llt.matrixL(), jitter);
  }
  throw NotPositiveDefinite("factor: matrix not positive definite within jitter cap 1e-4 * mean diagonal");
}

double logDet(const FactoredMatrix& f) {
  return 2.0 * f.lower().diagonal().array().log().sum();
}

double quadForm(const FactoredMatrix& f, const Eigen::VectorXd& x) {
  return f.solveLower(x).squaredNorm();
}

Eigen::VectorXd sampleGaussianPrecision(const Eigen::VectorXd& precisionTimesMean,
                                        const Eigen::MatrixXd& precision, Rng& rng) {
  const FactoredMatrix f = factor(precision);
  return sampleGaussianPrecision(precisionTimesMean, f, rng.normalVector(precision.rows()));
}

Eigen::VectorXd sampleGaussianPrecision(const Eigen::VectorXd& precisionTimesMean,
                                        const FactoredMatrix& precision,
                                        const Eigen::VectorXd& normals) {
  // mean = L^{-T} L^{-1} b; noise = L^{-T} z has covariance (L L^T)^{-1}
  Eigen::VectorXd w = precision.solveLower(precisionTimesMean);
  return precision.solveUpper(w + normals);
}

}  // namespace climfuse
