#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "climfuse/random.hpp"

namespace climfuse {

/// Upper bound of the uniform prior support for every range parameter.
inline constexpr double kMaxRange = 1e6;

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DistanceMetric { Euclidean, HaversineKm };

std::string toString(DistanceMetric metric);
DistanceMetric parseDistanceMetric(const std::string& text);

struct Site {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Site&) const = default;
};

/// The n sites shared by every field plus their pairwise distances.
///
/// Distances are computed once at construction. Sites that share an exact
/// distance value are grouped so kernel evaluations scale with the number of
/// distinct distances rather than n^2 (a regular g x g grid has O(g^2) of them).
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<Site> sites, DistanceMetric metric = DistanceMetric::Euclidean);

  /// side x side grid over [lo, hi]^2, row-major with x varying fastest.
  static Grid regular(int side, double lo = 0.0, double hi = 1.0);

  Eigen::Index size() const { return static_cast<Eigen::Index>(sites_.size()); }
  const std::vector<Site>& sites() const { return sites_; }
  DistanceMetric metric() const { return metric_; }
  const Eigen::MatrixXd& distances() const { return dist_; }
  double distance(Eigen::Index i, Eigen::Index j) const { return dist_(i, j); }
  double diameter() const { return diameter_; }

  const std::vector<double>& distinctDistances() const { return distinct_; }
  /// Index into distinctDistances() for the pair (i, j).
  std::size_t distinctIndex(Eigen::Index i, Eigen::Index j) const {
    return pairIndex_[static_cast<std::size_t>(i * size() + j)];
  }

  /// Same grid with sites reordered: result site k = this site perm[k].
  Grid permuted(const std::vector<int>& perm) const;

 private:
  std::vector<Site> sites_;
  DistanceMetric metric_ = DistanceMetric::Euclidean;
  Eigen::MatrixXd dist_;
  double diameter_ = 0.0;
  std::vector<double> distinct_;
  std::vector<std::size_t> pairIndex_;
};

/// Whittle correlation family; only the range is free.
struct CorrelationSpec {
  double range = 1.0;
};

/// Modified Bessel function of the second kind, order one.
double besselK1(double x);

/// c(d; range) = (d/range) K1(d/range), with c(0; range) = 1.
double whittleCorrelation(double distance, double range);

Eigen::MatrixXd buildCorrelation(const Grid& grid, const CorrelationSpec& spec);

/// Lower Cholesky factor of a symmetric positive-definite matrix, possibly
/// after a small diagonal jitter.
class FactoredMatrix {
 public:
  FactoredMatrix() = default;
  FactoredMatrix(Eigen::MatrixXd lower, double jitter)
      : lower_(std::move(lower)), jitter_(jitter) {}

  const Eigen::MatrixXd& lower() const { return lower_; }
  double jitterApplied() const { return jitter_; }
  Eigen::Index size() const { return lower_.rows(); }

  /// L^{-1} b
  Eigen::MatrixXd solveLower(const Eigen::MatrixXd& b) const;
  /// L^{-T} b
  Eigen::MatrixXd solveUpper(const Eigen::MatrixXd& b) const;
  /// (L L^T)^{-1} b
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  Eigen::MatrixXd inverse() const;
  Eigen::MatrixXd reconstruct() const;

 private:
  Eigen::MatrixXd lower_;
  double jitter_ = 0.0;
};

/// Cholesky with escalating jitter 1e-10 .. 1e-4 times the mean diagonal.
/// Throws NotPositiveDefinite once the cap is exceeded.
FactoredMatrix factor(const Eigen::MatrixXd& matrix);

double logDet(const FactoredMatrix& f);

/// x^T A^{-1} x through one triangular solve.
double quadForm(const FactoredMatrix& f, const Eigen::VectorXd& x);

/// Draw from N(Q^{-1} b, Q^{-1}).
Eigen::VectorXd sampleGaussianPrecision(const Eigen::VectorXd& precisionTimesMean,
                                        const Eigen::MatrixXd& precision, Rng& rng);

/// Same draw with caller-supplied standard normals; `normals` = 0 gives the mean.
Eigen::VectorXd sampleGaussianPrecision(const Eigen::VectorXd& precisionTimesMean,
                                        const FactoredMatrix& precision,
                                        const Eigen::VectorXd& normals);

}  // namespace climfuse
