#include <doctest.h>

#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "climfuse/covariance.hpp"
#include "support.hpp"

using namespace climfuse;

namespace {

double k1Reference(double x) {
  using Big = boost::multiprecision::cpp_bin_float_50;
  return static_cast<double>(boost::math::cyl_bessel_k(1, Big(x)));
}

}  // namespace

TEST_SUITE("covariance") {

TEST_CASE("K1 agrees with a 50-digit reference on log-spaced points") {
  const int points = 100;
  const double lo = std::log(1e-4), hi = std::log(50.0);
  double worst = 0.0;
  for (int i = 1; i <= points; ++i) {
    const double x = std::exp(lo + (hi - lo) * i / points);
    const double ref = k1Reference(x);
    worst = std::max(worst, std::abs(besselK1(x) - ref) / std::max(1.0, ref));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("K1 reference values") {
  CHECK(std::abs(besselK1(1.0) - 0.6019072302) < 1e-8);
  CHECK(std::abs(besselK1(2.0) - 0.1398658818) < 1e-8);
  CHECK(std::abs(besselK1(1e-6) * 1e-6 - 1.0) < 1e-5);
  CHECK(besselK1(800.0) == 0.0);
  CHECK_THROWS_AS(besselK1(0.0), DomainError);
  CHECK_THROWS_AS(besselK1(-1.0), DomainError);
}

TEST_CASE("Whittle kernel") {
  CHECK(whittleCorrelation(0.0, 0.5) == 1.0);
  for (double g : {0.1, 0.5, 3.0}) {
    CHECK(std::abs(whittleCorrelation(g, g) - 0.6019072302) < 1e-8);
    CHECK(std::abs(whittleCorrelation(10 * g, g) - 10 * k1Reference(10.0)) < 1e-10);
  }
  CHECK(std::abs(whittleCorrelation(5.0, 0.5) - 1.8649e-4) < 1e-7);
  double prev = 1.0;
  for (int i = 1; i <= 400; ++i) {
    const double c = whittleCorrelation(0.01 * i, 0.3);
    CHECK(c < prev);
    CHECK(c >= 0.0);
    prev = c;
  }
  CHECK(whittleCorrelation(1e4, 1.0) < 1e-300);
  CHECK_THROWS_AS(whittleCorrelation(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(whittleCorrelation(-1.0, 1.0), DomainError);
}

TEST_CASE("grid distances") {
  const Grid g = Grid::regular(3);
  CHECK(g.size() == 9);
  const auto& d = g.distances();
  CHECK(d.isApprox(d.transpose()));
  CHECK(d.diagonal().isZero());
  CHECK(d(0, 1) == doctest::Approx(0.5));
  CHECK(d(0, 8) == doctest::Approx(std::sqrt(2.0)));
  for (Eigen::Index i = 0; i < g.size(); ++i)
    for (Eigen::Index j = 0; j < g.size(); ++j) CHECK(g.distinctDistances()[g.distinctIndex(i, j)] == d(i, j));

  const Grid h({{0.0, 0.0}, {90.0, 0.0}}, DistanceMetric::HaversineKm);
  CHECK(h.distance(0, 1) == doctest::Approx(6371.0088 * M_PI / 2).epsilon(1e-3));
}

TEST_CASE("buildCorrelation") {
  const Grid one({{0.3, 0.4}});
  CHECK(buildCorrelation(one, {0.5}).isApprox(Eigen::MatrixXd::Ones(1, 1)));

  const Grid two({{0.0, 0.0}, {0.7, 0.0}});
  const Eigen::MatrixXd c2 = buildCorrelation(two, {0.7});
  CHECK(std::abs(c2(0, 1) - 0.60191) < 1e-5);
  CHECK(c2(0, 1) == c2(1, 0));

  for (int side : {2, 5, 8}) {
    const Grid g = Grid::regular(side);
    for (double range : {0.05, 0.5, 2.0}) {
      const Eigen::MatrixXd c = buildCorrelation(g, {range});
      CHECK(c.diagonal().isOnes());
      CHECK((c - c.transpose()).norm() == 0.0);
      const FactoredMatrix f = factor(c);
      CHECK(f.jitterApplied() <= 1e-8 * static_cast<double>(g.size()));
      Eigen::MatrixXd jittered = c;
      jittered.diagonal().array() += f.jitterApplied();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jittered);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
  }
  CHECK_THROWS_AS(buildCorrelation(Grid::regular(2), {2e6}), DomainError);
}

TEST_CASE("permutation invariance of correlation") {
  const Grid g = Grid::regular(3);
  std::vector<int> perm{4, 0, 8, 2, 6, 1, 3, 7, 5};
  const Grid p = g.permuted(perm);
  const Eigen::MatrixXd c = buildCorrelation(g, {0.4});
  const Eigen::MatrixXd cp = buildCorrelation(p, {0.4});
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) CHECK(cp(i, j) == doctest::Approx(c(perm[i], perm[j])).epsilon(1e-14));
}

TEST_CASE("factor") {
  const FactoredMatrix id = factor(Eigen::MatrixXd::Identity(3, 3));
  CHECK(id.lower().isIdentity());
  CHECK(id.jitterApplied() == 0.0);

  Eigen::Matrix2d near;
  near << 1, 0.999999999, 0.999999999, 1;
  const FactoredMatrix fn = factor(near);
  CHECK(fn.jitterApplied() <= 1e-6);
  Eigen::MatrixXd target = near;
  target.diagonal().array() += fn.jitterApplied();
  CHECK((fn.reconstruct() - target).norm() <= 1e-10 * target.norm());

  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(factor(bad), NotPositiveDefinite);

  for (int n : {4, 16, 64}) {
    const Eigen::MatrixXd a = testing::randomSpd(n, 10u + static_cast<unsigned>(n));
    const FactoredMatrix f = factor(a);
    const double spectral = Eigen::JacobiSVD<Eigen::MatrixXd>(f.reconstruct() - a).singularValues()(0);
    CHECK(spectral <= 1e-10 * Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0));
  }
}

TEST_CASE("logDet and quadForm") {
  const FactoredMatrix id = factor(Eigen::MatrixXd::Identity(4, 4));
  CHECK(logDet(id) == 0.0);
  const Eigen::Vector4d x(1.0, -2.0, 0.5, 3.0);
  CHECK(quadForm(id, x) == doctest::Approx(x.squaredNorm()));

  const Eigen::MatrixXd a = testing::randomSpd(4, 3u);
  const FactoredMatrix f = factor(a);
  const double ld = std::log(a.determinant());
  CHECK(std::abs(logDet(f) - ld) <= 1e-10 * std::abs(ld));
  const double q = x.dot(a.inverse() * x);
  CHECK(std::abs(quadForm(f, x) - q) <= 1e-10 * q);
  CHECK((f.solve(x) - a.inverse() * x).norm() <= 1e-10 * (a.inverse() * x).norm());
  CHECK((f.inverse() - a.inverse()).norm() <= 1e-10 * a.inverse().norm());
}

TEST_CASE("Gaussian sampling in precision form") {
  Rng rng(42);
  const int draws = 100000;

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3), sq = Eigen::VectorXd::Zero(3);
  for (int k = 0; k < draws; ++k) {
    const Eigen::VectorXd z = sampleGaussianPrecision(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3), rng);
    sum += z;
    sq += z.cwiseProduct(z);
  }
  const Eigen::VectorXd mean = sum / draws;
  const Eigen::VectorXd var = sq / draws - mean.cwiseProduct(mean);
  CHECK(mean.cwiseAbs().maxCoeff() < 0.02);
  CHECK(var.minCoeff() > 0.97);
  CHECK(var.maxCoeff() < 1.03);

  const Eigen::MatrixXd q4 = Eigen::MatrixXd::Constant(1, 1, 4.0);
  const Eigen::VectorXd b = Eigen::VectorXd::Constant(1, 8.0);
  CHECK(sampleGaussianPrecision(b, factor(q4), Eigen::VectorXd::Zero(1))(0) == 2.0);

  const Eigen::MatrixXd q = testing::randomSpd(3, 5u) / 3.0;
  const Eigen::VectorXd v(Eigen::Vector3d(0.5, -1.0, 2.0));
  Eigen::MatrixXd samples(draws, 3);
  for (int k = 0; k < draws; ++k) samples.row(k) = sampleGaussianPrecision(v, q, rng).transpose();
  const Eigen::RowVectorXd m = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - m;
  const Eigen::MatrixXd cov = centered.transpose() * centered / (draws - 1.0);
  CHECK((cov - q.inverse()).cwiseAbs().maxCoeff() < 0.05);
  CHECK((m.transpose() - q.inverse() * v).cwiseAbs().maxCoeff() < 0.02);

  Rng a(9), c(9);
  CHECK(sampleGaussianPrecision(v, q, a) == sampleGaussianPrecision(v, q, c));
}

}
