#include "climfuse/conditionals.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace climfuse {

std::string toString(ChiScheme scheme) {
  return scheme == ChiScheme::PaperSequential ? "paper-sequential" : "full-conditional";
}

ChiScheme parseChiScheme(const std::string& text) {
  if (text == "full-conditional") return ChiScheme::FullConditional;
  if (text == "paper-sequential") return ChiScheme::PaperSequential;
  throw std::invalid_argument("unknown chi scheme '" + text +
                              "' (expected full-conditional|paper-sequential)");
}

namespace conditional {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void addInverse(Eigen::MatrixXd& Q, const SpatialFactor& f, double scale) {
  if (f.identity)
    Q.diagonal().array() += scale;
  else
    Q.noalias() += scale * f.inverse;
}

Eigen::VectorXd runSum(const std::vector<Eigen::VectorXd>& runs) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(runs.front().size());
  for (const auto& r : runs) sum += r;
  return sum;
}

// Column m of a matrix-normal with row covariance V, given a subset of the
// other columns: mean sum_q w_q col_q, covariance factor s.
struct Partition {
  Eigen::VectorXd w;
  double s = 1.0;
};

Partition partition(const Context& c, int m) {
  const auto M = c.cov.V.rows();
  Partition part;
  part.w = Eigen::VectorXd::Zero(M);
  if (c.scheme == ChiScheme::FullConditional) {
    const Eigen::MatrixXd& P = c.cov.Vinv;
    const double pmm = P(m, m);
    for (Eigen::Index q = 0; q < M; ++q)
      if (q != m) part.w[q] = -P(m, q) / pmm;
    part.s = 1.0 / pmm;
    return part;
  }
  const Eigen::MatrixXd& V = c.cov.V;
  if (m == 0) {
    part.s = V(0, 0);
    return part;
  }
  const Eigen::MatrixXd prev = V.topLeftCorner(m, m);
  const Eigen::VectorXd cross = V.row(m).head(m).transpose();
  const Eigen::VectorXd a = prev.llt().solve(cross);
  part.w.head(m) = a;
  part.s = V(m, m) - cross.dot(a);
  return part;
}

double sumSquares(const std::vector<Eigen::VectorXd>& runs, const Eigen::VectorXd& center,
                  const SpatialFactor& f) {
  double total = 0.0;
  for (const auto& r : runs) total += f.quad(r - center);
  return total;
}

}  // namespace

Eigen::VectorXd Gaussian::mean() const { return factor(precision).solve(b); }

Gaussian DiagonalGaussian::dense() const {
  return Gaussian{Eigen::MatrixXd(precision.asDiagonal()), b};
}

DiagonalGaussian yFa(const Context&, const LatentState& s, const HyperParams& p) {
  const auto n = s.yF.size();
  return DiagonalGaussian{Eigen::VectorXd::Constant(n, p.phiFa), p.phiFa * s.yF};
}

DiagonalGaussian yHa(const Context& c, const LatentState& s, const HyperParams& p) {
  const auto n = s.yH.size();
  const double N = c.data.observationSets();
  Eigen::VectorXd obsSum = Eigen::VectorXd::Zero(n);
  for (const auto& w : c.data.obs) obsSum += w;
  return DiagonalGaussian{Eigen::VectorXd::Constant(n, p.phiHa + N * p.tauW),
                          p.phiHa * s.yH + p.tauW * obsSum};
}

Gaussian yF(const Context& c, const LatentState& s, const HyperParams& p) {
  const auto n = s.yF.size();
  const double a = p.tauF / p.kappa;
  Gaussian g{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd()};
  addInverse(g.precision, c.cov.sigmaF, a);
  g.precision.diagonal().array() += p.phiFa;
  const Eigen::VectorXd center = s.muF + p.beta * (s.yH - s.muH);
  g.b = a * c.cov.sigmaF.applyInverse(center) + p.phiFa * s.yFa;
  return g;
}

Gaussian yFCollapsed(const Context& c, const LatentState& s, const HyperParams& p) {
  Gaussian g = yF(c, s, p);
  g.precision.diagonal().array() -= p.phiFa;
  g.b -= p.phiFa * s.yFa;
  return g;
}

Gaussian yHCollapsed(const Context& c, const LatentState& s, const HyperParams& p) {
  Gaussian g = yH(c, s, p);
  const double N = c.data.observationSets();
  Eigen::VectorXd obsMean = Eigen::VectorXd::Zero(s.yH.size());
  for (const auto& w : c.data.obs) obsMean += w;
  obsMean /= N;
  const double lambda = 1.0 / (1.0 / p.phiHa + 1.0 / (N * p.tauW));
  g.precision.diagonal().array() += lambda - p.phiHa;
  g.b += lambda * obsMean - p.phiHa * s.yHa;
  return g;
}

Gaussian yH(const Context& c, const LatentState& s, const HyperParams& p) {
  const auto n = s.yH.size();
  const double aH = p.tauH / p.kappa;
  const double aF = p.tauF / p.kappa;
  Gaussian g{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd()};
  addInverse(g.precision, c.cov.sigmaH, aH);
  addInverse(g.precision, c.cov.sigmaF, p.beta * p.beta * aF);
  g.precision.diagonal().array() += p.phiHa;
  const Eigen::VectorXd future = s.yF - s.muF + p.beta * s.muH;
  g.b = aH * c.cov.sigmaH.applyInverse(s.muH) + p.beta * aF * c.cov.sigmaF.applyInverse(future) +
        p.phiHa * s.yHa;
  return g;
}

Gaussian xF(const Context& c, const LatentState& s, const HyperParams& p, int m) {
  const auto n = s.muF.size();
  const auto mi = static_cast<std::size_t>(m);
  const Partition part = partition(c, m);
  const Eigen::MatrixXd D = historicalDeviation(s);
  const Eigen::MatrixXd E = futureDeviation(s, p.beta);
  const auto& runs = c.data.runsF[mi];
  const double R = static_cast<double>(runs.size());
  const auto& sm = c.cov.sigmaFm[mi];
  const double a = p.tauF / part.s;

  Gaussian g{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd()};
  addInverse(g.precision, sm, R * p.phiFm[m]);
  addInverse(g.precision, c.cov.sigmaF, a);
  const Eigen::VectorXd center = s.muF + p.beta * D.col(m) + E * part.w;
  g.b = p.phiFm[m] * sm.applyInverse(runSum(runs)) + a * c.cov.sigmaF.applyInverse(center);
  return g;
}

Gaussian xH(const Context& c, const LatentState& s, const HyperParams& p, int m) {
  const auto n = s.muH.size();
  const auto mi = static_cast<std::size_t>(m);
  const Partition part = partition(c, m);
  const Eigen::MatrixXd D = historicalDeviation(s);
  const Eigen::MatrixXd E = futureDeviation(s, p.beta);
  const auto& runs = c.data.runsH[mi];
  const double R = static_cast<double>(runs.size());
  const auto& sm = c.cov.sigmaHm[mi];
  const double aH = p.tauH / part.s;
  const double aF = p.tauF / part.s;

  Gaussian g{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd()};
  addInverse(g.precision, sm, R * p.phiHm[m]);
  addInverse(g.precision, c.cov.sigmaH, aH);
  addInverse(g.precision, c.cov.sigmaF, p.beta * p.beta * aF);
  const Eigen::VectorXd centerH = s.muH + D * part.w;
  const Eigen::VectorXd futureTarget = s.xF.col(m) - s.muF - E * part.w + p.beta * s.muH;
  g.b = p.phiHm[m] * sm.applyInverse(runSum(runs)) + aH * c.cov.sigmaH.applyInverse(centerH) +
        p.beta * aF * c.cov.sigmaF.applyInverse(futureTarget);
  return g;
}

Gaussian muF(const Context& c, const LatentState& s, const HyperParams& p) {
  const auto n = s.muF.size();
  const auto M = s.xF.cols();
  const Eigen::VectorXd P1 = c.cov.Vinv * Eigen::VectorXd::Ones(M);
  const double oneP1 = P1.sum();
  const Eigen::MatrixXd G = s.xF - p.beta * historicalDeviation(s);

  Gaussian g{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd()};
  addInverse(g.precision, c.cov.sigmaF, p.tauF * oneP1 + p.tauF / p.kappa);
  g.precision.diagonal().array() += 1.0 / c.priors.gaussianMeanVariance;
  const Eigen::VectorXd rhs = p.tauF * (G * P1) + (p.tauF / p.kappa) * (s.yF - p.beta * (s.yH - s.muH));
  g.b = c.cov.sigmaF.applyInverse(rhs);
  return g;
}

Gaussian muH(const Context& c, const LatentState& s, const HyperParams& p) {
  const auto n = s.muH.size();
  const auto M = s.xH.cols();
  const Eigen::VectorXd P1 = c.cov.Vinv * Eigen::VectorXd::Ones(M);
  const double oneP1 = P1.sum();
  const Eigen::MatrixXd K = (s.xF.colwise() - s.muF) - p.beta * s.xH;

  Gaussian g{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd()};
  addInverse(g.precision, c.cov.sigmaH, p.tauH * oneP1 + p.tauH / p.kappa);
  addInverse(g.precision, c.cov.sigmaF, p.beta * p.beta * (p.tauF * oneP1 + p.tauF / p.kappa));
  g.precision.diagonal().array() += 1.0 / c.priors.gaussianMeanVariance;
  const Eigen::VectorXd rhsH = p.tauH * (s.xH * P1) + (p.tauH / p.kappa) * s.yH;
  const Eigen::VectorXd rhsF =
      p.tauF * (K * P1) + (p.tauF / p.kappa) * (s.yF - s.muF - p.beta * s.yH);
  g.b = c.cov.sigmaH.applyInverse(rhsH) - p.beta * c.cov.sigmaF.applyInverse(rhsF);
  return g;
}

Gamma tauW(const Context& c, const LatentState& s, const HyperParams&) {
  const double n = static_cast<double>(s.yHa.size());
  double ss = 0.0;
  for (const auto& w : c.data.obs) ss += (s.yHa - w).squaredNorm();
  return {c.priors.tauW.shape + 0.5 * c.data.observationSets() * n, c.priors.tauW.rate + 0.5 * ss};
}

Gamma phiHa(const Context&, const LatentState& s, const HyperParams& p) {
  const double n = static_cast<double>(s.yH.size());
  const double a = p.nuH / (2.0 * p.kappa);
  return {0.5 * n + a, a / p.phiH + 0.5 * (s.yHa - s.yH).squaredNorm()};
}

Gamma phiFa(const Context&, const LatentState& s, const HyperParams& p) {
  const double n = static_cast<double>(s.yF.size());
  const double a = p.nuF / (2.0 * p.kappa);
  return {0.5 * n + a, a / p.phiF + 0.5 * (s.yFa - s.yF).squaredNorm()};
}

InverseGamma phiH(const Context& c, const LatentState&, const HyperParams& p) {
  const double M = p.models();
  const double a = p.nuH / (2.0 * p.kappa);
  return {c.priors.phiH.shape + 0.5 * M * p.nuH + a,
          c.priors.phiH.scale + 0.5 * p.nuH * p.phiHm.sum() + a * p.phiHa};
}

InverseGamma phiF(const Context& c, const LatentState&, const HyperParams& p) {
  const double M = p.models();
  const double a = p.nuF / (2.0 * p.kappa);
  return {c.priors.phiF.shape + 0.5 * M * p.nuF + a,
          c.priors.phiF.scale + 0.5 * p.nuF * p.phiFm.sum() + a * p.phiFa};
}

Gamma tauH(const Context& c, const LatentState& s, const HyperParams& p) {
  const double n = static_cast<double>(s.muH.size());
  const double M = p.models();
  const Eigen::MatrixXd D = historicalDeviation(s);
  const double q = c.cov.sigmaH.kroneckerQuad(D, c.cov.Vinv) +
                   c.cov.sigmaH.quad(s.yH - s.muH) / p.kappa;
  return {c.priors.tauH.shape + 0.5 * (M + 1.0) * n, c.priors.tauH.rate + 0.5 * q};
}

Gamma tauF(const Context& c, const LatentState& s, const HyperParams& p) {
  const double n = static_cast<double>(s.muF.size());
  const double M = p.models();
  const Eigen::MatrixXd E = futureDeviation(s, p.beta);
  const Eigen::VectorXd ey = s.yF - s.muF - p.beta * (s.yH - s.muH);
  const double q = c.cov.sigmaF.kroneckerQuad(E, c.cov.Vinv) + c.cov.sigmaF.quad(ey) / p.kappa;
  return {c.priors.tauF.shape + 0.5 * (M + 1.0) * n, c.priors.tauF.rate + 0.5 * q};
}

Gamma phiHm(const Context& c, const LatentState& s, const HyperParams& p, int m) {
  const auto mi = static_cast<std::size_t>(m);
  const double n = static_cast<double>(s.muH.size());
  const auto& runs = c.data.runsH[mi];
  const double ss = sumSquares(runs, s.xH.col(m), c.cov.sigmaHm[mi]);
  return {0.5 * (p.nuH + n * static_cast<double>(runs.size())), 0.5 * (p.nuH / p.phiH + ss)};
}

Gamma phiFm(const Context& c, const LatentState& s, const HyperParams& p, int m) {
  const auto mi = static_cast<std::size_t>(m);
  const double n = static_cast<double>(s.muF.size());
  const auto& runs = c.data.runsF[mi];
  const double ss = sumSquares(runs, s.xF.col(m), c.cov.sigmaFm[mi]);
  return {0.5 * (p.nuF + n * static_cast<double>(runs.size())), 0.5 * (p.nuF / p.phiF + ss)};
}

Normal beta(const Context& c, const LatentState& s, const HyperParams& p) {
  const Eigen::MatrixXd D = historicalDeviation(s);
  const Eigen::MatrixXd F = s.xF.colwise() - s.muF;
  const Eigen::VectorXd dy = s.yH - s.muH;
  const Eigen::VectorXd fy = s.yF - s.muF;
  const auto& sf = c.cov.sigmaF;
  const double aY = p.tauF / p.kappa;
  Normal out;
  out.precision = p.tauF * sf.kroneckerQuad(D, c.cov.Vinv) + aY * sf.quad(dy) +
                  1.0 / c.priors.betaVariance;
  out.b = p.tauF * sf.applyInverse(F).cwiseProduct(D * c.cov.Vinv).sum() +
          aY * dy.dot(sf.applyInverse(fy).col(0));
  return out;
}

Eigen::MatrixXd dependenceResidual(const Context& c, const LatentState& s, const HyperParams& p) {
  const Eigen::MatrixXd D = historicalDeviation(s);
  const Eigen::MatrixXd E = futureDeviation(s, p.beta);
  Eigen::MatrixXd S = p.tauH * c.cov.sigmaH.crossQuad(D) + p.tauF * c.cov.sigmaF.crossQuad(E);
  return 0.5 * (S + S.transpose());
}

InverseWishart V(const Context& c, const LatentState& s, const HyperParams& p) {
  const int M = p.models();
  const double n = static_cast<double>(s.muH.size());
  const double d = c.priors.d;
  const double r = p.tauF / p.tauH;
  const Eigen::MatrixXd D = historicalDeviation(s);
  const Eigen::MatrixXd E = futureDeviation(s, p.beta);
  InverseWishart iw;
  iw.scale = d * c.priors.vTildeFor(M) + c.cov.sigmaH.crossQuad(D) + r * c.cov.sigmaF.crossQuad(E);
  iw.scale = 0.5 * (iw.scale + iw.scale.transpose());
  iw.df = 2.0 * n + M + d + 1.0;
  return iw;
}

double logScaledDependenceWeight(const Context& c, const LatentState& s, const HyperParams& p,
                                 const Eigen::MatrixXd& U) {
  const int M = p.models();
  const double n = static_cast<double>(s.muH.size());
  const double d = c.priors.d;
  const double nu0 = M + d + 1.0;
  const double u11 = U(0, 0);
  const double tauH = 1.0 / u11;
  const double tauF = (p.tauF / p.tauH) / u11;
  Eigen::MatrixXd V = U / u11;
  V(0, 0) = 1.0;
  const FactoredMatrix fu = factor(U);
  const Eigen::MatrixXd psi = d * c.priors.vTildeFor(M);
  const double K = 0.5 * M * (M + 1.0);
  const Eigen::VectorXd dy = s.yH - s.muH;
  const Eigen::VectorXd fy = s.yF - s.muF - p.beta * dy;
  const double qH = c.cov.sigmaH.quad(dy);
  const double qF = c.cov.sigmaF.quad(fy);
  double w = logDependencePrior(V, c.priors);
  w += 0.5 * (nu0 + M + 1.0) * logDet(fu) + 0.5 * (psi * fu.inverse()).trace();
  w += logGammaDensity(tauH, c.priors.tauH.shape, c.priors.tauH.rate) +
       logGammaDensity(tauF, c.priors.tauF.shape, c.priors.tauF.rate);
  w += std::log(tauH) - (K + 1.0) * std::log(u11);
  w += 0.5 * n * (std::log(tauH) + std::log(tauF)) - 0.5 * (tauH * qH + tauF * qF) / p.kappa;
  return w;
}

double logRangeTargetH(const Context& c, const LatentState& s, const HyperParams& p,
                       const SpatialFactor& sigma, double range) {
  if (!c.priors.rangeInSupport(range)) return kNegInf;
  const double M = p.models();
  const Eigen::MatrixXd D = historicalDeviation(s);
  return -0.5 * (M + 1.0) * sigma.logDet - 0.5 * p.tauH * sigma.kroneckerQuad(D, c.cov.Vinv) -
         0.5 * p.tauH / p.kappa * sigma.quad(s.yH - s.muH);
}

double logRangeTargetF(const Context& c, const LatentState& s, const HyperParams& p,
                       const SpatialFactor& sigma, double range) {
  if (!c.priors.rangeInSupport(range)) return kNegInf;
  const double M = p.models();
  const Eigen::MatrixXd E = futureDeviation(s, p.beta);
  const Eigen::VectorXd ey = s.yF - s.muF - p.beta * (s.yH - s.muH);
  return -0.5 * (M + 1.0) * sigma.logDet - 0.5 * p.tauF * sigma.kroneckerQuad(E, c.cov.Vinv) -
         0.5 * p.tauF / p.kappa * sigma.quad(ey);
}

double logRangeTargetHm(const Context& c, const LatentState& s, const HyperParams& p, int m,
                        const SpatialFactor& sigma, double range) {
  if (!c.priors.rangeInSupport(range)) return kNegInf;
  const auto& runs = c.data.runsH[static_cast<std::size_t>(m)];
  return -0.5 * static_cast<double>(runs.size()) * sigma.logDet -
         0.5 * p.phiHm[m] * sumSquares(runs, s.xH.col(m), sigma);
}

double logRangeTargetFm(const Context& c, const LatentState& s, const HyperParams& p, int m,
                        const SpatialFactor& sigma, double range) {
  if (!c.priors.rangeInSupport(range)) return kNegInf;
  const auto& runs = c.data.runsF[static_cast<std::size_t>(m)];
  return -0.5 * static_cast<double>(runs.size()) * sigma.logDet -
         0.5 * p.phiFm[m] * sumSquares(runs, s.xF.col(m), sigma);
}

double logShapeTargetH(const Context& c, const HyperParams& p, double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) return kNegInf;
  double total = logGammaDensity(nu, c.priors.nuH.shape, c.priors.nuH.rate);
  for (Eigen::Index m = 0; m < p.phiHm.size(); ++m)
    total += logGammaDensity(p.phiHm[m], 0.5 * nu, 0.5 * nu / p.phiH);
  total += logGammaDensity(p.phiHa, 0.5 * nu / p.kappa, 0.5 * nu / (p.kappa * p.phiH));
  return total;
}

double logShapeTargetF(const Context& c, const HyperParams& p, double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) return kNegInf;
  double total = logGammaDensity(nu, c.priors.nuF.shape, c.priors.nuF.rate);
  for (Eigen::Index m = 0; m < p.phiFm.size(); ++m)
    total += logGammaDensity(p.phiFm[m], 0.5 * nu, 0.5 * nu / p.phiF);
  total += logGammaDensity(p.phiFa, 0.5 * nu / p.kappa, 0.5 * nu / (p.kappa * p.phiF));
  return total;
}

}  // namespace conditional
}  // namespace climfuse
