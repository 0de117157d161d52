#include "climfuse/random.hpp"

#include <limits>

namespace climfuse {

std::uint64_t deriveSeed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double Rng::normal() { return normal_(engine_); }

double Rng::uniform() {
  std::uniform_real_distribution<double> dist(std::numeric_limits<double>::min(), 1.0);
  return dist(engine_);
}

double Rng::gamma(double shape, double rate) {
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(engine_);
}

double Rng::chiSquared(double df) { return gamma(0.5 * df, 0.5); }

Eigen::VectorXd Rng::normalVector(Eigen::Index n) {
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = normal();
  return z;
}

Eigen::MatrixXd Rng::normalMatrix(Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = normal();
  return z;
}

}  // namespace climfuse
