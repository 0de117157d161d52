#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace climfuse {

/// SplitMix64 finalizer; used to derive independent stream seeds from a base seed.
std::uint64_t deriveSeed(std::uint64_t base, std::uint64_t stream);

/// Seeded random source owned by exactly one chain or simulator at a time.
///
/// Every draw goes through the member engine so a run is bit-reproducible given
/// the seed and the order of calls.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  double normal();
  double uniform();  // (0, 1)
  double gamma(double shape, double rate);
  double chiSquared(double df);
  Eigen::VectorXd normalVector(Eigen::Index n);
  Eigen::MatrixXd normalMatrix(Eigen::Index rows, Eigen::Index cols);

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace climfuse
